//! Scenario files, trajectory tables and run reports.

pub mod scenario;
pub mod table;

use std::path::{Path, PathBuf};

use serde::Serialize;

pub use scenario::{load_scenario, parse_scenario, Expectation, Scenario, Source};

use crate::error::Result;
use crate::flow::{
    estimate_report, integrate, type_i_diagnostic, Direction, EstimateReport, IntegratorOptions,
    Trajectory, Verdict,
};

/// Process exit status of a scenario run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExitStatus {
    Success = 0,
    ExpectationFailed = 1,
    LoadError = 2,
    IntegratorFailure = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Command-line overrides applied on top of a scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub blowup_threshold: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, scenario: &mut Scenario) {
        self.apply_to(&mut scenario.options);
    }

    pub fn apply_to(&self, o: &mut IntegratorOptions) {
        if let Some(v) = self.rel_tol {
            o.rel_tol = v;
        }
        if let Some(v) = self.abs_tol {
            o.abs_tol = v;
        }
        if let Some(v) = self.blowup_threshold {
            o.blowup_threshold = v;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularTime {
    /// Power-law regression estimate (omega forward, alpha backward).
    pub regression: Option<f64>,
    pub regression_stderr: Option<f64>,
    pub exponent: Option<f64>,
    /// Rigorous one-sided bound from the cubic growth estimate.
    pub rigorous_bound: f64,
    pub last_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpectationReport {
    pub verdict: &'static str,
    pub time: Option<f64>,
    pub tolerance: f64,
    pub met: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub direction: Direction,
    pub status: &'static str,
    pub error: Option<String>,
    pub verdict: Option<&'static str>,
    pub singular_time: Option<SingularTime>,
    pub expected: Option<ExpectationReport>,
    pub samples: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub trajectory_file: Option<String>,
    pub estimates: Option<EstimateReport>,
    /// `sup |omega - t| |Riem|` near a singularity (groups only).
    pub type_i: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub source: String,
    pub q: usize,
    pub n: usize,
    pub horizon: f64,
    pub runs: Vec<RunReport>,
}

/// Everything a run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub status: ExitStatus,
    pub report: ScenarioReport,
    pub trajectories: Vec<Trajectory>,
    pub files: Vec<PathBuf>,
}

fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "scenario".into()
    } else {
        s
    }
}

fn singular_time(verdict: &Verdict) -> Option<SingularTime> {
    match verdict {
        Verdict::Blowup(b) => Some(SingularTime {
            regression: b.fit.as_ref().map(|f| f.time),
            regression_stderr: b.fit.as_ref().map(|f| f.time_stderr),
            exponent: b.fit.as_ref().map(|f| f.exponent),
            rigorous_bound: b.rigorous_bound,
            last_time: b.last_time,
        }),
        _ => None,
    }
}

struct DirectionRun {
    traj: Trajectory,
    estimates: EstimateReport,
    type_i: Option<f64>,
}

fn run_direction(scenario: &Scenario, direction: Direction) -> Result<DirectionRun> {
    let traj = integrate(&scenario.bracket, direction, scenario.horizon, &scenario.options)?;
    let estimates = estimate_report(&traj)?;
    let type_i = (traj.verdict.is_blowup() && scenario.bracket.dims().q() == 0)
        .then(|| type_i_diagnostic(&traj).ok())
        .flatten();
    Ok(DirectionRun {
        traj,
        estimates,
        type_i,
    })
}

/// Integrates every direction of `scenario` (in parallel), writing one
/// trajectory table per direction and a JSON report into `out_dir`.
pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let results: Vec<(Direction, Result<DirectionRun>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenario
            .directions
            .iter()
            .map(|&d| (d, scope.spawn(move || run_direction(scenario, d))))
            .collect();
        handles
            .into_iter()
            .map(|(d, h)| (d, h.join().expect("direction run panicked")))
            .collect()
    });

    let base = slug(&scenario.name);
    let mut status = ExitStatus::Success;
    let mut runs = Vec::new();
    let mut trajectories = Vec::new();
    let mut files = Vec::new();
    for (direction, result) in results {
        let expectation = scenario.expectation(direction);
        match result {
            Ok(run) => {
                let file = out_dir.join(format!("{base}_{}.csv", direction.as_str()));
                table::write_trajectory(&file, &run.traj)?;
                let expected = expectation.map(|e| ExpectationReport {
                    verdict: e.expected.label(),
                    time: match e.expected {
                        crate::catalog::Expected::Blowup { time } => time,
                        _ => None,
                    },
                    tolerance: e.tolerance,
                    met: e.expected.matches(&run.traj.verdict, e.tolerance),
                });
                if expected.as_ref().is_some_and(|e| !e.met) {
                    status = status.max(ExitStatus::ExpectationFailed);
                }
                runs.push(RunReport {
                    direction,
                    status: "ok",
                    error: None,
                    verdict: Some(run.traj.verdict.label()),
                    singular_time: singular_time(&run.traj.verdict),
                    expected,
                    samples: run.traj.samples.len(),
                    accepted_steps: run.traj.accepted_steps,
                    rejected_steps: run.traj.rejected_steps,
                    trajectory_file: file.file_name().map(|f| f.to_string_lossy().into_owned()),
                    estimates: Some(run.estimates),
                    type_i: run.type_i,
                });
                files.push(file);
                trajectories.push(run.traj);
            }
            Err(e) => {
                status = status.max(ExitStatus::IntegratorFailure);
                runs.push(RunReport {
                    direction,
                    status: "integrator-failure",
                    error: Some(e.to_string()),
                    verdict: None,
                    singular_time: None,
                    expected: None,
                    samples: 0,
                    accepted_steps: 0,
                    rejected_steps: 0,
                    trajectory_file: None,
                    estimates: None,
                    type_i: None,
                });
            }
        }
    }

    let dims = scenario.bracket.dims();
    let report = ScenarioReport {
        scenario: scenario.name.clone(),
        source: match &scenario.source {
            Source::Catalog(name) => format!("catalog:{name}"),
            Source::Inline => "inline".into(),
        },
        q: dims.q(),
        n: dims.n(),
        horizon: scenario.horizon,
        runs,
    };
    let report_path = out_dir.join(format!("{base}.report.json"));
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| crate::error::Error::Parse(format!("report serialization: {e}")))?;
    std::fs::write(&report_path, json + "\n")?;
    files.push(report_path);

    Ok(RunOutcome {
        status,
        report,
        trajectories,
        files,
    })
}

/// Loads, overrides and runs a scenario file. Load and validation errors map
/// to [`ExitStatus::LoadError`]; the error is returned alongside.
pub fn run_file(
    path: &Path,
    out_dir: &Path,
    overrides: &Overrides,
) -> (ExitStatus, std::result::Result<RunOutcome, crate::error::Error>) {
    let mut scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(e) => return (ExitStatus::LoadError, Err(e)),
    };
    overrides.apply(&mut scenario);
    match run(&scenario, out_dir) {
        Ok(outcome) => (outcome.status, Ok(outcome)),
        Err(e) => (ExitStatus::IntegratorFailure, Err(e)),
    }
}
