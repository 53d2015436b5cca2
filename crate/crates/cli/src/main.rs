use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use homflow::catalog::{self, catalog_entries, DEFAULT_HORIZON};
use homflow::flow::{Direction, IntegratorOptions};
use homflow::io::{self, ExitStatus, Overrides, RunOutcome, Scenario};
use homflow::verify::{verify_with, Mutation};

#[derive(Parser)]
#[command(name = "homflow", version, about = "Bracket flow integration for homogeneous Ricci flow")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Flags {
    /// Relative tolerance of the step-size controller.
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    /// Absolute tolerance of the step-size controller.
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Bracket norm above which a singularity may be declared.
    #[arg(long, global = true)]
    blowup_threshold: Option<f64>,
    /// Output directory for trajectory tables and reports.
    #[arg(long, global = true, default_value = "homflow-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run { scenario: PathBuf },
    /// Inspect or run the built-in catalog.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Check every catalog entry and print a pass/fail table.
    Verify {
        /// Verify a deliberately broken flow instead (ricci-sign or pi-sign).
        #[arg(long, value_parser = parse_mutation)]
        mutation: Option<Mutation>,
    },
}

#[derive(Subcommand)]
enum CatalogCommand {
    /// List the entries.
    List,
    /// Run one entry.
    Run {
        name: String,
        /// Integrate backward in time.
        #[arg(long)]
        backward: bool,
        /// Time horizon (defaults to 100).
        #[arg(long)]
        horizon: Option<f64>,
    },
}

fn parse_mutation(s: &str) -> Result<Mutation, String> {
    Mutation::parse(s).ok_or_else(|| format!("unknown mutation `{s}` (ricci-sign, pi-sign)"))
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            blowup_threshold: self.blowup_threshold,
        }
    }
}

fn exit(status: ExitStatus) -> ExitCode {
    ExitCode::from(status.code() as u8)
}

fn print_outcome(outcome: &RunOutcome) {
    for run in &outcome.report.runs {
        let dir = run.direction.as_str();
        match (&run.verdict, &run.error) {
            (_, Some(err)) => println!("{dir}: integrator failure: {err}"),
            (Some(verdict), None) => {
                let mut line = format!("{dir}: {verdict}");
                if let Some(st) = &run.singular_time {
                    if let Some(t) = st.regression {
                        line += &format!(" at t = {t:.9}");
                    }
                    line += &format!(" (rigorous bound {:.9})", st.rigorous_bound);
                }
                if let Some(exp) = &run.expected {
                    line += if exp.met { ", as expected" } else { ", CONTRADICTS expectation" };
                }
                println!("{line}");
            }
            (None, None) => {}
        }
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
}

fn run_scenario(mut scenario: Scenario, flags: &Flags) -> ExitCode {
    flags.overrides().apply(&mut scenario);
    match io::run(&scenario, &flags.out) {
        Ok(outcome) => {
            print_outcome(&outcome);
            exit(outcome.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit(ExitStatus::IntegratorFailure)
        }
    }
}

fn run_file(path: &Path, flags: &Flags) -> ExitCode {
    match io::load_scenario(path) {
        Ok(scenario) => run_scenario(scenario, flags),
        Err(e) => {
            eprintln!("error: {e}");
            exit(ExitStatus::LoadError)
        }
    }
}

fn list_catalog() -> ExitCode {
    println!(
        "{:<12} {:>2} {:>2} {:>7}  {:<20} {:<20} {:<8} summary",
        "name", "q", "n", "R(0)", "forward", "backward", "cover"
    );
    for e in catalog_entries() {
        let show = |x: catalog::Expected| match x {
            catalog::Expected::Blowup { time: Some(t) } => format!("blowup at {t:.4}"),
            other => other.label().to_string(),
        };
        println!(
            "{:<12} {:>2} {:>2} {:>7.3}  {:<20} {:<20} {:<8} {}",
            e.name,
            e.bracket.dims().q(),
            e.n(),
            e.initial_scalar,
            show(e.forward),
            show(e.backward),
            e.cover_space,
            e.summary
        );
    }
    ExitCode::SUCCESS
}

fn run_catalog(name: &str, backward: bool, horizon: Option<f64>, flags: &Flags) -> ExitCode {
    let entry = match catalog::find(name) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return exit(ExitStatus::LoadError);
        }
    };
    if let Some(h) = horizon {
        if !h.is_finite() || h <= 0.0 {
            eprintln!("error: horizon must be positive and finite");
            return exit(ExitStatus::LoadError);
        }
    }
    let direction = if backward {
        Direction::Backward
    } else {
        Direction::Forward
    };
    let scenario = Scenario::from_catalog(&entry, vec![direction], horizon.or(Some(DEFAULT_HORIZON)));
    run_scenario(scenario, flags)
}

fn verify(mutation: Option<Mutation>, flags: &Flags) -> ExitCode {
    let mut opts = IntegratorOptions::default();
    flags.overrides().apply_to(&mut opts);
    let report = match mutation {
        Some(m) => verify_with(&m, &opts),
        None => verify_with(&homflow::flow::BracketFlowField, &opts),
    };
    print!("{}", report.render());
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { scenario } => run_file(scenario, &cli.flags),
        Command::Catalog(CatalogCommand::List) => list_catalog(),
        Command::Catalog(CatalogCommand::Run {
            name,
            backward,
            horizon,
        }) => run_catalog(name, *backward, *horizon, &cli.flags),
        Command::Verify { mutation } => verify(*mutation, &cli.flags),
    }
}
