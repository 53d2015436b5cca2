//! The bracket flow `d/dt mu = -pi(diag(0, Ric_mu)) mu`, integrated forward or
//! backward in time with finite-time singularity detection.

mod blowup;
mod report;

pub use blowup::{
    estimate_blowup_time, fit_power_law_blowup, remaining_time_lower_bound, BlowupEstimate,
    PowerLawFit,
};
pub(crate) use blowup::estimate_from_samples;
pub use report::{estimate_report, estimate_report_with, type_i_diagnostic, EstimateReport};

use serde::{Deserialize, Serialize};

use crate::algebra::{
    bracket_norm, check_conditions, ensure_member, pi_action_full, LieBracket, DEFAULT_TOL,
};
use crate::curvature::{ricci_quadratic_constant, ricci_unchecked};
use crate::error::{Condition, Error, Result};
use crate::integrator::{drive, Accepted, DriveEnd, Flow, Monitor, OdeSystem, Reversed, StepControl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

/// Where the vector field comes from. The standard field is
/// [`BracketFlowField`]; alternative fields exist so that verification runs
/// can be pointed at deliberately broken dynamics.
pub trait VectorField: Sync {
    fn eval(&self, mu: &LieBracket) -> LieBracket;
}

/// `mu -> -pi(diag(0, Ric_mu)) mu`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BracketFlowField;

impl VectorField for BracketFlowField {
    fn eval(&self, mu: &LieBracket) -> LieBracket {
        rhs_unchecked(mu)
    }
}

fn rhs_unchecked(mu: &LieBracket) -> LieBracket {
    let ric = ricci_unchecked(mu).ric;
    let dims = mu.dims();
    let (q, n, d) = (dims.q(), dims.n(), dims.total());
    let mut full = nalgebra::DMatrix::zeros(d, d);
    full.view_mut((q, q), (n, n)).copy_from(&ric);
    pi_action_full(&full, mu)
        .expect("matching shapes")
        .scale(-1.0)
}

/// Right-hand side of the bracket flow at `mu`.
pub fn bracket_flow_rhs(mu: &LieBracket) -> Result<LieBracket> {
    ensure_member(mu, DEFAULT_TOL)?;
    Ok(rhs_unchecked(mu))
}

/// Constant `C` with `|d/dt mu| <= C |mu|^3` for every bracket of
/// total dimension `d`: `|pi(A) mu| <= 3 |A| |mu|` and `|Ric| <= C1 |mu|^2`.
pub fn cubic_growth_constant(d: usize) -> f64 {
    3.0 * ricci_quadratic_constant(d)
}

/// Integrator and singularity-detection settings.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// `|mu|` above which a blowup verdict may be issued.
    pub blowup_threshold: f64,
    /// The verdict additionally needs the rigorous remaining-time bound to
    /// drop below this resolution.
    pub time_resolution: f64,
    /// Relative membership drift tolerated along the trajectory.
    pub drift_tol: f64,
    pub sampling: SamplingOptions,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 5_000_000,
            blowup_threshold: 1e6,
            time_resolution: 1e-12,
            drift_tol: 1e-8,
            sampling: SamplingOptions::default(),
        }
    }
}

impl IntegratorOptions {
    pub(crate) fn step_control(&self) -> StepControl {
        StepControl {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingOptions {
    /// Samples on a uniform grid over the horizon.
    pub uniform_samples: usize,
    /// A new sample is taken whenever `|mu|` changes by this factor, which
    /// makes the grid log-dense near a singularity.
    pub growth_per_sample: f64,
    /// Every `checkpoint_stride`-th sample keeps the full bracket.
    pub checkpoint_stride: usize,
    /// Elapsed times `|t|` the integrator must land on exactly.
    pub output_times: Vec<f64>,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self {
            uniform_samples: 1000,
            growth_per_sample: 10f64.powf(1.0 / 40.0),
            checkpoint_stride: 1,
            output_times: Vec::new(),
        }
    }
}

/// `(t, mu)` with integrator bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub mu: LieBracket,
    pub step: f64,
    pub err_est: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub mu_norm: f64,
    pub scalar: f64,
    pub ric_sq_trace: f64,
    pub jacobi_residual: f64,
    pub state: Option<FlowState>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Zero bracket: stationary for all time.
    EternalFlat,
    /// Reached the horizon without a singularity.
    ImmortalToHorizon,
    /// Finite-time singularity in the integration direction.
    Blowup(BlowupEstimate),
}

impl Verdict {
    pub fn is_blowup(&self) -> bool {
        matches!(self, Verdict::Blowup(_))
    }

    pub fn blowup_time(&self) -> Option<f64> {
        match self {
            Verdict::Blowup(b) => Some(b.time),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::EternalFlat => "eternal-flat",
            Verdict::ImmortalToHorizon => "immortal-to-horizon",
            Verdict::Blowup(_) => "blowup",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: LieBracket,
    pub direction: Direction,
    pub horizon: f64,
    pub samples: Vec<Sample>,
    pub verdict: Verdict,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.initial.dims().n()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories hold at least one sample")
    }

    /// Samples that carry the full bracket.
    pub fn checkpoints(&self) -> impl Iterator<Item = (&Sample, &FlowState)> {
        self.samples.iter().filter_map(|s| s.state.as_ref().map(|st| (s, st)))
    }
}

/// The bracket flow as an ODE on the flattened tensor.
pub(crate) struct BracketSystem<'a, F: VectorField + ?Sized> {
    pub dims: crate::algebra::Dimensions,
    pub field: &'a F,
}

impl<F: VectorField + ?Sized> OdeSystem for BracketSystem<'_, F> {
    fn dim(&self) -> usize {
        let d = self.dims.total();
        d * d * d
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let mu = LieBracket::from_tensor(self.dims, y)?;
        dy.copy_from_slice(self.field.eval(&mu).as_slice());
        Ok(())
    }
}

fn make_sample(t: f64, mu: &LieBracket, keep: bool, step: f64, err_est: f64) -> Sample {
    let ric = ricci_unchecked(mu);
    Sample {
        t,
        mu_norm: bracket_norm(mu),
        scalar: ric.scalar,
        ric_sq_trace: ric.ric_sq_trace,
        jacobi_residual: crate::algebra::jacobi_residual(mu),
        state: keep.then(|| FlowState {
            t,
            mu: mu.clone(),
            step,
            err_est,
        }),
    }
}

struct BracketMonitor<'a> {
    dims: crate::algebra::Dimensions,
    sign: f64,
    horizon: f64,
    opts: &'a IntegratorOptions,
    samples: Vec<Sample>,
    last_norm: f64,
    next_uniform: usize,
    sample_count: usize,
    blowup: bool,
}

impl BracketMonitor<'_> {
    fn uniform_time(&self, i: usize) -> f64 {
        self.horizon * i as f64 / self.opts.sampling.uniform_samples.max(1) as f64
    }

    fn push(&mut self, s: f64, mu: &LieBracket, info: Option<Accepted>, force_state: bool) -> Result<()> {
        let stride = self.opts.sampling.checkpoint_stride.max(1);
        let keep = force_state || self.sample_count.is_multiple_of(stride);
        let (step, err) = info.map_or((0.0, 0.0), |i| (i.step, i.err_est));
        let sample = make_sample(self.sign * s, mu, keep, step, err);
        self.last_norm = sample.mu_norm;
        self.sample_count += 1;
        self.samples.push(sample);
        Ok(())
    }

    fn check_drift(&self, s: f64, mu: &LieBracket, norm: f64) -> Result<()> {
        let report = check_conditions(mu, DEFAULT_TOL);
        let scale = norm.max(1.0);
        let relative = [
            (Condition::Jacobi, report.jacobi_residual / (scale * scale)),
            (Condition::H1, report.h1_residual / scale),
            (Condition::H3, report.h3_residual / scale),
        ];
        for (condition, residual) in relative {
            if residual > self.opts.drift_tol {
                return Err(Error::DriftFailure {
                    t: self.sign * s,
                    condition,
                    residual,
                });
            }
        }
        Ok(())
    }
}

impl Monitor for BracketMonitor<'_> {
    fn accept(&mut self, info: Accepted, y: &[f64]) -> Result<Flow> {
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d = self.dims.total();
        let remaining = remaining_time_lower_bound(norm, d);
        let is_blowup =
            norm > self.opts.blowup_threshold && remaining < self.opts.time_resolution;

        let mut take = info.landed || is_blowup;
        while self.next_uniform <= self.opts.sampling.uniform_samples
            && self.uniform_time(self.next_uniform) <= info.s
        {
            take = true;
            self.next_uniform += 1;
        }
        let growth = self.opts.sampling.growth_per_sample;
        if norm >= self.last_norm * growth || norm * growth <= self.last_norm {
            take = true;
        }
        if !norm.is_finite() {
            return Err(Error::StiffnessFailure {
                t: self.sign * info.s,
                step: info.step,
            });
        }
        if take {
            let mu = LieBracket::from_tensor(self.dims, y)?;
            self.check_drift(info.s, &mu, norm)?;
            self.push(info.s, &mu, Some(info), is_blowup || info.landed)?;
        }
        if is_blowup {
            self.blowup = true;
            return Ok(Flow::Stop);
        }
        Ok(Flow::Continue)
    }
}

/// Integrates the bracket flow from `initial` with the standard vector field.
pub fn integrate(
    initial: &LieBracket,
    direction: Direction,
    horizon: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    integrate_with(&BracketFlowField, initial, direction, horizon, opts)
}

/// Integrates with an arbitrary vector field.
pub fn integrate_with<F: VectorField + ?Sized>(
    field: &F,
    initial: &LieBracket,
    direction: Direction,
    horizon: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::NotApplicable(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    ensure_member(initial, DEFAULT_TOL)?;
    let dims = initial.dims();

    if initial.is_zero() {
        let samples = vec![
            make_sample(0.0, initial, true, 0.0, 0.0),
            make_sample(direction.sign() * horizon, initial, true, 0.0, 0.0),
        ];
        return Ok(Trajectory {
            initial: initial.clone(),
            direction,
            horizon,
            samples,
            verdict: Verdict::EternalFlat,
            accepted_steps: 0,
            rejected_steps: 0,
        });
    }

    let mut monitor = BracketMonitor {
        dims,
        sign: direction.sign(),
        horizon,
        opts,
        samples: Vec::new(),
        last_norm: 0.0,
        next_uniform: 1,
        sample_count: 0,
        blowup: false,
    };
    monitor.push(0.0, initial, None, true)?;

    let system = BracketSystem { dims, field };
    let mut stops: Vec<f64> = opts
        .sampling
        .output_times
        .iter()
        .copied()
        .filter(|&s| s > 0.0 && s <= horizon)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let control = opts.step_control();
    let (_, end, stats) = match direction {
        Direction::Forward => drive(&system, &mut monitor, initial.as_slice(), horizon, &stops, &control)?,
        Direction::Backward => drive(
            &Reversed(&system),
            &mut monitor,
            initial.as_slice(),
            horizon,
            &stops,
            &control,
        )?,
    };

    if let DriveEnd::Underflow { s, step } = end {
        return Err(Error::StiffnessFailure {
            t: direction.sign() * s,
            step,
        });
    }

    let mut traj = Trajectory {
        initial: initial.clone(),
        direction,
        horizon,
        samples: monitor.samples,
        verdict: Verdict::ImmortalToHorizon,
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
    };
    if monitor.blowup {
        traj.verdict = Verdict::Blowup(blowup::estimate_from_samples(
            &traj.samples,
            direction,
            dims.total(),
        ));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Dimensions;

    fn dims3() -> Dimensions {
        Dimensions::group(3).unwrap()
    }

    fn heisenberg(c: f64) -> LieBracket {
        LieBracket::from_triples(dims3(), &[(0, 1, 2, c)]).unwrap()
    }

    fn su2(c: f64) -> LieBracket {
        LieBracket::from_triples(dims3(), &[(0, 1, 2, c), (1, 2, 0, c), (2, 0, 1, c)]).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let zero = LieBracket::zero(dims3());
        assert!(bracket_flow_rhs(&zero).unwrap().is_zero());

        let rhs = bracket_flow_rhs(&heisenberg(1.0)).unwrap();
        assert!((&rhs - &heisenberg(-1.5)).as_slice().iter().all(|v| v.abs() < 1e-15));

        let rhs = bracket_flow_rhs(&su2(1.0)).unwrap();
        assert!((&rhs - &su2(0.5)).as_slice().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn zero_bracket_is_eternal() {
        let traj = integrate(
            &LieBracket::zero(dims3()),
            Direction::Forward,
            10.0,
            &IntegratorOptions::default(),
        )
        .unwrap();
        assert_eq!(traj.verdict, Verdict::EternalFlat);
        assert!(traj.samples.iter().all(|s| s.scalar == 0.0 && s.mu_norm == 0.0));
    }

    #[test]
    fn heisenberg_follows_closed_form() {
        let traj = integrate(&heisenberg(1.0), Direction::Forward, 10.0, &IntegratorOptions::default())
            .unwrap();
        assert_eq!(traj.verdict, Verdict::ImmortalToHorizon);
        assert_eq!(traj.last().t, 10.0);
        for s in &traj.samples {
            let exact = -1.0 / (2.0 * (1.0 + 3.0 * s.t));
            assert!(((s.scalar - exact) / exact).abs() < 1e-8, "t = {}", s.t);
        }
    }

    #[test]
    fn su2_blows_up_at_one() {
        let traj = integrate(&su2(1.0), Direction::Forward, 5.0, &IntegratorOptions::default())
            .unwrap();
        let omega = traj.verdict.blowup_time().expect("blowup");
        assert!((omega - 1.0).abs() < 1e-3, "omega = {omega}");
    }

    #[test]
    fn samples_are_monotone_in_time() {
        let traj = integrate(&heisenberg(1.0), Direction::Backward, 1.0, &IntegratorOptions::default())
            .unwrap();
        assert!(traj.samples.windows(2).all(|w| w[1].t < w[0].t));
        assert!(traj.verdict.is_blowup());
    }

    #[test]
    fn rejects_bad_horizon_and_non_members() {
        let opts = IntegratorOptions::default();
        assert!(integrate(&heisenberg(1.0), Direction::Forward, 0.0, &opts).is_err());
        let bad = LieBracket::from_triples(
            dims3(),
            &[(0, 1, 2, 1.0), (0, 1, 0, 0.5), (1, 2, 1, 1.0)],
        )
        .unwrap();
        assert!(matches!(
            integrate(&bad, Direction::Forward, 1.0, &opts),
            Err(Error::NotMember { .. })
        ));
    }
}
