//! The Ricci flow of left-invariant metrics on a fixed Lie algebra, and its
//! comparison with the bracket flow through isometry invariants.
//!
//! A metric is stored as a symmetric positive-definite `P` with
//! `g(X, Y) = <P X, Y>`. Curvature is computed by pushing the bracket through
//! any factor `L` with `P = L^T L`, which turns `(g, g_P)` into an orthonormal
//! frame.

use nalgebra::DMatrix;

use crate::algebra::{bracket_norm, ensure_member, LieBracket, DEFAULT_TOL};
use crate::curvature::{ricci_unchecked, sorted_symmetric_eigenvalues};
use crate::error::{Error, Result};
use crate::flow::{
    estimate_from_samples, integrate, remaining_time_lower_bound, Direction, IntegratorOptions,
    Sample, Verdict,
};
use crate::integrator::{drive, Accepted, DriveEnd, Flow, Monitor, OdeSystem, Reversed};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricState {
    pub t: f64,
    pub p_matrix: DMatrix<f64>,
}

impl MetricState {
    pub fn identity(n: usize) -> Self {
        Self {
            t: 0.0,
            p_matrix: DMatrix::identity(n, n),
        }
    }
}

/// How to pick `L` with `P = L^T L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Factorization {
    /// Upper-triangular `L`, the transpose of the Cholesky factor.
    #[default]
    Cholesky,
    /// `L = P^(1/2)`.
    SymmetricSqrt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRicci {
    /// Ricci operator in the fixed frame (g-self-adjoint, not symmetric).
    pub ric: DMatrix<f64>,
    pub scalar: f64,
    /// Ricci eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// `|L . mu0|`, the norm of the bracket in a g-orthonormal frame.
    pub effective_norm: f64,
}

fn check_group(mu0: &LieBracket) -> Result<()> {
    let q = mu0.dims().q();
    if q != 0 {
        return Err(Error::IsotropyNotSupported { q });
    }
    Ok(())
}

fn symmetric_part(p: &DMatrix<f64>) -> DMatrix<f64> {
    (p + p.transpose()) * 0.5
}

fn factor(p: &DMatrix<f64>, how: Factorization) -> Result<DMatrix<f64>> {
    let sym = symmetric_part(p);
    let not_pd = || Error::NotPositiveDefinite {
        min_eigenvalue: sorted_symmetric_eigenvalues(&sym)
            .first()
            .copied()
            .unwrap_or(f64::NAN),
    };
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: f64::NAN,
        });
    }
    match how {
        Factorization::Cholesky => sym
            .clone()
            .cholesky()
            .map(|c| c.l().transpose())
            .ok_or_else(not_pd),
        Factorization::SymmetricSqrt => {
            let eig = sym.clone().symmetric_eigen();
            if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
                return Err(not_pd());
            }
            let root = eig.eigenvalues.map(f64::sqrt);
            Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose())
        }
    }
}

fn metric_ricci_unchecked(mu0: &LieBracket, p: &DMatrix<f64>, how: Factorization) -> Result<MetricRicci> {
    let n = mu0.dims().n();
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.nrows(),
        });
    }
    let l = factor(p, how)?;
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
    let pushed = mu0.act_with_inverse(&l, &l_inv);
    let data = ricci_unchecked(&pushed);
    let ric = &l_inv * &data.ric * &l;
    Ok(MetricRicci {
        scalar: data.scalar,
        eigenvalues: data.sorted_eigenvalues(),
        effective_norm: bracket_norm(&pushed),
        ric,
    })
}

/// Ricci operator of the metric `P` on the Lie algebra `mu0`.
pub fn metric_ricci(mu0: &LieBracket, state: &MetricState) -> Result<MetricRicci> {
    metric_ricci_with(mu0, state, Factorization::Cholesky)
}

pub fn metric_ricci_with(
    mu0: &LieBracket,
    state: &MetricState,
    how: Factorization,
) -> Result<MetricRicci> {
    check_group(mu0)?;
    ensure_member(mu0, DEFAULT_TOL)?;
    metric_ricci_unchecked(mu0, &state.p_matrix, how)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub t: f64,
    pub scalar: f64,
    pub eigenvalues: Vec<f64>,
    pub effective_norm: f64,
    pub state: Option<MetricState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricTrajectory {
    pub mu0: LieBracket,
    pub direction: Direction,
    pub horizon: f64,
    pub samples: Vec<MetricSample>,
    /// `Blowup` here means the metric degenerates (singular-metric verdict).
    pub verdict: Verdict,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl MetricTrajectory {
    pub fn last(&self) -> &MetricSample {
        self.samples.last().expect("trajectories hold at least one sample")
    }
}

struct MetricSystem<'a> {
    mu0: &'a LieBracket,
    n: usize,
}

impl OdeSystem for MetricSystem<'_> {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let p = DMatrix::from_column_slice(self.n, self.n, y);
        let ric = metric_ricci_unchecked(self.mu0, &p, Factorization::Cholesky)?.ric;
        let rc = symmetric_part(&(&symmetric_part(&p) * ric));
        for (out, v) in dy.iter_mut().zip(rc.iter()) {
            *out = -2.0 * v;
        }
        Ok(())
    }

    fn error_scale(&self, y: &[f64]) -> f64 {
        y.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

struct MetricMonitor<'a> {
    mu0: &'a LieBracket,
    n: usize,
    sign: f64,
    horizon: f64,
    opts: &'a IntegratorOptions,
    samples: Vec<MetricSample>,
    last_norm: f64,
    next_uniform: usize,
    sample_count: usize,
    singular: bool,
}

impl MetricMonitor<'_> {
    fn push(&mut self, s: f64, p: DMatrix<f64>, data: MetricRicci, force_state: bool) {
        let stride = self.opts.sampling.checkpoint_stride.max(1);
        let keep = force_state || self.sample_count.is_multiple_of(stride);
        let t = self.sign * s;
        self.last_norm = data.effective_norm;
        self.sample_count += 1;
        self.samples.push(MetricSample {
            t,
            scalar: data.scalar,
            eigenvalues: data.eigenvalues,
            effective_norm: data.effective_norm,
            state: keep.then_some(MetricState { t, p_matrix: p }),
        });
    }
}

impl Monitor for MetricMonitor<'_> {
    fn accept(&mut self, info: Accepted, y: &[f64]) -> Result<Flow> {
        let p = DMatrix::from_column_slice(self.n, self.n, y);
        let data = match metric_ricci_unchecked(self.mu0, &p, Factorization::Cholesky) {
            Ok(data) => data,
            Err(Error::NotPositiveDefinite { .. }) => {
                self.singular = true;
                return Ok(Flow::Stop);
            }
            Err(e) => return Err(e),
        };
        let norm = data.effective_norm;
        let remaining = remaining_time_lower_bound(norm, self.n);
        let singular = norm > self.opts.blowup_threshold && remaining < self.opts.time_resolution;

        let uniform = self.opts.sampling.uniform_samples.max(1);
        let mut take = info.landed || singular;
        while self.next_uniform <= uniform
            && self.horizon * self.next_uniform as f64 / uniform as f64 <= info.s
        {
            take = true;
            self.next_uniform += 1;
        }
        let growth = self.opts.sampling.growth_per_sample;
        if norm >= self.last_norm * growth || norm * growth <= self.last_norm {
            take = true;
        }
        if take {
            self.push(info.s, p, data, singular || info.landed);
        }
        if singular {
            self.singular = true;
            return Ok(Flow::Stop);
        }
        Ok(Flow::Continue)
    }
}

/// Integrates `dP/dt = -2 P Ric(P)` from `p0`, with the integrator contract
/// of the bracket flow. A singular-metric verdict is reported as
/// [`Verdict::Blowup`], with the same time estimates.
pub fn metric_flow_integrate(
    mu0: &LieBracket,
    p0: &MetricState,
    direction: Direction,
    horizon: f64,
    opts: &IntegratorOptions,
) -> Result<MetricTrajectory> {
    check_group(mu0)?;
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::NotApplicable(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    ensure_member(mu0, DEFAULT_TOL)?;
    let n = mu0.dims().n();
    let initial = metric_ricci_unchecked(mu0, &p0.p_matrix, Factorization::Cholesky)?;
    let sign = direction.sign();

    if mu0.is_zero() {
        let flat = |t: f64| MetricSample {
            t,
            scalar: 0.0,
            eigenvalues: vec![0.0; n],
            effective_norm: 0.0,
            state: Some(MetricState {
                t,
                p_matrix: p0.p_matrix.clone(),
            }),
        };
        return Ok(MetricTrajectory {
            mu0: mu0.clone(),
            direction,
            horizon,
            samples: vec![flat(0.0), flat(sign * horizon)],
            verdict: Verdict::EternalFlat,
            accepted_steps: 0,
            rejected_steps: 0,
        });
    }

    let mut monitor = MetricMonitor {
        mu0,
        n,
        sign,
        horizon,
        opts,
        samples: Vec::new(),
        last_norm: 0.0,
        next_uniform: 1,
        sample_count: 0,
        singular: false,
    };
    monitor.push(0.0, p0.p_matrix.clone(), initial, true);

    let system = MetricSystem { mu0, n };
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
    let y0: Vec<f64> = p0.p_matrix.iter().copied().collect();
    let (_, end, stats) = match direction {
        Direction::Forward => drive(&system, &mut monitor, &y0, horizon, &stops, &control)?,
        Direction::Backward => drive(&Reversed(&system), &mut monitor, &y0, horizon, &stops, &control)?,
    };
    if let DriveEnd::Underflow { s, step } = end {
        if !monitor.singular {
            return Err(Error::StiffnessFailure { t: sign * s, step });
        }
    }

    let verdict = if monitor.singular {
        let as_samples: Vec<Sample> = monitor
            .samples
            .iter()
            .map(|m| Sample {
                t: m.t,
                mu_norm: m.effective_norm,
                scalar: m.scalar,
                ric_sq_trace: m.eigenvalues.iter().map(|v| v * v).sum(),
                jacobi_residual: 0.0,
                state: None,
            })
            .collect();
        Verdict::Blowup(estimate_from_samples(&as_samples, direction, n))
    } else {
        Verdict::ImmortalToHorizon
    };
    Ok(MetricTrajectory {
        mu0: mu0.clone(),
        direction,
        horizon,
        samples: monitor.samples,
        verdict,
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
    })
}

/// Outcome of running both flows from matched initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// Shared grid, signed times.
    pub grid: Vec<f64>,
    /// Fraction of the common interval covered by the grid.
    pub coverage: f64,
    /// Max of `|R_metric - R_bracket| / |R_bracket|` on the grid.
    pub scalar_gap: f64,
    /// Max gap between sorted Ricci spectra, relative to the spectral radius.
    pub spectrum_gap: f64,
    pub bracket_verdict: Verdict,
    pub metric_verdict: Verdict,
    /// `|omega_metric - omega_bracket|` when both flows blow up.
    pub singular_time_gap: Option<f64>,
}

impl EquivalenceReport {
    pub fn max_invariant_gap(&self) -> f64 {
        self.scalar_gap.max(self.spectrum_gap)
    }

    pub fn verdicts_agree(&self) -> bool {
        std::mem::discriminant(&self.bracket_verdict) == std::mem::discriminant(&self.metric_verdict)
    }
}

const GRID_POINTS: usize = 200;
const GRID_COVERAGE: f64 = 0.995;

fn grid_values<'a, T>(
    samples: &'a [T],
    grid: &[f64],
    time: impl Fn(&T) -> f64,
) -> Result<Vec<&'a T>> {
    grid.iter()
        .map(|&g| {
            samples
                .iter()
                .find(|s| time(s) == g)
                .ok_or_else(|| Error::NotApplicable(format!("grid time {g} missing from trajectory")))
        })
        .collect()
}

/// Runs the bracket flow from `mu0` and the metric flow from `P0 = I` and
/// compares scalar curvature and Ricci spectra on a shared grid of 200 points
/// covering 99.5% of the common interval.
pub fn equivalence_check(
    mu0: &LieBracket,
    direction: Direction,
    horizon: f64,
    opts: &IntegratorOptions,
) -> Result<EquivalenceReport> {
    check_group(mu0)?;
    let n = mu0.dims().n();
    let p0 = MetricState::identity(n);
    let bracket = integrate(mu0, direction, horizon, opts)?;
    let metric = metric_flow_integrate(mu0, &p0, direction, horizon, opts)?;

    let end = |v: &Verdict| v.blowup_time().map_or(horizon, f64::abs);
    let common = end(&bracket.verdict).min(end(&metric.verdict));
    let grid_end = GRID_COVERAGE * common;
    let grid_s: Vec<f64> = (1..=GRID_POINTS)
        .map(|i| grid_end * i as f64 / GRID_POINTS as f64)
        .collect();

    let mut grid_opts = opts.clone();
    grid_opts.sampling.output_times = grid_s.clone();
    let grid_horizon = grid_s[GRID_POINTS - 1];
    let bracket_grid = integrate(mu0, direction, grid_horizon, &grid_opts)?;
    let metric_grid = metric_flow_integrate(mu0, &p0, direction, grid_horizon, &grid_opts)?;

    let grid: Vec<f64> = grid_s.iter().map(|s| direction.sign() * s).collect();
    let (scalar_gap, spectrum_gap) = if mu0.is_zero() {
        (0.0, 0.0)
    } else {
        let b = grid_values(&bracket_grid.samples, &grid, |s: &Sample| s.t)?;
        let m = grid_values(&metric_grid.samples, &grid, |s: &MetricSample| s.t)?;
        let mut scalar_gap = 0.0f64;
        let mut spectrum_gap = 0.0f64;
        for (bs, ms) in b.iter().zip(&m) {
            let bs_state = bs.state.as_ref().expect("landed samples keep their state");
            let spectrum = ricci_unchecked(&bs_state.mu).sorted_eigenvalues();
            let radius = spectrum.iter().fold(0.0f64, |r, v| r.max(v.abs()));
            let floor = f64::EPSILON * bs.mu_norm * bs.mu_norm;
            scalar_gap = scalar_gap.max((ms.scalar - bs.scalar).abs() / bs.scalar.abs().max(floor));
            for (x, y) in spectrum.iter().zip(&ms.eigenvalues) {
                spectrum_gap = spectrum_gap.max((x - y).abs() / radius.max(floor));
            }
        }
        (scalar_gap, spectrum_gap)
    };

    let singular_time_gap = match (&bracket.verdict, &metric.verdict) {
        (Verdict::Blowup(a), Verdict::Blowup(b)) => Some((a.time - b.time).abs()),
        _ => None,
    };
    Ok(EquivalenceReport {
        grid,
        coverage: grid_horizon / common,
        scalar_gap,
        spectrum_gap,
        bracket_verdict: bracket.verdict,
        metric_verdict: metric.verdict,
        singular_time_gap,
    })
}
