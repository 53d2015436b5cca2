use serde::Serialize;

use super::blowup::tail;
use super::{BracketSystem, Trajectory, Verdict, VectorField};
use crate::algebra::{bracket_norm, LieBracket};
use crate::curvature::{koszul_ricci_oracle, ricci_unchecked};
use crate::error::{Error, Result};
use crate::integrator::single_step;

/// Decades of approach used for the rate floor and the Type-I diagnostic.
const APPROACH_DECADES: f64 = 2.0;

/// Diagnostics of the growth and curvature estimates along a trajectory.
/// Absent values are `None`, never NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    /// `max |d/dt mu| / |mu|^3` over checkpoints.
    pub cubic_ratio_max: f64,
    /// `min sqrt|omega - t| * |mu(t)|` over the final two decades of a blowup.
    pub blowup_rate_floor: Option<f64>,
    /// Max relative error between the time finite difference of the scalar
    /// curvature and `2 tr Ric^2` at interior checkpoints.
    pub scalar_evolution_max_relerr: f64,
    pub scalar_evolution_points: usize,
    /// Max decrease of R along the direction of time, relative to `1 + |R|`.
    pub monotonicity_violation: f64,
    /// Min of `(1/R0 - 2t/n) - 1/R(t)` (sign flipped for backward runs),
    /// relative to `|1/R0| + 2|t|/n`, over samples where R keeps the sign of
    /// R0. This is `dR/dt >= (2/n) R^2` integrated in reciprocal form, which
    /// stays well conditioned up to a singularity. `None` when `R0 = 0`.
    pub comparison_slack: Option<f64>,
}

/// Time derivative of `R(mu(t))` by a Richardson-extrapolated central
/// difference of two short flow steps either side of `mu`.
fn scalar_derivative_fd<F: VectorField + ?Sized>(field: &F, mu: &LieBracket) -> Result<f64> {
    let system = BracketSystem {
        dims: mu.dims(),
        field,
    };
    let norm = bracket_norm(mu);
    let delta = 1e-2 / (norm * norm);
    let central = |h: f64| -> Result<f64> {
        let plus = LieBracket::from_tensor(mu.dims(), &single_step(&system, mu.as_slice(), h)?)?;
        let minus = LieBracket::from_tensor(mu.dims(), &single_step(&system, mu.as_slice(), -h)?)?;
        Ok((ricci_unchecked(&plus).scalar - ricci_unchecked(&minus).scalar) / (2.0 * h))
    };
    let coarse = central(delta)?;
    let fine = central(0.5 * delta)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

pub fn estimate_report(traj: &Trajectory) -> Result<EstimateReport> {
    estimate_report_with(&super::BracketFlowField, traj)
}

/// Same as [`estimate_report`], differentiating along `field`.
pub fn estimate_report_with<F: VectorField + ?Sized>(
    field: &F,
    traj: &Trajectory,
) -> Result<EstimateReport> {
    let mut cubic_ratio_max = 0.0f64;
    for (sample, state) in traj.checkpoints() {
        if sample.mu_norm > 0.0 {
            let rhs = field.eval(&state.mu);
            cubic_ratio_max = cubic_ratio_max.max(bracket_norm(&rhs) / sample.mu_norm.powi(3));
        }
    }

    let mut scalar_evolution_max_relerr = 0.0f64;
    let mut scalar_evolution_points = 0;
    let last_index = traj.samples.len().saturating_sub(1);
    for (i, sample) in traj.samples.iter().enumerate() {
        let Some(state) = &sample.state else { continue };
        if i == 0 || i == last_index || sample.mu_norm == 0.0 {
            continue;
        }
        let fd = scalar_derivative_fd(field, &state.mu)?;
        let exact = 2.0 * sample.ric_sq_trace;
        let floor = 1e-12 * sample.mu_norm.powi(4);
        let relerr = (fd - exact).abs() / exact.abs().max(floor);
        scalar_evolution_max_relerr = scalar_evolution_max_relerr.max(relerr);
        scalar_evolution_points += 1;
    }

    let mut monotonicity_violation = 0.0f64;
    for w in traj.samples.windows(2) {
        let forward_in_time = (w[1].t - w[0].t).signum();
        let drop = -(w[1].scalar - w[0].scalar) * forward_in_time;
        if drop > 0.0 {
            monotonicity_violation = monotonicity_violation.max(drop / (1.0 + w[0].scalar.abs()));
        }
    }

    let n = traj.n() as f64;
    let r0 = traj.samples[0].scalar;
    let comparison_slack = if r0 == 0.0 {
        None
    } else {
        let sign = traj.direction.sign();
        traj.samples
            .iter()
            .filter(|s| s.scalar != 0.0 && s.scalar.signum() == r0.signum())
            .map(|s| {
                let linear = 1.0 / r0 - 2.0 * s.t / n;
                sign * (linear - 1.0 / s.scalar) / ((1.0 / r0).abs() + 2.0 * s.t.abs() / n)
            })
            .reduce(f64::min)
    };

    let blowup_rate_floor = match &traj.verdict {
        Verdict::Blowup(est) => tail(&traj.samples, APPROACH_DECADES)
            .iter()
            .map(|s| (est.time - s.t).abs().sqrt() * s.mu_norm)
            .reduce(f64::min),
        _ => None,
    };

    Ok(EstimateReport {
        cubic_ratio_max,
        blowup_rate_floor,
        scalar_evolution_max_relerr,
        scalar_evolution_points,
        monotonicity_violation,
        comparison_slack,
    })
}

/// `sup |omega - t| * |Riem(mu(t))|` over the final two decades of a blowup.
/// A finite value is consistent with a Type-I singularity.
pub fn type_i_diagnostic(traj: &Trajectory) -> Result<f64> {
    let q = traj.initial.dims().q();
    if q != 0 {
        return Err(Error::IsotropyNotSupported { q });
    }
    let est = match &traj.verdict {
        Verdict::EternalFlat => return Ok(0.0),
        Verdict::ImmortalToHorizon => {
            return Err(Error::NotApplicable(
                "Type-I diagnostic needs a blowup trajectory".into(),
            ))
        }
        Verdict::Blowup(est) => est,
    };
    let mut sup = 0.0f64;
    for s in tail(&traj.samples, APPROACH_DECADES) {
        if let Some(state) = &s.state {
            let riem = koszul_ricci_oracle(&state.mu)?.riem_norm;
            sup = sup.max((est.time - s.t).abs() * riem);
        }
    }
    Ok(sup)
}
