use nalgebra::{Matrix3, Vector3};

use super::{cubic_growth_constant, Direction, Sample, Trajectory};
use crate::error::{Error, Result};

/// Decades of `|mu|` below the last sample used by the fit.
const TAIL_DECADES: f64 = 3.0;
const MIN_TAIL_SAMPLES: usize = 10;
const MIN_TAIL_DECADES: f64 = 2.0;
const SCAN_POINTS: usize = 400;

/// Least-squares fit of `|mu(t)| ≈ K |omega - t|^exponent` on a trajectory tail.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    /// Fitted singular time (signed; `alpha` for backward runs).
    pub time: f64,
    /// Regression standard error of `time`. Not a rigorous bound.
    pub time_stderr: f64,
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub prefactor: f64,
    pub samples: usize,
    pub decades: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupEstimate {
    /// Regression estimate of the singular time when a fit was possible,
    /// otherwise the rigorous bound.
    pub time: f64,
    /// Rigorous one-sided bound: the singularity cannot occur before this
    /// time (after it, for backward runs).
    pub rigorous_bound: f64,
    pub last_time: f64,
    pub fit: Option<PowerLawFit>,
}

impl BlowupEstimate {
    /// `time ± stderr` from the regression, if any.
    pub fn confidence_interval(&self) -> Option<(f64, f64)> {
        self.fit
            .as_ref()
            .map(|f| (f.time - f.time_stderr, f.time + f.time_stderr))
    }
}

/// Lower bound on the remaining existence time from a state of norm `norm`:
/// `d/dt |mu|^2 <= 2C |mu|^4` cannot blow up before `1 / (2C |mu|^2)`.
pub fn remaining_time_lower_bound(norm: f64, d: usize) -> f64 {
    1.0 / (2.0 * cubic_growth_constant(d) * norm * norm)
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    (intercept, slope, rss)
}

/// Profile residual for a trial singular time `omega` (in elapsed time `s`).
fn profile(s: &[f64], log_norm: &[f64], omega: f64) -> (f64, f64, f64) {
    let x: Vec<f64> = s.iter().map(|si| (omega - si).ln()).collect();
    linear_fit(&x, log_norm)
}

/// Fits `log |mu| = a + b log(omega - t)` with `omega` free, by profiling the
/// residual over `omega` beyond the last sample. `times` must be strictly
/// monotone in the integration direction.
pub fn fit_power_law_blowup(
    times: &[f64],
    norms: &[f64],
    direction: Direction,
) -> Result<PowerLawFit> {
    if times.len() != norms.len() || times.len() < 4 {
        return Err(Error::InsufficientTail {
            samples: times.len().min(norms.len()),
            decades: 0.0,
        });
    }
    let sign = direction.sign();
    let s: Vec<f64> = times.iter().map(|t| sign * t).collect();
    let log_norm: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let s_last = *s.last().expect("non-empty");
    let span = s_last - s[0];

    let lo = (8.0 * f64::EPSILON * s_last.abs().max(span)).max(1e-300).ln();
    let hi = (100.0 * span.max(f64::MIN_POSITIVE)).ln();
    let rss_at = |u: f64| profile(&s, &log_norm, s_last + u.exp()).2;

    let step = (hi - lo) / SCAN_POINTS as f64;
    let (mut best_u, mut best_rss) = (lo, f64::INFINITY);
    for i in 0..=SCAN_POINTS {
        let u = lo + step * i as f64;
        let r = rss_at(u);
        if r < best_rss {
            best_rss = r;
            best_u = u;
        }
    }

    // Golden-section refinement around the best grid point.
    let (mut a, mut b) = ((best_u - step).max(lo), (best_u + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (rss_at(c), rss_at(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = rss_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = rss_at(d);
        }
    }
    let u = 0.5 * (a + b);
    let omega = s_last + u.exp();
    let (intercept, slope, rss) = profile(&s, &log_norm, omega);

    // Standard errors from the Gauss-Newton normal matrix of the full
    // three-parameter model. The omega column is scaled by (omega - s_last)
    // to keep the normal matrix well conditioned.
    let gap = omega - s_last;
    let mut jtj = Matrix3::zeros();
    for si in &s {
        let row = Vector3::new(1.0, (omega - si).ln(), slope * gap / (omega - si));
        jtj += row * row.transpose();
    }
    let dof = (s.len() as f64 - 3.0).max(1.0);
    let sigma2 = rss / dof;
    let (time_stderr, exponent_stderr) = match jtj.try_inverse() {
        Some(inv) => (
            (sigma2 * inv[(2, 2)]).max(0.0).sqrt() * gap,
            (sigma2 * inv[(1, 1)]).max(0.0).sqrt(),
        ),
        None => (f64::INFINITY, f64::INFINITY),
    };

    let (min_n, max_n) = norms
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(PowerLawFit {
        time: sign * omega,
        time_stderr,
        exponent: slope,
        exponent_stderr,
        prefactor: intercept.exp(),
        samples: s.len(),
        decades: (max_n / min_n).log10(),
    })
}

/// Samples in the last `decades` of `|mu|` growth, ending at the final sample.
pub(crate) fn tail(samples: &[Sample], decades: f64) -> &[Sample] {
    let Some(last) = samples.last() else {
        return samples;
    };
    let floor = last.mu_norm * 10f64.powf(-decades);
    let start = samples
        .iter()
        .rposition(|s| s.mu_norm < floor)
        .map_or(0, |i| i + 1);
    &samples[start..]
}

fn tail_fit(samples: &[Sample], direction: Direction) -> Result<PowerLawFit> {
    let tail = tail(samples, TAIL_DECADES);
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s.mu_norm), hi.max(s.mu_norm)));
    let decades = if tail.is_empty() { 0.0 } else { (hi / lo).log10() };
    if tail.len() < MIN_TAIL_SAMPLES || decades < MIN_TAIL_DECADES {
        return Err(Error::InsufficientTail {
            samples: tail.len(),
            decades,
        });
    }
    let times: Vec<f64> = tail.iter().map(|s| s.t).collect();
    let norms: Vec<f64> = tail.iter().map(|s| s.mu_norm).collect();
    fit_power_law_blowup(&times, &norms, direction)
}

pub(crate) fn rigorous_bound(last: &Sample, direction: Direction, d: usize) -> f64 {
    last.t + direction.sign() * remaining_time_lower_bound(last.mu_norm, d)
}

pub(crate) fn estimate_from_samples(
    samples: &[Sample],
    direction: Direction,
    d: usize,
) -> BlowupEstimate {
    let last = samples.last().expect("non-empty trajectory");
    let bound = rigorous_bound(last, direction, d);
    let fit = tail_fit(samples, direction).ok();
    BlowupEstimate {
        time: fit.as_ref().map_or(bound, |f| f.time),
        rigorous_bound: bound,
        last_time: last.t,
        fit,
    }
}

/// Power-law fit of the trajectory tail together with the rigorous bracket.
/// Refuses when the tail is shorter than 10 samples or spans less than two
/// decades of `|mu|`.
pub fn estimate_blowup_time(traj: &Trajectory) -> Result<BlowupEstimate> {
    let fit = tail_fit(&traj.samples, traj.direction)?;
    let last = traj.last();
    Ok(BlowupEstimate {
        time: fit.time,
        rigorous_bound: rigorous_bound(last, traj.direction, traj.initial.dim()),
        last_time: last.t,
        fit: Some(fit),
    })
}
