//! Catalog-wide verification: every entry is integrated in both directions
//! and checked against its expected behaviour and the estimates that hold
//! along any homogeneous Ricci flow.
//!
//! The vector field is a parameter so that deliberately broken dynamics
//! ([`Mutation`]) can be shown to fail.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{bracket_norm, pi_action_full, random, scale_bracket, LieBracket};
use crate::catalog::{catalog_entries, corollary_check, CatalogEntry, Expected, DEFAULT_HORIZON};
use crate::curvature::{koszul_ricci_oracle, ricci_unchecked};
use crate::flow::{
    cubic_growth_constant, estimate_report_with, integrate_with, BracketFlowField, Direction,
    IntegratorOptions, Trajectory, VectorField, Verdict,
};
use crate::metric_flow::equivalence_check;

pub const SINGULAR_TIME_TOL: f64 = 1e-3;
pub const CLOSED_FORM_TOL: f64 = 1e-6;
pub const SCALAR_EVOLUTION_TOL: f64 = 1e-4;
pub const MONOTONICITY_TOL: f64 = 1e-9;
pub const ORACLE_TOL: f64 = 1e-9;
pub const EQUIVALENCE_TOL: f64 = 1e-5;
pub const SCALING_TOL: f64 = 1e-12;
pub const COMPARISON_TOL: f64 = 1e-8;

/// Deliberate errors in the vector field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// `mu' = +pi(Ric) mu`.
    RicciSign,
    /// The derivation terms of `pi` enter with `+`:
    /// `A mu(., .) + mu(A ., .) + mu(., A .)`.
    PiSign,
}

impl Mutation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ricci-sign" => Some(Mutation::RicciSign),
            "pi-sign" => Some(Mutation::PiSign),
            _ => None,
        }
    }
}

impl VectorField for Mutation {
    fn eval(&self, mu: &LieBracket) -> LieBracket {
        match self {
            Mutation::RicciSign => BracketFlowField.eval(mu).scale(-1.0),
            Mutation::PiSign => {
                let dims = mu.dims();
                let (q, n, d) = (dims.q(), dims.n(), dims.total());
                let mut a = DMatrix::zeros(d, d);
                a.view_mut((q, q), (n, n)).copy_from(&ricci_unchecked(mu).ric);
                // A mu(., .) alone, then A mu + D = 2 A mu - pi(A) mu.
                let mut tensor = vec![0.0; d * d * d];
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            tensor[(i * d + j) * d + k] =
                                (0..d).map(|l| a[(k, l)] * mu.get(i, j, l)).sum();
                        }
                    }
                }
                let a_mu = LieBracket::from_tensor(dims, &tensor).expect("matching shapes");
                let pi = pi_action_full(&a, mu).expect("matching shapes");
                &pi - &a_mu.scale(2.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub subject: String,
    pub check: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| !r.passed)
    }

    /// Whether some check named `check` failed.
    pub fn failed(&self, check: &str) -> bool {
        self.failures().any(|r| r.check == check)
    }

    /// Aligned plain-text table, one row per check.
    pub fn render(&self) -> String {
        let sw = self.rows.iter().map(|r| r.subject.len()).max().unwrap_or(0).max(7);
        let cw = self.rows.iter().map(|r| r.check.len()).max().unwrap_or(0).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:<sw$}  {:<cw$}  result  detail", "subject", "check");
        for r in &self.rows {
            let result = if r.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{:<sw$}  {:<cw$}  {result:<6}  {}", r.subject, r.check, r.detail);
        }
        let failed = self.failures().count();
        let _ = writeln!(out, "{} checks, {failed} failed", self.rows.len());
        out
    }
}

struct Rows<'a> {
    subject: String,
    rows: &'a mut Vec<CheckRow>,
}

impl Rows<'_> {
    fn push(&mut self, check: &'static str, passed: bool, detail: String) {
        self.rows.push(CheckRow {
            subject: self.subject.clone(),
            check,
            passed,
            detail,
        });
    }
}

fn closed_form_error(entry: &CatalogEntry, traj: &Trajectory) -> Option<f64> {
    let cf = entry.closed_form?;
    let end = traj.verdict.blowup_time();
    let err = traj
        .samples
        .iter()
        // Near a singularity the closed form is ill-conditioned in t.
        .filter(|s| end.is_none_or(|w| (w - s.t).abs() >= 1e-3 * w.abs()))
        .map(|s| {
            let exact = (cf.scalar)(s.t);
            (s.scalar - exact).abs() / exact.abs().max(1e-300)
        })
        .filter(|e| e.is_finite())
        .fold(0.0f64, f64::max);
    Some(err)
}

fn check_direction<F: VectorField + ?Sized>(
    field: &F,
    entry: &CatalogEntry,
    direction: Direction,
    opts: &IntegratorOptions,
    rows: &mut Rows,
) -> Option<Trajectory> {
    let traj = match integrate_with(field, &entry.bracket, direction, DEFAULT_HORIZON, opts) {
        Ok(t) => t,
        Err(e) => {
            rows.push("integration", false, e.to_string());
            return None;
        }
    };
    let expected = entry.expected(direction);
    rows.push(
        "verdict",
        expected.matches(&traj.verdict, SINGULAR_TIME_TOL),
        format!(
            "expected {}{}, got {}{}",
            expected.label(),
            match expected {
                Expected::Blowup { time: Some(t) } => format!(" at {t:.6}"),
                _ => String::new(),
            },
            traj.verdict.label(),
            traj.verdict.blowup_time().map_or(String::new(), |t| format!(" at {t:.6}")),
        ),
    );
    if let Some(err) = closed_form_error(entry, &traj) {
        rows.push("closed-form", err <= CLOSED_FORM_TOL, format!("max rel R error {err:.2e}"));
    }

    let report = match estimate_report_with(field, &traj) {
        Ok(r) => r,
        Err(e) => {
            rows.push("estimates", false, e.to_string());
            return Some(traj);
        }
    };
    rows.push(
        "scevol",
        report.scalar_evolution_max_relerr <= SCALAR_EVOLUTION_TOL,
        format!(
            "max rel error {:.2e} over {} points",
            report.scalar_evolution_max_relerr, report.scalar_evolution_points
        ),
    );
    rows.push(
        "monotonicity",
        report.monotonicity_violation <= MONOTONICITY_TOL,
        format!("max relative decrease {:.2e}", report.monotonicity_violation),
    );
    let bound = cubic_growth_constant(entry.bracket.dim());
    rows.push(
        "cubic-growth",
        report.cubic_ratio_max <= bound,
        format!("max |mu'|/|mu|^3 = {:.4} <= {bound:.4}", report.cubic_ratio_max),
    );
    if let Some(slack) = report.comparison_slack {
        rows.push(
            "comparison",
            slack >= -COMPARISON_TOL,
            format!("min slack {slack:.2e}"),
        );
    }
    if traj.verdict.is_blowup() {
        let floor = report.blowup_rate_floor.unwrap_or(0.0);
        rows.push(
            "rate-floor",
            floor > 0.0,
            format!("min sqrt|w - t| |mu| = {floor:.4}"),
        );
    }
    if traj.verdict == Verdict::ImmortalToHorizon {
        let sign = direction.sign();
        // Immortal forward forces R <= 0; ancient (immortal backward) forces R >= 0.
        let worst = traj
            .samples
            .iter()
            .map(|s| sign * s.scalar)
            .fold(f64::NEG_INFINITY, f64::max);
        rows.push(
            "sign",
            worst <= 1e-12,
            format!("max {}R = {worst:.3e}", if sign > 0.0 { "" } else { "-" }),
        );
    }
    Some(traj)
}

fn check_entry<F: VectorField + ?Sized>(
    field: &F,
    entry: &CatalogEntry,
    opts: &IntegratorOptions,
) -> Vec<CheckRow> {
    let mut out = Vec::new();
    let mut rows = Rows {
        subject: entry.name.to_string(),
        rows: &mut out,
    };
    let r0 = ricci_unchecked(&entry.bracket).scalar;
    rows.push(
        "initial-R",
        (r0 - entry.initial_scalar).abs() <= 1e-12,
        format!("R(0) = {r0} (authored {})", entry.initial_scalar),
    );

    let mut verdicts = Vec::new();
    for direction in [Direction::Forward, Direction::Backward] {
        let mut sub = Rows {
            subject: format!("{} {}", entry.name, direction.as_str()),
            rows: rows.rows,
        };
        verdicts.push(check_direction(field, entry, direction, opts, &mut sub).map(|t| t.verdict));
    }

    let flat = entry.bracket.is_zero();
    let passed = if flat {
        verdicts.iter().all(|v| v == &Some(Verdict::EternalFlat))
    } else {
        verdicts.iter().any(|v| v.as_ref().is_some_and(Verdict::is_blowup))
    };
    rows.push(
        "not-eternal",
        passed,
        if flat {
            "flat entry stationary in both directions".into()
        } else {
            "blowup in at least one direction".into()
        },
    );

    match corollary_check(entry, opts) {
        Ok(v) => rows.push("cover-dichotomy", v.consistent, v.detail),
        Err(e) => rows.push("cover-dichotomy", false, e.to_string()),
    }

    if entry.bracket.dims().q() == 0 {
        match koszul_ricci_oracle(&entry.bracket) {
            Ok(k) => {
                let dev = (&k.ric - ricci_unchecked(&entry.bracket).ric).amax();
                rows.push("oracle", dev <= ORACLE_TOL, format!("max deviation {dev:.2e}"));
            }
            Err(e) => rows.push("oracle", false, e.to_string()),
        }
        for direction in [Direction::Forward, Direction::Backward] {
            match equivalence_check(&entry.bracket, direction, DEFAULT_HORIZON, opts) {
                Ok(eq) => {
                    let gap = eq.max_invariant_gap();
                    let omega_ok = eq.singular_time_gap.is_none_or(|g| g <= SINGULAR_TIME_TOL);
                    rows.push(
                        "metric-equivalence",
                        gap <= EQUIVALENCE_TOL && eq.verdicts_agree() && omega_ok,
                        format!(
                            "{}: invariant gap {gap:.2e}, verdicts {} / {}{}",
                            direction.as_str(),
                            eq.bracket_verdict.label(),
                            eq.metric_verdict.label(),
                            eq.singular_time_gap
                                .map_or(String::new(), |g| format!(", singular time gap {g:.2e}"))
                        ),
                    );
                }
                Err(e) => rows.push("metric-equivalence", false, e.to_string()),
            }
        }
    }
    out
}

fn check_random_oracle(rows: &mut Rows) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(3..=6);
        let mu = random::two_step_nilpotent(&mut rng, n);
        let dev = match koszul_ricci_oracle(&mu) {
            Ok(k) => (&k.ric - ricci_unchecked(&mu).ric).amax(),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(dev);
    }
    rows.push(
        "oracle",
        worst <= ORACLE_TOL,
        format!("100 random 2-step nilpotent brackets, max deviation {worst:.2e}"),
    );
}

fn check_scaling<F: VectorField + ?Sized>(field: &F, rows: &mut Rows) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ric_err = 0.0f64;
    let mut rhs_err = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(3..=5);
        let mu = random::lie_bracket(&mut rng, n);
        let ric = ricci_unchecked(&mu).ric;
        let rhs = bracket_norm(&field.eval(&mu));
        for c in [0.1, 1.0, 10.0] {
            let scaled = scale_bracket(&mu, c);
            let ric_c = ricci_unchecked(&scaled).ric;
            let denom = (c * c * ric.amax()).max(f64::MIN_POSITIVE);
            ric_err = ric_err.max((&ric_c - &ric * (c * c)).amax() / denom);
            let rhs_c = bracket_norm(&field.eval(&scaled));
            if rhs > 0.0 {
                rhs_err = rhs_err.max((rhs_c - c.powi(3) * rhs).abs() / (c.powi(3) * rhs));
            }
        }
    }
    rows.push(
        "scaling",
        ric_err <= SCALING_TOL && rhs_err <= SCALING_TOL,
        format!("Ric_cmu vs c^2 Ric: {ric_err:.2e}; |rhs| vs c^3: {rhs_err:.2e}"),
    );
}

/// Runs every check over the catalog with `field` as the flow.
pub fn verify_with<F: VectorField + ?Sized>(field: &F, opts: &IntegratorOptions) -> VerifyReport {
    let entries = catalog_entries();
    let per_entry: Vec<Vec<CheckRow>> = std::thread::scope(|scope| {
        let handles: Vec<_> = entries
            .iter()
            .map(|e| scope.spawn(move || check_entry(field, e, opts)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("verification thread panicked"))
            .collect()
    });
    let mut rows: Vec<CheckRow> = per_entry.into_iter().flatten().collect();
    let mut global = Rows {
        subject: "random".into(),
        rows: &mut rows,
    };
    check_random_oracle(&mut global);
    check_scaling(field, &mut global);
    VerifyReport { rows }
}

/// [`verify_with`] on the true bracket flow with default options.
pub fn verify_all() -> VerifyReport {
    verify_with(&BracketFlowField, &IntegratorOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn su2() -> LieBracket {
        crate::catalog::find("su2_round").unwrap().bracket
    }

    #[test]
    fn ricci_sign_mutant_reverses_the_flow() {
        let mu = su2();
        let good = BracketFlowField.eval(&mu);
        let bad = Mutation::RicciSign.eval(&mu);
        assert_eq!(bad, good.scale(-1.0));
    }

    #[test]
    fn pi_sign_mutant_shrinks_the_round_sphere() {
        // Ric = I/2: correct pi gives mu' = mu/2, the mutant -3/2 mu.
        let mu = su2();
        let bad = Mutation::PiSign.eval(&mu);
        let expected = mu.scale(-1.5);
        assert!((&bad - &expected).as_slice().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn mutation_names() {
        assert_eq!(Mutation::parse("ricci-sign"), Some(Mutation::RicciSign));
        assert_eq!(Mutation::parse("pi-sign"), Some(Mutation::PiSign));
        assert_eq!(Mutation::parse("other"), None);
    }
}
