//! Curated initial brackets with their known flows.
//!
//! Frames are orthonormal. Three-dimensional unimodular entries use Milnor
//! frames `[e2,e3] = l1 e1, [e3,e1] = l2 e2, [e1,e2] = l3 e3`, for which
//! `Ric = diag(r1, r2, r3)` with `ri = (li^2 - (lj - lk)^2) / 2` and the
//! bracket flow reduces to `li' = -(ri - rj - rk) li`.
//!
//! The universal-cover and (h2) notes are mathematical facts supplied by
//! hand; no code checks them.

use std::f64::consts::PI;
use std::fmt;

use crate::algebra::{Dimensions, LieBracket};
use crate::error::{Error, Result};
use crate::flow::{integrate, Direction, IntegratorOptions, Trajectory, Verdict};

/// Expected behaviour in one time direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expected {
    EternalFlat,
    Immortal,
    /// Finite-time singularity, at a known signed time when one is given.
    Blowup { time: Option<f64> },
}

impl Expected {
    /// Whether `verdict` agrees, with singular times compared to `tol`.
    pub fn matches(&self, verdict: &Verdict, tol: f64) -> bool {
        match (self, verdict) {
            (Expected::EternalFlat, Verdict::EternalFlat) => true,
            (Expected::Immortal, Verdict::ImmortalToHorizon) => true,
            (Expected::Blowup { time: None }, Verdict::Blowup(_)) => true,
            (Expected::Blowup { time: Some(t) }, Verdict::Blowup(b)) => (b.time - t).abs() <= tol,
            _ => false,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Expected::EternalFlat => "eternal-flat",
            Expected::Immortal => "immortal-to-horizon",
            Expected::Blowup { .. } => "blowup",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniversalCover {
    Euclidean,
    NotEuclidean,
}

impl fmt::Display for UniversalCover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UniversalCover::Euclidean => "R^n",
            UniversalCover::NotEuclidean => "not R^n",
        })
    }
}

/// Exact solution of the bracket flow from the entry's bracket.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForm {
    pub description: &'static str,
    pub scalar: fn(f64) -> f64,
    pub norm: fn(f64) -> f64,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub bracket: LieBracket,
    /// Scalar curvature of the initial bracket, computed by hand.
    pub initial_scalar: f64,
    pub closed_form: Option<ClosedForm>,
    pub forward: Expected,
    pub backward: Expected,
    pub universal_cover: UniversalCover,
    /// The simply connected space, e.g. "S^3".
    pub cover_space: &'static str,
    pub h2_note: &'static str,
}

impl CatalogEntry {
    pub fn expected(&self, direction: Direction) -> Expected {
        match direction {
            Direction::Forward => self.forward,
            Direction::Backward => self.backward,
        }
    }

    pub fn n(&self) -> usize {
        self.bracket.dims().n()
    }
}

/// Horizon used for catalog runs in directions without a singularity.
pub const DEFAULT_HORIZON: f64 = 100.0;

fn bracket(q: usize, n: usize, triples: &[(usize, usize, usize, f64)]) -> LieBracket {
    let dims = Dimensions::new(q, n).expect("catalog dimensions are valid");
    LieBracket::from_triples(dims, triples).expect("catalog brackets are well formed")
}

fn milnor(l: [f64; 3]) -> LieBracket {
    bracket(0, 3, &[(1, 2, 0, l[0]), (2, 0, 1, l[1]), (0, 1, 2, l[2])])
}

const GROUP_H2: &str = "holds trivially: the isotropy is trivial (q = 0)";

/// All entries, in a fixed order.
pub fn catalog_entries() -> Vec<CatalogEntry> {
    vec![
        // Every bracket vanishes; the flow is stationary.
        CatalogEntry {
            name: "abelian3",
            summary: "flat R^3",
            bracket: LieBracket::zero(Dimensions::group(3).expect("valid")),
            initial_scalar: 0.0,
            closed_form: Some(ClosedForm {
                description: "mu(t) = 0",
                scalar: |_| 0.0,
                norm: |_| 0.0,
            }),
            forward: Expected::EternalFlat,
            backward: Expected::EternalFlat,
            universal_cover: UniversalCover::Euclidean,
            cover_space: "R^3",
            h2_note: GROUP_H2,
        },
        // Milnor (0, 0, c): r = (-c^2/2, -c^2/2, c^2/2), so c' = -3/2 c^3 and
        // c^2 = 1 / (1 + 3t). |mu|^2 = 2c^2, R = -c^2 / 2.
        CatalogEntry {
            name: "heisenberg3",
            summary: "Heisenberg group H3 (nilmanifold)",
            bracket: bracket(0, 3, &[(0, 1, 2, 1.0)]),
            initial_scalar: -0.5,
            closed_form: Some(ClosedForm {
                description: "c(t)^2 = 1/(1+3t), R(t) = -1/(2(1+3t))",
                scalar: |t| -0.5 / (1.0 + 3.0 * t),
                norm: |t| (2.0 / (1.0 + 3.0 * t)).sqrt(),
            }),
            forward: Expected::Immortal,
            backward: Expected::Blowup {
                time: Some(-1.0 / 3.0),
            },
            universal_cover: UniversalCover::Euclidean,
            cover_space: "R^3",
            h2_note: GROUP_H2,
        },
        // Milnor (c, c, c): Ric = c^2/2 I, c' = c^3 / 2, c^2 = 1 / (1 - t).
        CatalogEntry {
            name: "su2_round",
            summary: "round S^3 = SU(2)",
            bracket: milnor([1.0, 1.0, 1.0]),
            initial_scalar: 1.5,
            closed_form: Some(ClosedForm {
                description: "c(t)^2 = 1/(1-t), R(t) = 3/(2(1-t))",
                scalar: |t| 1.5 / (1.0 - t),
                norm: |t| (6.0 / (1.0 - t)).sqrt(),
            }),
            forward: Expected::Blowup { time: Some(1.0) },
            backward: Expected::Immortal,
            universal_cover: UniversalCover::NotEuclidean,
            cover_space: "S^3",
            h2_note: GROUP_H2,
        },
        // mu(e3, e1) = c e1, mu(e3, e2) = c e2: Ric = -2c^2 I, c' = -2c^3,
        // c^2 = 1 / (1 + 4t). |mu|^2 = 4c^2, R = -6c^2.
        CatalogEntry {
            name: "hyperbolic3",
            summary: "real hyperbolic space H^3 as a solvable group",
            bracket: bracket(0, 3, &[(2, 0, 0, 1.0), (2, 1, 1, 1.0)]),
            initial_scalar: -6.0,
            closed_form: Some(ClosedForm {
                description: "c(t)^2 = 1/(1+4t), R(t) = -6/(1+4t)",
                scalar: |t| -6.0 / (1.0 + 4.0 * t),
                norm: |t| 2.0 / (1.0 + 4.0 * t).sqrt(),
            }),
            forward: Expected::Immortal,
            backward: Expected::Blowup {
                time: Some(-0.25),
            },
            universal_cover: UniversalCover::Euclidean,
            cover_space: "R^3",
            h2_note: GROUP_H2,
        },
        // H3 x R: the extra direction is central and Ricci-flat, so the
        // Heisenberg solution carries over.
        CatalogEntry {
            name: "h3xr",
            summary: "H3 x R, 4-dimensional 2-step nilpotent",
            bracket: bracket(0, 4, &[(0, 1, 2, 1.0)]),
            initial_scalar: -0.5,
            closed_form: Some(ClosedForm {
                description: "c(t)^2 = 1/(1+3t), R(t) = -1/(2(1+3t))",
                scalar: |t| -0.5 / (1.0 + 3.0 * t),
                norm: |t| (2.0 / (1.0 + 3.0 * t)).sqrt(),
            }),
            forward: Expected::Immortal,
            backward: Expected::Blowup {
                time: Some(-1.0 / 3.0),
            },
            universal_cover: UniversalCover::Euclidean,
            cover_space: "R^4",
            h2_note: GROUP_H2,
        },
        // mu(e2, e1) = c e1: Ric = -c^2 I, c' = -c^3, c^2 = 1 / (1 + 2t).
        CatalogEntry {
            name: "hyperbolic2",
            summary: "hyperbolic plane as the non-unimodular group aff(R)",
            bracket: bracket(0, 2, &[(1, 0, 0, 1.0)]),
            initial_scalar: -2.0,
            closed_form: Some(ClosedForm {
                description: "c(t)^2 = 1/(1+2t), R(t) = -2/(1+2t)",
                scalar: |t| -2.0 / (1.0 + 2.0 * t),
                norm: |t| (2.0 / (1.0 + 2.0 * t)).sqrt(),
            }),
            forward: Expected::Immortal,
            backward: Expected::Blowup {
                time: Some(-0.5),
            },
            universal_cover: UniversalCover::Euclidean,
            cover_space: "R^2",
            h2_note: GROUP_H2,
        },
        // g = so(3) = span(Z, e1, e2) with mu(Z, e1) = e2, mu(Z, e2) = -e1,
        // mu(e1, e2) = b Z. Ric = b I and the rotation part is fixed by the
        // flow while b' = 2b^2, so b = 1 / (1 - 2t). |mu|^2 = 4 + 2b^2.
        CatalogEntry {
            name: "sphere2",
            summary: "round S^2 = SU(2)/U(1)",
            bracket: bracket(1, 2, &[(0, 1, 2, 1.0), (0, 2, 1, -1.0), (1, 2, 0, 1.0)]),
            initial_scalar: 2.0,
            closed_form: Some(ClosedForm {
                description: "b(t) = 1/(1-2t), R(t) = 2/(1-2t)",
                scalar: |t| 2.0 / (1.0 - 2.0 * t),
                norm: |t| (4.0 + 2.0 / (1.0 - 2.0 * t).powi(2)).sqrt(),
            }),
            forward: Expected::Blowup { time: Some(0.5) },
            backward: Expected::Immortal,
            universal_cover: UniversalCover::NotEuclidean,
            cover_space: "S^2",
            h2_note: "holds: the isotropy is the closed circle subgroup U(1) of SU(2)",
        },
        // The previous entry plus an abelian, central direction e3. The
        // product metric flows factorwise; the line stays flat.
        CatalogEntry {
            name: "sphere2_x_r",
            summary: "round S^2 x flat R, realized as (SU(2) x R)/U(1)",
            bracket: bracket(1, 3, &[(0, 1, 2, 1.0), (0, 2, 1, -1.0), (1, 2, 0, 1.0)]),
            initial_scalar: 2.0,
            closed_form: Some(ClosedForm {
                description: "b(t) = 1/(1-2t), R(t) = 2/(1-2t), line factor static",
                scalar: |t| 2.0 / (1.0 - 2.0 * t),
                norm: |t| (4.0 + 2.0 / (1.0 - 2.0 * t).powi(2)).sqrt(),
            }),
            forward: Expected::Blowup { time: Some(0.5) },
            backward: Expected::Immortal,
            universal_cover: UniversalCover::NotEuclidean,
            cover_space: "S^2 x R",
            h2_note: "holds: the isotropy is the closed subgroup U(1) x {0} of SU(2) x R",
        },
        // Milnor (a, a, b) with a = 1, b = 2. With u = a^2 and x = b/a the
        // flow gives u' = u^2 x^2 and dx/du = 2(1 - x)/u, hence x = 1 + 1/u^2
        // and dt = u^2 du / (1 + u^2)^2. Forward u -> oo, backward u -> 0:
        // omega = (pi + 2)/8, alpha = -(pi - 2)/8.
        CatalogEntry {
            name: "berger",
            summary: "Berger sphere on SU(2), Milnor constants (1, 1, 2)",
            bracket: milnor([1.0, 1.0, 2.0]),
            initial_scalar: 2.0,
            closed_form: None,
            forward: Expected::Blowup {
                time: Some((PI + 2.0) / 8.0),
            },
            backward: Expected::Blowup {
                time: Some(-(PI - 2.0) / 8.0),
            },
            universal_cover: UniversalCover::NotEuclidean,
            cover_space: "S^3",
            h2_note: GROUP_H2,
        },
        // Milnor (a, -a, 0): r = (0, 0, -2a^2), a' = -2a^3, a^2 = 1 / (1 + 4t).
        CatalogEntry {
            name: "sol3",
            summary: "Sol, Milnor constants (1, -1, 0)",
            bracket: milnor([1.0, -1.0, 0.0]),
            initial_scalar: -2.0,
            closed_form: Some(ClosedForm {
                description: "a(t)^2 = 1/(1+4t), R(t) = -2/(1+4t)",
                scalar: |t| -2.0 / (1.0 + 4.0 * t),
                norm: |t| 2.0 / (1.0 + 4.0 * t).sqrt(),
            }),
            forward: Expected::Immortal,
            backward: Expected::Blowup {
                time: Some(-0.25),
            },
            universal_cover: UniversalCover::Euclidean,
            cover_space: "R^3",
            h2_note: GROUP_H2,
        },
        // Milnor (1, 1, -1): R = -1/2 (1 + 1 + 1) + (1 - 1 - 1) = -5/2.
        CatalogEntry {
            name: "sl2",
            summary: "universal cover of SL(2,R), Milnor constants (1, 1, -1)",
            bracket: milnor([1.0, 1.0, -1.0]),
            initial_scalar: -2.5,
            closed_form: None,
            forward: Expected::Immortal,
            backward: Expected::Blowup { time: None },
            universal_cover: UniversalCover::Euclidean,
            cover_space: "R^3",
            h2_note: GROUP_H2,
        },
        // [e1,e2] = e3, [e1,e3] = e4. Ric = diag(-1, -1/2, 0, 1/2) = -3/2 I + D
        // with D = diag(1/2, 1, 3/2, 2) a derivation, so mu(t) = c(t) mu with
        // c' = -3/2 c^3. |mu|^2 = 4c^2, R = -c^2.
        CatalogEntry {
            name: "filiform4",
            summary: "4-dimensional filiform nilpotent group",
            bracket: bracket(0, 4, &[(0, 1, 2, 1.0), (0, 2, 3, 1.0)]),
            initial_scalar: -1.0,
            closed_form: Some(ClosedForm {
                description: "c(t)^2 = 1/(1+3t), R(t) = -1/(1+3t)",
                scalar: |t| -1.0 / (1.0 + 3.0 * t),
                norm: |t| 2.0 / (1.0 + 3.0 * t).sqrt(),
            }),
            forward: Expected::Immortal,
            backward: Expected::Blowup {
                time: Some(-1.0 / 3.0),
            },
            universal_cover: UniversalCover::Euclidean,
            cover_space: "R^4",
            h2_note: GROUP_H2,
        },
    ]
}

pub fn find(name: &str) -> Result<CatalogEntry> {
    catalog_entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownEntry(name.to_string()))
}

/// Runs an entry in one direction with the catalog horizon.
pub fn run_entry(
    entry: &CatalogEntry,
    direction: Direction,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    integrate(&entry.bracket, direction, DEFAULT_HORIZON, opts)
}

/// Outcome of checking an entry against the immortality dichotomy for
/// universal covers.
#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryVerdict {
    pub entry: &'static str,
    pub consistent: bool,
    pub detail: String,
}

/// Cover `R^n` requires a forward-immortal flow with `R <= 0` throughout.
/// Any other cover requires some entry on the same space with `R > 0` whose
/// forward flow blows up by `(n/2) / R(0)`.
pub fn corollary_check(entry: &CatalogEntry, opts: &IntegratorOptions) -> Result<CorollaryVerdict> {
    let verdict = |consistent: bool, detail: String| CorollaryVerdict {
        entry: entry.name,
        consistent,
        detail,
    };
    match entry.universal_cover {
        UniversalCover::Euclidean => {
            let traj = run_entry(entry, Direction::Forward, opts)?;
            let immortal = matches!(traj.verdict, Verdict::ImmortalToHorizon | Verdict::EternalFlat);
            let r_max = traj
                .samples
                .iter()
                .map(|s| s.scalar)
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(verdict(
                immortal && r_max <= 0.0,
                format!("forward {}, max R = {r_max:.3e}", traj.verdict.label()),
            ))
        }
        UniversalCover::NotEuclidean => {
            let witnesses: Vec<CatalogEntry> = catalog_entries()
                .into_iter()
                .filter(|e| e.cover_space == entry.cover_space && e.initial_scalar > 0.0)
                .collect();
            for w in &witnesses {
                let traj = run_entry(w, Direction::Forward, opts)?;
                let r0 = traj.samples[0].scalar;
                let bound = 0.5 * w.n() as f64 / r0;
                if let Some(omega) = traj.verdict.blowup_time() {
                    if omega <= bound + 1e-3 {
                        return Ok(verdict(
                            true,
                            format!("{} blows up at {omega:.6} <= n/(2 R0) = {bound:.6}", w.name),
                        ));
                    }
                }
            }
            Ok(verdict(
                false,
                format!("no positively curved entry on {} blows up forward in time", entry.cover_space),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::check_conditions;
    use crate::curvature::ricci_unchecked;

    #[test]
    fn entries_are_valid_brackets() {
        for e in catalog_entries() {
            let r = check_conditions(&e.bracket, 1e-12);
            assert!(r.jacobi_residual <= 1e-12, "{}", e.name);
            assert!(r.h1_residual <= 1e-12 && r.h3_residual <= 1e-12, "{}", e.name);
            assert_eq!(r.h4_kernel_dim, 0, "{}", e.name);
        }
    }

    #[test]
    fn authored_scalar_matches_ricci_operator() {
        for e in catalog_entries() {
            let r = ricci_unchecked(&e.bracket).scalar;
            assert!((r - e.initial_scalar).abs() <= 1e-12, "{}: {r}", e.name);
            if let Some(cf) = e.closed_form {
                assert!(((cf.scalar)(0.0) - e.initial_scalar).abs() <= 1e-12, "{}", e.name);
                let norm = crate::algebra::bracket_norm(&e.bracket);
                assert!(((cf.norm)(0.0) - norm).abs() <= 1e-12, "{}", e.name);
            }
        }
    }

    #[test]
    fn names_are_unique_and_findable() {
        let entries = catalog_entries();
        for e in &entries {
            assert_eq!(find(e.name).unwrap().name, e.name);
        }
        assert!(matches!(find("nope"), Err(Error::UnknownEntry(_))));
    }

    #[test]
    fn expected_verdict_matching() {
        let e = Expected::Blowup { time: Some(1.0) };
        assert!(!e.matches(&Verdict::ImmortalToHorizon, 1e-3));
        assert!(Expected::Immortal.matches(&Verdict::ImmortalToHorizon, 0.0));
    }

    #[test]
    fn heisenberg_and_round_sphere_dichotomy() {
        let opts = IntegratorOptions::default();
        for name in ["heisenberg3", "su2_round", "hyperbolic3"] {
            let v = corollary_check(&find(name).unwrap(), &opts).unwrap();
            assert!(v.consistent, "{v:?}");
        }
    }
}
