use std::f64::consts::PI;

use homflow::algebra::{check_conditions, DEFAULT_TOL};
use homflow::catalog::{catalog_entries, find, run_entry, DEFAULT_HORIZON};
use homflow::curvature::ricci_operator;
use homflow::flow::{integrate, Direction, IntegratorOptions, Trajectory, Verdict};
use homflow::io::table;

fn both(name: &str) -> [Trajectory; 2] {
    let e = find(name).unwrap();
    [Direction::Forward, Direction::Backward].map(|d| run_entry(&e, d, &IntegratorOptions::default()).unwrap())
}

fn every_trajectory() -> Vec<(&'static str, f64, Trajectory)> {
    let entries = catalog_entries();
    std::thread::scope(|scope| {
        let handles: Vec<_> = entries
            .iter()
            .flat_map(|e| [Direction::Forward, Direction::Backward].map(|d| (e, d)))
            .map(|(e, d)| {
                scope.spawn(move || {
                    let t = run_entry(e, d, &IntegratorOptions::default()).unwrap();
                    (e.name, e.initial_scalar, t)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

/// Singular time of the Milnor system `l_i' = -(r_i - r_j - r_k) l_i` by
/// fixed-step RK4, extrapolating `1/|l|^2` linearly once `|l|` is large.
fn milnor_singular_time(l0: [f64; 3], sign: f64) -> f64 {
    let rhs = |l: [f64; 3]| {
        let r = |i: usize| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            0.5 * (l[i] * l[i] - (l[j] - l[k]).powi(2))
        };
        let r = [r(0), r(1), r(2)];
        let s = r[0] + r[1] + r[2];
        [0, 1, 2].map(|i| -sign * (2.0 * r[i] - s) * l[i])
    };
    let axpy = |a: [f64; 3], h: f64, b: [f64; 3]| [0, 1, 2].map(|i| a[i] + h * b[i]);
    let sq = |l: [f64; 3]| l.iter().map(|v| v * v).sum::<f64>();
    let (mut t, mut l) = (0.0, l0);
    while sq(l) < 1e8 {
        let h = 1e-4 / sq(l);
        let k1 = rhs(l);
        let k2 = rhs(axpy(l, 0.5 * h, k1));
        let k3 = rhs(axpy(l, 0.5 * h, k2));
        let k4 = rhs(axpy(l, h, k3));
        l = [0, 1, 2].map(|i| l[i] + h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0);
        t += h;
    }
    let y = 1.0 / sq(l);
    let f = rhs(l);
    let dy = -2.0 * (0..3).map(|i| l[i] * f[i]).sum::<f64>() * y * y;
    sign * (t - y / dy)
}

#[test]
fn berger_singular_times_match_reduced_system() {
    let forward = milnor_singular_time([1.0, 1.0, 2.0], 1.0);
    let backward = milnor_singular_time([1.0, 1.0, 2.0], -1.0);
    assert!((forward - (PI + 2.0) / 8.0).abs() < 1e-6, "{forward}");
    assert!((backward + (PI - 2.0) / 8.0).abs() < 1e-6, "{backward}");
    let [fwd, bwd] = both("berger");
    assert!((fwd.verdict.blowup_time().unwrap() - forward).abs() < 1e-3);
    assert!((bwd.verdict.blowup_time().unwrap() - backward).abs() < 1e-3);
}

#[test]
fn sl2_backward_time_matches_reduced_system() {
    let alpha = milnor_singular_time([1.0, 1.0, -1.0], -1.0);
    let [fwd, bwd] = both("sl2");
    assert_eq!(fwd.verdict, Verdict::ImmortalToHorizon);
    assert!((bwd.verdict.blowup_time().unwrap() - alpha).abs() < 1e-3, "{alpha}");
}

#[test]
fn catalog_entries_satisfy_conditions_and_authored_curvature() {
    for e in catalog_entries() {
        let report = check_conditions(&e.bracket, DEFAULT_TOL);
        assert!(report.jacobi_residual <= 1e-12, "{}", e.name);
        assert!(report.h1_residual <= 1e-12, "{}", e.name);
        assert!(report.h3_residual <= 1e-12, "{}", e.name);
        assert_eq!(report.h4_kernel_dim, 0, "{}", e.name);
        let r0 = ricci_operator(&e.bracket).unwrap().scalar;
        assert!((r0 - e.initial_scalar).abs() <= 1e-12, "{}: {r0}", e.name);
    }
}

#[test]
fn trajectory_invariants_hold_across_the_catalog() {
    for (name, r0, traj) in every_trajectory() {
        let n = traj.n() as f64;
        for s in &traj.samples {
            assert!(s.jacobi_residual <= 1e-8, "{name}: drift {}", s.jacobi_residual);
        }
        match (&traj.verdict, traj.direction) {
            (Verdict::Blowup(b), dir) => {
                let last: Vec<f64> = traj.samples.iter().rev().take(5).map(|s| dir.sign() * s.scalar).collect();
                assert!(last.windows(2).all(|w| w[0] > w[1]), "{name}: {last:?}");
                if dir == Direction::Forward && r0 > 0.0 {
                    assert!(b.time <= 0.5 * n / r0 + 1e-3, "{name}");
                }
                if dir == Direction::Backward && r0 < 0.0 {
                    assert!(b.time >= 0.5 * n / r0 - 1e-3, "{name}");
                }
                let omega = b.time;
                assert!((omega - b.rigorous_bound) * dir.sign() >= -1e-9, "{name}");
            }
            (Verdict::ImmortalToHorizon, Direction::Forward) => {
                assert!(traj.samples.iter().all(|s| s.scalar <= 1e-12), "{name}");
            }
            (Verdict::ImmortalToHorizon, Direction::Backward) => {
                assert!(traj.samples.iter().all(|s| s.scalar >= -1e-12), "{name}");
            }
            (Verdict::EternalFlat, _) => {
                assert!(traj.samples.iter().all(|s| s.scalar == 0.0), "{name}");
            }
        }
    }
}

#[test]
fn emitted_tables_read_back_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let e = find("berger").unwrap();
    let traj = integrate(&e.bracket, Direction::Forward, DEFAULT_HORIZON, &IntegratorOptions::default()).unwrap();
    let path = dir.path().join("berger.csv");
    table::write_trajectory(&path, &traj).unwrap();
    let back = table::read_trajectory(&path).unwrap();
    let expected = table::rows(&traj);
    assert_eq!(back.len(), expected.len());
    for (a, b) in back.iter().zip(&expected) {
        assert_eq!(a.t.to_bits(), b.t.to_bits());
        assert_eq!(a.mu_norm.to_bits(), b.mu_norm.to_bits());
        assert_eq!(a.scalar.to_bits(), b.scalar.to_bits());
        assert_eq!(a.ric_sq_trace.to_bits(), b.ric_sq_trace.to_bits());
        assert_eq!(a.jacobi_residual.to_bits(), b.jacobi_residual.to_bits());
    }
}
