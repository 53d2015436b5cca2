//! Dormand–Prince 5(4) embedded Runge–Kutta pair with adaptive steps.
//!
//! The driver integrates an autonomous system in a non-negative "elapsed"
//! variable `s`; backward integration is handled by the caller negating the
//! vector field. A [`Monitor`] sees every accepted step and can cap the step
//! size or stop the run.

use crate::error::{Error, Result};

/// Butcher tableau of the Dormand–Prince pair.
mod dopri5 {
    // Autonomous systems only, so the nodes `c` are not needed. The last row
    // of `A` doubles as the fifth-order weights (FSAL).
    pub const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];

    /// Difference between fifth- and fourth-order weights.
    pub const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// An autonomous ODE `y' = f(y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()>;

    /// Multiplier for the absolute tolerance. Systems whose state shrinks to
    /// zero at a singularity return their own size here.
    fn error_scale(&self, _y: &[f64]) -> f64 {
        1.0
    }
}

/// Reverses time by negating the vector field.
pub struct Reversed<'a, S: ?Sized>(pub &'a S);

impl<S: OdeSystem + ?Sized> OdeSystem for Reversed<'_, S> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self.0.rhs(y, dy)?;
        dy.iter_mut().for_each(|v| *v = -*v);
        Ok(())
    }

    fn error_scale(&self, y: &[f64]) -> f64 {
        self.0.error_scale(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 5_000_000,
        }
    }
}

/// What the driver reports for an accepted step.
#[derive(Debug, Clone, Copy)]
pub struct Accepted {
    pub s: f64,
    pub step: f64,
    pub err_est: f64,
    /// The step landed exactly on a requested stop or on the end point.
    pub landed: bool,
}

pub enum Flow {
    Continue,
    Stop,
}

pub trait Monitor {
    /// Upper bound on the next step size at state `y`.
    fn max_step(&self, _y: &[f64]) -> f64 {
        f64::INFINITY
    }

    fn accept(&mut self, info: Accepted, y: &[f64]) -> Result<Flow>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveEnd {
    /// Reached `s_end`.
    Completed,
    /// The monitor asked to stop.
    Stopped { s: f64 },
    /// The step size fell below the resolution of `s`.
    Underflow { s: f64, step: f64 },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DriveStats {
    pub accepted: usize,
    pub rejected: usize,
}

fn combine(y: &[f64], k: &[Vec<f64>], coeffs: &[f64], h: f64, out: &mut [f64]) {
    out.copy_from_slice(y);
    for (kj, &a) in k.iter().zip(coeffs) {
        if a == 0.0 {
            continue;
        }
        let ha = h * a;
        for (o, v) in out.iter_mut().zip(kj) {
            *o += ha * v;
        }
    }
}

/// One Dormand–Prince step of size `h` from `y` with `k0 = f(y)`; writes the
/// fifth-order result into `y_new` and returns the stage derivatives.
fn dopri_stages<S: OdeSystem + ?Sized>(
    system: &S,
    y: &[f64],
    k0: &[f64],
    h: f64,
    y_new: &mut [f64],
    k: &mut [Vec<f64>],
    scratch: &mut [f64],
) -> Result<()> {
    k[0].copy_from_slice(k0);
    for stage in 1..7 {
        combine(y, &k[..stage], &dopri5::A[stage][..stage], h, scratch);
        let (_, rest) = k.split_at_mut(stage);
        system.rhs(scratch, &mut rest[0])?;
    }
    // Row 6 of A equals B, so the last stage input is the fifth-order solution.
    y_new.copy_from_slice(scratch);
    Ok(())
}

/// A single fixed step of size `h` (no error control). Used for local finite
/// differences along the flow.
pub fn single_step<S: OdeSystem + ?Sized>(system: &S, y: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = system.dim();
    let mut k0 = vec![0.0; n];
    system.rhs(y, &mut k0)?;
    let mut k = vec![vec![0.0; n]; 7];
    let mut scratch = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    dopri_stages(system, y, &k0, h, &mut y_new, &mut k, &mut scratch)?;
    Ok(y_new)
}

/// Integrates `y' = f(y)` from `s = 0` to `s_end`, landing exactly on each
/// entry of `stops` (sorted, in `(0, s_end]`).
pub fn drive<S, M>(
    system: &S,
    monitor: &mut M,
    y0: &[f64],
    s_end: f64,
    stops: &[f64],
    control: &StepControl,
) -> Result<(Vec<f64>, DriveEnd, DriveStats)>
where
    S: OdeSystem + ?Sized,
    M: Monitor,
{
    let n = system.dim();
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut k0 = vec![0.0; n];
    let mut k = vec![vec![0.0; n]; 7];
    let mut scratch = vec![0.0; n];
    let mut stats = DriveStats::default();

    system.rhs(&y, &mut k0)?;
    let mut s = 0.0f64;
    let mut h = monitor.max_step(&y).min(s_end).clamp(f64::MIN_POSITIVE, 1e-3);
    let mut next_stop = stops.iter().copied().filter(|&t| t > 0.0).peekable();
    let mut just_rejected = false;

    while s < s_end {
        if stats.accepted >= control.max_steps {
            return Err(Error::StepLimit {
                t: s,
                max_steps: control.max_steps,
            });
        }
        h = h.min(monitor.max_step(&y));
        let mut target = s_end;
        while let Some(&stop) = next_stop.peek() {
            if stop <= s {
                next_stop.next();
            } else {
                target = target.min(stop);
                break;
            }
        }
        let unclipped = h;
        let landing = s + h >= target;
        if landing {
            h = target - s;
        }
        if h <= 4.0 * f64::EPSILON * s.abs().max(f64::MIN_POSITIVE) {
            return Ok((y, DriveEnd::Underflow { s, step: h }, stats));
        }

        let stage_result = dopri_stages(system, &y, &k0, h, &mut y_new, &mut k, &mut scratch);
        if stage_result.is_err() {
            // A stage left the domain of the vector field; retry smaller.
            stats.rejected += 1;
            h *= 0.25;
            just_rejected = true;
            continue;
        }

        let scale = system.error_scale(&y).max(system.error_scale(&y_new));
        let mut acc = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += dopri5::E[j] * kj[i];
            }
            e *= h;
            let sc = control.abs_tol * scale + control.rel_tol * y[i].abs().max(y_new[i].abs());
            let r = e / sc;
            acc += r * r;
        }
        let err = (acc / n as f64).sqrt();

        if err.is_finite() && err <= 1.0 {
            stats.accepted += 1;
            s = if landing { target } else { s + h };
            std::mem::swap(&mut y, &mut y_new);
            // FSAL: the last stage was evaluated at the new point.
            k0.copy_from_slice(&k[6]);
            let info = Accepted {
                s,
                step: h,
                err_est: err,
                landed: landing,
            };
            if let Flow::Stop = monitor.accept(info, &y)? {
                return Ok((y, DriveEnd::Stopped { s }, stats));
            }
            let mut factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if just_rejected {
                factor = factor.min(1.0);
            }
            just_rejected = false;
            h = if landing {
                // Clipping to a stop says nothing about the natural step size.
                unclipped.max(h * factor)
            } else {
                h * factor
            };
        } else {
            stats.rejected += 1;
            let factor = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
            } else {
                MIN_FACTOR
            };
            h *= factor;
            just_rejected = true;
        }
    }
    Ok((y, DriveEnd::Completed, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;

    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = -y[0];
            Ok(())
        }
    }

    struct Cubic;

    impl OdeSystem for Cubic {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = 0.5 * y[0].powi(3);
            Ok(())
        }
    }

    struct Record {
        samples: Vec<(f64, f64)>,
        cap: f64,
    }

    impl Monitor for Record {
        fn max_step(&self, _y: &[f64]) -> f64 {
            self.cap
        }
        fn accept(&mut self, info: Accepted, y: &[f64]) -> Result<Flow> {
            if info.landed {
                self.samples.push((info.s, y[0]));
            }
            Ok(Flow::Continue)
        }
    }

    #[test]
    fn exponential_decay_hits_stops_exactly() {
        let mut mon = Record {
            samples: vec![],
            cap: 1.0,
        };
        let stops = [0.5, 1.0, 2.0];
        let (y, end, _) =
            drive(&Decay, &mut mon, &[1.0], 3.0, &stops, &StepControl::default()).unwrap();
        assert_eq!(end, DriveEnd::Completed);
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-10);
        let times: Vec<f64> = mon.samples.iter().map(|p| p.0).collect();
        assert_eq!(times, vec![0.5, 1.0, 2.0, 3.0]);
        for (s, v) in mon.samples {
            assert!((v - (-s).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn reversed_system_grows() {
        let mut mon = Record {
            samples: vec![],
            cap: 1.0,
        };
        let (y, _, _) = drive(
            &Reversed(&Decay),
            &mut mon,
            &[1.0],
            1.0,
            &[],
            &StepControl::default(),
        )
        .unwrap();
        assert!((y[0] - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn fixed_step_is_fifth_order() {
        // y' = y^3 / 2, y(0) = 1 has y(h)^2 = 1 / (1 - h).
        let h = 1e-2;
        let y = single_step(&Cubic, &[1.0], h).unwrap();
        let exact = (1.0 / (1.0 - h)).sqrt();
        assert!((y[0] - exact).abs() < 1e-12);
    }

    #[test]
    fn blowup_ends_in_underflow() {
        let mut mon = Record {
            samples: vec![],
            cap: 1.0,
        };
        let (_, end, _) =
            drive(&Cubic, &mut mon, &[1.0], 2.0, &[], &StepControl::default()).unwrap();
        match end {
            DriveEnd::Underflow { s, .. } => assert!((s - 1.0).abs() < 1e-6),
            other => panic!("unexpected {other:?}"),
        }
    }
}
