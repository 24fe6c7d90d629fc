//! Pseudo-arclength continuation of the pump response N(δ) through folds.
//!
//! Works in normalized coordinates x = δ/γ, y = N·|K|/γ where the cubic reads
//! R(x, y) = y³ + 2σx y² + (x² + 1) y − s with σ = sign(K).

use super::steady::{cubic_residual, slow_fast_rates, solve_pump_cubic};
use crate::error::{Error, Result};
use crate::model::QuantumParams;

const INITIAL_STEP: f64 = 1e-2;
const STEP_FLOOR: f64 = 1e-6;
const STEP_CEIL: f64 = 5e-2;
const MAX_CORRECTOR_ITERS: usize = 12;
const FAST_CONVERGENCE: usize = 3;
const CORRECTOR_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    /// Detuning δ = ω0 − ωp in rad/s.
    pub delta: f64,
    pub photon_number: f64,
    pub stable: bool,
    /// δ-component of the unit tangent; its sign flips at folds.
    pub tangent_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationBranch {
    pub points: Vec<BranchPoint>,
    pub pump_amplitude: f64,
    pub arclength_steps: usize,
}

impl ContinuationBranch {
    /// Indices where the δ-direction of travel reverses.
    pub fn fold_indices(&self) -> Vec<usize> {
        let mut folds = Vec::new();
        for (i, w) in self.points.windows(2).enumerate() {
            if w[0].tangent_delta.signum() != w[1].tangent_delta.signum() {
                folds.push(i + 1);
            }
        }
        folds
    }

    pub fn fold_count(&self) -> usize {
        self.fold_indices().len()
    }
}

struct Normalized {
    sigma: f64,
    s: f64,
    gamma: f64,
    n_scale: f64,
}

impl Normalized {
    fn residual(&self, x: f64, y: f64) -> f64 {
        y * y * y + 2.0 * self.sigma * x * y * y + (x * x + 1.0) * y - self.s
    }

    fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        (
            2.0 * self.sigma * y * y + 2.0 * x * y,
            3.0 * y * y + 4.0 * self.sigma * x * y + x * x + 1.0,
        )
    }

    fn tangent(&self, x: f64, y: f64, prev: (f64, f64)) -> (f64, f64) {
        let (rx, ry) = self.gradient(x, y);
        let norm = rx.hypot(ry);
        let t = (ry / norm, -rx / norm);
        if t.0 * prev.0 + t.1 * prev.1 < 0.0 {
            (-t.0, -t.1)
        } else {
            t
        }
    }

    /// Newton in y at fixed x.
    fn solve_at(&self, x: f64, mut y: f64) -> Option<f64> {
        for _ in 0..50 {
            let r = self.residual(x, y);
            let (_, ry) = self.gradient(x, y);
            let dy = r / ry;
            y -= dy;
            if dy.abs() <= 1e-15 * y.abs().max(1e-300) {
                return Some(y);
            }
        }
        (self.residual(x, y).abs() < CORRECTOR_TOL).then_some(y)
    }
}

/// Traces the full response curve N(δ) for drive `p_in` over the detuning
/// window `delta_range` = [δ_start, δ_end] with δ = ω0 − ωp (rad/s).
pub fn trace_branch(qp: &QuantumParams, p_in: f64, delta_range: [f64; 2]) -> Result<ContinuationBranch> {
    if !(p_in >= 0.0) {
        return Err(Error::Domain("pump amplitude must be >= 0".into()));
    }
    if !(delta_range[0] < delta_range[1]) {
        return Err(Error::Domain("detuning range must be ordered".into()));
    }
    let gamma = qp.gamma();
    let k = qp.kerr;
    let drive = 2.0 * qp.gamma1 * p_in * p_in;
    let (sigma, n_scale) = if k != 0.0 {
        (k.signum(), gamma / k.abs())
    } else {
        (1.0, (drive / (gamma * gamma)).max(1e-300))
    };
    let norm = Normalized {
        sigma,
        s: drive / (gamma * gamma * gamma) * if k != 0.0 { k.abs() } else { 0.0 },
        gamma,
        n_scale,
    };
    let x_end = delta_range[1] / gamma;

    let make_point = |x: f64, y: f64, t: (f64, f64)| {
        let delta = x * norm.gamma;
        let n = y * norm.n_scale;
        let (lm, _) = slow_fast_rates(qp, delta, n);
        BranchPoint {
            delta,
            photon_number: n,
            stable: lm > 0.0,
            tangent_delta: t.0,
        }
    };

    if k == 0.0 || p_in == 0.0 {
        // Single-valued response; sample uniformly.
        let n_pts = 201;
        let points = (0..n_pts)
            .map(|i| {
                let delta = delta_range[0] + (delta_range[1] - delta_range[0]) * i as f64 / (n_pts - 1) as f64;
                let n = solve_pump_cubic(qp, qp.omega0 - delta, p_in).map(|v| v[0].photon_number)?;
                let (lm, _) = slow_fast_rates(qp, delta, n);
                Ok(BranchPoint {
                    delta,
                    photon_number: n,
                    stable: lm > 0.0,
                    tangent_delta: 1.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(ContinuationBranch {
            points,
            pump_amplitude: p_in,
            arclength_steps: n_pts - 1,
        });
    }

    let start = solve_pump_cubic(qp, qp.omega0 - delta_range[0], p_in)?;
    let mut x = delta_range[0] / gamma;
    let mut y = start[0].photon_number / n_scale;
    let mut t = norm.tangent(x, y, (1.0, 0.0));
    let mut points = vec![make_point(x, y, t)];
    let mut h = INITIAL_STEP;
    let mut steps = 0usize;

    while x < x_end {
        if steps > 10_000_000 {
            return Err(Error::NoConvergence("arclength continuation"));
        }
        let (xp, yp) = (x + h * t.0, y + h * t.1);
        match correct(&norm, xp, yp, t) {
            Some((xc, yc, iters)) => {
                steps += 1;
                if xc >= x_end {
                    // Land exactly on the window edge.
                    let yend = norm.solve_at(x_end, y + (yc - y) * (x_end - x) / (xc - x)).ok_or(Error::Continuation {
                        last_delta: x * gamma,
                        last_n: y * n_scale,
                    })?;
                    let tn = norm.tangent(x_end, yend, t);
                    points.push(make_point(x_end, yend, tn));
                    x = x_end;
                    continue;
                }
                t = norm.tangent(xc, yc, t);
                x = xc;
                y = yc;
                points.push(make_point(x, y, t));
                if iters < FAST_CONVERGENCE {
                    h = (h * 2.0).min(STEP_CEIL);
                }
            }
            None => {
                h *= 0.5;
                if h < STEP_FLOOR {
                    return Err(Error::Continuation {
                        last_delta: x * gamma,
                        last_n: y * n_scale,
                    });
                }
            }
        }
    }

    // Re-polish in physical units so every point meets the residual bound.
    for p in points.iter_mut() {
        let (mut n, delta) = (p.photon_number, p.delta);
        for _ in 0..2 {
            let f = cubic_residual(qp, delta, p_in, n);
            let df = 3.0 * k * k * n * n + 4.0 * delta * k * n + delta * delta + gamma * gamma;
            let nn = n - f / df;
            if cubic_residual(qp, delta, p_in, nn).abs() < f.abs() {
                n = nn;
            }
        }
        p.photon_number = n;
    }

    Ok(ContinuationBranch {
        points,
        pump_amplitude: p_in,
        arclength_steps: steps,
    })
}

/// Newton corrector on {R = 0, t·(z − z_pred) = 0}.
fn correct(norm: &Normalized, xp: f64, yp: f64, t: (f64, f64)) -> Option<(f64, f64, usize)> {
    let (mut x, mut y) = (xp, yp);
    for it in 1..=MAX_CORRECTOR_ITERS {
        let r1 = norm.residual(x, y);
        let r2 = t.0 * (x - xp) + t.1 * (y - yp);
        let (rx, ry) = norm.gradient(x, y);
        let det = rx * t.1 - ry * t.0;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = (-r1 * t.1 + ry * r2) / det;
        let dy = (-rx * r2 + t.0 * r1) / det;
        x += dx;
        y += dy;
        if dx.hypot(dy) < 1e-14 * (1.0 + x.hypot(y)) && norm.residual(x, y).abs() < CORRECTOR_TOL * (1.0 + norm.s.abs()) {
            return Some((x, y, it));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::steady::{critical_power, residual_bound};

    fn device() -> QuantumParams {
        QuantumParams::new(2.0e10, -1.7e7, 5.5e6, 0.0).unwrap()
    }

    #[test]
    fn below_critical_is_single_valued() {
        let qp = device();
        let g = qp.gamma();
        let pc = critical_power(&qp).unwrap().p_crit;
        let b = trace_branch(&qp, 0.7 * pc, [-4.0 * g, 6.0 * g]).unwrap();
        assert_eq!(b.fold_count(), 0);
        assert!(b.points.windows(2).all(|w| w[1].delta > w[0].delta));
    }

    #[test]
    fn above_critical_has_two_folds() {
        let qp = device();
        let g = qp.gamma();
        let pc = critical_power(&qp).unwrap().p_crit;
        let p = 1.6 * pc;
        let b = trace_branch(&qp, p, [-4.0 * g, 8.0 * g]).unwrap();
        assert_eq!(b.fold_count(), 2);
        let bound = residual_bound(&qp, p);
        for pt in &b.points {
            assert!(cubic_residual(&qp, pt.delta, p, pt.photon_number).abs() < bound);
        }
        let last = b.points.last().unwrap();
        assert_eq!(last.delta, 8.0 * g);
    }

    #[test]
    fn rejects_bad_range() {
        let qp = device();
        assert!(trace_branch(&qp, 1.0, [1.0, -1.0]).is_err());
    }
}
