//! Pump steady state of the driven Kerr resonator and its bifurcation point.

use num_complex::Complex64;

use super::cubic;
use crate::error::{Error, Result};
use crate::model::QuantumParams;

/// Steady-state intracavity pump.
///
/// The slowly varying pump amplitude is `√N · exp(−i·psi_b)` in the frame
/// rotating at the pump frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpOperatingPoint {
    pub photon_number: f64,
    pub psi_b: f64,
    pub stable: bool,
    /// 0 = low, 1 = middle (unstable), 2 = high.
    pub branch_index: u8,
    /// Set when this root is a double root of the cubic.
    pub degenerate: bool,
    /// Slow eigenvalue λ− of the linearized dynamics; negative on the middle branch.
    pub lambda_minus: f64,
}

impl PumpOperatingPoint {
    /// Complex intracavity amplitude `√N e^{−iψ_B}`.
    pub fn amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.photon_number.sqrt(), -self.psi_b)
    }
}

/// Left-hand side minus right-hand side of the photon-number cubic.
pub fn cubic_residual(qp: &QuantumParams, detuning: f64, p_in: f64, n: f64) -> f64 {
    let k = qp.kerr;
    let g = qp.gamma();
    k * k * n * n * n + 2.0 * detuning * k * n * n + (detuning * detuning + g * g) * n - 2.0 * qp.gamma1 * p_in * p_in
}

/// Residual bound used throughout: 1e-8 × max(1, 2γ1 p_in²).
pub fn residual_bound(qp: &QuantumParams, p_in: f64) -> f64 {
    1e-8 * (2.0 * qp.gamma1 * p_in * p_in).max(1.0)
}

/// λ± = γ ± √(K²N² − (Δ + 2KN)²); returns (λ−, λ+) real parts.
pub fn slow_fast_rates(qp: &QuantumParams, detuning: f64, n: f64) -> (f64, f64) {
    let k = qp.kerr;
    let x = k * k * n * n - (detuning + 2.0 * k * n).powi(2);
    let g = qp.gamma();
    if x > 0.0 {
        let s = x.sqrt();
        (g - s, g + s)
    } else {
        (g, g)
    }
}

fn refine_root(qp: &QuantumParams, detuning: f64, p_in: f64, mut n: f64) -> f64 {
    let k = qp.kerr;
    let g = qp.gamma();
    for _ in 0..3 {
        let f = cubic_residual(qp, detuning, p_in, n);
        let df = 3.0 * k * k * n * n + 4.0 * detuning * k * n + detuning * detuning + g * g;
        if df == 0.0 {
            break;
        }
        let nn = n - f / df;
        if cubic_residual(qp, detuning, p_in, nn).abs() >= f.abs() {
            break;
        }
        n = nn;
    }
    n
}

/// All physical pump steady states for pump frequency `omega_p` and drive
/// amplitude `p_in` (√photons/s, pump phase taken as zero), ascending in N.
pub fn solve_pump_cubic(qp: &QuantumParams, omega_p: f64, p_in: f64) -> Result<Vec<PumpOperatingPoint>> {
    solve_pump_cubic_phased(qp, omega_p, p_in, 0.0)
}

pub fn solve_pump_cubic_phased(qp: &QuantumParams, omega_p: f64, p_in: f64, pump_phase: f64) -> Result<Vec<PumpOperatingPoint>> {
    if !(p_in >= 0.0 && p_in.is_finite()) {
        return Err(Error::Domain(format!("pump amplitude must be >= 0, got {p_in}")));
    }
    let detuning = qp.omega0 - omega_p;
    let g = qp.gamma();
    let k = qp.kerr;
    let drive = 2.0 * qp.gamma1 * p_in * p_in;

    let (raw, double) = if drive == 0.0 {
        (vec![0.0], None)
    } else if k == 0.0 {
        (vec![drive / (detuning * detuning + g * g)], None)
    } else {
        // In u = K N / γ and d = Δ/γ: u³ + 2d u² + (d² + 1) u − 2γ1 p² K / γ³ = 0.
        let d = detuning / g;
        let s = drive * k / (g * g * g);
        let r = cubic::real_roots(1.0, 2.0 * d, d * d + 1.0, -s);
        let mut ns: Vec<f64> = r.roots.iter().map(|u| u * g / k).collect();
        let double = r.double.map(|i| ns[i]);
        for n in ns.iter_mut() {
            *n = refine_root(qp, detuning, p_in, *n);
        }
        let double = double.map(|dn| {
            ns.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - dn).abs().partial_cmp(&(b.1 - dn).abs()).unwrap())
                .map(|(i, _)| i)
                .unwrap()
        });
        let mut idx: Vec<usize> = (0..ns.len()).collect();
        idx.sort_by(|&a, &b| ns[a].partial_cmp(&ns[b]).unwrap());
        let sorted: Vec<f64> = idx.iter().map(|&i| ns[i]).collect();
        let double = double.map(|d| idx.iter().position(|&i| i == d).unwrap());
        (sorted, double)
    };

    let count = raw.len();
    let points = raw
        .iter()
        .enumerate()
        .filter(|(_, n)| **n >= 0.0)
        .map(|(i, &n)| {
            let degenerate = double == Some(i);
            let branch_index = if degenerate {
                1
            } else if count == 3 {
                i as u8
            } else if count == 2 && i == 1 {
                2
            } else {
                0
            };
            let (lambda_minus, _) = slow_fast_rates(qp, detuning, n);
            let amp = Complex64::new(0.0, detuning + k * n) + g;
            let a = Complex64::from_polar((2.0 * qp.gamma1).sqrt() * p_in, -pump_phase) / amp;
            let psi_b = if n > 0.0 { -a.arg() } else { 0.0 };
            PumpOperatingPoint {
                photon_number: n,
                psi_b,
                stable: !degenerate && branch_index != 1 && lambda_minus > 0.0,
                branch_index,
                degenerate,
                lambda_minus,
            }
        })
        .collect();
    Ok(points)
}

/// Which stable branch to take when several coexist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchChoice {
    #[default]
    Low,
    High,
}

/// Picks the lowest-N (or highest-N) stable steady state.
pub fn select_branch(points: &[PumpOperatingPoint], choice: BranchChoice) -> Option<PumpOperatingPoint> {
    let mut stable = points.iter().filter(|p| p.stable);
    match choice {
        BranchChoice::Low => stable.next().copied(),
        BranchChoice::High => stable.last().copied(),
    }
}

/// Cusp of the photon-number cubic: the smallest drive with a double root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    /// Critical drive amplitude, √(photons/s).
    pub p_crit: f64,
    /// Critical detuning ω0 − ωp in rad/s.
    pub delta_crit: f64,
    pub photon_number: f64,
}

/// Normalized residuals of (F, ∂F/∂u, ∂²F/∂u²) at a cusp candidate, with
/// u = KN/γ, d = Δ/γ and F = u³ + 2du² + (d²+1)u − s.
pub fn cusp_residuals(u: f64, d: f64, s: f64) -> [f64; 3] {
    [
        u * u * u + 2.0 * d * u * u + (d * d + 1.0) * u - s,
        3.0 * u * u + 4.0 * d * u + d * d + 1.0,
        6.0 * u + 4.0 * d,
    ]
}

/// Locates the cusp by a damped Newton iteration on the three cusp conditions.
pub fn critical_power(qp: &QuantumParams) -> Result<CriticalPoint> {
    let k = qp.kerr;
    if k == 0.0 {
        return Err(Error::NoBifurcation);
    }
    let g = qp.gamma();
    let sigma = k.signum();
    // Physical roots have N > 0, i.e. u with the sign of K.
    let mut z = [sigma, -1.5 * sigma, 0.0];
    z[2] = cusp_residuals(z[0], z[1], 0.0)[0];
    let norm = |r: [f64; 3]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut res = cusp_residuals(z[0], z[1], z[2]);
    for _ in 0..100 {
        if norm(res) < 1e-14 {
            break;
        }
        let (u, d) = (z[0], z[1]);
        let jac = [
            [3.0 * u * u + 4.0 * d * u + d * d + 1.0, 2.0 * u * u + 2.0 * d * u, -1.0],
            [6.0 * u + 4.0 * d, 4.0 * u + 2.0 * d, 0.0],
            [6.0, 4.0, 0.0],
        ];
        let step = solve3(jac, [-res[0], -res[1], -res[2]]).ok_or(Error::NoConvergence("cusp Newton"))?;
        let mut lambda = 1.0;
        loop {
            let trial = [z[0] + lambda * step[0], z[1] + lambda * step[1], z[2] + lambda * step[2]];
            let tres = cusp_residuals(trial[0], trial[1], trial[2]);
            if norm(tres) < norm(res) || lambda < 1e-6 {
                z = trial;
                res = tres;
                break;
            }
            lambda *= 0.5;
        }
    }
    if norm(res) > 1e-12 || z[0].signum() != sigma {
        return Err(Error::NoConvergence("cusp Newton"));
    }
    let (u, d, s) = (z[0], z[1], z[2]);
    let p2 = s * g * g * g / (2.0 * qp.gamma1 * k);
    Ok(CriticalPoint {
        p_crit: p2.sqrt(),
        delta_crit: d * g,
        photon_number: u * g / k,
    })
}

/// Gaussian elimination with partial pivoting for 3×3 systems.
pub(crate) fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}
