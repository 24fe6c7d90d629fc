//! Reflection-phase resonance fit.
//!
//! Model: θ(ω) = wrap(arg[(γ − i(ω−ω0)) / (γ + i(ω−ω0))] + θ_bg), fitted by
//! damped Gauss–Newton (Levenberg–Marquardt) with a finite-difference
//! Jacobian. θ_bg absorbs the constant reference-plane phase of the circuit.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::fold_phase;
use crate::quantum::steady::solve3;

/// Fits with an RMS phase residual at or above this are flagged invalid.
pub const VALID_RESIDUAL_RMS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResonanceFit {
    pub omega0_fit: f64,
    pub gamma_fit: f64,
    pub q: f64,
    pub background_phase: f64,
    pub residual_rms: f64,
    /// Covariance of (ω0, γ) in (rad/s)².
    pub covariance: [[f64; 2]; 2],
    pub iterations: usize,
}

impl ResonanceFit {
    pub fn is_valid(&self) -> bool {
        self.residual_rms.is_finite() && self.residual_rms < VALID_RESIDUAL_RMS
    }

    pub fn phase_at(&self, omega: f64) -> f64 {
        reflection_phase(omega, self.omega0_fit, self.gamma_fit, self.background_phase)
    }
}

pub fn reflection_phase(omega: f64, omega0: f64, gamma: f64, background: f64) -> f64 {
    // arg[(γ − ix)/(γ + ix)] = −2·atan(x/γ)
    fold_phase(-2.0 * ((omega - omega0) / gamma).atan() + background)
}

fn unwrap(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let d = p - phases[i - 1];
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
        }
        out.push(p + offset);
    }
    out
}

/// Initial (ω0, γ, θ_bg) from the steepest phase slope and the ±π/2 points.
pub fn initial_guess(omegas: &[f64], phases: &[f64]) -> Result<(f64, f64, f64)> {
    let u = unwrap(phases);
    let n = u.len();
    let swing = (u[n - 1] - u[0]).abs();
    if swing < PI {
        return Err(Error::Fit(format!(
            "probe band does not contain the resonance (phase swing {swing:.3} rad)"
        )));
    }
    let mut best = 0;
    let mut slope = 0.0f64;
    for i in 0..n - 1 {
        let s = (u[i + 1] - u[i]) / (omegas[i + 1] - omegas[i]);
        if s.abs() > slope.abs() {
            slope = s;
            best = i;
        }
    }
    let omega0 = 0.5 * (omegas[best] + omegas[best + 1]);
    let center = 0.5 * (u[best] + u[best + 1]);
    let dir = -slope.signum();
    // Frequencies where the unwrapped phase crosses center ∓ π/2.
    let crossing = |target: f64| -> Option<f64> {
        (0..n - 1).find_map(|i| {
            let (a, b) = (u[i] - target, u[i + 1] - target);
            (a == 0.0 || a.signum() != b.signum()).then(|| omegas[i] + (omegas[i + 1] - omegas[i]) * a / (a - b))
        })
    };
    let gamma = match (crossing(center + dir * PI / 2.0), crossing(center - dir * PI / 2.0)) {
        (Some(lo), Some(hi)) if hi != lo => 0.5 * (hi - lo).abs(),
        _ => 2.0 / slope.abs(),
    };
    Ok((omega0, gamma, fold_phase(center)))
}

/// Fits (ω0, γ, θ_bg) to measured reflection phases.
pub fn fit_reflection_phase(omegas: &[f64], phases: &[f64]) -> Result<ResonanceFit> {
    if omegas.len() != phases.len() || omegas.len() < 4 {
        return Err(Error::Fit("need at least four phase samples".into()));
    }
    if omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Fit("probe frequencies must be strictly increasing".into()));
    }
    let (w0g, gg, bg) = initial_guess(omegas, phases)?;
    let to_phys = |x: &[f64; 3]| (w0g + x[0] * gg, x[1] * gg, x[2]);
    let residuals = |x: &[f64; 3]| -> Vec<f64> {
        let (w0, g, b) = to_phys(x);
        omegas
            .iter()
            .zip(phases)
            .map(|(&w, &p)| fold_phase(reflection_phase(w, w0, g, b) - p))
            .collect()
    };
    let cost = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let jacobian = |x: &[f64; 3]| -> Vec<[f64; 3]> {
        let mut jac = vec![[0.0; 3]; omegas.len()];
        for k in 0..3 {
            let h = 1e-7 * x[k].abs().max(1.0);
            let (mut xp, mut xm) = (*x, *x);
            xp[k] += h;
            xm[k] -= h;
            let (rp, rm) = (residuals(&xp), residuals(&xm));
            for i in 0..omegas.len() {
                jac[i][k] = fold_phase(rp[i] - rm[i]) / (2.0 * h);
            }
        }
        jac
    };
    let normal = |jac: &[[f64; 3]], r: &[f64]| {
        let mut a = [[0.0; 3]; 3];
        let mut g = [0.0; 3];
        for (row, ri) in jac.iter().zip(r) {
            for p in 0..3 {
                g[p] += row[p] * ri;
                for q in 0..3 {
                    a[p][q] += row[p] * row[q];
                }
            }
        }
        (a, g)
    };

    let mut x = [0.0, 1.0, bg];
    let mut r = residuals(&x);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for it in 0..500 {
        iterations = it + 1;
        let jac = jacobian(&x);
        let (a, g) = normal(&jac, &r);
        let mut improved = false;
        let mut step_norm = 0.0;
        for _ in 0..30 {
            let mut m = a;
            for p in 0..3 {
                m[p][p] += lambda * a[p][p].max(1e-12);
            }
            let Some(dx) = solve3(m, [-g[0], -g[1], -g[2]]) else {
                lambda *= 10.0;
                continue;
            };
            let xn = [x[0] + dx[0], x[1] + dx[1], x[2] + dx[2]];
            if xn[1] <= 0.0 {
                lambda *= 10.0;
                continue;
            }
            let rn = residuals(&xn);
            let cn = cost(&rn);
            if cn <= c {
                step_norm = dx.iter().map(|v| v.abs()).fold(0.0, f64::max);
                x = xn;
                r = rn;
                c = cn;
                lambda = (lambda * 0.1).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || step_norm < 1e-15 || c == 0.0 {
            break;
        }
    }
    if !c.is_finite() {
        return Err(Error::Fit("fit diverged".into()));
    }

    let n = omegas.len();
    let jac = jacobian(&x);
    let (a, _) = normal(&jac, &r);
    let sigma2 = if n > 3 { c / (n - 3) as f64 } else { 0.0 };
    let mut cov = [[0.0; 2]; 2];
    let cols = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    for (j, e) in cols.iter().enumerate() {
        if let Some(col) = solve3(a, *e) {
            cov[0][j] = sigma2 * col[0] * gg * gg;
            cov[1][j] = sigma2 * col[1] * gg * gg;
        }
    }
    let (omega0, gamma, background) = to_phys(&x);
    Ok(ResonanceFit {
        omega0_fit: omega0,
        gamma_fit: gamma,
        q: omega0 / (2.0 * gamma),
        background_phase: fold_phase(background),
        residual_rms: (c / n as f64).sqrt(),
        covariance: cov,
        iterations,
    })
}
