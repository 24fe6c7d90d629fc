//! Independent oracles shared by the integration tests and the acceptance
//! harness.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use jpa_core::model::{QuantumParams, HBAR, REDUCED_FLUX_QUANTUM};

pub fn random_params(rng: &mut ChaCha8Rng) -> QuantumParams {
    let omega0 = 2.0 * PI * rng.gen_range(1.0e9..10.0e9);
    let q = 10f64.powf(rng.gen_range(2.0..4.0));
    let gamma = omega0 / (2.0 * q);
    let split = rng.gen_range(0.5..1.0);
    let k = -gamma * 10f64.powf(rng.gen_range(-5.0..-1.0));
    QuantumParams::new(omega0, k, split * gamma, (1.0 - split) * gamma).unwrap()
}

/// Nonnegative real roots of the photon-number cubic from the eigenvalues of
/// its companion matrix.
pub fn companion_roots(qp: &QuantumParams, omega_p: f64, p_in: f64) -> Vec<f64> {
    let k = qp.kerr;
    let d = qp.omega0 - omega_p;
    let g = qp.gamma();
    let a2 = 2.0 * d / k;
    let a1 = (d * d + g * g) / (k * k);
    let a0 = -2.0 * qp.gamma1 * p_in * p_in / (k * k);
    let m = Matrix3::new(0.0, 0.0, -a0, 1.0, 0.0, -a1, 0.0, 1.0, -a2);
    let scale = a2.abs().max(a1.abs().sqrt()).max(a0.abs().cbrt()).max(f64::MIN_POSITIVE);
    let mut roots: Vec<f64> = m
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-8 * scale)
        .map(|z| z.re)
        .filter(|r| *r >= 0.0)
        .map(|mut r| {
            // Eigenvalues carry a backward error of order ε·‖M‖; Newton
            // polishing on the monic cubic restores full relative accuracy.
            for _ in 0..3 {
                let f = ((r + a2) * r + a1) * r + a0;
                let df = (3.0 * r + 2.0 * a2) * r + a1;
                if df != 0.0 {
                    r -= f / df;
                }
            }
            r
        })
        .collect();
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Anharmonicity (E2 − 2E1 + E0)/ħ of H = ħω0(a†a + 1/2) − (E_J/24)(Φ/φ0)⁴
/// with Φ = Φ_zpf(a + a†), diagonalized in a truncated number basis. Energies
/// are in units of ħω0.
pub fn fock_anharmonicity(omega0: f64, ej: f64, flux_zpf: f64, levels: usize) -> f64 {
    // Build x = a + a† in a larger space so x⁴ is exact on the kept levels.
    let big = levels + 4;
    let mut x = DMatrix::<f64>::zeros(big, big);
    for n in 1..big {
        let v = (n as f64).sqrt();
        x[(n - 1, n)] = v;
        x[(n, n - 1)] = v;
    }
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let quartic = ej / 24.0 * (flux_zpf / REDUCED_FLUX_QUANTUM).powi(4) / (HBAR * omega0);
    let mut h = DMatrix::<f64>::zeros(levels, levels);
    for i in 0..levels {
        h[(i, i)] = i as f64 + 0.5;
        for j in 0..levels {
            h[(i, j)] -= quartic * x4[(i, j)];
        }
    }
    let mut e: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (e[2] - 2.0 * e[1] + e[0]) * omega0
}
