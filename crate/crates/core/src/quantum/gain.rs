//! Linearized signal/image gain around a pump operating point.

use num_complex::Complex64;
use rayon::prelude::*;

use super::steady::{critical_power, select_branch, slow_fast_rates, solve_pump_cubic, BranchChoice, PumpOperatingPoint};
use crate::error::{Error, Result};
use crate::model::{DriveTone, QuantumParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Scattering coefficients for the signal (𝒢) and image (ℳ) inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGain {
    pub signal: Complex64,
    pub image: Complex64,
}

impl LinearGain {
    pub fn signal_gain(&self) -> f64 {
        self.signal.norm_sqr()
    }

    pub fn image_gain(&self) -> f64 {
        self.image.norm_sqr()
    }

    /// Phase-sensitive extremes (|𝒢| ± |ℳ|)² of the degenerate output.
    pub fn degenerate_extremes(&self) -> (f64, f64) {
        let (g, m) = (self.signal.norm(), self.image.norm());
        ((g + m).powi(2), (g - m).powi(2))
    }
}

pub fn to_db(power_ratio: f64) -> f64 {
    10.0 * power_ratio.log10()
}

/// 𝒢(ω) and ℳ(ω) at signal offset `omega` from the pump.
pub fn linearized_gain(qp: &QuantumParams, op: &PumpOperatingPoint, omega: f64, omega_p: f64) -> Result<LinearGain> {
    if !op.stable {
        return Err(Error::UnstableOperatingPoint {
            photon_number: op.photon_number,
        });
    }
    let g = qp.gamma();
    let k = qp.kerr;
    let n = op.photon_number;
    let detuning = qp.omega0 - omega_p;
    let w = I * detuning + g + 2.0 * I * k * n;
    let v = I * k * n * Complex64::from_polar(1.0, -2.0 * op.psi_b);
    let x = k * k * n * n - (detuning + 2.0 * k * n).powi(2);
    let root = Complex64::new(x, 0.0).sqrt();
    let lambda_p = g + root;
    let lambda_m = g - root;
    let iw = I * omega;
    let denom = (iw - lambda_m) * (iw - lambda_p);
    let scale = w.norm_sqr() + v.norm_sqr() + omega * omega;
    if denom.norm() <= 1e-12 * scale {
        return Err(Error::Pole { omega });
    }
    let signal = 1.0 - 2.0 * qp.gamma1 * (w.conj() - iw) / denom;
    let image = 2.0 * qp.gamma1 * v / denom;
    Ok(LinearGain { signal, image })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEntry {
    /// Signal offset from the pump, rad/s.
    pub omega: f64,
    pub signal_gain: f64,
    pub image_gain: f64,
    pub signal: Complex64,
    pub image: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainSpectrum {
    pub pump: DriveTone,
    pub operating_point: PumpOperatingPoint,
    pub entries: Vec<GainEntry>,
}

impl GainSpectrum {
    pub fn peak_gain_db(&self) -> f64 {
        self.entries.iter().map(|e| to_db(e.signal_gain)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Full width of the band where the signal gain stays within 3 dB of its
    /// peak, by linear interpolation on the grid. Infinite when the gain never
    /// drops 3 dB below the peak inside the grid.
    pub fn bandwidth_3db(&self) -> f64 {
        let db: Vec<f64> = self.entries.iter().map(|e| to_db(e.signal_gain)).collect();
        let (ipk, peak) = db
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let level = peak - 3.0;
        let cross = |range: Box<dyn Iterator<Item = usize>>| -> Option<f64> {
            let mut prev = ipk;
            for i in range {
                if db[i] < level {
                    let (x0, x1) = (self.entries[prev].omega, self.entries[i].omega);
                    let f = (db[prev] - level) / (db[prev] - db[i]);
                    return Some(x0 + f * (x1 - x0));
                }
                prev = i;
            }
            None
        };
        match (cross(Box::new((0..ipk).rev())), cross(Box::new(ipk + 1..db.len()))) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => f64::INFINITY,
        }
    }
}

/// Gain spectrum on `omega_grid` (offsets from the pump) for a pump of
/// amplitude `p_in` at `omega_p`, using the selected stable branch.
pub fn gain_spectrum(qp: &QuantumParams, omega_p: f64, p_in: f64, omega_grid: &[f64], branch: BranchChoice) -> Result<GainSpectrum> {
    let points = solve_pump_cubic(qp, omega_p, p_in)?;
    let op = select_branch(&points, branch).ok_or(Error::UnstableOperatingPoint {
        photon_number: points[0].photon_number,
    })?;
    let entries = omega_grid
        .par_iter()
        .map(|&omega| {
            let lg = linearized_gain(qp, &op, omega, omega_p)?;
            Ok(GainEntry {
                omega,
                signal_gain: lg.signal_gain(),
                image_gain: lg.image_gain(),
                signal: lg.signal,
                image: lg.image,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GainSpectrum {
        pump: DriveTone::new(p_in, omega_p, 0.0)?,
        operating_point: op,
        entries,
    })
}

/// Degenerate signal gain (ω → 0) on the low stable branch.
pub fn degenerate_gain(qp: &QuantumParams, omega_p: f64, p_in: f64, branch: BranchChoice) -> Result<LinearGain> {
    let points = solve_pump_cubic(qp, omega_p, p_in)?;
    let op = select_branch(&points, branch).ok_or(Error::UnstableOperatingPoint {
        photon_number: points[0].photon_number,
    })?;
    linearized_gain(qp, &op, 0.0, omega_p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalPump {
    pub omega_p: f64,
    pub peak_gain_db: f64,
    /// Phase-sensitive degenerate gains (|𝒢|+|ℳ|)², (|𝒢|−|ℳ|)² in dB.
    pub degenerate_max_db: f64,
    pub degenerate_min_db: f64,
    /// Coarse-scan spacing in rad/s.
    pub scan_step: f64,
    /// Slow decay rate of the linearized dynamics at the optimum.
    pub lambda_minus: f64,
}

/// Maximizes the degenerate signal gain over pump frequency by a coarse scan
/// followed by golden-section refinement.
pub fn optimal_pump_detuning(qp: &QuantumParams, p_in: f64) -> Result<OptimalPump> {
    if qp.kerr != 0.0 {
        let pc = critical_power(qp)?.p_crit;
        if p_in >= pc {
            return Err(Error::Domain(format!("pump amplitude {p_in:e} is not below p_crit = {pc:e}")));
        }
    }
    let g = qp.gamma();
    let n_max = 2.0 * qp.gamma1 * p_in * p_in / (g * g);
    let half_span = 6.0 * g + 2.0 * qp.kerr.abs() * n_max;
    let n_scan = 4001;
    let step = 2.0 * half_span / (n_scan - 1) as f64;
    let gain_at = |detuning: f64| -> f64 {
        degenerate_gain(qp, qp.omega0 - detuning, p_in, BranchChoice::Low)
            .map(|lg| lg.signal_gain())
            .unwrap_or(0.0)
    };
    let scan: Vec<f64> = (0..n_scan).map(|i| -half_span + step * i as f64).collect();
    let values: Vec<f64> = scan.par_iter().map(|&d| gain_at(d)).collect();
    let ibest = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > values[best] { i } else { best });

    let (mut a, mut b) = (scan[ibest] - step, scan[ibest] + step);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (gain_at(c), gain_at(d));
    while (b - a) > 1e-10 * g {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = gain_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = gain_at(d);
        }
    }
    let mut best = 0.5 * (a + b);
    if gain_at(best) < values[ibest] {
        best = scan[ibest];
    }
    let omega_p = qp.omega0 - best;
    let lg = degenerate_gain(qp, omega_p, p_in, BranchChoice::Low)?;
    let (dmax, dmin) = lg.degenerate_extremes();
    let points = solve_pump_cubic(qp, omega_p, p_in)?;
    let op = select_branch(&points, BranchChoice::Low).expect("stable branch exists below p_crit");
    let (lambda_minus, _) = slow_fast_rates(qp, best, op.photon_number);
    Ok(OptimalPump {
        omega_p,
        peak_gain_db: to_db(lg.signal_gain()),
        degenerate_max_db: to_db(dmax),
        degenerate_min_db: to_db(dmin),
        scan_step: step,
        lambda_minus,
    })
}
