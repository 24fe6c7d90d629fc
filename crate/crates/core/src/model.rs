//! Physical parameters of the amplifier and the conversions between the
//! lumped-circuit description and the input-output-theory description.
//!
//! All frequencies are angular (rad/s). GHz and dBm only appear at the CLI
//! boundary.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Magnetic flux quantum h/2e in Wb.
pub const FLUX_QUANTUM: f64 = 2.067833848e-15;
/// Reduced flux quantum Φ0/2π in Wb.
pub const REDUCED_FLUX_QUANTUM: f64 = FLUX_QUANTUM / (2.0 * PI);
/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054571817e-34;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub flux_quantum: f64,
    pub reduced_flux_quantum: f64,
    pub reduced_planck: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            flux_quantum: FLUX_QUANTUM,
            reduced_flux_quantum: REDUCED_FLUX_QUANTUM,
            reduced_planck: HBAR,
        }
    }
}

/// Lumped-element description of the capacitively coupled single-junction
/// amplifier: junction `Ic` shunted by `C`, coupled through `C_co` to a line
/// of impedance `Zc`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CircuitParams {
    pub critical_current: f64,
    pub shunt_capacitance: f64,
    pub coupling_capacitance: f64,
    pub line_impedance: f64,
}

impl CircuitParams {
    pub fn new(ic: f64, c: f64, c_co: f64, zc: f64) -> Result<Self> {
        for (name, v) in [("Ic", ic), ("C", c), ("C_co", c_co), ("Zc", zc)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(Self {
            critical_current: ic,
            shunt_capacitance: c,
            coupling_capacitance: c_co,
            line_impedance: zc,
        })
    }

    /// Ic = 1 µA, C = 7 pF, C_co = 60 fF, Zc = 50 Ω; resonates near 3.30 GHz.
    pub fn reference_device() -> Self {
        Self::new(1e-6, 7e-12, 60e-15, 50.0).expect("reference parameters are valid")
    }

    pub fn josephson_inductance(&self) -> f64 {
        REDUCED_FLUX_QUANTUM / self.critical_current
    }

    /// Capacitance seen by the junction mode with the line treated as a short.
    pub fn effective_capacitance(&self) -> f64 {
        self.shunt_capacitance + self.coupling_capacitance
    }

    /// Loaded resonance estimate 1/√(L_J (C + C_co)).
    pub fn loaded_resonance(&self) -> f64 {
        1.0 / (self.josephson_inductance() * self.effective_capacitance()).sqrt()
    }

    /// Coupling linewidth estimate from the series C_co–Zc branch.
    ///
    /// Only used for planning and as the fallback when no fitted linewidth is
    /// available; [`crate::experiments::extract_resonance`] is authoritative.
    pub fn coupling_linewidth_estimate(&self) -> f64 {
        let w = self.loaded_resonance();
        let x = w * self.coupling_capacitance * self.line_impedance;
        let conductance = w * w * self.coupling_capacitance.powi(2) * self.line_impedance / (1.0 + x * x);
        conductance / (2.0 * self.effective_capacitance())
    }
}

/// Single-mode input-output-theory parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QuantumParams {
    pub omega0: f64,
    pub kerr: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub omega0_shifted: f64,
}

impl QuantumParams {
    pub fn new(omega0: f64, kerr: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::Domain(format!("omega0 must be positive, got {omega0}")));
        }
        if !(gamma1.is_finite() && gamma1 > 0.0) {
            return Err(Error::Domain(format!("gamma1 must be positive, got {gamma1}")));
        }
        if !(gamma2.is_finite() && gamma2 >= 0.0) {
            return Err(Error::Domain(format!("gamma2 must be non-negative, got {gamma2}")));
        }
        if !kerr.is_finite() {
            return Err(Error::Domain("Kerr coefficient must be finite".into()));
        }
        Ok(Self {
            omega0,
            kerr,
            gamma1,
            gamma2,
            omega0_shifted: omega0 + kerr,
        })
    }

    /// Total HWHM linewidth γ1 + γ2.
    pub fn gamma(&self) -> f64 {
        self.gamma1 + self.gamma2
    }

    pub fn quality_factor(&self) -> f64 {
        self.omega0 / (2.0 * self.gamma())
    }
}

/// A sinusoidal drive.
///
/// In the quantum engine `amplitude` is √(photon flux) in √(1/s); in the
/// circuit engine it is the Norton source current in A, with the source
/// waveform `amplitude · sin(omega·t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DriveTone {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

impl DriveTone {
    pub fn new(amplitude: f64, omega: f64, phase: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::Domain(format!("drive amplitude must be >= 0, got {amplitude}")));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::Domain(format!("drive omega must be > 0, got {omega}")));
        }
        Ok(Self {
            amplitude,
            omega,
            phase: fold_phase(phase),
        })
    }

    /// A zero-amplitude tone; `omega` is kept so that windows can still be planned.
    pub fn off(omega: f64) -> Self {
        Self {
            amplitude: 0.0,
            omega,
            phase: 0.0,
        }
    }

    pub fn is_off(&self) -> bool {
        self.amplitude == 0.0
    }
}

/// Folds an angle into [−π, π).
pub fn fold_phase(phase: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut p = (phase + PI).rem_euclid(two_pi) - PI;
    if p >= PI {
        p -= two_pi;
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Junction {
    pub inductance: f64,
    pub energy: f64,
}

pub fn derive_junction(ic: f64) -> Result<Junction> {
    if !(ic.is_finite() && ic > 0.0) {
        return Err(Error::Domain(format!("critical current must be positive, got {ic}")));
    }
    Ok(Junction {
        inductance: REDUCED_FLUX_QUANTUM / ic,
        energy: REDUCED_FLUX_QUANTUM * ic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearResonator {
    pub omega0: f64,
    pub impedance: f64,
    pub flux_zpf: f64,
}

pub fn derive_linear_resonator(capacitance: f64, inductance: f64) -> Result<LinearResonator> {
    if !(capacitance > 0.0 && inductance > 0.0) {
        return Err(Error::Domain("capacitance and inductance must be positive".into()));
    }
    let impedance = (inductance / capacitance).sqrt();
    Ok(LinearResonator {
        omega0: 1.0 / (inductance * capacitance).sqrt(),
        impedance,
        flux_zpf: (HBAR * impedance / 2.0).sqrt(),
    })
}

/// Self-Kerr coefficient from normal-ordering the quartic term of the
/// cosine potential: K = −(E_J/2ħ)(2π Φ_zpf/Φ0)⁴.
pub fn kerr_coefficient(josephson_energy: f64, flux_zpf: f64) -> Result<f64> {
    if !(josephson_energy >= 0.0 && flux_zpf >= 0.0) {
        return Err(Error::Domain("Josephson energy and zero-point flux must be non-negative".into()));
    }
    let x = 2.0 * PI * flux_zpf / FLUX_QUANTUM;
    Ok(-(josephson_energy / (2.0 * HBAR)) * x.powi(4))
}

/// Photon flux (1/s) carried by a tone of power `power` (W).
pub fn map_power_to_flux(power: f64, omega: f64) -> Result<f64> {
    if !(power >= 0.0 && omega > 0.0) {
        return Err(Error::Domain("power must be >= 0 and omega > 0".into()));
    }
    Ok(power / (HBAR * omega))
}

pub fn map_flux_to_power(flux: f64, omega: f64) -> f64 {
    flux * HBAR * omega
}

/// √(photon flux) amplitude used by the quantum engine.
pub fn flux_amplitude(power: f64, omega: f64) -> Result<f64> {
    map_power_to_flux(power, omega).map(f64::sqrt)
}

/// Incident power of a Norton source current `current` feeding a line of
/// impedance `zc`: the incident wave is Zc·I/2, so P = Zc·I²/8.
pub fn map_current_to_power(current: f64, zc: f64) -> f64 {
    zc * current * current / 8.0
}

pub fn map_power_to_current(power: f64, zc: f64) -> f64 {
    (8.0 * power / zc).sqrt()
}

pub fn watts_to_dbm(p: f64) -> f64 {
    10.0 * (p / 1e-3).log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Linear-response characterization supplied by a resonance fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedResonance {
    pub omega0: f64,
    pub gamma: f64,
}

/// Maps a circuit onto single-mode parameters.
///
/// Fitted values are passed through unchanged. Without them the analytic
/// loaded resonance and the series-coupling linewidth estimate are used.
/// The circuit has no internal loss, so γ2 = 0.
pub fn map_circuit_to_quantum(cp: &CircuitParams, fitted: Option<FittedResonance>) -> Result<QuantumParams> {
    let junction = derive_junction(cp.critical_current)?;
    let resonator = derive_linear_resonator(cp.effective_capacitance(), junction.inductance)?;
    let kerr = kerr_coefficient(junction.energy, resonator.flux_zpf)?;
    let (omega0, gamma1) = match fitted {
        Some(f) => (f.omega0, f.gamma),
        None => (cp.loaded_resonance(), cp.coupling_linewidth_estimate()),
    };
    QuantumParams::new(omega0, kerr, gamma1, 0.0)
}
