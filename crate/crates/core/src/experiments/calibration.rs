//! Linear characterization of a circuit and the mapping it induces onto the
//! input-output model.

use rayon::prelude::*;

use super::fit::{fit_reflection_phase, ResonanceFit};
use crate::error::{Error, Result};
use crate::model::{
    dbm_to_watts, map_circuit_to_quantum, map_current_to_power, map_flux_to_power, map_power_to_current, watts_to_dbm,
    CircuitParams, DriveTone, FittedResonance, QuantumParams,
};
use crate::quantum::{critical_power, BranchChoice, CriticalPoint};
use crate::time_domain::{
    measure_tones, single_tone_window, small_signal_pole, JunctionKind, OdeSettings, S11Point, ToneMeasurement,
};

/// Time-domain run parameters shared by all circuit-engine workflows.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RunOptions {
    pub settings: OdeSettings,
    /// Settling time in cavity lifetimes 1/γ.
    pub transient_lifetimes: f64,
    /// Minimum settling time in units of the slow pumped decay time 1/λ−.
    pub slow_settle: f64,
    /// As `slow_settle` for cells warm-started from a neighbouring signal power.
    pub warm_settle: f64,
    pub samples_per_period: f64,
    /// Signal source current relative to the critical pump current.
    pub signal_fraction: f64,
    /// Signal offset from the pump, in linewidths, used for degenerate-mode gain.
    pub degenerate_offset: f64,
    #[serde(skip)]
    pub branch: BranchChoice,
    /// Peak junction current allowed during linear probing, relative to Ic.
    pub probe_limit: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            settings: OdeSettings::dp45(1e-6, 1e-26),
            transient_lifetimes: 200.0,
            slow_settle: 30.0,
            warm_settle: 10.0,
            samples_per_period: 20.0,
            signal_fraction: 1e-4,
            degenerate_offset: 1.0 / 64.0,
            branch: BranchChoice::Low,
            probe_limit: 0.01,
        }
    }
}

/// Phase-fit characterization and reflection data.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceCharacterization {
    pub fit: ResonanceFit,
    pub s11: Vec<S11Point>,
    pub probe_current: f64,
    pub peak_junction_current: f64,
}

/// Probes the unpumped circuit at `n_points` frequencies across
/// `probe_band` and fits the reflection phase.
pub fn extract_resonance(circuit: &CircuitParams, probe_band: [f64; 2], n_points: usize, opts: &RunOptions) -> Result<ResonanceCharacterization> {
    if !(probe_band[0] > 0.0 && probe_band[1] > probe_band[0]) || n_points < 4 {
        return Err(Error::Domain("probe band must be ordered and positive with >= 4 points".into()));
    }
    let pole = small_signal_pole(circuit);
    let gamma_est = -pole.re;
    let q_est = pole.im / (2.0 * gamma_est);
    let omegas: Vec<f64> = (0..n_points)
        .map(|i| probe_band[0] + (probe_band[1] - probe_band[0]) * i as f64 / (n_points - 1) as f64)
        .collect();
    let ic = circuit.critical_current;
    let mut probe = 1e-3 * ic / q_est;
    let points = loop {
        let results: Vec<Result<(S11Point, f64)>> = omegas
            .par_iter()
            .map(|&w| {
                let m = ToneMeasurement {
                    circuit: *circuit,
                    kind: JunctionKind::Josephson,
                    tones: vec![DriveTone::new(probe, w, 0.0)?],
                    probes: vec![w],
                    settings: opts.settings,
                    transient: opts.transient_lifetimes / gamma_est,
                    window: single_tone_window(w, 64.0 * 2.0 * std::f64::consts::PI / w),
                    samples_per_period: opts.samples_per_period,
                    start: None,
                };
                let r = measure_tones(&m)?;
                Ok((S11Point::from_projections(w, r.v_out[0], r.v_in[0])?, r.peak_junction_current))
            })
            .collect();
        let results = results.into_iter().collect::<Result<Vec<_>>>()?;
        let peak = results.iter().map(|r| r.1).fold(0.0, f64::max);
        if peak < opts.probe_limit * ic || probe < 1e-9 * ic {
            break (results, peak);
        }
        probe *= 0.1;
    };
    let (results, peak) = points;
    let s11: Vec<S11Point> = results.into_iter().map(|r| r.0).collect();
    let phases: Vec<f64> = s11.iter().map(|p| p.phase).collect();
    let fit = fit_reflection_phase(&omegas, &phases)?;
    Ok(ResonanceCharacterization {
        fit,
        s11,
        probe_current: probe,
        peak_junction_current: peak,
    })
}

/// A characterized circuit with its mapped single-mode model.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub circuit: CircuitParams,
    pub characterization: ResonanceCharacterization,
    pub quantum: QuantumParams,
    pub critical: CriticalPoint,
}

impl Calibration {
    /// Characterizes over ±`span_gamma` estimated linewidths around the
    /// small-signal pole.
    pub fn characterize(circuit: &CircuitParams, n_points: usize, span_gamma: f64, opts: &RunOptions) -> Result<Self> {
        let pole = small_signal_pole(circuit);
        let g = -pole.re;
        let band = [pole.im - span_gamma * g, pole.im + span_gamma * g];
        let ch = extract_resonance(circuit, band, n_points, opts)?;
        Self::from_characterization(circuit, ch)
    }

    pub fn from_characterization(circuit: &CircuitParams, characterization: ResonanceCharacterization) -> Result<Self> {
        if !characterization.fit.is_valid() {
            return Err(Error::Fit(format!(
                "phase residual {:.3e} rad exceeds validity threshold",
                characterization.fit.residual_rms
            )));
        }
        let fitted = FittedResonance {
            omega0: characterization.fit.omega0_fit,
            gamma: characterization.fit.gamma_fit,
        };
        let quantum = map_circuit_to_quantum(circuit, Some(fitted))?;
        let critical = critical_power(&quantum)?;
        Ok(Self {
            circuit: *circuit,
            characterization,
            quantum,
            critical,
        })
    }

    /// Replaces the mapped model, e.g. with user overrides, and renormalizes
    /// the critical point.
    pub fn with_quantum(mut self, quantum: QuantumParams) -> Result<Self> {
        self.critical = critical_power(&quantum)?;
        self.quantum = quantum;
        Ok(self)
    }

    pub fn gamma(&self) -> f64 {
        self.quantum.gamma()
    }

    pub fn omega0(&self) -> f64 {
        self.quantum.omega0
    }

    /// Source current whose incident power carries photon flux `p_in²` at `omega`.
    pub fn source_current(&self, p_in: f64, omega: f64) -> f64 {
        current_for_flux(&self.circuit, p_in, omega)
    }

    pub fn pump_amplitude(&self, frac: f64) -> f64 {
        frac * self.critical.p_crit
    }

    /// Signal source current used for small-signal gain runs.
    pub fn signal_current(&self, opts: &RunOptions) -> f64 {
        opts.signal_fraction * self.source_current(self.critical.p_crit, self.omega0())
    }
}

/// Source current whose incident power ħω·p² carries photon flux p².
pub fn current_for_flux(circuit: &CircuitParams, p_in: f64, omega: f64) -> f64 {
    map_power_to_current(map_flux_to_power(p_in * p_in, omega), circuit.line_impedance)
}

/// Incident power of a Norton source current, dBm.
pub fn current_to_dbm(circuit: &CircuitParams, current: f64) -> f64 {
    watts_to_dbm(map_current_to_power(current, circuit.line_impedance))
}

pub fn dbm_to_current(circuit: &CircuitParams, dbm: f64) -> f64 {
    map_power_to_current(dbm_to_watts(dbm), circuit.line_impedance)
}
