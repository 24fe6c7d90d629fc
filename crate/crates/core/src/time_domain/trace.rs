//! Recorded time traces and the traveling-wave split.

use std::io::Write;

use num_complex::Complex64;

use super::circuit::{CircuitSystem, JunctionKind};
use super::ode::{run, OdeSettings, RunStats, SampleGrid};
use super::projection::{fourier_project, ProjectionWindow, S11Point};
use crate::error::{Error, Result};
use crate::model::{CircuitParams, DriveTone};

/// Sampled integration output on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub t: Vec<f64>,
    pub phi_int: Vec<f64>,
    pub dphi_dt: Vec<f64>,
    pub d2phi_dt2: Vec<f64>,
    pub v_tl: Vec<f64>,
    pub v_int: Vec<f64>,
    pub signal: DriveTone,
    pub pump: DriveTone,
    pub stats: RunStats,
}

impl TimeTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn sample_dt(&self) -> f64 {
        if self.t.len() < 2 {
            0.0
        } else {
            (self.t[self.t.len() - 1] - self.t[0]) / (self.t.len() - 1) as f64
        }
    }
}

/// Output grid and start conditions for [`integrate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Sample spacing; defaults to 1/32 of the fastest tone period.
    pub sample_dt: Option<f64>,
    /// Samples are recorded from this time on.
    pub record_from: f64,
    pub kind: JunctionKind,
    /// Initial (φ, φ̇, φ̈) in SI units; zero when absent.
    pub initial: Option<[f64; 3]>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            sample_dt: None,
            record_from: 0.0,
            kind: JunctionKind::Josephson,
            initial: None,
        }
    }
}

/// Integrates from rest over `duration` and records the whole trace.
pub fn integrate(
    circuit: &CircuitParams,
    signal: &DriveTone,
    pump: &DriveTone,
    settings: &OdeSettings,
    duration: f64,
) -> Result<TimeTrace> {
    integrate_with(circuit, signal, pump, settings, duration, &TraceOptions::default())
}

pub fn integrate_with(
    circuit: &CircuitParams,
    signal: &DriveTone,
    pump: &DriveTone,
    settings: &OdeSettings,
    duration: f64,
    opts: &TraceOptions,
) -> Result<TimeTrace> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Domain("duration must be positive".into()));
    }
    let sys = CircuitSystem::new(*circuit, opts.kind, vec![*signal, *pump]);
    let omega_max = sys.max_omega().max(sys.omega_j);
    let dt = opts.sample_dt.unwrap_or(2.0 * std::f64::consts::PI / omega_max / 32.0);
    if !(dt > 0.0) || !(opts.record_from >= 0.0 && opts.record_from < duration) {
        return Err(Error::Domain("invalid sampling options".into()));
    }
    let count = ((duration - opts.record_from) / dt * (1.0 + 1e-12)).floor() as usize + 1;
    let grid = SampleGrid {
        start: opts.record_from,
        dt,
        count,
    };
    let y0 = opts.initial.map(|x| sys.scale_state(x)).unwrap_or([0.0; 3]);
    let mut tr = TimeTrace {
        t: Vec::with_capacity(count),
        phi_int: Vec::with_capacity(count),
        dphi_dt: Vec::with_capacity(count),
        d2phi_dt2: Vec::with_capacity(count),
        v_tl: Vec::with_capacity(count),
        v_int: Vec::with_capacity(count),
        signal: *signal,
        pump: *pump,
        stats: RunStats {
            final_time: 0.0,
            final_state: [0.0; 3],
            accepted_steps: 0,
            rejected_steps: 0,
        },
    };
    let stats = run(&sys, settings, 0.0, y0, duration, grid, |_, t, y| {
        let x = sys.unscale_state(y);
        tr.t.push(t);
        tr.phi_int.push(x[0]);
        tr.dphi_dt.push(x[1]);
        tr.d2phi_dt2.push(x[2]);
        tr.v_tl.push(sys.line_voltage(t, y));
        tr.v_int.push(x[1]);
    })?;
    tr.stats = stats;
    Ok(tr)
}

/// Incident and reflected waves at the line node.
#[derive(Debug, Clone, PartialEq)]
pub struct Waves {
    pub t: Vec<f64>,
    pub v_in: Vec<f64>,
    pub v_out: Vec<f64>,
}

/// Norton split: V_in = Zc·I_s/2, V_out = V_tl − V_in.
pub fn reconstruct_waves(trace: &TimeTrace, circuit: &CircuitParams, signal: &DriveTone, pump: &DriveTone) -> Waves {
    let sys = CircuitSystem::new(*circuit, JunctionKind::Josephson, vec![*signal, *pump]);
    let v_in: Vec<f64> = trace.t.iter().map(|&t| sys.incident_voltage(t)).collect();
    let v_out = trace.v_tl.iter().zip(&v_in).map(|(a, b)| a - b).collect();
    Waves {
        t: trace.t.clone(),
        v_in,
        v_out,
    }
}

pub fn s11_at(waves: &Waves, omega: f64, window: &ProjectionWindow) -> Result<S11Point> {
    let vi = fourier_project(&waves.t, &waves.v_in, omega, window)?;
    let vo = fourier_project(&waves.t, &waves.v_out, omega, window)?;
    S11Point::from_projections(omega, vo, vi)
}

/// Idler power gain |V_out(2ωp − ωs)|² / |V_in(ωs)|².
pub fn idler_gain_at(waves: &Waves, omega_s: f64, omega_p: f64, window: &ProjectionWindow) -> Result<f64> {
    let omega_i = 2.0 * omega_p - omega_s;
    let vi = fourier_project(&waves.t, &waves.v_in, omega_s, window)?;
    let vo = fourier_project(&waves.t, &waves.v_out, omega_i, window)?;
    idler_ratio(omega_s, vo, vi)
}

pub(crate) fn idler_ratio(omega_s: f64, v_idler: Complex64, v_in: Complex64) -> Result<f64> {
    if v_in.norm() == 0.0 {
        return Err(Error::UndefinedRatio { omega: omega_s });
    }
    Ok((v_idler.norm() / v_in.norm()).powi(2))
}

/// Writes `t,phi_int,V_tl,V_int,V_in,V_out` with 17 significant digits.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &TimeTrace, waves: &Waves) -> std::io::Result<()> {
    writeln!(out, "t,phi_int,V_tl,V_int,V_in,V_out")?;
    for i in 0..trace.len() {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            trace.t[i], trace.phi_int[i], trace.v_tl[i], trace.v_int[i], waves.v_in[i], waves.v_out[i]
        )?;
    }
    Ok(())
}
