//! Command-line front end: configuration, subcommand dispatch and file output.

pub mod config;
pub mod svg;

use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

pub use config::{parse_config, AxisSpec, ConfigError, PumpLevel, RunConfig, Scale, TdMode, DEFAULTS};

use crate::experiments::{
    compare_frameworks, compression_sweep, current_to_dbm, dbm_to_current, fmt_f64, pump_detuning_sweep,
    signal_frequency_sweep, Calibration, CellStatus, RunOptions, SweepAxis, SweepCell, SweepResult,
};
use crate::model::{flux_amplitude, map_circuit_to_quantum, watts_to_dbm, map_flux_to_power, CircuitParams, DriveTone, QuantumParams};
use crate::quantum::{
    critical_power, gain_spectrum, linearized_gain, optimal_pump_detuning, select_branch, solve_pump_cubic, to_db,
    trace_branch, CriticalPoint,
};
use crate::time_domain::{integrate_with, reconstruct_waves, small_signal_pole, write_trace_csv, Method, TraceOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Fit the linear reflection phase and map the circuit onto the single-mode model.
    Characterize,
    /// Pump photon number versus detuning, including unstable branches.
    PhotonNumber,
    /// Input-output theory gain spectra and pump-detuning maps.
    QuantumGain,
    /// Time-domain gain sweeps.
    TdGain,
    /// Gain versus signal power and the 1 dB compression point.
    Compression,
    /// Gain from both engines on a shared grid.
    Compare,
    /// Raw time trace of the driven circuit.
    TraceDump,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),

    #[error("numerical failure: {0}")]
    Numerical(#[from] crate::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

/// Exit code for a sweep with some failed cells.
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchOptions {
    pub out_dir: PathBuf,
    pub svg: bool,
    pub solver: Option<Method>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

struct Output<'a> {
    dir: &'a Path,
    svg: bool,
    files: Vec<PathBuf>,
}

impl Output<'_> {
    fn file(&mut self, name: &str, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> std::io::Result<()> {
        fs::create_dir_all(self.dir)?;
        let path = self.dir.join(name);
        let mut w = BufWriter::new(fs::File::create(&path)?);
        write(&mut w)?;
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> std::io::Result<()> {
        self.file(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    fn chart(&mut self, name: &str, svg: impl FnOnce() -> String) -> std::io::Result<()> {
        if self.svg {
            let text = svg();
            self.file(name, |w| w.write_all(text.as_bytes()))?;
        }
        Ok(())
    }

    fn sweep(&mut self, stem: &str, title: &str, s: &SweepResult) -> std::io::Result<()> {
        self.file(&format!("{stem}.csv"), |w| s.write_csv(w))?;
        self.json(&format!("{stem}.json"), &s.metadata_json())?;
        self.chart(&format!("{stem}.svg"), || {
            let gains: Vec<f64> = s.cells.iter().map(|c| c.gain_db).collect();
            svg::heatmap(title, &s.axis2.name, &s.axis1.name, &s.axis2.values, &s.axis1.values, &gains)
        })
    }
}

/// Runs one subcommand, writing artifacts to `opts.out_dir` and a summary to `log`.
pub fn dispatch(cmd: Command, cfg: &RunConfig, opts: &DispatchOptions, log: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut cfg = *cfg;
    if let Some(m) = opts.solver {
        cfg.solver.settings.method = m;
    }
    echo(&cfg, log)?;
    let mut out = Output {
        dir: &opts.out_dir,
        svg: opts.svg,
        files: Vec::new(),
    };
    let failed = match cmd {
        Command::Characterize => characterize(&cfg, &mut out, log)?,
        Command::PhotonNumber => photon_number(&cfg, &mut out, log)?,
        Command::QuantumGain => quantum_gain(&cfg, &mut out, log)?,
        Command::TdGain => td_gain(&cfg, &mut out, log)?,
        Command::Compression => compression(&cfg, &mut out, log)?,
        Command::Compare => compare(&cfg, &mut out, log)?,
        Command::TraceDump => trace_dump(&cfg, &mut out, log)?,
    };
    for f in &out.files {
        writeln!(log, "wrote {}", f.display())?;
    }
    if failed > 0 {
        writeln!(log, "{failed} sweep cells failed")?;
    }
    Ok(Outcome {
        exit_code: if failed > 0 { EXIT_PARTIAL } else { 0 },
        files: out.files,
    })
}

fn ghz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e9)
}

fn echo(cfg: &RunConfig, log: &mut dyn Write) -> std::io::Result<()> {
    let c = &cfg.circuit;
    let pole = small_signal_pole(c);
    writeln!(
        log,
        "circuit: Ic = {:.4} uA, C = {:.4} pF, C_co = {:.4} fF, Zc = {:.4} ohm",
        c.critical_current * 1e6,
        c.shunt_capacitance * 1e12,
        c.coupling_capacitance * 1e15,
        c.line_impedance
    )?;
    writeln!(
        log,
        "derived: L_J = {:.2} pH, f0 = {:.4} GHz, small-signal Q ~ {:.0}",
        c.josephson_inductance() * 1e12,
        ghz(c.loaded_resonance()),
        pole.im / (-2.0 * pole.re)
    )
}

fn run_options(cfg: &RunConfig) -> RunOptions {
    RunOptions {
        settings: cfg.solver.settings,
        transient_lifetimes: cfg.solver.transient_lifetimes,
        branch: cfg.drive.branch,
        ..RunOptions::default()
    }
}

fn apply_overrides(cfg: &RunConfig, base: QuantumParams) -> crate::Result<QuantumParams> {
    let q = &cfg.quantum;
    QuantumParams::new(
        q.omega0.unwrap_or(base.omega0),
        q.kerr.unwrap_or(base.kerr),
        q.gamma1.unwrap_or(base.gamma1),
        q.gamma2.unwrap_or(base.gamma2),
    )
}

fn calibrate(cfg: &RunConfig, log: &mut dyn Write) -> Result<Calibration, CliError> {
    let opts = run_options(cfg);
    let cal = Calibration::characterize(&cfg.circuit, cfg.sweep.probe_points, cfg.sweep.probe_span_gamma, &opts)?;
    let f = &cal.characterization.fit;
    writeln!(
        log,
        "fit: f0 = {:.6} GHz, gamma/2pi = {:.4} MHz, Q = {:.1}, residual = {:.2e} rad",
        ghz(f.omega0_fit),
        f.gamma_fit / (2.0 * PI * 1e6),
        f.q,
        f.residual_rms
    )?;
    let quantum = apply_overrides(cfg, cal.quantum)?;
    Ok(if quantum != cal.quantum { cal.with_quantum(quantum)? } else { cal })
}

/// Single-mode model for the quantum engine: fitted unless the overrides
/// supply both ω0 and γ1.
fn quantum_model(cfg: &RunConfig, log: &mut dyn Write) -> Result<(QuantumParams, CriticalPoint), CliError> {
    if cfg.quantum.replaces_fit() {
        let qp = apply_overrides(cfg, map_circuit_to_quantum(&cfg.circuit, None)?)?;
        let cp = critical_power(&qp)?;
        return Ok((qp, cp));
    }
    let cal = calibrate(cfg, log)?;
    Ok((cal.quantum, cal.critical))
}

/// Pump amplitude √(photons/s) and its fraction of p_crit.
fn pump_amplitude(cfg: &RunConfig, qp: &QuantumParams, crit: &CriticalPoint) -> crate::Result<(f64, f64)> {
    match cfg.drive.pump {
        PumpLevel::Fraction(f) => Ok((f * crit.p_crit, f)),
        PumpLevel::Dbm(d) => {
            let omega = cfg.drive.pump_omega.unwrap_or(qp.omega0);
            let p = flux_amplitude(crate::model::dbm_to_watts(d), omega)?;
            Ok((p, p / crit.p_crit))
        }
    }
}

fn pump_frequency(cfg: &RunConfig, qp: &QuantumParams, p_in: f64) -> crate::Result<f64> {
    match cfg.drive.pump_omega {
        Some(w) => Ok(w),
        None => Ok(optimal_pump_detuning(qp, p_in)?.omega_p),
    }
}

fn quantum_summary(qp: &QuantumParams, crit: &CriticalPoint) -> serde_json::Value {
    json!({
        "omega0": qp.omega0,
        "kerr": qp.kerr,
        "gamma1": qp.gamma1,
        "gamma2": qp.gamma2,
        "omega0_shifted": qp.omega0_shifted,
        "p_crit": crit.p_crit,
        "p_crit_dbm": watts_to_dbm(map_flux_to_power(crit.p_crit * crit.p_crit, qp.omega0)),
        "delta_crit": crit.delta_crit,
    })
}

fn characterize(cfg: &RunConfig, out: &mut Output, log: &mut dyn Write) -> Result<usize, CliError> {
    let cal = calibrate(cfg, log)?;
    let fit = cal.characterization.fit;
    let s11 = &cal.characterization.s11;
    out.file("resonance.csv", |w| {
        writeln!(w, "f_ghz,s11_phase_rad,fit_phase_rad")?;
        for p in s11 {
            writeln!(w, "{},{},{}", fmt_f64(ghz(p.omega)), fmt_f64(p.phase), fmt_f64(fit.phase_at(p.omega)))?;
        }
        Ok(())
    })?;
    out.json(
        "resonance.json",
        &json!({
            "fit": fit,
            "s11": s11,
            "probe_current": cal.characterization.probe_current,
            "peak_junction_current": cal.characterization.peak_junction_current,
            "quantum": quantum_summary(&cal.quantum, &cal.critical),
        }),
    )?;
    out.chart("resonance.svg", || {
        svg::line_chart(
            "Reflection phase",
            "f (GHz)",
            "phase (rad)",
            &[
                svg::Series {
                    label: "simulated".into(),
                    points: s11.iter().map(|p| (ghz(p.omega), p.phase)).collect(),
                },
                svg::Series {
                    label: "fit".into(),
                    points: s11.iter().map(|p| (ghz(p.omega), fit.phase_at(p.omega))).collect(),
                },
            ],
        )
    })?;
    writeln!(
        log,
        "mapped: K/2pi = {:.4} kHz, p_crit = {:.6e} sqrt(photons/s) ({:.2} dBm)",
        cal.quantum.kerr / (2.0 * PI * 1e3),
        cal.critical.p_crit,
        watts_to_dbm(map_flux_to_power(cal.critical.p_crit.powi(2), cal.quantum.omega0))
    )?;
    Ok(0)
}

fn photon_number(cfg: &RunConfig, out: &mut Output, log: &mut dyn Write) -> Result<usize, CliError> {
    let (qp, crit) = quantum_model(cfg, log)?;
    let (p, frac) = pump_amplitude(cfg, &qp, &crit)?;
    let g = qp.gamma();
    let axis = cfg.sweep.pump_detuning;
    let (lo, hi) = (axis.start.min(axis.stop), axis.start.max(axis.stop));
    // δ = ω0 − ωp is the negated pump-detuning axis.
    let branch = trace_branch(&qp, p, [-hi * g, -lo * g])?;
    let folds = branch.fold_indices();
    let scale = if p > 0.0 { g * g / (qp.gamma1 * p * p) } else { 0.0 };
    out.file("photon_number.csv", |w| {
        writeln!(w, "pump_detuning_gamma,photon_number,n_normalized,stable,segment")?;
        for (k, pt) in branch.points.iter().enumerate() {
            let segment = folds.iter().filter(|&&f| f <= k).count();
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(-pt.delta / g),
                fmt_f64(pt.photon_number),
                fmt_f64(pt.photon_number * scale),
                pt.stable,
                segment
            )?;
        }
        Ok(())
    })?;
    out.json(
        "photon_number.json",
        &json!({
            "pump_amplitude": p,
            "pump_power_frac": frac,
            "fold_count": branch.fold_count(),
            "arclength_steps": branch.arclength_steps,
            "n_normalized": "N * (gamma1 + gamma2)^2 / (gamma1 * p_in^2)",
            "quantum": quantum_summary(&qp, &crit),
        }),
    )?;
    out.chart("photon_number.svg", || {
        let pick = |stable: bool| -> Vec<(f64, f64)> {
            branch
                .points
                .iter()
                .map(|pt| (-pt.delta / g, if pt.stable == stable { pt.photon_number * scale } else { f64::NAN }))
                .collect()
        };
        svg::line_chart(
            &format!("Pump photon number at p/p_crit = {frac:.3}"),
            "(wp - w0)/gamma",
            "n",
            &[
                svg::Series {
                    label: "stable".into(),
                    points: pick(true),
                },
                svg::Series {
                    label: "unstable".into(),
                    points: pick(false),
                },
            ],
        )
    })?;
    writeln!(log, "p/p_crit = {frac:.4}, fold points: {}", branch.fold_count())?;
    Ok(0)
}

fn fraction_axis(cfg: &RunConfig, crit: &CriticalPoint) -> SweepAxis {
    let fracs = cfg.sweep.pump_frac.values();
    let raw = fracs.iter().map(|f| f * crit.p_crit).collect();
    SweepAxis::new("pump_power_frac", fracs, raw, "sqrt(photons/s)")
}

fn quantum_gain(cfg: &RunConfig, out: &mut Output, log: &mut dyn Write) -> Result<usize, CliError> {
    let (qp, crit) = quantum_model(cfg, log)?;
    let g = qp.gamma();
    let fracs = fraction_axis(cfg, &crit);
    let sig = cfg.sweep.signal_detuning.values();
    let det = cfg.sweep.pump_detuning.values();
    let mut spectrum_cells = Vec::new();
    let mut map_cells = Vec::new();
    let mut peaks = Vec::new();
    for &p in &fracs.raw {
        let wp = pump_frequency(cfg, &qp, p)?;
        let omegas: Vec<f64> = sig.iter().map(|x| x * g).collect();
        let spec = gain_spectrum(&qp, wp, p, &omegas, cfg.drive.branch)?;
        for e in &spec.entries {
            spectrum_cells.push(SweepCell {
                gain_db: to_db(e.signal_gain),
                idler_gain_db: to_db(e.image_gain),
                status: CellStatus::Ok,
                omega_p: wp,
                omega_s: wp + e.omega,
                signal_snap_error: 0.0,
                peak_junction_current: 0.0,
            });
        }
        peaks.push((wp, spec.peak_gain_db(), spec.bandwidth_3db()));
        for x in &det {
            let w = qp.omega0 + x * g;
            let res = solve_pump_cubic(&qp, w, p).and_then(|pts| {
                let op = select_branch(&pts, cfg.drive.branch).ok_or(crate::Error::UnstableOperatingPoint {
                    photon_number: pts[0].photon_number,
                })?;
                linearized_gain(&qp, &op, 0.0, w)
            });
            map_cells.push(match res {
                Ok(lg) => SweepCell {
                    gain_db: to_db(lg.signal_gain()),
                    idler_gain_db: to_db(lg.image_gain()),
                    status: CellStatus::Ok,
                    omega_p: w,
                    omega_s: w,
                    signal_snap_error: 0.0,
                    peak_junction_current: 0.0,
                },
                Err(e) => SweepCell::failed(e.to_string(), w, w),
            });
        }
    }
    let meta = json!({"engine": "input-output", "quantum": quantum_summary(&qp, &crit)});
    let spectra = SweepResult {
        axis1: fracs.clone(),
        axis2: SweepAxis::new("signal_detuning_gamma", sig.clone(), sig.iter().map(|x| x * g).collect(), "rad/s"),
        cells: spectrum_cells,
        metadata: meta.clone(),
    };
    let map = SweepResult {
        axis1: fracs.clone(),
        axis2: SweepAxis::new(
            "pump_detuning_gamma",
            det.clone(),
            det.iter().map(|x| qp.omega0 + x * g).collect(),
            "rad/s",
        ),
        cells: map_cells,
        metadata: meta,
    };
    out.sweep("quantum_gain", "Signal gain (dB), input-output theory", &spectra)?;
    out.sweep("quantum_pump_detuning", "Degenerate gain (dB) vs pump detuning", &map)?;
    out.file("quantum_peaks.csv", |w| {
        writeln!(w, "pump_power_frac,pump_detuning_gamma,peak_gain_db,bandwidth_3db_mhz")?;
        for (f, (wp, peak, bw)) in fracs.values.iter().zip(&peaks) {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(*f),
                fmt_f64((wp - qp.omega0) / g),
                fmt_f64(*peak),
                fmt_f64(bw / (2.0 * PI * 1e6))
            )?;
        }
        Ok(())
    })?;
    for (f, (wp, peak, _)) in fracs.values.iter().zip(&peaks) {
        writeln!(log, "p/p_crit = {f:.4}: pump at (wp - w0)/gamma = {:.4}, peak gain {peak:.3} dB", (wp - qp.omega0) / g)?;
    }
    Ok(map.failed_count())
}

/// Signal current implied by `signal_dbm`, as a fraction of the critical pump current.
fn signal_options(cfg: &RunConfig, cal: &Calibration, mut opts: RunOptions) -> RunOptions {
    if let Some(dbm) = cfg.drive.signal_dbm {
        opts.signal_fraction = dbm_to_current(&cal.circuit, dbm) / cal.source_current(cal.critical.p_crit, cal.omega0());
    }
    opts
}

fn td_gain(cfg: &RunConfig, out: &mut Output, log: &mut dyn Write) -> Result<usize, CliError> {
    let cal = calibrate(cfg, log)?;
    let opts = signal_options(cfg, &cal, run_options(cfg));
    let fracs = cfg.sweep.pump_frac.values();
    let s = match cfg.sweep.td_mode {
        TdMode::PumpDetuning => pump_detuning_sweep(&cal, &fracs, &cfg.sweep.pump_detuning.values(), &opts)?,
        TdMode::SignalFrequency => signal_frequency_sweep(&cal, &fracs, &cfg.sweep.signal_detuning.values(), &opts)?,
    };
    out.sweep("td_gain", "Signal gain (dB), circuit engine", &s)?;
    for i in 0..s.axis1.len() {
        if let Some((j, peak)) = s.row_peak(i) {
            writeln!(
                log,
                "p/p_crit = {:.4}: peak gain {peak:.3} dB at {} = {:.4}",
                s.axis1.values[i], s.axis2.name, s.axis2.values[j]
            )?;
        }
    }
    Ok(s.failed_count())
}

fn compression(cfg: &RunConfig, out: &mut Output, log: &mut dyn Write) -> Result<usize, CliError> {
    let cal = calibrate(cfg, log)?;
    let opts = run_options(cfg);
    let (_, frac) = pump_amplitude(cfg, &cal.quantum, &cal.critical)?;
    let dbm = cfg.sweep.signal_dbm.values();
    let r = compression_sweep(
        &cal,
        frac,
        cfg.drive.pump_omega,
        &dbm,
        &cfg.sweep.signal_detuning.values(),
        cfg.sweep.hysteresis,
        &opts,
    )?;
    out.sweep("compression", "Signal gain (dB) vs signal power", &r.sweep)?;
    out.file("compression_peak.csv", |w| {
        writeln!(w, "signal_dbm,peak_gain_db,down_ramp_gain_db")?;
        for (k, (p, g)) in dbm.iter().zip(&r.peak_gain_db).enumerate() {
            let down = r.down_ramp_gain_db.as_ref().map_or(f64::NAN, |d| d[k]);
            writeln!(w, "{},{},{}", fmt_f64(*p), fmt_f64(*g), fmt_f64(down))?;
        }
        Ok(())
    })?;
    out.chart("compression_peak.svg", || {
        let mut series = vec![svg::Series {
            label: "up ramp".into(),
            points: dbm.iter().copied().zip(r.peak_gain_db.iter().copied()).collect(),
        }];
        if let Some(d) = &r.down_ramp_gain_db {
            series.push(svg::Series {
                label: "down ramp".into(),
                points: dbm.iter().copied().zip(d.iter().copied()).collect(),
            });
        }
        svg::line_chart("On-peak gain", "signal power (dBm)", "gain (dB)", &series)
    })?;
    writeln!(log, "small-signal gain: {:.3} dB", r.small_signal_gain_db)?;
    match r.p_1db_dbm {
        Some(p) => writeln!(log, "1 dB compression point: {p:.2} dBm")?,
        None => writeln!(log, "1 dB compression point: not reached on this grid")?,
    }
    if r.hysteresis_detected {
        writeln!(log, "hysteresis between up and down power ramps detected")?;
    }
    Ok(r.sweep.failed_count())
}

fn compare(cfg: &RunConfig, out: &mut Output, log: &mut dyn Write) -> Result<usize, CliError> {
    let cal = calibrate(cfg, log)?;
    let opts = signal_options(cfg, &cal, run_options(cfg));
    let fracs = cfg.sweep.pump_frac.values();
    let det = cfg.sweep.pump_detuning.values();
    let rep = compare_frameworks(&cal, &fracs, &det, &opts)?;
    out.file("comparison.csv", |w| rep.write_csv(w))?;
    out.json(
        "comparison.json",
        &json!({
            "max_abs_gain_gap_db": rep.max_abs_gain_gap_db,
            "gain_ceiling_db": rep.gain_ceiling_db,
            "gap_vs_gain": rep.gap_vs_gain,
            "mapped": rep.mapped,
            "quantum": quantum_summary(&cal.quantum, &cal.critical),
            "fit": cal.characterization.fit,
            "circuit": rep.circuit.metadata_json(),
        }),
    )?;
    out.chart("comparison.svg", || {
        let mut series = Vec::new();
        for (i, f) in fracs.iter().enumerate() {
            for (label, s) in [("quantum", &rep.quantum), ("circuit", &rep.circuit)] {
                series.push(svg::Series {
                    label: format!("{label} {f:.2}"),
                    points: det.iter().zip(s.row(i)).map(|(x, c)| (*x, c.gain_db)).collect(),
                });
            }
        }
        svg::line_chart("Gain vs pump detuning", "(wp - w0)/gamma", "gain (dB)", &series)
    })?;
    writeln!(
        log,
        "max |gap| where quantum gain <= {} dB: {:.4} dB",
        rep.gain_ceiling_db, rep.max_abs_gain_gap_db
    )?;
    Ok(rep.circuit.failed_count())
}

fn trace_dump(cfg: &RunConfig, out: &mut Output, log: &mut dyn Write) -> Result<usize, CliError> {
    let (qp, crit) = quantum_model(cfg, log)?;
    let circuit: CircuitParams = cfg.circuit;
    let (p, _) = pump_amplitude(cfg, &qp, &crit)?;
    let g = qp.gamma();
    let wp = pump_frequency(cfg, &qp, p.min(0.999 * crit.p_crit))?;
    let ws = cfg.drive.signal_omega.unwrap_or(wp + RunOptions::default().degenerate_offset * g);
    let source = |flux_amp: f64, omega: f64| crate::experiments::current_for_flux(&circuit, flux_amp, omega);
    let i_sig = match cfg.drive.signal_dbm {
        Some(d) => dbm_to_current(&circuit, d),
        None => RunOptions::default().signal_fraction * source(crit.p_crit, qp.omega0),
    };
    let pump = DriveTone::new(source(p, wp), wp, 0.0)?;
    let signal = DriveTone::new(i_sig, ws, 0.0)?;
    let duration = cfg.solver.duration.unwrap_or(10.0 / g);
    let trace = integrate_with(&circuit, &signal, &pump, &cfg.solver.settings, duration, &TraceOptions::default())?;
    let waves = reconstruct_waves(&trace, &circuit, &signal, &pump);
    out.file("trace.csv", |w| write_trace_csv(w, &trace, &waves))?;
    out.json(
        "trace.json",
        &json!({
            "pump": pump,
            "signal": signal,
            "pump_dbm": current_to_dbm(&circuit, pump.amplitude),
            "signal_dbm": current_to_dbm(&circuit, signal.amplitude),
            "duration": duration,
            "solver": cfg.solver.settings,
            "accepted_steps": trace.stats.accepted_steps,
            "rejected_steps": trace.stats.rejected_steps,
        }),
    )?;
    out.chart("trace.svg", || {
        let stride = (trace.len() / 4000).max(1);
        svg::line_chart(
            "Line voltage",
            "t (s)",
            "V_tl (V)",
            &[svg::Series {
                label: "V_tl".into(),
                points: trace.t.iter().zip(&trace.v_tl).step_by(stride).map(|(t, v)| (*t, *v)).collect(),
            }],
        )
    })?;
    writeln!(log, "trace: {} samples over {:.4e} s", trace.len(), duration)?;
    Ok(0)
}
