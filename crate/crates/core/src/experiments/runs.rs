//! Pumped gain sweeps on the circuit engine and the cross-engine comparison.

use rayon::prelude::*;
use serde_json::json;

use super::calibration::{current_to_dbm, dbm_to_current, Calibration, RunOptions};
use super::sweep::{CellStatus, SweepAxis, SweepCell, SweepResult};
use crate::error::{Error, Result};
use crate::model::{DriveTone, QuantumParams};
use crate::quantum::{linearized_gain, optimal_pump_detuning, select_branch, solve_pump_cubic, to_db, BranchChoice};
use crate::time_domain::{measure_tones, snap_tones, JunctionKind, State, ToneMeasurement};

/// One pumped measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainRequest {
    pub omega_p: f64,
    /// Pump amplitude in √(photons/s).
    pub p_in: f64,
    /// Requested signal frequency; equal to `omega_p` selects the degenerate offset.
    pub omega_s: f64,
    pub signal_current: f64,
    pub warm: Option<(f64, State)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainOutcome {
    pub cell: GainCellValues,
    pub end: (f64, State),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainCellValues {
    pub gain: f64,
    pub idler_gain: f64,
    pub omega_s: f64,
    pub omega_i: f64,
    pub snap_error: f64,
    pub peak_junction_current: f64,
}

fn slow_rate(qp: &QuantumParams, omega_p: f64, p_in: f64, branch: BranchChoice) -> Option<f64> {
    let pts = solve_pump_cubic(qp, omega_p, p_in).ok()?;
    select_branch(&pts, branch).map(|op| op.lambda_minus).filter(|l| *l > 0.0)
}

/// Signal frequency actually used for a requested one (after the degenerate
/// offset rule), and the grid spacing for snapping.
fn signal_plan(cal: &Calibration, opts: &RunOptions, omega_p: f64, omega_s: f64) -> (f64, f64) {
    let min_offset = opts.degenerate_offset * cal.gamma();
    let offset = omega_s - omega_p;
    if offset.abs() < 0.5 * min_offset {
        (omega_p + min_offset, min_offset)
    } else {
        (omega_s, offset.abs())
    }
}

pub fn measure_gain(cal: &Calibration, opts: &RunOptions, req: &GainRequest) -> Result<GainOutcome> {
    let (omega_s, spacing) = signal_plan(cal, opts, req.omega_p, req.omega_s);
    let snapped = snap_tones(req.omega_p, omega_s, spacing)?;
    let g = cal.gamma();
    let settle = if req.warm.is_some() { opts.warm_settle } else { opts.slow_settle };
    let slow = slow_rate(&cal.quantum, req.omega_p, req.p_in, opts.branch).map_or(0.0, |l| settle / l);
    let transient = (opts.transient_lifetimes / g).max(slow);
    let pump = DriveTone::new(cal.source_current(req.p_in, req.omega_p), req.omega_p, 0.0)?;
    let signal = DriveTone::new(req.signal_current, snapped.signal, 0.0)?;
    let m = ToneMeasurement {
        circuit: cal.circuit,
        kind: JunctionKind::Josephson,
        tones: vec![pump, signal],
        probes: vec![snapped.signal, snapped.idler],
        settings: opts.settings,
        transient,
        window: snapped.window_duration(),
        samples_per_period: opts.samples_per_period,
        start: req.warm,
    };
    let r = measure_tones(&m)?;
    let vin = r.v_in[0].norm();
    if vin == 0.0 {
        return Err(Error::UndefinedRatio { omega: snapped.signal });
    }
    Ok(GainOutcome {
        cell: GainCellValues {
            gain: (r.v_out[0].norm() / vin).powi(2),
            idler_gain: (r.v_out[1].norm() / vin).powi(2),
            omega_s: snapped.signal,
            omega_i: snapped.idler,
            snap_error: snapped.signal_snap_error,
            peak_junction_current: r.peak_junction_current,
        },
        end: (r.end_time, r.end_state),
    })
}

fn to_cell(res: Result<GainOutcome>, omega_p: f64, omega_s: f64) -> SweepCell {
    match res {
        Ok(o) => SweepCell {
            gain_db: to_db(o.cell.gain),
            idler_gain_db: to_db(o.cell.idler_gain),
            status: CellStatus::Ok,
            omega_p,
            omega_s: o.cell.omega_s,
            signal_snap_error: o.cell.snap_error,
            peak_junction_current: o.cell.peak_junction_current,
        },
        Err(e) => SweepCell::failed(e.to_string(), omega_p, omega_s),
    }
}

fn base_metadata(cal: &Calibration, opts: &RunOptions) -> serde_json::Value {
    json!({
        "solver": opts.settings,
        "run_options": opts,
        "branch": format!("{:?}", opts.branch),
        "fit": cal.characterization.fit,
        "quantum": {
            "omega0": cal.quantum.omega0,
            "kerr": cal.quantum.kerr,
            "gamma1": cal.quantum.gamma1,
            "gamma2": cal.quantum.gamma2,
            "p_crit": cal.critical.p_crit,
            "delta_crit": cal.critical.delta_crit,
        },
        "degenerate_measurement": format!(
            "signal placed {} linewidths above the pump; degenerate gain is phase-averaged",
            opts.degenerate_offset
        ),
    })
}

fn ascending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    idx
}

/// Gain versus pump power fraction (axis 1) and normalized pump detuning
/// (ωp − ω0)/γ (axis 2). Each detuning column is ramped up in power, reusing
/// the previous cell's final state.
pub fn pump_detuning_sweep(cal: &Calibration, pump_power_fracs: &[f64], detuning_grid: &[f64], opts: &RunOptions) -> Result<SweepResult> {
    if pump_power_fracs.iter().any(|f| !(*f >= 0.0 && *f < 1.0)) {
        return Err(Error::Domain("pump power fractions must lie in [0, 1)".into()));
    }
    let g = cal.gamma();
    let w0 = cal.omega0();
    let i_sig = cal.signal_current(opts);
    let order = ascending_order(pump_power_fracs);
    let columns: Vec<Vec<SweepCell>> = detuning_grid
        .par_iter()
        .map(|&x| {
            let wp = w0 + x * g;
            let mut warm = None;
            let mut col = vec![None; pump_power_fracs.len()];
            for &i in &order {
                let p = cal.pump_amplitude(pump_power_fracs[i]);
                let res = measure_gain(
                    cal,
                    opts,
                    &GainRequest {
                        omega_p: wp,
                        p_in: p,
                        omega_s: wp,
                        signal_current: i_sig,
                        warm,
                    },
                );
                warm = res.as_ref().ok().map(|o| o.end);
                col[i] = Some(to_cell(res, wp, wp));
            }
            col.into_iter().map(|c| c.unwrap()).collect()
        })
        .collect();
    let mut cells = Vec::with_capacity(pump_power_fracs.len() * detuning_grid.len());
    for i in 0..pump_power_fracs.len() {
        for col in &columns {
            cells.push(col[i].clone());
        }
    }
    let mut meta = base_metadata(cal, opts);
    meta["signal_current"] = json!(i_sig);
    meta["signal_dbm"] = json!(current_to_dbm(&cal.circuit, i_sig));
    Ok(SweepResult {
        axis1: SweepAxis::new(
            "pump_power_frac",
            pump_power_fracs.to_vec(),
            pump_power_fracs.iter().map(|f| cal.pump_amplitude(*f)).collect(),
            "sqrt(photons/s)",
        ),
        axis2: SweepAxis::new(
            "pump_detuning_gamma",
            detuning_grid.to_vec(),
            detuning_grid.iter().map(|x| w0 + x * g).collect(),
            "rad/s",
        ),
        cells,
        metadata: meta,
    })
}

/// Gain versus signal offset (ωs − ωp)/γ with the pump at the quantum-model
/// optimum for each power fraction.
pub fn signal_frequency_sweep(cal: &Calibration, pump_power_fracs: &[f64], signal_grid: &[f64], opts: &RunOptions) -> Result<SweepResult> {
    let g = cal.gamma();
    let i_sig = cal.signal_current(opts);
    let pumps = pump_power_fracs
        .iter()
        .map(|f| optimal_pump_detuning(&cal.quantum, cal.pump_amplitude(*f)).map(|o| o.omega_p))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..pumps.len()).flat_map(|i| (0..signal_grid.len()).map(move |j| (i, j))).collect();
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let wp = pumps[i];
            let ws = wp + signal_grid[j] * g;
            let res = measure_gain(
                cal,
                opts,
                &GainRequest {
                    omega_p: wp,
                    p_in: cal.pump_amplitude(pump_power_fracs[i]),
                    omega_s: ws,
                    signal_current: i_sig,
                    warm: None,
                },
            );
            to_cell(res, wp, ws)
        })
        .collect();
    let mut meta = base_metadata(cal, opts);
    meta["optimal_pump_omega"] = json!(pumps);
    meta["signal_current"] = json!(i_sig);
    Ok(SweepResult {
        axis1: SweepAxis::new(
            "pump_power_frac",
            pump_power_fracs.to_vec(),
            pump_power_fracs.iter().map(|f| cal.pump_amplitude(*f)).collect(),
            "sqrt(photons/s)",
        ),
        axis2: SweepAxis::new("signal_detuning_gamma", signal_grid.to_vec(), signal_grid.iter().map(|x| x * g).collect(), "rad/s"),
        cells,
        metadata: meta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionResult {
    /// Axis 1: signal power (dBm), axis 2: signal offset from the pump (γ).
    pub sweep: SweepResult,
    /// On-peak gain per power row.
    pub peak_gain_db: Vec<f64>,
    pub small_signal_gain_db: f64,
    pub p_1db_dbm: Option<f64>,
    /// Down-ramp on-peak gains when hysteresis was requested.
    pub down_ramp_gain_db: Option<Vec<f64>>,
    pub hysteresis_detected: bool,
}

/// Linear interpolation in (dBm, dB) of the first 1 dB drop below the
/// first-row gain.
pub fn one_db_point(powers_dbm: &[f64], peak_gain_db: &[f64]) -> Option<f64> {
    let g0 = *peak_gain_db.first()?;
    let target = g0 - 1.0;
    for k in 1..peak_gain_db.len() {
        let (ga, gb) = (peak_gain_db[k - 1], peak_gain_db[k]);
        if gb <= target && ga > target {
            let f = (ga - target) / (ga - gb);
            return Some(powers_dbm[k - 1] + f * (powers_dbm[k] - powers_dbm[k - 1]));
        }
    }
    None
}

/// Gain map versus signal power with the pump fixed at `pump_power_frac`
/// and `omega_p`, or at the quantum-model optimum detuning when `omega_p`
/// is `None`.
pub fn compression_sweep(
    cal: &Calibration,
    pump_power_frac: f64,
    omega_p: Option<f64>,
    signal_dbm_grid: &[f64],
    signal_detuning_grid: &[f64],
    hysteresis: bool,
    opts: &RunOptions,
) -> Result<CompressionResult> {
    if signal_dbm_grid.windows(2).any(|w| !(w[1] > w[0])) || signal_dbm_grid.is_empty() {
        return Err(Error::Domain("signal power grid must be strictly increasing".into()));
    }
    let g = cal.gamma();
    let p = cal.pump_amplitude(pump_power_frac);
    let wp = match omega_p {
        Some(w) => w,
        None => optimal_pump_detuning(&cal.quantum, p)?.omega_p,
    };
    let n_rows = signal_dbm_grid.len();
    let run_column = |x: f64, order: &mut dyn Iterator<Item = usize>, warm0: Option<(f64, State)>| {
        let ws = wp + x * g;
        let mut warm = warm0;
        let mut col = vec![None; n_rows];
        for i in order {
            let res = measure_gain(
                cal,
                opts,
                &GainRequest {
                    omega_p: wp,
                    p_in: p,
                    omega_s: ws,
                    signal_current: dbm_to_current(&cal.circuit, signal_dbm_grid[i]),
                    warm,
                },
            );
            warm = res.as_ref().ok().map(|o| o.end);
            col[i] = Some(to_cell(res, wp, ws));
        }
        (col.into_iter().map(|c| c.unwrap()).collect::<Vec<_>>(), warm)
    };
    let results: Vec<(Vec<SweepCell>, Option<Vec<SweepCell>>)> = signal_detuning_grid
        .par_iter()
        .map(|&x| {
            let (up, end) = run_column(x, &mut (0..n_rows), None);
            let down = hysteresis.then(|| run_column(x, &mut (0..n_rows).rev(), end).0);
            (up, down)
        })
        .collect();
    let mut cells = Vec::with_capacity(n_rows * signal_detuning_grid.len());
    for i in 0..n_rows {
        for (up, _) in &results {
            cells.push(up[i].clone());
        }
    }
    let peak = |pick: &dyn Fn(usize) -> Vec<f64>| -> Vec<f64> {
        (0..n_rows)
            .map(|i| pick(i).into_iter().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    };
    let peak_gain_db = peak(&|i| results.iter().map(|(u, _)| u[i].gain_db).collect());
    let down_ramp_gain_db = hysteresis.then(|| peak(&|i| results.iter().map(|(_, d)| d.as_ref().unwrap()[i].gain_db).collect()));
    let hysteresis_detected = down_ramp_gain_db
        .as_ref()
        .is_some_and(|d| d.iter().zip(&peak_gain_db).any(|(a, b)| (a - b).abs() > 0.1));
    let mut meta = base_metadata(cal, opts);
    meta["pump_power_frac"] = json!(pump_power_frac);
    meta["optimal_pump_omega"] = json!(wp);
    let sweep = SweepResult {
        axis1: SweepAxis::new(
            "signal_dbm",
            signal_dbm_grid.to_vec(),
            signal_dbm_grid.iter().map(|d| dbm_to_current(&cal.circuit, *d)).collect(),
            "A",
        ),
        axis2: SweepAxis::new(
            "signal_detuning_gamma",
            signal_detuning_grid.to_vec(),
            signal_detuning_grid.iter().map(|x| x * g).collect(),
            "rad/s",
        ),
        cells,
        metadata: meta,
    };
    Ok(CompressionResult {
        small_signal_gain_db: peak_gain_db[0],
        p_1db_dbm: one_db_point(signal_dbm_grid, &peak_gain_db),
        peak_gain_db,
        down_ramp_gain_db,
        hysteresis_detected,
        sweep,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub quantum: SweepResult,
    pub circuit: SweepResult,
    /// Circuit minus quantum gain per cell, dB.
    pub gap_db: Vec<f64>,
    /// Largest |gap| over cells whose quantum gain is at most `gain_ceiling_db`.
    pub max_abs_gain_gap_db: f64,
    pub gain_ceiling_db: f64,
    /// (quantum gain dB, |gap| dB) for every valid cell, sorted by gain.
    pub gap_vs_gain: Vec<(f64, f64)>,
    pub mapped: QuantumParams,
}

/// Runs the circuit pump-detuning sweep and evaluates the linearized quantum
/// gain at the same pump and (snapped) signal frequencies.
pub fn compare_frameworks(cal: &Calibration, pump_power_fracs: &[f64], detuning_grid: &[f64], opts: &RunOptions) -> Result<ComparisonReport> {
    let circuit = pump_detuning_sweep(cal, pump_power_fracs, detuning_grid, opts)?;
    let qp = &cal.quantum;
    let quantum_cells: Vec<SweepCell> = circuit
        .cells
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let i = k / detuning_grid.len();
            let p = cal.pump_amplitude(pump_power_fracs[i]);
            let (ws, _) = signal_plan(cal, opts, c.omega_p, c.omega_p);
            let ws = if c.is_ok() { c.omega_s } else { ws };
            let res = solve_pump_cubic(qp, c.omega_p, p).and_then(|pts| {
                let op = select_branch(&pts, opts.branch).ok_or(Error::UnstableOperatingPoint {
                    photon_number: pts[0].photon_number,
                })?;
                linearized_gain(qp, &op, ws - c.omega_p, c.omega_p)
            });
            match res {
                Ok(lg) => SweepCell {
                    gain_db: to_db(lg.signal_gain()),
                    idler_gain_db: to_db(lg.image_gain()),
                    status: CellStatus::Ok,
                    omega_p: c.omega_p,
                    omega_s: ws,
                    signal_snap_error: 0.0,
                    peak_junction_current: 0.0,
                },
                Err(e) => SweepCell::failed(e.to_string(), c.omega_p, ws),
            }
        })
        .collect();
    let quantum = SweepResult {
        axis1: circuit.axis1.clone(),
        axis2: circuit.axis2.clone(),
        cells: quantum_cells,
        metadata: json!({"engine": "input-output"}),
    };
    let gain_ceiling_db = 20.0;
    let gap_db: Vec<f64> = circuit
        .cells
        .iter()
        .zip(&quantum.cells)
        .map(|(c, q)| c.gain_db - q.gain_db)
        .collect();
    let mut gap_vs_gain: Vec<(f64, f64)> = quantum
        .cells
        .iter()
        .zip(&gap_db)
        .filter(|(q, g)| q.is_ok() && g.is_finite())
        .map(|(q, g)| (q.gain_db, g.abs()))
        .collect();
    gap_vs_gain.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let max_abs_gain_gap_db = gap_vs_gain
        .iter()
        .filter(|(g, _)| *g <= gain_ceiling_db)
        .map(|(_, d)| *d)
        .fold(0.0, f64::max);
    Ok(ComparisonReport {
        quantum,
        circuit,
        gap_db,
        max_abs_gain_gap_db,
        gain_ceiling_db,
        gap_vs_gain,
        mapped: *qp,
    })
}

impl ComparisonReport {
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        use super::sweep::fmt_f64;
        writeln!(
            out,
            "axis1,axis2,quantum_gain_db,circuit_gain_db,quantum_idler_gain_db,circuit_idler_gain_db,gap_db,status"
        )?;
        let n2 = self.circuit.axis2.len();
        for (k, (c, q)) in self.circuit.cells.iter().zip(&self.quantum.cells).enumerate() {
            let status = match (&c.status, &q.status) {
                (CellStatus::Ok, CellStatus::Ok) => "ok".to_string(),
                (CellStatus::Failed(e), _) | (_, CellStatus::Failed(e)) => format!("failed: {}", e.replace([',', '\n'], ";")),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(self.circuit.axis1.values[k / n2]),
                fmt_f64(self.circuit.axis2.values[k % n2]),
                fmt_f64(q.gain_db),
                fmt_f64(c.gain_db),
                fmt_f64(q.idler_gain_db),
                fmt_f64(c.idler_gain_db),
                fmt_f64(self.gap_db[k]),
                status
            )?;
        }
        Ok(())
    }
}
