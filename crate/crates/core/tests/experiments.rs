//! Experiment workflows on low-Q devices: characterization, cross-engine
//! agreement and sweep shapes.

use std::sync::OnceLock;

use jpa_core::experiments::{
    compare_frameworks, compression_sweep, fit_reflection_phase, reflection_phase, signal_frequency_sweep, Calibration,
    ComparisonReport, RunOptions,
};
use jpa_core::model::CircuitParams;
use jpa_core::quantum::{gain_spectrum, optimal_pump_detuning, to_db, BranchChoice};

fn device(c_co: f64) -> CircuitParams {
    CircuitParams::new(1e-6, 7e-12, c_co, 50.0).unwrap()
}

fn calibrated(c_co: f64) -> Calibration {
    Calibration::characterize(&device(c_co), 11, 3.0, &RunOptions::default()).unwrap()
}

fn cal_120() -> &'static Calibration {
    static CAL: OnceLock<Calibration> = OnceLock::new();
    CAL.get_or_init(|| calibrated(120e-15))
}

fn cal_240() -> &'static Calibration {
    static CAL: OnceLock<Calibration> = OnceLock::new();
    CAL.get_or_init(|| calibrated(240e-15))
}

const FRACS: [f64; 3] = [0.1, 0.5, 0.8];

fn detuning_grid() -> Vec<f64> {
    (0..13).map(|k| -2.5 + 0.25 * k as f64).collect()
}

fn comparison() -> &'static ComparisonReport {
    static REPORT: OnceLock<ComparisonReport> = OnceLock::new();
    REPORT.get_or_init(|| compare_frameworks(cal_120(), &FRACS, &detuning_grid(), &RunOptions::default()).unwrap())
}

/// Vertex of the parabola through the maximum of `y` and its neighbours.
fn interpolated_argmax(x: &[f64], y: &[f64]) -> f64 {
    let k = (0..y.len()).max_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap()).unwrap();
    if k == 0 || k == y.len() - 1 {
        return x[k];
    }
    let (a, b, c) = (y[k - 1], y[k], y[k + 1]);
    x[k] + 0.5 * (a - c) / (a - 2.0 * b + c) * (x[k + 1] - x[k])
}

#[test]
fn phase_fit_is_idempotent() {
    let (w0, g, bg) = (2.1e10, 2.0e7, 0.4);
    let omegas: Vec<f64> = (0..21).map(|k| w0 + g * (-3.0 + 0.3 * k as f64)).collect();
    let phases: Vec<f64> = omegas.iter().map(|&w| reflection_phase(w, w0, g, bg)).collect();
    let first = fit_reflection_phase(&omegas, &phases).unwrap();
    let refit_phases: Vec<f64> = omegas.iter().map(|&w| first.phase_at(w)).collect();
    let second = fit_reflection_phase(&omegas, &refit_phases).unwrap();
    assert!((second.omega0_fit / first.omega0_fit - 1.0).abs() < 1e-12);
    assert!((second.gamma_fit / first.gamma_fit - 1.0).abs() < 1e-10);
    assert!((first.omega0_fit / w0 - 1.0).abs() < 1e-12);
}

#[test]
fn weaker_coupling_raises_quality_factor() {
    let (strong, weak) = (cal_240(), cal_120());
    let ratio = weak.characterization.fit.q / strong.characterization.fit.q;
    // Q scales roughly as 1/C_co² for a capacitively coupled resonator.
    assert!((3.0..5.0).contains(&ratio), "{ratio}");
    assert!(weak.omega0() > strong.omega0());
    for cal in [strong, weak] {
        assert!(cal.characterization.peak_junction_current < 0.01 * 1e-6);
    }
}

#[test]
fn engines_agree_below_twenty_db() {
    let r = comparison();
    assert_eq!(r.circuit.failed_count(), 0);
    assert!(r.max_abs_gain_gap_db <= 1.0, "{}", r.max_abs_gain_gap_db);
}

#[test]
fn gain_maxima_coincide_in_pump_detuning() {
    let r = comparison();
    let x = &r.circuit.axis2.values;
    for i in 1..FRACS.len() {
        let circuit: Vec<f64> = r.circuit.row(i).iter().map(|c| c.gain_db).collect();
        let quantum: Vec<f64> = r.quantum.row(i).iter().map(|c| c.gain_db).collect();
        let (a, b) = (interpolated_argmax(x, &circuit), interpolated_argmax(x, &quantum));
        assert!((a - b).abs() < 0.2, "frac {}: circuit {a}, quantum {b}", FRACS[i]);
    }
}

#[test]
fn pump_detuning_map_shape() {
    let r = comparison();
    let weakest = r.circuit.row(0);
    assert!(weakest.iter().all(|c| c.gain_db.abs() < 1.0));
    let peaks: Vec<f64> = (0..FRACS.len()).map(|i| r.circuit.row_peak(i).unwrap().1).collect();
    assert!(peaks.windows(2).all(|w| w[1] > w[0]), "{peaks:?}");
    // Optimum pump sits below the resonance for a negative Kerr shift.
    let (k, _) = r.circuit.row_peak(FRACS.len() - 1).unwrap();
    assert!(r.circuit.axis2.values[k] < 0.0);
}

#[test]
fn gap_grows_with_gain() {
    let r = comparison();
    let pts = &r.gap_vs_gain;
    let half = pts.len() / 2;
    let mean = |s: &[(f64, f64)]| s.iter().map(|p| p.1).sum::<f64>() / s.len() as f64;
    assert!(mean(&pts[half..]) > mean(&pts[..half]), "{pts:?}");
}

#[test]
fn unpumped_engines_coincide() {
    let r = compare_frameworks(cal_120(), &[0.0], &[-1.0, 0.0], &RunOptions::default()).unwrap();
    for (g, q) in r.gap_db.iter().zip(&r.quantum.cells) {
        assert!(g.abs() < 0.05, "{g}");
        assert!(q.gain_db.abs() < 1e-9);
    }
}

#[test]
fn gap_grows_with_linewidth() {
    let gap_at_optimum = |cal: &Calibration| {
        let p = cal.pump_amplitude(0.8);
        let opt = optimal_pump_detuning(&cal.quantum, p).unwrap();
        let x = (opt.omega_p - cal.omega0()) / cal.gamma();
        let r = compare_frameworks(cal, &[0.8], &[x], &RunOptions::default()).unwrap();
        r.gap_db[0].abs()
    };
    let (narrow, wide) = (gap_at_optimum(cal_120()), gap_at_optimum(cal_240()));
    assert!(wide > narrow, "Q {} gap {narrow}, Q {} gap {wide}", cal_120().characterization.fit.q, cal_240().characterization.fit.q);
}

#[test]
fn signal_spectrum_is_symmetric_with_flat_tails() {
    let cal = cal_120();
    let grid = [-8.0, -1.0, -0.5, 0.5, 1.0, 8.0];
    let s = signal_frequency_sweep(cal, &[0.8], &grid, &RunOptions::default()).unwrap();
    let g: Vec<f64> = s.row(0).iter().map(|c| c.gain_db).collect();
    for j in 0..grid.len() / 2 {
        assert!((g[j] - g[grid.len() - 1 - j]).abs() < 0.5, "{g:?}");
    }
    let p = cal.pump_amplitude(0.8);
    let wp = optimal_pump_detuning(&cal.quantum, p).unwrap().omega_p;
    let tail = gain_spectrum(&cal.quantum, wp, p, &[wp + 8.0 * cal.gamma()], BranchChoice::Low).unwrap();
    let tail_db = to_db(tail.entries[0].signal_gain);
    assert!(tail_db < 0.5 && (g[grid.len() - 1] - tail_db).abs() < 0.2, "{g:?} vs {tail_db}");
    assert!(g[2] > g[1] && g[1] > g[0] + 1.5, "{g:?}");
}

#[test]
fn weak_signals_see_constant_gain() {
    let cal = cal_120();
    let r = compression_sweep(cal, 0.8, None, &[-250.0, -240.0, -230.0], &[0.25], false, &RunOptions::default()).unwrap();
    let g = &r.peak_gain_db;
    assert!(g.iter().all(|v| (v - g[0]).abs() < 0.1), "{g:?}");
    assert!(g[0] > 5.0);
    assert!(r.p_1db_dbm.is_none());
}
