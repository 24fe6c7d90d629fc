//! Acceptance harness: one [PASS]/[FAIL] line per criterion, non-zero exit
//! status if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jpa_core::experiments::{
    compare_frameworks, compression_sweep, fit_reflection_phase, reflection_phase, Calibration, RunOptions,
};
use jpa_core::model::{derive_junction, derive_linear_resonator, kerr_coefficient, CircuitParams, DriveTone, QuantumParams};
use jpa_core::quantum::{
    critical_power, cubic_residual, gain_spectrum, linearized_gain, optimal_pump_detuning, residual_bound,
    solve_pump_cubic, trace_branch, BranchChoice,
};
use jpa_core::time_domain::{fourier_project, integrate_with, OdeSettings, ProjectionWindow, TraceOptions};
use jpa_core::Error;

mod common;
use common::{companion_roots, fock_anharmonicity, random_params};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference_device() -> CircuitParams {
    CircuitParams::reference_device()
}

/// Characterization of the reference device at a tolerance tight enough for
/// the 0.01 dB reflection check.
fn reference_calibration() -> Calibration {
    let opts = RunOptions {
        settings: OdeSettings::dp45(1e-9, 1e-30),
        ..RunOptions::default()
    };
    Calibration::characterize(&reference_device(), 11, 3.0, &opts).expect("reference characterization")
}

fn criterion_1(cal: &Calibration) -> Verdict {
    let cp = reference_device();
    let g = cal.gamma();
    let p = cal.pump_amplitude(0.5);
    let wp = optimal_pump_detuning(&cal.quantum, p).map_err(|e| e.to_string())?.omega_p;
    let i_p = cal.source_current(p, wp);
    let pump = DriveTone::new(i_p, wp, 0.0).unwrap();
    let signal = DriveTone::new(1e-2 * i_p, wp + 0.25 * g, 0.0).unwrap();
    let period = 2.0 * PI / wp;
    let transient = 20.0 / g;
    let window = 2.0 * PI / (0.25 * g);
    let opts = TraceOptions {
        sample_dt: Some(period / 20.0),
        record_from: transient,
        ..TraceOptions::default()
    };
    let run = |s: OdeSettings| {
        let t0 = Instant::now();
        let tr = integrate_with(&cp, &signal, &pump, &s, transient + window, &opts).map_err(|e| e.to_string())?;
        Ok::<_, String>((tr.v_tl, t0.elapsed()))
    };
    let (a, ta) = run(OdeSettings::dp45(1e-10, 1e-28))?;
    let (b, tb) = run(OdeSettings::bdf2(period / 12000.0))?;
    if a.len() != b.len() {
        return Err(format!("sample counts differ: {} vs {}", a.len(), b.len()));
    }
    let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = a.iter().map(|x| x * x).sum();
    let rms = (diff / norm).sqrt();
    let limit = Duration::from_secs(120);
    check(
        rms <= 5e-3 && ta <= limit && tb <= limit,
        format!(
            "RMS(V_tl) difference {:.3}% over {} samples; DP45 {:.1} s, BDF-2 {:.1} s",
            100.0 * rms,
            a.len(),
            ta.as_secs_f64(),
            tb.as_secs_f64()
        ),
    )
}

fn criterion_2(cal: &Calibration) -> Verdict {
    let s11 = &cal.characterization.s11;
    let worst = s11.iter().map(|p| p.magnitude_db.abs()).fold(0.0, f64::max);
    let g = cal.gamma();
    let span = (s11.last().unwrap().omega - s11[0].omega) / g;
    check(
        s11.len() == 11 && worst <= 0.01 && span >= 5.9,
        format!("max ||S11| dB| = {worst:.2e} dB at {} frequencies over {span:.2} γ", s11.len()),
    )
}

fn criterion_3(cal: &Calibration) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let w0 = 2.0 * PI * rng.gen_range(1e9..10e9);
        let g = w0 / (2.0 * 10f64.powf(rng.gen_range(1.5..4.0)));
        let bg = rng.gen_range(-PI..PI);
        let omegas: Vec<f64> = (0..21).map(|k| w0 + g * (-3.0 + 0.3 * k as f64)).collect();
        let phases: Vec<f64> = omegas.iter().map(|&w| reflection_phase(w, w0, g, bg)).collect();
        let fit = fit_reflection_phase(&omegas, &phases).map_err(|e| e.to_string())?;
        worst = worst.max((fit.omega0_fit / w0 - 1.0).abs()).max((fit.gamma_fit / g - 1.0).abs());
    }
    let analytic = reference_device().loaded_resonance();
    let circuit = (cal.characterization.fit.omega0_fit / analytic - 1.0).abs();
    check(
        worst <= 1e-10 && circuit <= 0.01,
        format!("synthetic recovery error {worst:.1e}; circuit ω0 off analytic by {:.3}%", 100.0 * circuit),
    )
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut compared, mut worst) = (0usize, 0.0f64);
    for _ in 0..2000 {
        let qp = random_params(&mut rng);
        let crit = critical_power(&qp).map_err(|e| e.to_string())?;
        let p_in = crit.p_crit * rng.gen_range(0.0..2.5);
        let g = qp.gamma();
        let omega_p = qp.omega0 + g * rng.gen_range(-8.0..3.0) * (1.0 + qp.kerr.abs() * crit.photon_number / g);
        let ours = solve_pump_cubic(&qp, omega_p, p_in).map_err(|e| e.to_string())?;
        let oracle = companion_roots(&qp, omega_p, p_in);
        if ours.iter().any(|p| p.degenerate) || oracle.windows(2).any(|w| (w[1] - w[0]) < 1e-6 * w[1]) {
            continue;
        }
        if ours.len() != oracle.len() {
            return Err(format!("root count {} vs oracle {}", ours.len(), oracle.len()));
        }
        for (a, b) in ours.iter().zip(&oracle) {
            worst = worst.max((a.photon_number - b).abs() / b.abs().max(1e-300));
        }
        compared += 1;
    }
    let cp = reference_device();
    let qp = jpa_core::model::map_circuit_to_quantum(&cp, None).map_err(|e| e.to_string())?;
    let crit = critical_power(&qp).map_err(|e| e.to_string())?;
    let p = 1.5 * crit.p_crit;
    let g = qp.gamma();
    let branch = trace_branch(&qp, p, [-1.0 * g, 6.0 * g]).map_err(|e| e.to_string())?;
    let bound = residual_bound(&qp, p);
    let residuals_ok = branch
        .points
        .iter()
        .all(|pt| cubic_residual(&qp, pt.delta, p, pt.photon_number).abs() < bound);
    check(
        compared >= 1000 && worst <= 1e-10 && branch.fold_count() == 2 && residuals_ok,
        format!(
            "{compared} draws, worst relative root error {worst:.1e}; {} folds at 1.5 p_crit over {} points, residuals {}",
            branch.fold_count(),
            branch.points.len(),
            if residuals_ok { "within bound" } else { "exceed bound" }
        ),
    )
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut points, mut worst) = (0usize, 0.0f64);
    while points < 1000 {
        let omega0 = 2.0 * PI * rng.gen_range(1e9..10e9);
        let gamma = omega0 / (2.0 * 10f64.powf(rng.gen_range(2.0..4.0)));
        let qp = QuantumParams::new(omega0, -gamma * 10f64.powf(rng.gen_range(-5.0..-1.0)), gamma, 0.0).unwrap();
        let p = rng.gen_range(0.0..1.5) * critical_power(&qp).map_err(|e| e.to_string())?.p_crit;
        let wp = omega0 + gamma * rng.gen_range(-6.0..2.0);
        for op in solve_pump_cubic(&qp, wp, p).map_err(|e| e.to_string())?.iter().filter(|o| o.stable) {
            for k in 0..16 {
                let w = gamma * (-4.0 + 8.0 * k as f64 / 15.0);
                let lg = linearized_gain(&qp, op, w, wp).map_err(|e| e.to_string())?;
                worst = worst.max((lg.signal_gain() - lg.image_gain() - 1.0).abs());
            }
            points += 1;
        }
    }
    check(
        worst <= 1e-6,
        format!("{points} stable operating points × 16 frequencies, max ||G|² − |M|² − 1| = {worst:.1e}"),
    )
}

const POWER_LEVELS: [f64; 5] = [0.5, 0.8, 0.9, 0.95, 0.99];

fn criterion_6(cal: &Calibration) -> Verdict {
    let peaks = POWER_LEVELS
        .iter()
        .map(|f| optimal_pump_detuning(&cal.quantum, f * cal.critical.p_crit).map(|o| o.peak_gain_db))
        .collect::<Result<Vec<_>, Error>>()
        .map_err(|e| e.to_string())?;
    let monotone = peaks.windows(2).all(|w| w[1] > w[0]);
    let last = *peaks.last().unwrap();
    let listed: Vec<String> = peaks.iter().map(|g| format!("{g:.2}")).collect();
    check(
        monotone && last >= 30.0,
        format!("peak gain at p/p_crit {POWER_LEVELS:?}: [{}] dB", listed.join(", ")),
    )
}

fn criterion_7(reference: &Calibration) -> Verdict {
    let t0 = Instant::now();
    let fracs = [0.5, 0.8, 0.9];
    let grid: Vec<f64> = (0..13).map(|k| -2.5 + 0.25 * k as f64).collect();
    let opts = RunOptions::default();
    let strong = CircuitParams::new(1e-6, 7e-12, 120e-15, 50.0).unwrap();
    let strong_cal = Calibration::characterize(&strong, 11, 3.0, &opts).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut ok = true;
    for cal in [reference, &strong_cal] {
        let r = compare_frameworks(cal, &fracs, &grid, &opts).map_err(|e| e.to_string())?;
        let failed = r.circuit.failed_count();
        ok &= r.max_abs_gain_gap_db <= 1.0 && failed == 0;
        parts.push(format!(
            "Q {:.0}: max |ΔG| {:.3} dB ({failed} failed cells)",
            cal.characterization.fit.q, r.max_abs_gain_gap_db
        ));
    }
    let q_ratio = reference.characterization.fit.q / strong_cal.characterization.fit.q;
    let elapsed = t0.elapsed();
    ok &= elapsed <= Duration::from_secs(30 * 60) && (3.5..=4.5).contains(&q_ratio);
    check(
        ok,
        format!("{}; Q ratio {q_ratio:.2}; {:.0} s", parts.join("; "), elapsed.as_secs_f64()),
    )
}

fn criterion_8(cal: &Calibration) -> Verdict {
    let g = cal.gamma();
    let grid: Vec<f64> = (0..121).map(|k| g * (-3.0 + 0.05 * k as f64)).collect();
    let (mut peaks, mut widths, mut asym) = (Vec::new(), Vec::new(), 0.0f64);
    for f in POWER_LEVELS {
        let p = f * cal.critical.p_crit;
        let wp = optimal_pump_detuning(&cal.quantum, p).map_err(|e| e.to_string())?.omega_p;
        let s = gain_spectrum(&cal.quantum, wp, p, &grid, BranchChoice::Low).map_err(|e| e.to_string())?;
        peaks.push(s.peak_gain_db());
        widths.push(s.bandwidth_3db());
        let n = s.entries.len();
        for k in 0..n {
            let (a, b) = (s.entries[k].signal_gain, s.entries[n - 1 - k].signal_gain);
            asym = asym.max((10.0 * (a / b).log10()).abs());
        }
    }
    // An infinite bandwidth (no −3 dB point) ranks above every finite one.
    let narrowing = widths.windows(2).all(|w| w[1] < w[0] || (w[0].is_infinite() && w[1].is_finite()));
    let rising = peaks.windows(2).all(|w| w[1] > w[0]);
    let w_mhz: Vec<String> = widths.iter().map(|w| format!("{:.4}", w / (2.0 * PI * 1e6))).collect();
    check(
        narrowing && rising && asym <= 0.5,
        format!("bandwidths [{}] MHz; max asymmetry {asym:.1e} dB", w_mhz.join(", ")),
    )
}

fn criterion_9(cal: &Calibration) -> Verdict {
    let t0 = Instant::now();
    let powers: Vec<f64> = (0..15).map(|k| -215.0 + 5.0 * k as f64).collect();
    let r = compression_sweep(cal, 0.99, None, &powers, &[0.0], false, &RunOptions::default())
        .map_err(|e| e.to_string())?;
    let g = &r.peak_gain_db;
    // Knee: the last row still within 0.1 dB of the small-signal gain.
    let knee = g.iter().rposition(|v| (v - g[0]).abs() <= 0.1).unwrap_or(0);
    let monotone = g[knee..].windows(2).all(|w| w[1] <= w[0]);
    let summary: Vec<String> = powers.iter().zip(g).map(|(p, v)| format!("{p:.0}:{v:.2}")).collect();
    let detail = format!(
        "small-signal {:.2} dB; p_1dB {}; post-knee {}; {:.0} s; dBm:dB [{}]",
        r.small_signal_gain_db,
        r.p_1db_dbm.map_or("none".to_string(), |p| format!("{p:.2} dBm")),
        if monotone { "monotone" } else { "non-monotone" },
        t0.elapsed().as_secs_f64(),
        summary.join(" ")
    );
    let in_band = r.p_1db_dbm.is_some_and(|p| (-140.0..=-128.0).contains(&p));
    check(monotone && in_band, detail)
}

fn criterion_10() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut checked, mut worst) = (0, 0.0f64);
    while checked < 10 {
        let ic = 10f64.powf(rng.gen_range(-6.5..-5.0));
        let c = 10f64.powf(rng.gen_range(-12.0..-11.0));
        let j = derive_junction(ic).map_err(|e| e.to_string())?;
        let r = derive_linear_resonator(c, j.inductance).map_err(|e| e.to_string())?;
        let k = kerr_coefficient(j.energy, r.flux_zpf).map_err(|e| e.to_string())?;
        if k.abs() / r.omega0 >= 1e-3 {
            continue;
        }
        let oracle = fock_anharmonicity(r.omega0, j.energy, r.flux_zpf, 40);
        worst = worst.max((k / oracle - 1.0).abs());
        checked += 1;
    }
    check(worst <= 0.02, format!("10 devices, worst relative deviation {:.3}%", 100.0 * worst))
}

fn criterion_11() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let base = 2.0 * PI * 1e7;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let tones: Vec<(f64, f64, f64)> = (0..4)
            .map(|k| (base * (3 + 7 * k + rng.gen_range(0..6)) as f64, rng.gen_range(0.1..10.0), rng.gen_range(-PI..PI)))
            .collect();
        let t0 = rng.gen_range(0.0..1e-6);
        let window = ProjectionWindow::new(t0, t0 + 2.0 * PI / base).unwrap();
        let n = 8192;
        let times: Vec<f64> = (0..=n).map(|k| t0 + window.duration() * k as f64 / n as f64).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|t| tones.iter().map(|(w, a, th)| a * (w * t + th).cos()).sum())
            .collect();
        let total: f64 = tones.iter().map(|x| x.1).sum();
        for (w, a, th) in &tones {
            let got = fourier_project(&times, &values, *w, &window).map_err(|e| e.to_string())?;
            worst = worst.max((got - Complex64::from_polar(0.5 * a, *th)).norm() / total);
        }
    }
    let window = ProjectionWindow::new(0.0, 10.25 / 1e9).unwrap();
    let times: Vec<f64> = (0..=400).map(|k| window.duration() * k as f64 / 400.0).collect();
    let values = vec![1.0; times.len()];
    let rejected = matches!(
        fourier_project(&times, &values, 2.0 * PI * 1e9, &window),
        Err(Error::NonCommensurateWindow { .. })
    );
    check(
        worst <= 1e-8 && rejected,
        format!(
            "200 four-tone signals, worst error {worst:.1e}; 10.25-period window {}",
            if rejected { "rejected" } else { "accepted" }
        ),
    )
}

fn run(n: usize, title: &str, f: impl FnOnce() -> Verdict) -> bool {
    let t0 = Instant::now();
    let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = t0.elapsed().as_secs_f64();
    match verdict {
        Ok(d) => {
            println!("[PASS] {n:>2} {title}: {d} [{secs:.1} s]");
            true
        }
        Err(d) => {
            println!("[FAIL] {n:>2} {title}: {d} [{secs:.1} s]");
            false
        }
    }
}

fn main() {
    let cal = catch_unwind(reference_calibration).ok();
    let need = |cal: &Option<Calibration>| cal.clone().ok_or_else(|| "reference characterization failed".to_string());
    let results = [
        run(1, "solver cross-check", || criterion_1(&need(&cal)?)),
        run(2, "lossless linear reflection", || criterion_2(&need(&cal)?)),
        run(3, "resonance fit", || criterion_3(&need(&cal)?)),
        run(4, "cubic and continuation", criterion_4),
        run(5, "amplifier invariant", criterion_5),
        run(6, "gain growth toward p_crit", || criterion_6(&need(&cal)?)),
        run(7, "framework agreement", || criterion_7(&need(&cal)?)),
        run(8, "gain-bandwidth tradeoff", || criterion_8(&need(&cal)?)),
        run(9, "compression", || criterion_9(&need(&cal)?)),
        run(10, "Kerr oracle", criterion_10),
        run(11, "Fourier projection", criterion_11),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
