//! Fourier projection of sampled waveforms onto single tones.
//!
//! F(ω) = (1/T)∫ f(t) e^{−iωt} dt over a window spanning an integer number of
//! periods, so that f = A·cos(ωt + θ) projects to (A/2)·e^{iθ}.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance on the cycle count of a commensurate window.
pub const COMMENSURATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ProjectionWindow {
    pub t_start: f64,
    pub t_end: f64,
    /// Periods of the slowest tone discarded before the window.
    pub periods_discarded: f64,
    /// Periods of the slowest tone inside the window.
    pub periods_integrated: f64,
}

impl ProjectionWindow {
    pub fn new(t_start: f64, t_end: f64) -> Result<Self> {
        if !(t_end > t_start && t_start >= 0.0) {
            return Err(Error::Domain(format!("invalid projection window [{t_start:e}, {t_end:e}]")));
        }
        Ok(Self {
            t_start,
            t_end,
            periods_discarded: 0.0,
            periods_integrated: 0.0,
        })
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Fills the period counts relative to the slowest tone `omega_min`.
    pub fn with_periods(mut self, omega_min: f64) -> Self {
        let p = 2.0 * std::f64::consts::PI / omega_min;
        self.periods_discarded = self.t_start / p;
        self.periods_integrated = self.duration() / p;
        self
    }

    /// Errors unless the window holds an integer number (≥ 1) of periods of `omega`.
    pub fn check_commensurate(&self, omega: f64) -> Result<()> {
        let cycles = omega * self.duration() / (2.0 * std::f64::consts::PI);
        let n = cycles.round();
        if n < 1.0 || (cycles - n).abs() > COMMENSURATE_TOL * cycles {
            return Err(Error::NonCommensurateWindow { omega, periods: cycles });
        }
        Ok(())
    }
}

/// Composite Simpson weight (in units of the sample spacing) of sample `k`
/// among `n_intervals + 1` points. An odd interval count closes with the
/// 3/8 rule over the last three intervals; a single interval is a trapezoid.
pub fn simpson_weight(k: usize, n_intervals: usize) -> f64 {
    assert!(k <= n_intervals && n_intervals >= 1);
    if n_intervals == 1 {
        return 0.5;
    }
    let simpson = |k: usize, m: usize| -> f64 {
        if k == 0 || k == m {
            1.0 / 3.0
        } else if k % 2 == 1 {
            4.0 / 3.0
        } else {
            2.0 / 3.0
        }
    };
    if n_intervals % 2 == 0 {
        return simpson(k, n_intervals);
    }
    let m = n_intervals - 3;
    let three_eighths = |j: usize| if j == 0 || j == 3 { 3.0 / 8.0 } else { 9.0 / 8.0 };
    if k < m {
        simpson(k, m)
    } else if k == m {
        if m == 0 {
            three_eighths(0)
        } else {
            simpson(k, m) + three_eighths(0)
        }
    } else {
        three_eighths(k - m)
    }
}

/// Projects uniformly sampled `values` at `times` onto `omega` over `window`.
///
/// The grid must contain both window edges.
pub fn fourier_project(times: &[f64], values: &[f64], omega: f64, window: &ProjectionWindow) -> Result<Complex64> {
    window.check_commensurate(omega)?;
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::Domain("times and values must have equal length >= 2".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let locate = |t: f64| -> Result<usize> {
        let x = (t - times[0]) / dt;
        let i = x.round();
        if i < 0.0 || i as usize >= times.len() || (x - i).abs() > 1e-6 {
            return Err(Error::Domain(format!("window edge {t:e} s is not on the sample grid")));
        }
        Ok(i as usize)
    };
    let (i0, i1) = (locate(window.t_start)?, locate(window.t_end)?);
    let n = i1 - i0;
    if n < 2 {
        return Err(Error::Domain("window holds fewer than three samples".into()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..=n {
        let t = times[i0 + k];
        let (s, c) = (omega * t).sin_cos();
        acc += simpson_weight(k, n) * values[i0 + k] * Complex64::new(c, -s);
    }
    Ok(acc * dt / window.duration())
}

/// Streaming projection of several series onto several tones.
///
/// Samples arrive in order k = 0..=n_intervals on the grid
/// t_k = t_start + k·dt; only the running sums are kept.
#[derive(Debug, Clone)]
pub struct ProjectionAccumulator {
    t_start: f64,
    dt: f64,
    n_intervals: usize,
    omegas: Vec<f64>,
    n_series: usize,
    sums: Vec<Complex64>,
}

impl ProjectionAccumulator {
    pub fn new(window: &ProjectionWindow, n_intervals: usize, omegas: &[f64], n_series: usize) -> Result<Self> {
        for &w in omegas {
            window.check_commensurate(w)?;
        }
        if n_intervals < 2 {
            return Err(Error::Domain("projection needs at least two intervals".into()));
        }
        Ok(Self {
            t_start: window.t_start,
            dt: window.duration() / n_intervals as f64,
            n_intervals,
            omegas: omegas.to_vec(),
            n_series,
            sums: vec![Complex64::new(0.0, 0.0); omegas.len() * n_series],
        })
    }

    pub fn sample_time(&self, k: usize) -> f64 {
        self.t_start + self.dt * k as f64
    }

    pub fn add(&mut self, k: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.n_series);
        let t = self.sample_time(k);
        let w = simpson_weight(k, self.n_intervals);
        for (j, &om) in self.omegas.iter().enumerate() {
            let (s, c) = (om * t).sin_cos();
            let e = Complex64::new(c, -s) * w;
            for (i, v) in values.iter().enumerate() {
                self.sums[i * self.omegas.len() + j] += e * *v;
            }
        }
    }

    /// Projection of series `series` onto tone index `tone`.
    pub fn result(&self, series: usize, tone: usize) -> Complex64 {
        self.sums[series * self.omegas.len() + tone] * self.dt / (self.dt * self.n_intervals as f64)
    }
}

/// Reflection coefficient at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct S11Point {
    pub omega: f64,
    #[serde(skip)]
    pub value: Complex64,
    pub magnitude_db: f64,
    pub phase: f64,
}

impl S11Point {
    /// V_out(ω)/V_in(ω).
    pub fn from_projections(omega: f64, v_out: Complex64, v_in: Complex64) -> Result<Self> {
        if v_in.norm() == 0.0 || !v_in.norm().is_finite() {
            return Err(Error::UndefinedRatio { omega });
        }
        let value = v_out / v_in;
        Ok(Self {
            omega,
            value,
            magnitude_db: 20.0 * value.norm().log10(),
            phase: crate::model::fold_phase(value.arg()),
        })
    }
}
