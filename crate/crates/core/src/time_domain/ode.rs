//! Integrators for the scaled circuit system: an embedded Dormand–Prince
//! 4(5) pair with PI step control and dense output, and fixed-step BDF-2
//! with Newton iteration.
//!
//! Both drive a caller-supplied sink on a uniform sample grid so that long
//! runs can be reduced on the fly instead of stored.

use super::circuit::{CircuitSystem, State};
use crate::error::{Error, Result};
use crate::model::REDUCED_FLUX_QUANTUM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Dp45,
    Bdf2,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dp45" => Ok(Method::Dp45),
            "bdf2" => Ok(Method::Bdf2),
            other => Err(format!("unknown method '{other}' (expected dp45 or bdf2)")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Dp45 => "dp45",
            Method::Bdf2 => "bdf2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OdeSettings {
    pub method: Method,
    pub rel_tol: f64,
    /// Absolute tolerance on flux, Wb.
    pub abs_tol: f64,
    /// BDF-2 step, s.
    pub fixed_step: f64,
    pub max_steps: u64,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self {
            method: Method::Dp45,
            rel_tol: 1e-8,
            abs_tol: 1e-26,
            fixed_step: 1e-13,
            max_steps: 2_000_000_000,
        }
    }
}

impl OdeSettings {
    pub fn dp45(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            method: Method::Dp45,
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn bdf2(fixed_step: f64) -> Self {
        Self {
            method: Method::Bdf2,
            fixed_step,
            ..Self::default()
        }
    }

    /// Checks the settings against the fastest tone `omega_max`.
    pub fn validate(&self, omega_max: f64) -> Result<()> {
        match self.method {
            Method::Dp45 => {
                if !(1e-12..=1e-6).contains(&self.rel_tol) {
                    return Err(Error::Domain(format!("rel_tol {} outside [1e-12, 1e-6]", self.rel_tol)));
                }
                if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
                    return Err(Error::Domain("abs_tol must be positive".into()));
                }
            }
            Method::Bdf2 => {
                if !(self.fixed_step > 0.0 && self.fixed_step.is_finite()) {
                    return Err(Error::Domain("fixed_step must be positive".into()));
                }
                if omega_max > 0.0 {
                    let limit = 2.0 * std::f64::consts::PI / omega_max / 50.0;
                    if self.fixed_step > limit {
                        return Err(Error::Domain(format!(
                            "fixed_step {:e} s exceeds 1/50 of the fastest period ({limit:e} s)",
                            self.fixed_step
                        )));
                    }
                }
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Domain("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Uniform output grid t_k = start + k·dt, k < count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGrid {
    pub start: f64,
    pub dt: f64,
    pub count: usize,
}

impl SampleGrid {
    pub fn time(&self, k: usize) -> f64 {
        self.start + self.dt * k as f64
    }

    pub fn end(&self) -> f64 {
        if self.count == 0 {
            self.start
        } else {
            self.time(self.count - 1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    pub final_time: f64,
    pub final_state: State,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
}

/// Integrates from (t0, y0) to `t_end` (extended to cover the grid), calling
/// `sink(k, t_k, y(t_k))` for every grid sample in order.
pub fn run<F>(sys: &CircuitSystem, settings: &OdeSettings, t0: f64, y0: State, t_end: f64, grid: SampleGrid, sink: F) -> Result<RunStats>
where
    F: FnMut(usize, f64, &State),
{
    settings.validate(sys.max_omega())?;
    if grid.count > 0 && grid.start < t0 {
        return Err(Error::Domain("sample grid starts before the initial time".into()));
    }
    let t_end = t_end.max(grid.end());
    match settings.method {
        Method::Dp45 => dp45(sys, settings, t0, y0, t_end, grid, sink),
        Method::Bdf2 => bdf2(sys, settings, t0, y0, t_end, grid, sink),
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy(y: &State, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..3 {
            out[i] += c * k[i];
        }
    }
    out
}

fn dp45<F>(sys: &CircuitSystem, s: &OdeSettings, t0: f64, y0: State, t_end: f64, grid: SampleGrid, mut sink: F) -> Result<RunStats>
where
    F: FnMut(usize, f64, &State),
{
    let atol = s.abs_tol / REDUCED_FLUX_QUANTUM;
    let rtol = s.rel_tol;
    let omega_max = sys.max_omega().max(sys.omega_j);
    let h_max = 2.0 * std::f64::consts::PI / omega_max / 8.0;
    let (beta, safe, facc1, facc2) = (0.04, 0.9, 5.0, 0.1);
    let expo1 = 0.2 - beta * 0.75;
    let mut facold: f64 = 1e-4;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = sys.rhs(t, &y);
    let mut h = (0.5 / sys.a).min(h_max);
    let mut next = 0usize;
    while next < grid.count && grid.time(next) <= t {
        sink(next, grid.time(next), &y);
        next += 1;
    }
    let (mut accepted, mut rejected) = (0u64, 0u64);
    let mut last_rejected = false;

    while t < t_end {
        if accepted + rejected >= s.max_steps {
            return Err(Error::MaxSteps(s.max_steps));
        }
        let mut last = false;
        if t + h >= t_end {
            h = t_end - t;
            last = true;
        }
        let k2 = sys.rhs(t + C2 * h, &axpy(&y, &[(h * A21, &k1)]));
        let k3 = sys.rhs(t + C3 * h, &axpy(&y, &[(h * A31, &k1), (h * A32, &k2)]));
        let k4 = sys.rhs(t + C4 * h, &axpy(&y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]));
        let k5 = sys.rhs(
            t + C5 * h,
            &axpy(&y, &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]),
        );
        let k6 = sys.rhs(
            t + h,
            &axpy(&y, &[(h * A61, &k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)]),
        );
        let y_new = axpy(&y, &[(h * A71, &k1), (h * A73, &k3), (h * A74, &k4), (h * A75, &k5), (h * A76, &k6)]);
        let k7 = sys.rhs(t + h, &y_new);

        let mut err = 0.0;
        for i in 0..3 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = atol + rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sk).powi(2);
        }
        let err = (err / 3.0).sqrt();
        if !err.is_finite() {
            rejected += 1;
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            let mut fac = fac11 / facold.powf(beta);
            fac = (fac / safe).clamp(facc2, facc1);
            let mut h_new = (h / fac).min(h_max);
            if last_rejected {
                h_new = h_new.min(h);
            }
            facold = err.max(1e-4);
            accepted += 1;

            let t_new = if last { t_end } else { t + h };
            if next < grid.count && grid.time(next) <= t_new {
                let ydiff: State = std::array::from_fn(|i| y_new[i] - y[i]);
                let bspl: State = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
                let r4: State = std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]);
                let r5: State =
                    std::array::from_fn(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]));
                while next < grid.count && grid.time(next) <= t_new {
                    let ts = grid.time(next);
                    let th = ((ts - t) / h).clamp(0.0, 1.0);
                    let th1 = 1.0 - th;
                    let ys: State =
                        std::array::from_fn(|i| y[i] + th * (ydiff[i] + th1 * (bspl[i] + th * (r4[i] + th1 * r5[i]))));
                    sink(next, ts, &ys);
                    next += 1;
                }
            }
            y = y_new;
            k1 = k7;
            t = t_new;
            h = h_new;
            last_rejected = false;
        } else {
            h /= (fac11 / safe).min(facc1);
            rejected += 1;
            last_rejected = true;
        }
    }
    Ok(RunStats {
        final_time: t,
        final_state: y,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITERS: usize = 12;
const MAX_HALVINGS: u32 = 3;

/// Solves y − c·h·f(t, y) = r by Newton, starting from `guess`.
///
/// The iteration matrix I − c·h·J has two trivial rows, so the update is
/// eliminated in closed form.
fn newton(sys: &CircuitSystem, t: f64, ch: f64, r: &State, guess: State) -> Option<State> {
    let mut y = guess;
    let src = sys.source_rate(t);
    let chw = ch * sys.omega_j;
    for _ in 0..NEWTON_MAX_ITERS {
        let (f, jf) = sys.rhs_jacobian(src, &y);
        let g: State = std::array::from_fn(|i| y[i] - ch * f[i] - r[i]);
        let (d1, d2) = (ch * jf[2][0], ch * jf[2][1]);
        let pivot = 1.0 + ch * sys.a - d1 * chw * chw - d2 * chw;
        if pivot == 0.0 {
            return None;
        }
        let dy2 = (-g[2] - d1 * (g[0] + chw * g[1]) - d2 * g[1]) / pivot;
        let dy1 = -g[1] + chw * dy2;
        let dy0 = -g[0] + chw * dy1;
        let dy = [dy0, dy1, dy2];
        let mut dn = 0.0f64;
        let mut yn = 0.0f64;
        for i in 0..3 {
            y[i] += dy[i];
            dn = dn.max(dy[i].abs());
            yn = yn.max(y[i].abs());
        }
        if !dn.is_finite() {
            return None;
        }
        if dn <= NEWTON_TOL * yn || dn == 0.0 {
            return Some(y);
        }
    }
    None
}

/// One implicit-trapezoid step of size h.
fn trapezoid(sys: &CircuitSystem, t: f64, y: &State, h: f64) -> Option<State> {
    let f = sys.rhs(t, y);
    let r: State = std::array::from_fn(|i| y[i] + 0.5 * h * f[i]);
    let guess: State = std::array::from_fn(|i| y[i] + h * f[i]);
    newton(sys, t + h, 0.5 * h, &r, guess)
}

/// Trapezoid bridge over [t, t+h] with 2, 4, then 8 substeps.
fn bridge(sys: &CircuitSystem, t: f64, y: &State, h: f64) -> Result<State> {
    for level in 1..=MAX_HALVINGS {
        let n = 1usize << level;
        let hs = h / n as f64;
        let mut yy = *y;
        let mut ok = true;
        for k in 0..n {
            match trapezoid(sys, t + hs * k as f64, &yy, hs) {
                Some(v) => yy = v,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(yy);
        }
    }
    Err(Error::NewtonFailure { t })
}

fn hermite(t0: f64, y0: &State, f0: &State, h: f64, y1: &State, f1: &State, t: f64) -> State {
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    std::array::from_fn(|i| h00 * y0[i] + h * h10 * f0[i] + h01 * y1[i] + h * h11 * f1[i])
}

fn bdf2<F>(sys: &CircuitSystem, s: &OdeSettings, t0: f64, y0: State, t_end: f64, grid: SampleGrid, mut sink: F) -> Result<RunStats>
where
    F: FnMut(usize, f64, &State),
{
    let h = s.fixed_step;
    let n_steps = ((t_end - t0) / h).ceil().max(0.0) as u64;
    if n_steps > s.max_steps {
        return Err(Error::MaxSteps(s.max_steps));
    }
    let mut next = 0usize;
    while next < grid.count && grid.time(next) <= t0 {
        sink(next, grid.time(next), &y0);
        next += 1;
    }
    let mut emit = |t_prev: f64, y_prev: &State, t_new: f64, y_new: &State, next: &mut usize| {
        if *next < grid.count && grid.time(*next) <= t_new {
            let f0 = sys.rhs(t_prev, y_prev);
            let f1 = sys.rhs(t_new, y_new);
            while *next < grid.count && grid.time(*next) <= t_new {
                let ts = grid.time(*next);
                sink(*next, ts, &hermite(t_prev, y_prev, &f0, t_new - t_prev, y_new, &f1, ts));
                *next += 1;
            }
        }
    };
    if n_steps == 0 {
        return Ok(RunStats {
            final_time: t0,
            final_state: y0,
            accepted_steps: 0,
            rejected_steps: 0,
        });
    }

    let mut y_prev = y0;
    let mut y = match trapezoid(sys, t0, &y0, h) {
        Some(v) => v,
        None => bridge(sys, t0, &y0, h)?,
    };
    emit(t0, &y0, t0 + h, &y, &mut next);
    let mut bridged = 0u64;
    let mut y_prev2: State = std::array::from_fn(|i| 2.0 * y0[i] - y[i]);
    for n in 1..n_steps {
        let t = t0 + h * n as f64;
        let t_new = t0 + h * (n + 1) as f64;
        let r: State = std::array::from_fn(|i| (4.0 * y[i] - y_prev[i]) / 3.0);
        let guess: State = std::array::from_fn(|i| 3.0 * y[i] - 3.0 * y_prev[i] + y_prev2[i]);
        let y_new = match newton(sys, t_new, 2.0 * h / 3.0, &r, guess) {
            Some(v) => v,
            None => {
                bridged += 1;
                bridge(sys, t, &y, h)?
            }
        };
        emit(t, &y, t_new, &y_new, &mut next);
        y_prev2 = y_prev;
        y_prev = y;
        y = y_new;
    }
    Ok(RunStats {
        final_time: t0 + h * n_steps as f64,
        final_state: y,
        accepted_steps: n_steps,
        rejected_steps: bridged,
    })
}
