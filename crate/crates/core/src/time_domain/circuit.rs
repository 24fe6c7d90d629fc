//! Equation of motion of the capacitively coupled junction resonator.
//!
//! The node flux φ obeys a third-order equation because the coupling capacitor
//! differentiates the line current. Internally the state is carried in phase
//! units, y1 = φ/φ0, y2 = φ̇/(φ0 ω_J), y3 = φ̈/(φ0 ω_J²), with ω_J = 1/√(L_J C),
//! which keeps all three components O(1) for Josephson-scale amplitudes.

use num_complex::Complex64;

use crate::model::{CircuitParams, DriveTone, REDUCED_FLUX_QUANTUM};

/// Scaled state (y1, y2, y3).
pub type State = [f64; 3];

/// Nonlinear element in the resonator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JunctionKind {
    #[default]
    Josephson,
    /// Linear inductor L_J: sin y → y and cos y → 1.
    LinearInductor,
}

/// Junction current Ic·sin(φ/φ0).
pub fn junction_current(circuit: &CircuitParams, phi: f64) -> f64 {
    circuit.critical_current * (phi / REDUCED_FLUX_QUANTUM).sin()
}

/// Right-hand side in SI units for the state (φ, φ̇, φ̈).
///
/// Drives are Norton source currents `I·sin(ωt + θ)`; their time derivative
/// enters the third-order equation.
pub fn eom_rhs(x: [f64; 3], t: f64, circuit: &CircuitParams, signal: &DriveTone, pump: &DriveTone) -> [f64; 3] {
    let CircuitParams {
        critical_current: ic,
        shunt_capacitance: c,
        coupling_capacitance: cco,
        line_impedance: zc,
    } = *circuit;
    let phi0 = REDUCED_FLUX_QUANTUM;
    let source_rate: f64 = [signal, pump]
        .iter()
        .map(|d| d.amplitude * d.omega * (d.omega * t + d.phase).cos())
        .sum();
    let f = -((c + cco) / (cco * zc * c)) * x[2] - (ic / (c * phi0)) * x[1] * (x[0] / phi0).cos() + source_rate / c
        - (ic / (zc * c * cco)) * (x[0] / phi0).sin();
    [x[1], x[2], f]
}

/// Drive sources and circuit coefficients in scaled form.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSystem {
    pub circuit: CircuitParams,
    pub kind: JunctionKind,
    pub tones: Vec<DriveTone>,
    /// ω_J = 1/√(L_J C).
    pub omega_j: f64,
    /// (C + C_co)/(Zc C C_co).
    pub a: f64,
    /// 1/(Zc C_co).
    pub b: f64,
}

impl CircuitSystem {
    pub fn new(circuit: CircuitParams, kind: JunctionKind, tones: Vec<DriveTone>) -> Self {
        let CircuitParams {
            shunt_capacitance: c,
            coupling_capacitance: cco,
            line_impedance: zc,
            ..
        } = circuit;
        let omega_j = 1.0 / (circuit.josephson_inductance() * c).sqrt();
        Self {
            circuit,
            kind,
            tones,
            omega_j,
            a: (c + cco) / (zc * c * cco),
            b: 1.0 / (zc * cco),
        }
    }

    fn nonlinear(&self, y1: f64) -> (f64, f64) {
        match self.kind {
            JunctionKind::Josephson => y1.sin_cos(),
            JunctionKind::LinearInductor => (y1, 1.0),
        }
    }

    /// Source current I_s(t).
    pub fn source_current(&self, t: f64) -> f64 {
        self.tones.iter().map(|d| d.amplitude * (d.omega * t + d.phase).sin()).sum()
    }

    /// dI_s/dt normalized by Ic.
    pub fn source_rate(&self, t: f64) -> f64 {
        let s: f64 = self.tones.iter().map(|d| d.amplitude * d.omega * (d.omega * t + d.phase).cos()).sum();
        s / self.circuit.critical_current
    }

    pub fn rhs(&self, t: f64, y: &State) -> State {
        let (s, c) = self.nonlinear(y[0]);
        let w = self.omega_j;
        [w * y[1], w * y[2], -self.a * y[2] - w * y[1] * c - self.b * s + self.source_rate(t)]
    }

    /// Right-hand side with the source term supplied, plus its Jacobian.
    pub fn rhs_jacobian(&self, source_rate: f64, y: &State) -> (State, [[f64; 3]; 3]) {
        let w = self.omega_j;
        let (s, c) = self.nonlinear(y[0]);
        let d1 = match self.kind {
            JunctionKind::Josephson => w * y[1] * s - self.b * c,
            JunctionKind::LinearInductor => -self.b,
        };
        let f = [w * y[1], w * y[2], -self.a * y[2] - w * y[1] * c - self.b * s + source_rate];
        (f, [[0.0, w, 0.0], [0.0, 0.0, w], [d1, -w * c, -self.a]])
    }

    pub fn jacobian(&self, y: &State) -> [[f64; 3]; 3] {
        let w = self.omega_j;
        let (d1, d2) = match self.kind {
            JunctionKind::Josephson => {
                let (s, c) = y[0].sin_cos();
                (w * y[1] * s - self.b * c, -w * c)
            }
            JunctionKind::LinearInductor => (-self.b, -w),
        };
        [[0.0, w, 0.0], [0.0, 0.0, w], [d1, d2, -self.a]]
    }

    /// Junction current Ic·sin y1 (or Ic·y1 for the linear element).
    pub fn junction_current(&self, y: &State) -> f64 {
        self.circuit.critical_current * self.nonlinear(y[0]).0
    }

    /// Line node voltage V_tl = Zc (I_s − I_co) with I_co = C φ̈ + I_J.
    pub fn line_voltage(&self, t: f64, y: &State) -> f64 {
        let ic = self.circuit.critical_current;
        self.circuit.line_impedance * (self.source_current(t) - ic * y[2] - self.junction_current(y))
    }

    /// Intracavity voltage φ̇.
    pub fn node_voltage(&self, y: &State) -> f64 {
        REDUCED_FLUX_QUANTUM * self.omega_j * y[1]
    }

    /// Incident wave V_in = Zc·I_s/2.
    pub fn incident_voltage(&self, t: f64) -> f64 {
        0.5 * self.circuit.line_impedance * self.source_current(t)
    }

    /// Stored energy including the coupling capacitor; non-increasing when
    /// the sources are off.
    pub fn stored_energy(&self, t: f64, y: &State) -> f64 {
        let CircuitParams {
            critical_current: ic,
            shunt_capacitance: c,
            coupling_capacitance: cco,
            ..
        } = self.circuit;
        let v = self.node_voltage(y);
        let v_co = self.line_voltage(t, y) - v;
        let ej = REDUCED_FLUX_QUANTUM * ic;
        let potential = match self.kind {
            JunctionKind::Josephson => ej * (1.0 - y[0].cos()),
            JunctionKind::LinearInductor => 0.5 * ej * y[0] * y[0],
        };
        0.5 * c * v * v + potential + 0.5 * cco * v_co * v_co
    }

    /// Scaled state for SI (φ, φ̇, φ̈).
    pub fn scale_state(&self, x: [f64; 3]) -> State {
        let p = REDUCED_FLUX_QUANTUM;
        let w = self.omega_j;
        [x[0] / p, x[1] / (p * w), x[2] / (p * w * w)]
    }

    pub fn unscale_state(&self, y: &State) -> [f64; 3] {
        let p = REDUCED_FLUX_QUANTUM;
        let w = self.omega_j;
        [y[0] * p, y[1] * p * w, y[2] * p * w * w]
    }

    /// Scaled state with the coupling capacitor discharged and the node at
    /// rest at phase `y1` (sources off at t).
    pub fn relaxed_state(&self, y1: f64) -> State {
        [y1, 0.0, -self.nonlinear(y1).0]
    }

    /// Fastest tone frequency.
    pub fn max_omega(&self) -> f64 {
        self.tones.iter().map(|d| d.omega).fold(0.0, f64::max)
    }
}

/// Complex poles of the linearized circuit, roots of
/// s³ + a s² + ω_J² s + ω_J² b. Returns the oscillatory pair with positive
/// imaginary part as (−decay rate + i·ω).
pub fn small_signal_pole(circuit: &CircuitParams) -> Complex64 {
    let sys = CircuitSystem::new(*circuit, JunctionKind::LinearInductor, Vec::new());
    let w2 = sys.omega_j * sys.omega_j;
    let (a, b) = (sys.a, sys.b);
    let p = |s: Complex64| ((s + a) * s + w2) * s + w2 * b;
    let dp = |s: Complex64| (3.0 * s + 2.0 * a) * s + w2;
    // Start from the uncoupled resonance and polish by Newton.
    let mut s = Complex64::new(-1e-3 * sys.omega_j, circuit.loaded_resonance());
    for _ in 0..100 {
        let ds = p(s) / dp(s);
        s -= ds;
        if ds.norm() <= 1e-15 * s.norm() {
            break;
        }
    }
    Complex64::new(s.re, s.im.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_is_fixed_point() {
        let cp = CircuitParams::reference_device();
        let d = DriveTone::off(2e10);
        assert_eq!(eom_rhs([0.0; 3], 1.234e-9, &cp, &d, &d), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn junction_relation_uses_reduced_flux_quantum() {
        let cp = CircuitParams::reference_device();
        let i = junction_current(&cp, REDUCED_FLUX_QUANTUM * std::f64::consts::FRAC_PI_2);
        assert_eq!(i, cp.critical_current);
    }

    #[test]
    fn scaled_matches_si() {
        let cp = CircuitParams::reference_device();
        let sig = DriveTone::new(3e-9, 2.07e10, 0.3).unwrap();
        let pump = DriveTone::new(4e-8, 2.08e10, -1.0).unwrap();
        let sys = CircuitSystem::new(cp, JunctionKind::Josephson, vec![sig, pump]);
        let y = [0.4, -0.2, 0.7];
        let t = 3.3e-9;
        let x = sys.unscale_state(&y);
        let f_si = eom_rhs(x, t, &cp, &sig, &pump);
        let f = sys.unscale_state(&sys.rhs(t, &y));
        for i in 0..3 {
            assert!((f[i] - f_si[i]).abs() <= 1e-12 * f_si[i].abs().max(1e-30), "{i}: {} vs {}", f[i], f_si[i]);
        }
    }

    #[test]
    fn jacobian_matches_finite_difference() {
        let cp = CircuitParams::reference_device();
        let sys = CircuitSystem::new(cp, JunctionKind::Josephson, vec![]);
        let y = [0.9, 0.3, -0.5];
        let j = sys.jacobian(&y);
        for k in 0..3 {
            let h = 1e-6;
            let mut yp = y;
            let mut ym = y;
            yp[k] += h;
            ym[k] -= h;
            let (fp, fm) = (sys.rhs(0.0, &yp), sys.rhs(0.0, &ym));
            for i in 0..3 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - j[i][k]).abs() <= 1e-6 * (1.0 + j[i][k].abs()));
            }
        }
    }

    #[test]
    fn pole_near_loaded_resonance() {
        let cp = CircuitParams::reference_device();
        let s = small_signal_pole(&cp);
        assert!((s.im / cp.loaded_resonance() - 1.0).abs() < 1e-3);
        assert!(s.re < 0.0);
        let q = s.im / (-2.0 * s.re);
        assert!(q > 1000.0 && q < 3000.0, "{q}");
    }
}
