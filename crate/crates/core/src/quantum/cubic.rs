//! Real roots of cubic polynomials.
//!
//! Closed-form (Cardano / trigonometric) solution with discriminant
//! classification; when the discriminant is too close to zero to classify
//! reliably the roots are isolated between the critical points and refined by
//! safeguarded Newton–bisection instead.

use std::f64::consts::PI;

/// Relative discriminant tolerance below which the closed form is not trusted.
const DISCRIMINANT_TOL: f64 = 1e-12;

/// Real roots in ascending order. `double` holds the index of a root that has
/// multiplicity two (reported once).
#[derive(Debug, Clone, PartialEq)]
pub struct RealRoots {
    pub roots: Vec<f64>,
    pub double: Option<usize>,
}

fn eval(c: &[f64; 4], x: f64) -> f64 {
    ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
}

fn deriv(c: &[f64; 4], x: f64) -> f64 {
    (3.0 * c[3] * x + 2.0 * c[2]) * x + c[1]
}

/// Roots of `c3·x³ + c2·x² + c1·x + c0`. Lower-degree polynomials are handled
/// when leading coefficients vanish.
pub fn real_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> RealRoots {
    if c3 == 0.0 {
        return quadratic_roots(c2, c1, c0);
    }
    let coeffs = [c0, c1, c2, c3];
    let b = c2 / c3;
    let c = c1 / c3;
    let d = c0 / c3;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = 4.0 * p * p * p + 27.0 * q * q;
    let disc_scale = 4.0 * (p * p * p).abs() + 27.0 * q * q;
    let shift = -b / 3.0;

    if disc_scale == 0.0 {
        // p = q = 0: triple root.
        return RealRoots {
            roots: vec![shift],
            double: None,
        };
    }
    if disc.abs() <= DISCRIMINANT_TOL * disc_scale {
        return bracketed_roots(&coeffs);
    }

    let mut roots = if disc > 0.0 {
        let sq = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let a = -q.signum() * (q.abs() / 2.0 + sq).cbrt();
        let t = if a != 0.0 { a - p / (3.0 * a) } else { 0.0 };
        vec![t + shift]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| r * (theta - 2.0 * PI * k as f64 / 3.0).cos() + shift)
            .collect()
    };
    for x in roots.iter_mut() {
        *x = polish(&coeffs, *x);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    RealRoots { roots, double: None }
}

/// Newton polishing that never accepts a step increasing the residual.
fn polish(c: &[f64; 4], mut x: f64) -> f64 {
    let mut fx = eval(c, x);
    for _ in 0..4 {
        let d = deriv(c, x);
        if d == 0.0 || fx == 0.0 {
            break;
        }
        let xn = x - fx / d;
        let fxn = eval(c, xn);
        if fxn.abs() >= fx.abs() {
            break;
        }
        x = xn;
        fx = fxn;
    }
    x
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> RealRoots {
    if a == 0.0 {
        if b == 0.0 {
            return RealRoots {
                roots: vec![],
                double: None,
            };
        }
        return RealRoots {
            roots: vec![-c / b],
            double: None,
        };
    }
    let disc = b * b - 4.0 * a * c;
    let scale = b * b + (4.0 * a * c).abs();
    if disc.abs() <= DISCRIMINANT_TOL * scale {
        return RealRoots {
            roots: vec![-b / (2.0 * a)],
            double: Some(0),
        };
    }
    if disc < 0.0 {
        return RealRoots {
            roots: vec![],
            double: None,
        };
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = vec![q / a, c / q];
    r.sort_by(|x, y| x.partial_cmp(y).unwrap());
    RealRoots {
        roots: r,
        double: None,
    }
}

/// Root isolation between critical points of the cubic, used when the
/// closed form is ill-conditioned (near-double and near-triple roots).
fn bracketed_roots(c: &[f64; 4]) -> RealRoots {
    // Critical points: 3c3 x² + 2c2 x + c1 = 0.
    let crit = quadratic_roots(3.0 * c[3], 2.0 * c[2], c[1]);
    let magnitude = 1.0 + c[..3].iter().map(|v| (v / c[3]).abs()).fold(0.0, f64::max);
    let tol = |x: f64| 1e-10 * (c[3].abs() * x.abs().powi(3) + c[2].abs() * x * x + c[1].abs() * x.abs() + c[0].abs());

    let mut roots = Vec::new();
    let mut double = None;
    let crit_points: Vec<f64> = if crit.double.is_some() { vec![crit.roots[0]] } else { crit.roots.clone() };

    // A critical point with a vanishing value is a repeated root.
    for &xc in &crit_points {
        if eval(c, xc).abs() <= tol(xc) {
            if crit_points.len() == 1 {
                return RealRoots {
                    roots: vec![xc],
                    double: None,
                };
            }
            double = Some(xc);
        }
    }

    let mut edges = vec![-magnitude * 2.0];
    edges.extend(crit_points.iter().copied());
    edges.push(magnitude * 2.0);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (flo, fhi) = (eval(c, lo), eval(c, hi));
        if Some(lo) == double || Some(hi) == double {
            continue;
        }
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo.signum() != fhi.signum() {
            roots.push(safeguarded_newton(c, lo, hi));
        }
    }
    if let Some(xd) = double {
        roots.push(xd);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup();
    let double = double.and_then(|xd| roots.iter().position(|&r| r == xd));
    RealRoots { roots, double }
}

fn safeguarded_newton(c: &[f64; 4], mut lo: f64, mut hi: f64) -> f64 {
    let flo = eval(c, lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = eval(c, x);
        if fx == 0.0 {
            return x;
        }
        if fx.signum() == flo.signum() {
            lo = x;
        } else {
            hi = x;
        }
        let d = deriv(c, x);
        let mut xn = if d != 0.0 { x - fx / d } else { f64::NAN };
        if !(xn > lo && xn < hi) {
            xn = 0.5 * (lo + hi);
        }
        if (xn - x).abs() <= 1e-16 * x.abs().max(1e-300) || hi - lo <= 1e-16 * hi.abs().max(lo.abs()) {
            return xn;
        }
        x = xn;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_distinct_roots() {
        // (x-1)(x-2)(x-3)
        let r = real_roots(1.0, -6.0, 11.0, -6.0);
        assert_eq!(r.roots.len(), 3);
        for (a, b) in r.roots.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn single_real_root() {
        // x³ + x + 1
        let r = real_roots(1.0, 0.0, 1.0, 1.0);
        assert_eq!(r.roots.len(), 1);
        assert!(eval(&[1.0, 1.0, 0.0, 1.0], r.roots[0]).abs() < 1e-15);
    }

    #[test]
    fn double_root_reported_once() {
        // (x-1)²(x+2) = x³ - 3x + 2
        let r = real_roots(1.0, 0.0, -3.0, 2.0);
        assert_eq!(r.roots.len(), 2);
        let d = r.double.expect("double root flagged");
        assert!((r.roots[d] - 1.0).abs() < 1e-7);
        assert!((r.roots[1 - d] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn triple_root() {
        // (x-2)³
        let r = real_roots(1.0, -6.0, 12.0, -8.0);
        assert_eq!(r.roots.len(), 1);
        assert!((r.roots[0] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn degenerate_leading_coefficients() {
        assert_eq!(real_roots(0.0, 0.0, 2.0, -4.0).roots, vec![2.0]);
        let q = real_roots(0.0, 1.0, 0.0, -4.0);
        assert_eq!(q.roots, vec![-2.0, 2.0]);
    }
}
