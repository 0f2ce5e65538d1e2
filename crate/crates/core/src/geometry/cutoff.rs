use super::smooth::smoothed;
use super::{separation_radius, BoundaryFunction, GeneralizedStrip};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

fn g(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth step: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
fn sigma(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        g(x) / (g(x) + g(1.0 - x))
    }
}

/// `(σ, σ', σ'')`.
fn sigma_jet(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 || x >= 1.0 {
        return (sigma(x), 0.0, 0.0);
    }
    let (a, b) = (g(x), g(1.0 - x));
    let (a1, b1) = (a / (x * x), -b / ((1.0 - x) * (1.0 - x)));
    let a2 = a * (1.0 - 2.0 * x) / x.powi(4);
    let b2 = b * (1.0 - 2.0 * (1.0 - x)) / (1.0 - x).powi(4);
    let d = a + b;
    let d1 = a1 + b1;
    let d2 = a2 + b2;
    let s = a / d;
    let s1 = (a1 - s * d1) / d;
    let s2 = (a2 - 2.0 * s1 * d1 - s * d2) / d;
    (s, s1, s2)
}

/// `(sup|σ'|, sup|σ''|)` with a small safety factor.
fn sigma_bounds() -> (f64, f64) {
    static B: OnceLock<(f64, f64)> = OnceLock::new();
    *B.get_or_init(|| {
        let n = 100_000;
        let (mut m1, mut m2) = (0.0f64, 0.0f64);
        for i in 1..n {
            let (_, s1, s2) = sigma_jet(i as f64 / n as f64);
            m1 = m1.max(s1.abs());
            m2 = m2.max(s2.abs());
        }
        (m1 * 1.01, m2 * 1.01)
    })
}

/// Sup-norm bounds of `φ` and its partial derivatives up to order 2.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CutoffBounds {
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

/// `φ ≡ 1` on `closure(T^{aF,aG})`, `supp φ ⊆ T^{bF,bG}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CutoffFunction {
    pub a: f64,
    pub b: f64,
    fm: BoundaryFunction,
    gm: BoundaryFunction,
    c1: f64,
    c2: f64,
    pub bounds: CutoffBounds,
}

/// Jet of `S(u) = σ(1-u)` composed with `u = (±y/B(x) - c1)/(c2-c1)`.
struct Side {
    s: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
}

impl CutoffFunction {
    fn side(&self, bf: &BoundaryFunction, x: f64, y: f64) -> Side {
        let d = self.c2 - self.c1;
        let bv = bf.eval(x);
        let u = (y / bv - self.c1) / d;
        if u <= 0.0 {
            return Side { s: 1.0, sx: 0.0, sy: 0.0, sxx: 0.0, syy: 0.0 };
        }
        if u >= 1.0 {
            return Side { s: 0.0, sx: 0.0, sy: 0.0, sxx: 0.0, syy: 0.0 };
        }
        let b1 = bf.derivative(x, 1).unwrap_or(0.0);
        let b2 = bf.derivative(x, 2).unwrap_or(0.0);
        let uy = 1.0 / (bv * d);
        let ux = -y * b1 / (bv * bv * d);
        let uxx = -y * (b2 / (bv * bv) - 2.0 * b1 * b1 / bv.powi(3)) / d;
        let (s, s1, s2) = sigma_jet(1.0 - u);
        // d/du σ(1-u) = -σ', d²/du² = σ''
        Side { s, sx: -s1 * ux, sy: -s1 * uy, sxx: s2 * ux * ux - s1 * uxx, syy: s2 * uy * uy }
    }

    pub fn eval(&self, z: C64) -> f64 {
        let (x, y) = (z.re, z.im);
        let up = sigma(1.0 - (y / self.fm.eval(x) - self.c1) / (self.c2 - self.c1));
        let lo = sigma(1.0 - (-y / self.gm.eval(x) - self.c1) / (self.c2 - self.c1));
        up * lo
    }

    /// `(∂φ/∂x, ∂φ/∂y)`.
    pub fn gradient(&self, z: C64) -> (f64, f64) {
        let u = self.side(&self.fm, z.re, z.im);
        let l = self.side(&self.gm, z.re, -z.im);
        (u.sx * l.s + u.s * l.sx, u.sy * l.s - u.s * l.sy)
    }

    /// `∂̄φ = (φ_x + iφ_y)/2`.
    pub fn dbar(&self, z: C64) -> C64 {
        let (gx, gy) = self.gradient(z);
        C64::new(0.5 * gx, 0.5 * gy)
    }

    /// `Δφ`.
    pub fn laplacian(&self, z: C64) -> f64 {
        // the two transition bands are disjoint, so one factor is locally constant
        let u = self.side(&self.fm, z.re, z.im);
        let l = self.side(&self.gm, z.re, -z.im);
        (u.sxx + u.syy) * l.s + (l.sxx + l.syy) * u.s
    }

    /// Points with `|Im z| ≤ inner` height are in the plateau; above the
    /// outer height `φ` vanishes.
    pub fn support_heights(&self, x: f64) -> ((f64, f64), (f64, f64)) {
        ((self.c1 * self.fm.eval(x), self.c2 * self.fm.eval(x)), (self.c1 * self.gm.eval(x), self.c2 * self.gm.eval(x)))
    }
}

/// Cutoff between `T^{aF,aG}` and `T^{bF,bG}`; `resolution` is the finest
/// feature the caller can resolve (grid spacing).
pub fn build_cutoff(strip: &GeneralizedStrip, a: f64, b: f64, resolution: f64) -> Result<CutoffFunction> {
    if !(0.0 < a && a < b && b < 1.0) {
        return Err(Error::Domain(format!("cutoff needs 0 < a < b < 1, got a={a}, b={b}")));
    }
    let sep = separation_radius(&strip.scaled(b), a / b)?;
    if sep < resolution {
        return Err(Error::Geometry(format!(
            "separation {sep:.3e} between the {a}- and {b}-strips is below resolution {resolution:.3e}"
        )));
    }
    let c1 = a + 0.25 * (b - a);
    let c2 = a + 0.75 * (b - a);
    let err = |bf: &BoundaryFunction| (b - a) / (8.0 * c2.max(1.0)) * bf.inf();
    let fm = smoothed(&strip.upper, err(&strip.upper))?;
    let gm = smoothed(&strip.lower, err(&strip.lower))?;
    let (s1, s2) = sigma_bounds();
    let d = c2 - c1;
    let side = |bf: &BoundaryFunction| -> Result<CutoffBounds> {
        let m = bf.inf();
        let l1 = bf.derivative_bound(1).unwrap_or(0.0);
        let l2 = bf
            .derivative_bound(2)
            .ok_or_else(|| Error::Geometry("cutoff boundary lacks a second derivative bound".into()))?;
        let uy = 1.0 / (m * d);
        let ux = c2 * l1 / (m * d);
        let uxy = l1 / (m * m * d);
        let uxx = c2 * (l2 / m + 2.0 * l1 * l1 / (m * m)) / d;
        Ok(CutoffBounds {
            dx: s1 * ux,
            dy: s1 * uy,
            dxx: s2 * ux * ux + s1 * uxx,
            dxy: s2 * ux * uy + s1 * uxy,
            dyy: s2 * uy * uy,
        })
    };
    let (bu, bl) = (side(&fm)?, side(&gm)?);
    let bounds = CutoffBounds {
        dx: bu.dx.max(bl.dx),
        dy: bu.dy.max(bl.dy),
        dxx: bu.dxx.max(bl.dxx),
        dxy: bu.dxy.max(bl.dxy),
        dyy: bu.dyy.max(bl.dyy),
    };
    Ok(CutoffFunction { a, b, fm, gm, c1, c2, bounds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strips() -> Vec<GeneralizedStrip> {
        vec![
            GeneralizedStrip::horizontal(1.0),
            GeneralizedStrip::new(BoundaryFunction::sin(2.0, 0.5, 1.0), BoundaryFunction::zigzag(1.0, 0.3, 2.0)),
        ]
    }

    #[test]
    fn plateau_and_support() {
        for s in strips() {
            let phi = build_cutoff(&s, 0.3, 0.9, 1e-3).unwrap();
            for k in 0..2000 {
                let x = -10.0 + 0.01 * k as f64;
                for t in [0.0, 0.5, 1.0] {
                    assert_eq!(phi.eval(C64::new(x, t * 0.3 * s.upper.eval(x))), 1.0);
                    assert_eq!(phi.eval(C64::new(x, -t * 0.3 * s.lower.eval(x))), 1.0);
                }
                for t in [0.9, 1.0, 2.0] {
                    assert_eq!(phi.eval(C64::new(x, t * s.upper.eval(x))), 0.0);
                    assert_eq!(phi.eval(C64::new(x, -t * s.lower.eval(x))), 0.0);
                }
                let v = phi.eval(C64::new(x, 0.6 * s.upper.eval(x)));
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn midline_value_and_derivatives() {
        let s = GeneralizedStrip::horizontal(1.0);
        let phi = build_cutoff(&s, 0.3, 0.9, 1e-3).unwrap();
        let z = C64::new(0.4, 0.6);
        let v = phi.eval(z);
        assert!(v > 0.0 && v < 1.0);
        for s in strips() {
            let phi = build_cutoff(&s, 0.3, 0.9, 1e-3).unwrap();
            let h = 1e-5;
            for k in 0..300 {
                let x = -3.0 + 0.02 * k as f64;
                let z = C64::new(x, 0.55 * s.upper.eval(x) - 0.003 * k as f64);
                let fx = (phi.eval(z + h) - phi.eval(z - h)) / (2.0 * h);
                let fy = (phi.eval(z + C64::new(0.0, h)) - phi.eval(z - C64::new(0.0, h))) / (2.0 * h);
                let (gx, gy) = phi.gradient(z);
                assert!((fx - gx).abs() < 1e-5 && (fy - gy).abs() < 1e-5, "{z}: {fx} {gx} {fy} {gy}");
                assert!(gx.abs() <= phi.bounds.dx && gy.abs() <= phi.bounds.dy);
                let lap = (phi.eval(z + h)
                    + phi.eval(z - h)
                    + phi.eval(z + C64::new(0.0, h))
                    + phi.eval(z - C64::new(0.0, h))
                    - 4.0 * phi.eval(z))
                    / (h * h);
                assert!((lap - phi.laplacian(z)).abs() < 1e-2 * (1.0 + lap.abs()));
            }
        }
    }

    #[test]
    fn dbar_vanishes_off_transition() {
        let s = GeneralizedStrip::horizontal(1.0);
        let phi = build_cutoff(&s, 0.3, 0.9, 1e-3).unwrap();
        for y in [0.0, 0.2, -0.29, 0.95, -1.5] {
            assert_eq!(phi.dbar(C64::new(1.0, y)), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn too_close_strips_refused() {
        let s = GeneralizedStrip::horizontal(1.0);
        assert!(matches!(build_cutoff(&s, 0.5, 0.5001, 0.01), Err(Error::Geometry(_))));
    }
}
