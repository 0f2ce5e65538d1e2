//! Boundary curves, generalized strips `T^{F,G}`, smooth interpolants,
//! cutoff functions and the contours bounding a truncated strip.

pub mod bump;
mod contour;
mod cutoff;
mod smooth;

pub use contour::{boundary_contours, Contour, ContourPath};
pub use cutoff::{build_cutoff, CutoffBounds, CutoffFunction};
pub use smooth::{separation_radius, smooth_interpolate, SmoothBoundaryPair};

use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Constant {
        h: f64,
    },
    /// `base + amp·sin(freq·t)`
    Sin {
        base: f64,
        amp: f64,
        freq: f64,
    },
    /// `base + amp·tri(t/period)` with the unit triangle wave `tri ∈ [-1, 1]`.
    Zigzag {
        base: f64,
        amp: f64,
        period: f64,
    },
    /// Piecewise-linear samples, constant continuation outside the data range.
    Tabulated {
        t: Vec<f64>,
        f: Vec<f64>,
    },
    /// `inner ∗ β_δ` with the polynomial bump of radius `delta`.
    Mollified {
        inner: Box<BoundaryFunction>,
        delta: f64,
    },
}

/// A positive, bounded, uniformly continuous boundary `t ↦ scale·shape(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFunction {
    pub shape: Shape,
    pub scale: f64,
    inf: f64,
    sup: f64,
    /// Lipschitz constant of `shape` (before `scale`).
    lip: f64,
}

fn tri(u: f64) -> f64 {
    // period 1, tri(0) = 0, tri(1/4) = 1
    let v = u - u.floor();
    if v < 0.25 {
        4.0 * v
    } else if v < 0.75 {
        2.0 - 4.0 * v
    } else {
        4.0 * v - 4.0
    }
}

impl BoundaryFunction {
    pub fn new(shape: Shape) -> Result<Self> {
        let bad = |m: &str| Err(Error::Geometry(m.to_string()));
        let (inf, sup, lip) = match &shape {
            Shape::Constant { h } => {
                if !(*h > 0.0 && h.is_finite()) {
                    return bad("constant boundary needs h > 0");
                }
                (*h, *h, 0.0)
            }
            Shape::Sin { base, amp, freq } => {
                if !(base.is_finite() && amp.is_finite() && freq.is_finite()) || *base <= amp.abs() {
                    return bad("sin boundary needs base > |amp|");
                }
                (base - amp.abs(), base + amp.abs(), amp.abs() * freq.abs())
            }
            Shape::Zigzag { base, amp, period } => {
                if *base <= amp.abs() || *period <= 0.0 {
                    return bad("zigzag boundary needs base > |amp| and period > 0");
                }
                (base - amp.abs(), base + amp.abs(), 4.0 * amp.abs() / period)
            }
            Shape::Tabulated { t, f } => {
                if t.len() < 2 || t.len() != f.len() || t.windows(2).any(|p| p[1] <= p[0]) {
                    return bad("tabulated boundary needs >= 2 samples with increasing t");
                }
                let inf = f.iter().cloned().fold(f64::INFINITY, f64::min);
                let sup = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if !(inf > 0.0) || !sup.is_finite() {
                    return bad("tabulated boundary must be positive and finite");
                }
                let slope = t
                    .windows(2)
                    .zip(f.windows(2))
                    .map(|(tt, ff)| ((ff[1] - ff[0]) / (tt[1] - tt[0])).abs())
                    .fold(0.0, f64::max);
                // data-based modulus of continuity: max slope × safety factor 2
                (inf, sup, 2.0 * slope)
            }
            Shape::Mollified { inner, delta } => {
                if !(*delta > 0.0) {
                    return bad("mollifier radius must be > 0");
                }
                (inner.inf(), inner.sup(), inner.lipschitz())
            }
        };
        Ok(BoundaryFunction { shape, scale: 1.0, inf, sup, lip })
    }

    pub fn constant(h: f64) -> Self {
        Self::new(Shape::Constant { h }).expect("h > 0")
    }

    pub fn sin(base: f64, amp: f64, freq: f64) -> Self {
        Self::new(Shape::Sin { base, amp, freq }).expect("valid sin boundary")
    }

    pub fn zigzag(base: f64, amp: f64, period: f64) -> Self {
        Self::new(Shape::Zigzag { base, amp, period }).expect("valid zigzag boundary")
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut o = self.clone();
        o.scale *= s;
        o
    }

    pub fn inf(&self) -> f64 {
        self.scale * self.inf
    }

    pub fn sup(&self) -> f64 {
        self.scale * self.sup
    }

    pub fn lipschitz(&self) -> f64 {
        self.scale * self.lip
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.shape, Shape::Constant { .. })
    }

    /// `δ(ε)` with `|t - t'| ≤ δ ⇒ |F(t) - F(t')| ≤ ε`.
    pub fn modulus(&self, eps: f64) -> f64 {
        let l = self.lipschitz();
        if l == 0.0 {
            f64::INFINITY
        } else {
            eps / l
        }
    }

    fn shape_value(&self, t: f64) -> f64 {
        match &self.shape {
            Shape::Constant { h } => *h,
            Shape::Sin { base, amp, freq } => base + amp * (freq * t).sin(),
            Shape::Zigzag { base, amp, period } => base + amp * tri(t / period),
            Shape::Tabulated { t: ts, f } => {
                let n = ts.len();
                if t <= ts[0] {
                    f[0]
                } else if t >= ts[n - 1] {
                    f[n - 1]
                } else {
                    let k = ts.partition_point(|&s| s <= t) - 1;
                    let u = (t - ts[k]) / (ts[k + 1] - ts[k]);
                    f[k] + u * (f[k + 1] - f[k])
                }
            }
            Shape::Mollified { inner, delta } => mollify_eval(inner, *delta, t, 0),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.scale * self.shape_value(t)
    }

    /// `F^{(k)}(t)`; `None` where the shape is not `k` times differentiable.
    pub fn derivative(&self, t: f64, k: usize) -> Option<f64> {
        if k == 0 {
            return Some(self.eval(t));
        }
        let v = match &self.shape {
            Shape::Constant { .. } => 0.0,
            Shape::Sin { amp, freq, .. } => {
                let ph = freq * t + k as f64 * std::f64::consts::FRAC_PI_2;
                amp * freq.powi(k as i32) * ph.sin()
            }
            Shape::Mollified { inner, delta } if k <= 4 => mollify_eval(inner, *delta, t, k),
            Shape::Zigzag { amp, period, .. } if k == 1 => {
                let v = t / period - (t / period).floor();
                let s = if (0.25..0.75).contains(&v) { -4.0 } else { 4.0 };
                amp * s / period
            }
            _ => return None,
        };
        Some(self.scale * v)
    }

    /// `sup |F^{(k)}|`, analytic where available.
    pub fn derivative_bound(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return Some(self.sup());
        }
        let v = match &self.shape {
            Shape::Constant { .. } => 0.0,
            Shape::Sin { amp, freq, .. } => amp.abs() * freq.abs().powi(k as i32),
            Shape::Zigzag { .. } | Shape::Tabulated { .. } if k == 1 => self.lip,
            Shape::Mollified { inner, delta } if k <= 4 => {
                inner.lipschitz() / inner.scale * bump::bump_l1(k - 1) / delta.powi(k as i32 - 1)
            }
            _ => return None,
        };
        Some(self.scale * v)
    }

    /// Kinks of a piecewise-linear shape in `[lo, hi]`.
    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        match &self.shape {
            Shape::Zigzag { period, .. } => {
                let mut out = Vec::new();
                let q = period / 4.0;
                let mut k = (lo / q).floor() as i64;
                loop {
                    let x = k as f64 * q;
                    if x > hi {
                        break;
                    }
                    // kinks at odd multiples of period/4
                    if x >= lo && k.rem_euclid(2) == 1 {
                        out.push(x);
                    }
                    k += 1;
                }
                out
            }
            Shape::Tabulated { t, .. } => t.iter().cloned().filter(|&x| x >= lo && x <= hi).collect(),
            _ => Vec::new(),
        }
    }

    /// Convolution with the bump of radius `delta`.
    ///
    /// Constants stay exact; sinusoids map to sinusoids with damped amplitude;
    /// piecewise-linear shapes are integrated exactly between kinks.
    pub fn mollify(&self, delta: f64) -> Result<Self> {
        let shape = match &self.shape {
            Shape::Constant { .. } => return Ok(self.clone()),
            Shape::Sin { base, amp, freq } => {
                Shape::Sin { base: *base, amp: amp * bump::bump_cosine(freq * delta), freq: *freq }
            }
            _ => Shape::Mollified { inner: Box::new(self.clone()), delta },
        };
        let mut out = Self::new(shape)?;
        if !matches!(out.shape, Shape::Mollified { .. }) {
            out.scale = self.scale;
        }
        Ok(out)
    }

    /// Shape from file `t,F`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let (t, f) = crate::weights::read_columns(path)?;
        Self::new(Shape::Tabulated { t, f })
    }

    pub fn describe(&self) -> String {
        let base = match &self.shape {
            Shape::Constant { h } => format!("const:h={h}"),
            Shape::Sin { base, amp, freq } => format!("sin:base={base},amp={amp},freq={freq}"),
            Shape::Zigzag { base, amp, period } => format!("zigzag:base={base},amp={amp},period={period}"),
            Shape::Tabulated { t, .. } => format!("tab:{} samples", t.len()),
            Shape::Mollified { inner, delta } => format!("moll({};delta={delta})", inner.describe()),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{}*{}", self.scale, base)
        }
    }
}

/// `(inner ∗ β_δ)^{(k)}(t) = δ^{-k} ∫ inner(t - δu) β^{(k)}(u) du`, exact between kinks.
fn mollify_eval(inner: &BoundaryFunction, delta: f64, t: f64, k: usize) -> f64 {
    // breakpoints in u where t - δu hits a kink of inner
    let mut us = vec![-1.0, 1.0];
    for x in inner.kinks(t - delta, t + delta) {
        let u = (t - x) / delta;
        if u > -1.0 && u < 1.0 {
            us.push(u);
        }
    }
    us.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut s = 0.0;
    for w in us.windows(2) {
        if w[1] > w[0] {
            // inner linear on the piece, β^{(k)} of degree ≤ 8: 8-point Gauss is exact
            s += crate::quadrature::gauss_fixed(
                |u: f64| inner.eval(t - delta * u) * bump::bump_derivative(u, k),
                w[0],
                w[1],
                8,
            );
        }
    }
    s / delta.powi(k as i32)
}

/// `T^{F,G} = {-G(Re z) < Im z < F(Re z)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedStrip {
    pub upper: BoundaryFunction,
    pub lower: BoundaryFunction,
}

impl GeneralizedStrip {
    pub fn new(upper: BoundaryFunction, lower: BoundaryFunction) -> Self {
        GeneralizedStrip { upper, lower }
    }

    /// The horizontal strip `T_h`.
    pub fn horizontal(h: f64) -> Self {
        Self::new(BoundaryFunction::constant(h), BoundaryFunction::constant(h))
    }

    /// `T^{aF, aG}`.
    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.upper.scaled(a), self.lower.scaled(a))
    }

    pub fn contains(&self, z: C64) -> bool {
        -self.lower.eval(z.re) < z.im && z.im < self.upper.eval(z.re)
    }

    pub fn contains_closure(&self, z: C64) -> bool {
        -self.lower.eval(z.re) <= z.im && z.im <= self.upper.eval(z.re)
    }

    pub fn is_constant(&self) -> bool {
        self.upper.is_constant() && self.lower.is_constant()
    }

    pub fn max_sup(&self) -> f64 {
        self.upper.sup().max(self.lower.sup())
    }

    pub fn min_inf(&self) -> f64 {
        self.upper.inf().min(self.lower.inf())
    }

    /// Lower bound for the distance from `p` to the closure of the strip
    /// (zero inside).
    pub fn distance_to_closure(&self, p: C64) -> f64 {
        let (bf, sign) = if p.im > self.upper.eval(p.re) {
            (&self.upper, 1.0)
        } else if p.im < -self.lower.eval(p.re) {
            (&self.lower, -1.0)
        } else {
            return 0.0;
        };
        let vertical = (p.im * sign - bf.eval(p.re)).abs();
        let lip = bf.lipschitz();
        if lip == 0.0 {
            return vertical;
        }
        // nearest boundary point lies within |t - x| <= vertical
        let n = 256;
        let step = 2.0 * vertical / n as f64;
        let mut best = vertical;
        for k in 0..=n {
            let t = p.re - vertical + k as f64 * step;
            let z = C64::new(t, sign * bf.eval(t));
            best = best.min((p - z).norm());
        }
        (best - 0.5 * step * (1.0 + lip * lip).sqrt()).max(0.0)
    }

    pub fn describe(&self) -> String {
        format!("upper={};lower={}", self.upper.describe(), self.lower.describe())
    }
}

/// Boundary mini-format: `const:h=1.5`, `sin:base=2,amp=0.5,freq=1`,
/// `zigzag:base=1,amp=0.3,period=2`, `tab:@file.csv`.
pub fn parse_boundary_spec(spec: &str) -> Result<BoundaryFunction> {
    use crate::weights::{param, params};
    let spec = spec.trim();
    let (name, body) = spec.split_once(':').unwrap_or((spec, ""));
    if name == "tab" {
        let path = body
            .strip_prefix('@')
            .ok_or_else(|| Error::Parse(format!("tabulated boundary needs `tab:@file`, got `{spec}`")))?;
        return BoundaryFunction::from_csv(Path::new(path));
    }
    let p = params(body)?;
    let shape = match name {
        "const" => Shape::Constant { h: param(&p, "h", spec)? },
        "sin" => {
            Shape::Sin { base: param(&p, "base", spec)?, amp: param(&p, "amp", spec)?, freq: param(&p, "freq", spec)? }
        }
        "zigzag" => Shape::Zigzag {
            base: param(&p, "base", spec)?,
            amp: param(&p, "amp", spec)?,
            period: param(&p, "period", spec)?,
        },
        _ => return Err(Error::Parse(format!("unknown boundary shape `{name}`"))),
    };
    BoundaryFunction::new(shape)
}

/// `const:h=1` (symmetric) or `upper=<spec>;lower=<spec>`.
pub fn parse_strip_spec(spec: &str) -> Result<GeneralizedStrip> {
    let spec = spec.trim();
    if let Some((u, l)) = spec.split_once(';') {
        let u = u.trim().strip_prefix("upper=").unwrap_or(u.trim());
        let l = l.trim().strip_prefix("lower=").unwrap_or(l.trim());
        Ok(GeneralizedStrip::new(parse_boundary_spec(u)?, parse_boundary_spec(l)?))
    } else {
        let b = parse_boundary_spec(spec)?;
        Ok(GeneralizedStrip::new(b.clone(), b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_stay_within_bounds() {
        let shapes = [
            BoundaryFunction::sin(2.0, 0.5, 1.0),
            BoundaryFunction::zigzag(1.0, 0.3, 2.0),
            BoundaryFunction::new(Shape::Tabulated { t: vec![-1.0, 0.0, 2.0], f: vec![1.0, 3.0, 2.0] }).unwrap(),
        ];
        for b in &shapes {
            for k in 0..2000 {
                let t = -50.0 + 0.05 * k as f64;
                let v = b.eval(t);
                assert!(v >= b.inf() - 1e-12 && v <= b.sup() + 1e-12);
                let d = b.modulus(0.01);
                assert!((b.eval(t + d) - v).abs() <= 0.01 + 1e-12);
            }
        }
    }

    #[test]
    fn sin_derivatives() {
        let b = BoundaryFunction::sin(2.0, 0.5, 3.0);
        let h = 1e-5;
        for k in 0..3 {
            let t = 0.7;
            let fd = (b.derivative(t + h, k).unwrap() - b.derivative(t - h, k).unwrap()) / (2.0 * h);
            assert!((fd - b.derivative(t, k + 1).unwrap()).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn mollified_zigzag_is_smooth_and_close() {
        let z = BoundaryFunction::zigzag(1.0, 0.3, 2.0);
        let m = z.mollify(0.1).unwrap();
        let h = 1e-4;
        for k in 0..400 {
            let t = -3.0 + 0.0153 * k as f64;
            assert!((m.eval(t) - z.eval(t)).abs() <= z.lipschitz() * 0.1 + 1e-12);
            let fd = (m.eval(t + h) - m.eval(t - h)) / (2.0 * h);
            assert!((fd - m.derivative(t, 1).unwrap()).abs() < 1e-6);
            assert!(fd.abs() <= z.lipschitz() + 1e-9);
        }
    }

    #[test]
    fn strip_membership_and_distance() {
        let s = GeneralizedStrip::new(BoundaryFunction::sin(2.0, 0.5, 1.0), BoundaryFunction::constant(1.0));
        assert!(s.contains(C64::new(0.0, 1.9)));
        assert!(!s.contains(C64::new(0.0, -1.0)));
        assert!(s.contains_closure(C64::new(0.0, -1.0)));
        let p = C64::new(0.3, 4.0);
        let d = s.distance_to_closure(p);
        // brute force
        let brute = (0..200001)
            .map(|k| {
                let t = -10.0 + 1e-4 * k as f64;
                (p - C64::new(t, s.upper.eval(t))).norm()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(d <= brute && d > brute - 0.05);
    }

    #[test]
    fn parses_specs() {
        let s = parse_strip_spec("const:h=1.5").unwrap();
        assert_eq!(s.upper.eval(3.0), 1.5);
        let s = parse_strip_spec("upper=sin:base=2,amp=0.5,freq=1;lower=const:h=1").unwrap();
        assert_eq!(s.lower.eval(0.0), 1.0);
        assert!(parse_boundary_spec("sin:base=0.5,amp=1,freq=1").is_err());
    }
}
