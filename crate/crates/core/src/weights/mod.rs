//! Weight functions `w`, weight function systems `(w_N)` and the growth and
//! integrability conditions used by the solver and the approximation pipeline.

mod conditions;
mod spec;

pub use conditions::{
    alpha_single_witness, check_condition, doubling_witness, eps0_tail_integral, n_pair_integral, numeric_verdict,
    subadditivity_constants, subadditivity_excess, Condition, ConditionReport, TailRecord, Verdict, Witness,
};
pub(crate) use spec::{param, params, read_columns};
pub use spec::{parse_system_spec, parse_weight_spec};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// `t^a`
    Power { a: f64 },
    /// `t^a (log(e+t))^b`
    PowerLog { a: f64, b: f64 },
    /// `exp(t^a (log(e+t))^b)`
    ExpPowerLog { a: f64, b: f64 },
    /// `(log(e+t))^b`
    LogPower { b: f64 },
    /// Piecewise-linear interpolation, extrapolated with the last slope.
    Tabulated { t: Vec<f64>, w: Vec<f64> },
}

/// Where `t^a L^b` decreases (a > 0, b < 0) the formula is replaced by its
/// lower monotone envelope: raw up to `t_star`, constant on `[t_star, r2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct Envelope {
    t_star: f64,
    r2: f64,
    level: f64,
}

/// A non-decreasing unbounded weight `t ↦ value_scale · base(arg_scale · t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    pub family: Family,
    pub arg_scale: f64,
    pub value_scale: f64,
    envelope: Option<Envelope>,
}

fn log_e(t: f64) -> f64 {
    (E + t).ln()
}

/// `t^a` with the convention that the factor vanishes at `t = 0` for every `a ≥ 0`.
fn tpow(t: f64, a: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.powf(a)
    }
}

fn raw_exponent(t: f64, a: f64, b: f64) -> f64 {
    let p = tpow(t, a);
    if p == 0.0 {
        0.0
    } else {
        p * log_e(t).powf(b)
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) and f(hi) of opposite sign
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn envelope_for(a: f64, b: f64) -> Option<Envelope> {
    if !(a > 0.0 && b < 0.0) {
        return None;
    }
    // sign of d/dt (t^a L^b) is the sign of h(t) = (e+t) L(t) - k t, h convex
    let k = -b / a;
    let h = |t: f64| (E + t) * log_e(t) - k * t;
    let tm = (k - 1.0).exp() - E;
    if tm <= 0.0 || h(tm) >= 0.0 {
        return None;
    }
    let r1 = bisect(h, 0.0, tm);
    let mut hi = 2.0 * tm + 1.0;
    while h(hi) < 0.0 {
        hi *= 2.0;
    }
    let r2 = bisect(h, tm, hi);
    let level = raw_exponent(r2, a, b);
    let t_star = bisect(|t| raw_exponent(t, a, b) - level, 0.0, r1);
    Some(Envelope { t_star, r2, level })
}

impl WeightFunction {
    pub fn new(family: Family) -> Result<Self> {
        let bad = |m: &str| Err(Error::Domain(format!("{m}: {family:?}")));
        let envelope = match &family {
            Family::Power { a } => {
                if !(a.is_finite() && *a > 0.0) {
                    return bad("power exponent must be > 0");
                }
                None
            }
            Family::PowerLog { a, b } | Family::ExpPowerLog { a, b } => {
                if !(a.is_finite() && b.is_finite()) || *a < 0.0 || (*a == 0.0 && *b <= 0.0) {
                    return bad("need a > 0, or a = 0 and b > 0");
                }
                envelope_for(*a, *b)
            }
            Family::LogPower { b } => {
                if !(b.is_finite() && *b > 0.0) {
                    return bad("log power must be > 0");
                }
                None
            }
            Family::Tabulated { t, w } => {
                if t.len() < 2 || t.len() != w.len() {
                    return bad("tabulated weight needs >= 2 matching samples");
                }
                if t[0] < 0.0 || t.windows(2).any(|p| p[1] <= p[0]) {
                    return bad("t must be non-negative and strictly increasing");
                }
                if w[0] < 0.0 || w.windows(2).any(|p| p[1] < p[0]) || w.iter().any(|v| !v.is_finite()) {
                    return bad("w must be finite, non-negative and non-decreasing");
                }
                let n = t.len();
                if w[n - 1] <= w[n - 2] {
                    return bad("last slope must be positive (unboundedness)");
                }
                None
            }
        };
        Ok(WeightFunction { family, arg_scale: 1.0, value_scale: 1.0, envelope })
    }

    pub fn power(a: f64) -> Self {
        Self::new(Family::Power { a }).expect("valid power weight")
    }

    pub fn power_log(a: f64, b: f64) -> Self {
        Self::new(Family::PowerLog { a, b }).expect("valid power-log weight")
    }

    pub fn exp_power_log(a: f64, b: f64) -> Self {
        Self::new(Family::ExpPowerLog { a, b }).expect("valid exp-power-log weight")
    }

    pub fn log_power(b: f64) -> Self {
        Self::new(Family::LogPower { b }).expect("valid log-power weight")
    }

    pub fn tabulated(t: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        Self::new(Family::Tabulated { t, w })
    }

    /// `t ↦ self(s·t)`.
    pub fn scale_argument(&self, s: f64) -> Self {
        let mut o = self.clone();
        o.arg_scale *= s;
        o
    }

    /// `t ↦ s·self(t)`.
    pub fn scale_value(&self, s: f64) -> Self {
        let mut o = self.clone();
        o.value_scale *= s;
        o
    }

    /// True when the family formula is used without scaling.
    pub fn is_unscaled(&self) -> bool {
        self.arg_scale == 1.0 && self.value_scale == 1.0
    }

    fn exponent_env(&self, t: f64, a: f64, b: f64) -> f64 {
        match self.envelope {
            Some(e) if t > e.t_star && t < e.r2 => e.level,
            _ => raw_exponent(t, a, b),
        }
    }

    /// Natural log of the unscaled base formula.
    fn ln_base(&self, t: f64) -> f64 {
        match &self.family {
            Family::ExpPowerLog { a, b } => self.exponent_env(t, *a, *b),
            _ => self.base(t).ln(),
        }
    }

    fn base(&self, t: f64) -> f64 {
        match &self.family {
            Family::Power { a } => tpow(t, *a),
            Family::PowerLog { a, b } => self.exponent_env(t, *a, *b),
            Family::ExpPowerLog { a, b } => self.exponent_env(t, *a, *b).exp(),
            Family::LogPower { b } => log_e(t).powf(*b),
            Family::Tabulated { t: ts, w } => {
                let n = ts.len();
                if t <= ts[0] {
                    return w[0];
                }
                if t >= ts[n - 1] {
                    let slope = (w[n - 1] - w[n - 2]) / (ts[n - 1] - ts[n - 2]);
                    return w[n - 1] + slope * (t - ts[n - 1]);
                }
                let k = ts.partition_point(|&s| s <= t) - 1;
                let u = (t - ts[k]) / (ts[k + 1] - ts[k]);
                w[k] + u * (w[k + 1] - w[k])
            }
        }
    }

    /// `w(t)`; may be `+∞` for fast-growing families at large `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.value_scale * self.base(self.arg_scale * t)
    }

    /// Checked evaluation with the domain error for negative or non-finite `t`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Domain(format!("weight argument must be finite and >= 0, got {t}")));
        }
        Ok(self.eval(t))
    }

    /// `ln w(t)`, finite even where `w(t)` overflows.
    pub fn ln_eval(&self, t: f64) -> f64 {
        self.value_scale.ln() + self.ln_base(self.arg_scale * t)
    }

    /// Some `t` with `w(t) > bound` (doubling search).
    pub fn exceed_point(&self, bound: f64) -> f64 {
        let mut t = 1.0;
        while self.eval(t) <= bound {
            t *= 2.0;
            if t > 1e300 {
                break;
            }
        }
        t
    }

    /// `w(2|t|)`-style evaluation in `ln` space clipped for use in exponents:
    /// returns `w(t)` but never `+∞` (saturates at `f64::MAX`).
    pub fn eval_saturating(&self, t: f64) -> f64 {
        let v = self.eval(t);
        if v.is_finite() {
            v
        } else {
            f64::MAX
        }
    }

    /// Exact subadditivity `w(t+s) ≤ w(t) + w(s)` known from the formula.
    pub fn is_exactly_subadditive(&self) -> bool {
        matches!(self.family, Family::Power { a } if a <= 1.0)
    }

    /// Growth exponent `p` such that `w(t) = O(t^{p+δ})` for every `δ > 0`,
    /// when the family is of polynomial type.
    pub fn polynomial_order(&self) -> Option<f64> {
        match &self.family {
            Family::Power { a } => Some(*a),
            Family::PowerLog { a, .. } => Some(*a),
            Family::LogPower { .. } => Some(0.0),
            Family::Tabulated { .. } => Some(1.0),
            Family::ExpPowerLog { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        let base = match &self.family {
            Family::Power { a } => format!("power:a={a}"),
            Family::PowerLog { a, b } => format!("powerlog:a={a},b={b}"),
            Family::ExpPowerLog { a, b } => format!("explog:a={a},b={b}"),
            Family::LogPower { b } => format!("logpow:b={b}"),
            Family::Tabulated { t, .. } => format!("tab:{} samples", t.len()),
        };
        if self.is_unscaled() {
            base
        } else {
            format!("{}*{}({}*t)", self.value_scale, base, self.arg_scale)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SystemKind {
    /// `w_N(t) = w(N t)`
    ScaledArgument(WeightFunction),
    /// `w_N(t) = N w(t)`
    ScaledValue(WeightFunction),
    /// `w_N` = the N-th entry (1-based)
    Explicit(Vec<WeightFunction>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSystem {
    pub kind: SystemKind,
}

impl WeightSystem {
    pub fn scaled_argument(w: WeightFunction) -> Self {
        WeightSystem { kind: SystemKind::ScaledArgument(w) }
    }

    pub fn scaled_value(w: WeightFunction) -> Self {
        WeightSystem { kind: SystemKind::ScaledValue(w) }
    }

    pub fn explicit(ws: Vec<WeightFunction>) -> Result<Self> {
        if ws.is_empty() {
            return Err(Error::Domain("explicit weight system needs at least one member".into()));
        }
        Ok(WeightSystem { kind: SystemKind::Explicit(ws) })
    }

    /// The generating weight for `W_w` / `W̃_w`.
    pub fn generator(&self) -> Option<&WeightFunction> {
        match &self.kind {
            SystemKind::ScaledArgument(w) | SystemKind::ScaledValue(w) => Some(w),
            SystemKind::Explicit(_) => None,
        }
    }

    /// Largest usable index (`None` = unbounded).
    pub fn max_index(&self) -> Option<usize> {
        match &self.kind {
            SystemKind::Explicit(v) => Some(v.len()),
            _ => None,
        }
    }

    /// The member `w_N` (1-based) as a weight function.
    pub fn member(&self, n: usize) -> Result<WeightFunction> {
        if n == 0 {
            return Err(Error::Domain("weight indices start at 1".into()));
        }
        match &self.kind {
            SystemKind::ScaledArgument(w) => Ok(w.scale_argument(n as f64)),
            SystemKind::ScaledValue(w) => Ok(w.scale_value(n as f64)),
            SystemKind::Explicit(v) => v
                .get(n - 1)
                .cloned()
                .ok_or_else(|| Error::Domain(format!("index {n} beyond explicit system of length {}", v.len()))),
        }
    }

    pub fn eval(&self, n: usize, t: f64) -> f64 {
        self.member(n).map(|w| w.eval(t)).unwrap_or(f64::NAN)
    }

    /// Monotone-in-N check on supplied sample points.
    pub fn is_monotone_on(&self, ts: &[f64], n_max: usize) -> bool {
        let n_max = self.max_index().map_or(n_max, |m| m.min(n_max));
        (1..n_max).all(|n| {
            let (a, b) = (self.member(n).unwrap(), self.member(n + 1).unwrap());
            ts.iter().all(|&t| a.eval(t) <= b.eval(t))
        })
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            SystemKind::ScaledArgument(w) => format!("arg({})", w.describe()),
            SystemKind::ScaledValue(w) => format!("val({})", w.describe()),
            SystemKind::Explicit(v) => {
                format!("list({})", v.iter().map(|w| w.describe()).collect::<Vec<_>>().join("|"))
            }
        }
    }
}
