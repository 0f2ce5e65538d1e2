use crate::exec::Exec;
use crate::geometry::GeneralizedStrip;
use crate::numerics::{GridFunction, StripGrid};
use crate::quadrature::{integrate_to_infinity, QuadConfig};
use crate::weights::{Family, SystemKind, WeightSystem};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// `f(ξ) = exp(-(ξ² + R²)^{d/2})`, decaying faster than every `e^{-w_N}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NontrivialElement {
    pub d: f64,
    pub r: f64,
    pub strip: GeneralizedStrip,
    pub samples: GridFunction,
    /// `(N, log sup e^{w_N(|Re ξ|)}|f(ξ)|)` over the strip closure.
    pub membership: Vec<(usize, f64)>,
    /// `max |∂̄f|` by a fourth-order stencil at the sample nodes.
    pub holomorphy_residual: f64,
}

impl NontrivialElement {
    pub fn ln_eval(&self, z: C64) -> C64 {
        -(z * z + self.r * self.r).powf(0.5 * self.d)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.ln_eval(z).exp()
    }

    /// `∫ log|f(t)| e^{-π|t|/h} dt`; finite for a non-zero bounded element.
    pub fn log_integral(&self, h: f64) -> f64 {
        let f = |t: f64| self.ln_eval(C64::new(t, 0.0)).re * (-std::f64::consts::PI * t / h).exp();
        let r = integrate_to_infinity(f, 0.0, 1.0, &QuadConfig::default());
        if r.converged {
            2.0 * r.value
        } else {
            f64::NEG_INFINITY
        }
    }
}

fn dbar4(f: &impl Fn(C64) -> C64, z: C64, d: f64) -> C64 {
    let diff = |e: C64| (-f(z + 2.0 * e) + 8.0 * f(z + e) - 8.0 * f(z - e) + f(z - 2.0 * e)) / (12.0 * d);
    0.5 * (diff(C64::new(d, 0.0)) + C64::new(0.0, 1.0) * diff(C64::new(0.0, d)))
}

pub(crate) const MEMBERSHIP_N: usize = 8;

/// A non-zero element of the weighted holomorphic space, for systems
/// generated by a polynomial-type weight of order `< 2`.
pub fn nontrivial_element(ws: &WeightSystem, strip: &GeneralizedStrip) -> Result<NontrivialElement> {
    let unsupported = || Error::UnsupportedFamily(format!("no explicit element for {}", ws.describe()));
    let w = match &ws.kind {
        SystemKind::ScaledArgument(w) | SystemKind::ScaledValue(w) => w,
        SystemKind::Explicit(_) => return Err(unsupported()),
    };
    if !matches!(w.family, Family::Power { .. } | Family::PowerLog { .. } | Family::LogPower { .. }) {
        return Err(unsupported());
    }
    let p = w.polynomial_order().ok_or_else(unsupported)?;
    if p >= 2.0 {
        return Err(unsupported());
    }
    // a positive log power needs a wider gap before the decay shows on the samples
    let log_up = matches!(w.family, Family::PowerLog { b, .. } if b > 0.0);
    let d = match (p < 1.0, log_up) {
        (true, false) => 0.5 * (p + 1.0),
        (true, true) => 0.25 * (p + 3.0),
        (false, _) => 0.5 * (p + 2.0),
    };
    let r = 2.0 * strip.max_sup();
    let grid = StripGrid::with_defaults(strip, 1.0)?;
    let mut el = NontrivialElement {
        d,
        r,
        strip: strip.clone(),
        samples: GridFunction::zeros(&grid, "f"),
        membership: vec![],
        holomorphy_residual: 0.0,
    };
    el.samples = GridFunction::from_fn(&grid, "nontrivial", Exec::default(), |z| el.eval(z))?;
    let f = |z: C64| el.eval(z);
    el.holomorphy_residual = (0..grid.len())
        .step_by(7)
        .map(|k| grid.node(k))
        .filter(|z| strip.contains(*z))
        .map(|z| dbar4(&f, z, 1e-3).norm())
        .fold(0.0, f64::max);
    let mut xs = vec![0.0];
    xs.extend((0..=400).map(|k| 1e-2 * 1e6f64.powf(k as f64 / 400.0)));
    for n in 1..=MEMBERSHIP_N {
        let wn = ws.member(n)?;
        let mut sup = f64::NEG_INFINITY;
        let mut last = 0.0;
        for &x in &xs {
            let m = (0..=16)
                .map(|j| {
                    let y = -strip.lower.eval(x) + (strip.upper.eval(x) + strip.lower.eval(x)) * j as f64 / 16.0;
                    wn.eval(x) + el.ln_eval(C64::new(x, y)).re
                })
                .fold(f64::NEG_INFINITY, f64::max);
            sup = sup.max(m);
            last = m;
        }
        if !(sup.is_finite() && last < sup - 1.0) {
            return Err(Error::CertificateFailure {
                what: format!("membership of the explicit element for N = {n}"),
                x: *xs.last().unwrap(),
                y: 0.0,
                margin: sup - last,
            });
        }
        el.membership.push((n, sup));
    }
    Ok(el)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightFunction;

    #[test]
    fn power_half_on_unit_strip() {
        let ws = WeightSystem::scaled_argument(WeightFunction::power(0.5));
        let el = nontrivial_element(&ws, &GeneralizedStrip::horizontal(1.0)).unwrap();
        assert_eq!(el.d, 0.75);
        assert_eq!(el.membership.len(), 8);
        assert!(el.membership.iter().all(|(_, v)| v.is_finite()));
        assert!(el.holomorphy_residual <= 1e-8, "{}", el.holomorphy_residual);
        let f0 = el.eval(C64::new(0.0, 0.0));
        assert!((f0.re - (-(2f64).powf(0.75)).exp()).abs() < 1e-15 && f0.re > 0.0);
        assert!(el.log_integral(1.0).is_finite());
    }

    #[test]
    fn unsupported_families() {
        let ws = WeightSystem::scaled_argument(WeightFunction::exp_power_log(0.5, 0.0));
        assert!(matches!(
            nontrivial_element(&ws, &GeneralizedStrip::horizontal(1.0)),
            Err(Error::UnsupportedFamily(_))
        ));
    }
}
