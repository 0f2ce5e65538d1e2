//! Holomorphic damping functions `Q` on horizontal strips `T_h` with
//! `|Q(ξ)| ≥ e^{w(|Re ξ|)}`, and the normalized reciprocal `P = Q(0)/Q`.
//!
//! Everything is evaluated through `log Q`; `Q` itself overflows quickly.

mod element;

pub use element::{nontrivial_element, NontrivialElement};

use crate::weights::{check_condition, Condition, Family, WeightFunction, WeightSystem};
use crate::{quadrature::gl_cached, Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

/// Knobs for the builders and the certificate grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DampingConfig {
    /// Largest `|Re ξ|` on the certificate grid.
    pub cert_x_max: f64,
    /// Positive geometric abscissae per side (plus `x = 0`).
    pub cert_columns: usize,
    pub cert_heights: usize,
    /// Range `|Re ξ| ≤ x_cover` on which the Poisson sum is accurate.
    pub x_cover: f64,
    /// Stencil step of the Cauchy–Riemann check.
    pub holo_step: f64,
}

impl Default for DampingConfig {
    fn default() -> Self {
        DampingConfig { cert_x_max: 1e3, cert_columns: 60, cert_heights: 33, x_cover: 1e3, holo_step: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    ClosedForm(String),
    PoissonOuter,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
enum Form {
    /// `b0 + λ(ξ² + r²)^{p/2}`
    Power { b0: f64, lambda: f64, p: f64, r: f64 },
    /// `b0 + m·log(c(ξ² + r²))`
    Log { b0: f64, m: f64, c: f64, r: f64 },
    /// `Σ_k e^{lnc_k}[sech(π(ξ - t_k)/2H) + sech(π(ξ + t_k)/2H)]`
    Poisson { big_h: f64, nodes: Vec<f64>, lnc: Vec<f64>, margin: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificatePoint {
    pub x: f64,
    pub y: f64,
    /// `log|Q(ξ)| - w(|Re ξ|)`
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DampingCertificate {
    pub points: Vec<CertificatePoint>,
    pub min_margin: f64,
    /// `max |∂̄ log Q| / (1 + |log Q|)` by central differences on the interior grid.
    pub holomorphy_residual: f64,
}

/// What is needed to rebuild a damping function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DampingDescriptor {
    pub target: WeightFunction,
    pub h: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DampingFunction {
    pub h: f64,
    pub target: WeightFunction,
    pub provenance: Provenance,
    form: Form,
    ln_q0: C64,
    pub certificate: DampingCertificate,
}

/// `log sech(w)`, stable for large `|Re w|`.
fn ln_sech(w: C64) -> C64 {
    let w = if w.re < 0.0 { -w } else { w };
    C64::new(LN_2, 0.0) - w - (C64::new(1.0, 0.0) + (-2.0 * w).exp()).ln()
}

impl Form {
    fn ln_q(&self, z: C64) -> C64 {
        match self {
            Form::Power { b0, lambda, p, r } => *b0 + *lambda * (z * z + r * r).powf(0.5 * p),
            Form::Log { b0, m, c, r } => *b0 + *m * (*c * (z * z + r * r)).ln(),
            Form::Poisson { big_h, nodes, lnc, .. } => {
                let k = PI / (2.0 * big_h);
                let x = z.re;
                // |sech(u + iv)| ≤ 2√2 e^{-|u|} for |v| ≤ π/4
                let cut =
                    lnc.iter().zip(nodes).map(|(l, t)| l - k * (x.abs() - t).abs()).fold(f64::NEG_INFINITY, f64::max)
                        - 42.0;
                let mut s = C64::new(0.0, 0.0);
                for (l, &t) in lnc.iter().zip(nodes) {
                    if l - k * (x - t).abs() > cut {
                        s += (*l + ln_sech(k * (z - t))).exp();
                    }
                    if l - k * (x + t).abs() > cut {
                        s += (*l + ln_sech(k * (z + t))).exp();
                    }
                }
                s
            }
        }
    }
}

impl DampingFunction {
    /// `log Q(ξ)` on a holomorphic branch.
    pub fn ln_q(&self, z: C64) -> C64 {
        self.form.ln_q(z)
    }

    pub fn ln_abs_q(&self, z: C64) -> f64 {
        self.ln_q(z).re
    }

    pub fn q(&self, z: C64) -> C64 {
        self.ln_q(z).exp()
    }

    /// `log|Q(0)|`
    pub fn ln_abs_q0(&self) -> f64 {
        self.ln_q0.re
    }

    /// `log P(ξ) = log Q(0) - log Q(ξ)`.
    pub fn ln_p(&self, z: C64) -> C64 {
        self.ln_q0 - self.ln_q(z)
    }

    /// `P(ξ) = Q(0)/Q(ξ)`; exactly 1 at 0.
    pub fn p(&self, z: C64) -> C64 {
        if z == C64::new(0.0, 0.0) {
            return C64::new(1.0, 0.0);
        }
        self.ln_p(z).exp()
    }

    pub fn descriptor(&self) -> DampingDescriptor {
        DampingDescriptor { target: self.target.clone(), h: self.h, provenance: self.provenance.clone() }
    }

    /// Rebuild from a descriptor with default settings.
    pub fn from_descriptor(d: &DampingDescriptor) -> Result<Self> {
        let cfg = DampingConfig::default();
        match d.provenance {
            Provenance::ClosedForm(_) => build_damping_closed_form(&d.target, d.h, &cfg),
            Provenance::PoissonOuter => build_damping_poisson(&d.target, d.h, &cfg),
        }
    }

    /// Poisson boundary margin, if any.
    pub fn poisson_margin(&self) -> Option<f64> {
        match self.form {
            Form::Poisson { margin, .. } => Some(margin),
            _ => None,
        }
    }

    /// Abscissae and heights of the certificate grid.
    pub fn certificate_grid(h: f64, cfg: &DampingConfig) -> Vec<(f64, f64)> {
        let n = cfg.cert_columns;
        let mut xs = vec![0.0];
        for k in 0..n {
            let v = 1e-2 * (cfg.cert_x_max / 1e-2).powf(k as f64 / (n - 1) as f64);
            xs.push(v);
            xs.push(-v);
        }
        let ny = cfg.cert_heights;
        let mut out = Vec::with_capacity(xs.len() * ny);
        for &x in &xs {
            for j in 0..ny {
                out.push((x, -h + 2.0 * h * j as f64 / (ny - 1) as f64));
            }
        }
        out
    }

    fn certify(mut self, cfg: &DampingConfig) -> Result<Self> {
        let pts: Vec<CertificatePoint> = Self::certificate_grid(self.h, cfg)
            .into_iter()
            .map(|(x, y)| CertificatePoint { x, y, margin: self.ln_abs_q(C64::new(x, y)) - self.target.eval(x.abs()) })
            .collect();
        let worst = pts.iter().min_by(|a, b| a.margin.total_cmp(&b.margin)).unwrap();
        if !(worst.margin > 0.0) {
            return Err(Error::CertificateFailure {
                what: format!("log|Q| >= w for {}", self.target.describe()),
                x: worst.x,
                y: worst.y,
                margin: worst.margin,
            });
        }
        let min_margin = worst.margin;
        let step = cfg.holo_step;
        let mut res = 0.0f64;
        for i in 0..=20 {
            for j in 1..8 {
                let z = C64::new(-10.0 + i as f64, -self.h + 2.0 * self.h * j as f64 / 8.0);
                let dx = (self.ln_q(z + step) - self.ln_q(z - step)) / (2.0 * step);
                let iy = C64::new(0.0, step);
                let dy = (self.ln_q(z + iy) - self.ln_q(z - iy)) / (2.0 * step);
                let dbar = 0.5 * (dx + C64::new(0.0, 1.0) * dy);
                res = res.max(dbar.norm() / (1.0 + self.ln_q(z).norm()));
            }
        }
        self.certificate = DampingCertificate { points: pts, min_margin, holomorphy_residual: res };
        Ok(self)
    }

    fn assemble(
        target: &WeightFunction,
        h: f64,
        provenance: Provenance,
        form: Form,
        cfg: &DampingConfig,
    ) -> Result<Self> {
        let ln_q0 = form.ln_q(C64::new(0.0, 0.0));
        DampingFunction {
            h,
            target: target.clone(),
            provenance,
            form,
            ln_q0,
            certificate: DampingCertificate { points: vec![], min_margin: f64::NAN, holomorphy_residual: f64::NAN },
        }
        .certify(cfg)
    }
}

const B0: f64 = 1e-6;

/// `sup_t (w(t) - c·t^p)` on a dense geometric sample, `None` if the
/// difference has not turned negative by the end of the sample.
fn power_gap(w: &WeightFunction, c: f64, p: f64) -> Option<f64> {
    let n = 4000;
    let mut sup = w.eval(0.0);
    let mut last = 0.0;
    for k in 0..=n {
        let t = 1e-8 * 1e20f64.powf(k as f64 / n as f64);
        last = w.eval(t) - c * t.powf(p);
        sup = sup.max(last);
    }
    (last < 0.0 && sup.is_finite()).then_some(sup)
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("strip half-height must be positive, got {h}")));
    }
    Ok(())
}

/// Closed-form `Q` for polynomial-type weights.
pub fn build_damping_closed_form(w: &WeightFunction, h: f64, cfg: &DampingConfig) -> Result<DampingFunction> {
    check_h(h)?;
    let r = 2.0 * h;
    let (vs, s) = (w.value_scale, w.arg_scale);
    let unsupported = || Error::UnsupportedFamily(format!("no closed-form damping for {}", w.describe()));
    let (form, name) = match w.family {
        Family::Power { a } if a < 2.0 => {
            let lambda = vs * s.powf(a) / (a * PI / 4.0).cos();
            (Form::Power { b0: B0, lambda, p: a, r }, "power")
        }
        Family::LogPower { b } if b <= 1.0 => {
            // C(x² + 3h²) ≥ e + s·x, so m·log|C(ξ²+R²)| ≥ vs·log(e + s|x|) ≥ w
            let c = (0.5 * s).max((std::f64::consts::E + 0.5 * s) / (3.0 * h * h));
            (Form::Log { b0: B0, m: vs, c, r }, "logpower")
        }
        Family::PowerLog { .. } | Family::LogPower { .. } | Family::Power { .. } => {
            let p = w.polynomial_order().ok_or_else(unsupported)?;
            if p >= 2.0 {
                return Err(unsupported());
            }
            let q = if p < 1.0 { 0.5 * (p + 1.0) } else { 0.5 * (p + 2.0) };
            let c = vs * s.powf(q);
            let gap = power_gap(w, c, q).ok_or_else(unsupported)?;
            let b0 = gap.max(0.0) * 1.01 + B0;
            (Form::Power { b0, lambda: c / (q * PI / 4.0).cos(), p: q, r }, "powerlog")
        }
        _ => return Err(unsupported()),
    };
    DampingFunction::assemble(w, h, Provenance::ClosedForm(name.into()), form, cfg)
}

/// `log(w(t) + m)`
fn ln_shifted(w: &WeightFunction, t: f64, m: f64) -> f64 {
    let l = if t == 0.0 { f64::NEG_INFINITY } else { w.ln_eval(t) };
    if l == f64::NEG_INFINITY || l.is_nan() {
        return (w.eval(t) + m).ln();
    }
    l + (m * (-l).exp()).ln_1p()
}

/// Outer function: `log Q = u + iũ` with `u` the Poisson extension over
/// `T_{2h}` of `t ↦ w(2|t|) + margin`.
pub fn build_damping_poisson(w: &WeightFunction, h: f64, cfg: &DampingConfig) -> Result<DampingFunction> {
    check_h(h)?;
    let big_h = 2.0 * h;
    let decay = PI / (2.0 * big_h);
    // deficit of the extension at |y| ≤ h is at most (8/π) w(|x|) e^{-π|x|/4H}
    let mut ln_sup = f64::NEG_INFINITY;
    for k in 0..=6000 {
        let x = 1e-6 * 1e12f64.powf(k as f64 / 6000.0);
        ln_sup = ln_sup.max(w.ln_eval(x) - 0.5 * decay * x);
    }
    if !ln_sup.is_finite() || w.ln_eval(1e6) - 0.5 * decay * 1e6 > ln_sup {
        return Err(Error::Refused(format!("Poisson extension of {} does not converge at h = {h}", w.describe())));
    }
    let margin = (8.0 / PI) * ln_sup.exp() + B0;
    let phi = |t: f64| ln_shifted(w, 2.0 * t, margin);
    // panels: graded towards 0, then width H/2 up to the cut-off
    let step = 0.5 * big_h;
    let mut t_max = cfg.x_cover + step;
    while phi(t_max) - decay * (t_max - cfg.x_cover) > phi(cfg.x_cover) - 40.0 {
        t_max += 8.0 * step;
        if t_max > 1e7 {
            return Err(Error::Budget { stage: "poisson".into(), detail: "kernel tail does not decay".into() });
        }
    }
    let mut edges: Vec<f64> = (0..=40).rev().map(|k| step * 0.5f64.powi(k)).collect();
    edges.insert(0, 0.0);
    let mut e = step;
    while e < t_max {
        e += step;
        edges.push(e);
    }
    let (gx, gw) = gl_cached(16);
    let mut nodes = Vec::new();
    let mut lnc = Vec::new();
    for p in edges.windows(2) {
        let (m, r) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
        for (x, wt) in gx.iter().zip(gw) {
            let t = m + r * x;
            nodes.push(t);
            lnc.push(phi(t) + (wt * r / (2.0 * big_h)).ln());
        }
    }
    let form = Form::Poisson { big_h, nodes, lnc, margin };
    DampingFunction::assemble(w, h, Provenance::PoissonOuter, form, cfg)
}

/// Damping for `w_k` of the system: closed form when the family allows it,
/// the Poisson construction otherwise. Refuses systems failing (ε)₀.
pub fn damping_for_system(ws: &WeightSystem, k: usize, h: f64, cfg: &DampingConfig) -> Result<DampingFunction> {
    let rep = check_condition(ws, Condition::Eps0, &Default::default());
    if rep.verdict.fails() {
        return Err(Error::Refused(format!("{} fails (ε)₀: {}", ws.describe(), rep.note)));
    }
    let w = ws.member(k)?;
    match build_damping_closed_form(&w, h, cfg) {
        Err(Error::UnsupportedFamily(_)) => build_damping_poisson(&w, h, cfg),
        r => r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_real_line, QuadConfig};

    #[test]
    fn power_closed_form_certificate() {
        let q = build_damping_closed_form(&WeightFunction::power(0.5), 1.0, &Default::default()).unwrap();
        assert!(q.certificate.min_margin > 0.0);
        assert!(q.certificate.holomorphy_residual < 1e-6);
        assert_eq!(q.p(C64::new(0.0, 0.0)), C64::new(1.0, 0.0));
        for k in 0..=1000 {
            let x = -50.0 + 0.1 * k as f64;
            for y in [-1.0, 0.0, 0.7] {
                let z = C64::new(x, y);
                assert!(q.ln_abs_q(z) >= x.abs().sqrt());
                assert!(q.p(z).norm().ln() + x.abs().sqrt() <= q.ln_abs_q0() + 1e-12);
            }
        }
    }

    #[test]
    fn log_power_is_polynomial() {
        let q = build_damping_closed_form(&WeightFunction::log_power(1.0), 1.0, &Default::default()).unwrap();
        assert_eq!(q.provenance, Provenance::ClosedForm("logpower".into()));
        for k in 0..=2000 {
            let x = -1e3 + k as f64;
            assert!(q.q(C64::new(x, 0.9)).norm() >= std::f64::consts::E + x.abs());
        }
    }

    #[test]
    fn power_log_uses_shifted_power() {
        let w = WeightFunction::power_log(0.5, 1.0);
        let q = build_damping_closed_form(&w, 0.5, &Default::default()).unwrap();
        assert!(q.certificate.min_margin > 0.0);
        assert!(build_damping_closed_form(&WeightFunction::exp_power_log(0.5, 0.0), 1.0, &Default::default()).is_err());
    }

    #[test]
    fn poisson_matches_adaptive_extension() {
        let w = WeightFunction::power(0.5);
        let q = build_damping_poisson(&w, 1.0, &Default::default()).unwrap();
        let m = q.poisson_margin().unwrap();
        let big_h = 2.0;
        for z in [C64::new(0.0, 0.0), C64::new(3.0, 0.5), C64::new(-20.0, -1.0)] {
            let f = |t: f64| {
                let k = (PI * (z - t) / (2.0 * big_h)).cosh().inv() / (2.0 * big_h);
                k * ((2.0 * t.abs()).sqrt() + m)
            };
            let cfg = QuadConfig { abs_tol: 1e-12, rel_tol: 1e-12, ..Default::default() };
            let a = integrate_real_line(f, z.re, 1.0, &cfg);
            assert!((a.value - q.ln_q(z)).norm() < 1e-7, "{z}: {} vs {}", a.value, q.ln_q(z));
        }
    }

    #[test]
    fn poisson_constant_and_symmetry() {
        // w ≡ 0 near the origin keeps u ≈ margin
        let q = build_damping_poisson(&WeightFunction::log_power(1.0), 1.0, &Default::default()).unwrap();
        assert!(q.certificate.min_margin > 0.0 && q.certificate.holomorphy_residual < 1e-6);
        for x in [0.5, 3.0, 40.0] {
            for y in [-0.9, 0.0, 0.4] {
                let (a, b) = (q.ln_abs_q(C64::new(x, y)), q.ln_abs_q(C64::new(-x, y)));
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn poisson_handles_subexponential_growth() {
        let w = WeightFunction::exp_power_log(0.5, 0.0);
        let q = build_damping_poisson(&w, 0.5, &Default::default()).unwrap();
        assert!(q.certificate.min_margin > 0.0);
        assert!(build_damping_poisson(&WeightFunction::exp_power_log(1.0, 0.0), 1.0, &Default::default()).is_err());
    }

    #[test]
    fn system_dispatch() {
        let cfg = DampingConfig::default();
        let ws = WeightSystem::scaled_argument(WeightFunction::power(0.5));
        let q = damping_for_system(&ws, 3, 1.0, &cfg).unwrap();
        assert!(matches!(q.provenance, Provenance::ClosedForm(_)));
        assert!((q.target.eval(4.0) - 12f64.sqrt()).abs() < 1e-12);
        let tab = WeightFunction::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.5]).unwrap();
        let ws = WeightSystem::explicit(vec![tab]).unwrap();
        let q = damping_for_system(&ws, 1, 1.0, &cfg).unwrap();
        assert_eq!(q.provenance, Provenance::PoissonOuter);
        let ws = WeightSystem::scaled_argument(WeightFunction::exp_power_log(1.0, 0.0));
        assert!(matches!(damping_for_system(&ws, 1, 1.0, &cfg), Err(Error::Refused(_))));
    }
}
