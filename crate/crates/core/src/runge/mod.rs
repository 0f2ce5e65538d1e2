//! Weighted Runge approximation: a holomorphic `f` on `T^{aF,aG}` is
//! approximated on `closure(T^{F,G})`, in the weight `e^{w_N}`, by
//! `g(ξ) = Σ_j C_j P(z_j - ξ) R_j(ξ)` with every pole outside `T^{bF,bG}`.

mod pole;

pub use pole::{pole_push, PolePush, PushConfig, RationalFunction};

use crate::damping::{damping_for_system, DampingConfig, DampingDescriptor, DampingFunction, NontrivialElement};
use crate::exec::{map_range, map_slice, Exec};
use crate::geometry::{boundary_contours, separation_radius, smooth_interpolate, GeneralizedStrip, SmoothBoundaryPair};
use crate::numerics::contour_integral;
use crate::quadrature::{integrate_to_infinity, QuadConfig};
use crate::solver::select_k;
use crate::weights::{check_condition, subadditivity_constants, Condition, WeightSystem};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const SCHEMA_VERSION: u32 = 1;

/// A holomorphic function to approximate.
pub trait Target: Sync {
    fn eval(&self, z: C64) -> C64;
    fn describe(&self) -> String;
}

impl Target for NontrivialElement {
    fn eval(&self, z: C64) -> C64 {
        NontrivialElement::eval(self, z)
    }

    fn describe(&self) -> String {
        format!("exp(-(z^2+{}^2)^({}/2))", self.r, self.d)
    }
}

/// A closure with a label.
pub struct FnTarget<F>(pub F, pub String);

impl<F: Fn(C64) -> C64 + Sync> Target for FnTarget<F> {
    fn eval(&self, z: C64) -> C64 {
        (self.0)(z)
    }

    fn describe(&self) -> String {
        self.1.clone()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RungeConfig {
    pub exec: Exec,
    pub quad: QuadConfig,
    pub damping: DampingConfig,
    pub push: PushConfig,
    /// `h = h_factor · b · max(sup F, sup G)`.
    pub h_factor: f64,
    /// First truncation `R`; grown by 1.5 until the tail bound fits.
    pub r_start: f64,
    pub r_max: f64,
    /// First Riemann spacing; halved until the validation error fits.
    pub dt_start: f64,
    pub max_nodes: usize,
    pub validation_columns: usize,
    pub validation_far_columns: usize,
    pub validation_heights: usize,
    /// Finite-difference step of the output holomorphy check.
    pub holomorphy_step: f64,
}

impl Default for RungeConfig {
    fn default() -> Self {
        RungeConfig {
            exec: Exec::default(),
            quad: QuadConfig::default(),
            damping: DampingConfig::default(),
            push: PushConfig::default(),
            h_factor: 2.5,
            r_start: 10.0,
            r_max: 1e4,
            dt_start: 0.4,
            max_nodes: 1 << 17,
            validation_columns: 200,
            validation_far_columns: 64,
            validation_heights: 17,
            holomorphy_step: 1e-4,
        }
    }
}

/// The constants of the approximation argument.
///
/// `w_N(t+s) ≤ w_L(t) + w_L(s) + log A`, `∫ e^{w_L - w_M} < ∞`, `K > M`,
/// `w_K(t+s) ≤ w_K̃(t) + w_K̃(s) + log C` and `|Q| ≥ e^{w_K̃}` on `T_h`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RungeIndices {
    pub n: usize,
    pub l: usize,
    pub a_const: f64,
    pub m: usize,
    pub k: usize,
    pub k_tilde: usize,
    pub c_const: f64,
}

#[derive(Clone, Debug)]
pub struct RungeSetup {
    pub strip: GeneralizedStrip,
    pub system: WeightSystem,
    pub indices: RungeIndices,
    pub a: f64,
    pub b: f64,
    /// Contours run along `T^{Φ,Ψ}` with `closure(T^{F,G}) + B(0,r) ⊆ T^{Φ,Ψ} ⊆ T^{cF,cG}`.
    pub c: f64,
    pub h: f64,
    pub pair: SmoothBoundaryPair,
    pub damping: DampingFunction,
    /// Poles are pushed this far beyond `T^{bF,bG}`.
    pub pole_margin: f64,
}

impl RungeSetup {
    /// `m`, `k` default to the smallest admissible indices.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        strip: &GeneralizedStrip,
        ws: &WeightSystem,
        n: usize,
        m: Option<usize>,
        k: Option<usize>,
        a: f64,
        b: f64,
        cfg: &RungeConfig,
    ) -> Result<Self> {
        if !(1.0 < a && a < b && b.is_finite()) {
            return Err(Error::Domain(format!("need 1 < a < b, got a={a} b={b}")));
        }
        for c in [Condition::Alpha, Condition::NSystem, Condition::Eps0] {
            let rep = check_condition(ws, c, &cfg.quad);
            if rep.verdict.fails() {
                return Err(Error::Refused(format!("{} fails {:?}: {}", ws.describe(), c, rep.note)));
            }
        }
        let (l, a_const) = subadditivity_constants(ws, n)?;
        let scfg = crate::solver::SolveConfig { quad: cfg.quad, ..Default::default() };
        let m = match m {
            Some(m) if m > l => m,
            Some(m) => return Err(Error::Domain(format!("need M > L = {l}, got {m}"))),
            None => select_k(ws, l, &scfg)?.0,
        };
        let (v, rec) = crate::weights::n_pair_integral(ws, l, m, &cfg.quad)?;
        if !v.holds() {
            return Err(Error::Refused(format!("∫ e^(w_{l} - w_{m}) not certified finite ({})", rec.value)));
        }
        let k = k.unwrap_or(m + 1);
        if k <= m {
            return Err(Error::Domain(format!("need K > M = {m}, got {k}")));
        }
        let (k_tilde, c_const) = subadditivity_constants(ws, k)?;
        let h = cfg.h_factor * b * strip.max_sup();
        let damping = damping_for_system(ws, k_tilde, h, &cfg.damping)?;
        let c = 0.5 * (1.0 + a);
        let pair = smooth_interpolate(&strip.scaled(c), 1.0 / c, 2)?;
        let pole_margin = separation_radius(&strip.scaled(b), 1.0 / b)?.max(pair.eps);
        Ok(RungeSetup {
            strip: strip.clone(),
            system: ws.clone(),
            indices: RungeIndices { n, l, a_const, m, k, k_tilde, c_const },
            a,
            b,
            c,
            h,
            pair,
            damping,
            pole_margin,
        })
    }

    /// `A|Q(0)|/(2πr)`, the prefactor of the tail and far-field bounds.
    fn prefactor(&self) -> f64 {
        self.indices.a_const * self.damping.ln_abs_q0().exp() / (2.0 * PI * self.pair.eps)
    }

    /// Bound for `sup e^{w_N}|f - I₁(·,R) - I₂(·,R)|` over `closure(T^{F,G})`:
    /// `A|Q(0)|/(2πr) Σ_k (1 + sup|B_k'|) ∫_{|t|≥R} e^{w_L(|t|)}|f(z_k(t))| dt`;
    /// infinite when the integral does not converge numerically.
    pub fn tail_bound(&self, f: &dyn Target, r: f64, quad: &QuadConfig) -> Result<f64> {
        let wl = self.system.member(self.indices.l)?;
        let mut total = 0.0;
        for (bf, sign, bounds) in
            [(&self.pair.phi, 1.0, &self.pair.phi_bounds), (&self.pair.psi, -1.0, &self.pair.psi_bounds)]
        {
            let lip = 1.0 + bounds.get(1).copied().unwrap_or(0.0);
            for dir in [1.0, -1.0] {
                let g = |t: f64| {
                    let x = dir * t;
                    let v = f.eval(C64::new(x, sign * bf.eval(x))).norm();
                    if v == 0.0 {
                        0.0
                    } else {
                        (wl.eval(t) + v.ln()).exp()
                    }
                };
                let res = integrate_to_infinity(g, r, r.max(1.0), quad);
                if !res.converged {
                    return Ok(f64::INFINITY);
                }
                total += lip * (res.value + res.tail_bound);
            }
        }
        Ok(self.prefactor() * total)
    }
}

/// Truncated contour integrals at the sample points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContourRepresentation {
    pub r: f64,
    /// `I₁(ξ,R) + I₂(ξ,R)`
    pub values: Vec<C64>,
    /// `I₃(ξ,R) + I₄(ξ,R)`
    pub sides: Vec<C64>,
    pub tail_bound: f64,
    pub quad_error: f64,
}

fn kernel(setup: &RungeSetup, f: &dyn Target, z: C64, xi: C64) -> C64 {
    f.eval(z) * setup.damping.p(z - xi) / (z - xi)
}

/// `f(ξ) ≈ I₁(ξ,R) + I₂(ξ,R)` by adaptive quadrature along the contours.
pub fn contour_representation(
    f: &dyn Target,
    setup: &RungeSetup,
    xis: &[C64],
    r: f64,
    cfg: &RungeConfig,
) -> Result<ContourRepresentation> {
    let cs = boundary_contours(&setup.pair, r)?;
    let scale = C64::new(0.0, 1.0 / (2.0 * PI));
    let quad = QuadConfig { max_intervals: 20_000, ..cfg.quad };
    let per = map_slice(cfg.exec, xis, |&xi| {
        let mut parts = [C64::new(0.0, 0.0); 4];
        let mut err = 0.0;
        for (p, c) in parts.iter_mut().zip(&cs) {
            let q = contour_integral(|z| kernel(setup, f, z, xi), c, &quad);
            *p = -scale * q.value;
            err += q.error / (2.0 * PI);
        }
        (parts, err)
    });
    Ok(ContourRepresentation {
        r,
        values: per.iter().map(|(p, _)| p[0] + p[1]).collect(),
        sides: per.iter().map(|(p, _)| p[2] + p[3]).collect(),
        tail_bound: setup.tail_bound(f, r, &cfg.quad)?,
        quad_error: per.iter().map(|p| p.1).fold(0.0, f64::max),
    })
}

/// One Riemann node: `C_j P(z_j - ξ)/(z_j - ξ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiemannNode {
    /// 1 for `Γ₁`, 2 for `Γ₂`.
    pub contour: u8,
    pub t: f64,
    pub z: C64,
    pub c: C64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RiemannSum {
    pub r: f64,
    pub dt: f64,
    pub nodes: Vec<RiemannNode>,
    /// `sup e^{w_N}|f - Σ|` on the validation grid.
    pub validation_error: f64,
    pub tail_bound: f64,
}

/// Midpoint nodes on `Γ₁ ∪ Γ₂` over `[-R, R]` with spacing `≈ dt`, sorted by `t`.
pub fn riemann_nodes(f: &dyn Target, setup: &RungeSetup, r: f64, dt: f64) -> Vec<RiemannNode> {
    let j = (2.0 * r / dt).ceil().max(1.0) as usize;
    let dt = 2.0 * r / j as f64;
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    let mut nodes = Vec::with_capacity(2 * j);
    for i in 0..j {
        let t = -r + (i as f64 + 0.5) * dt;
        for (contour, bf, sign, orient) in [(1u8, &setup.pair.phi, 1.0, -1.0), (2u8, &setup.pair.psi, -1.0, 1.0)] {
            let z = C64::new(t, sign * bf.eval(t));
            let dz = C64::new(1.0, sign * bf.derivative(t, 1).unwrap_or(0.0));
            let c = orient * f.eval(z) * dz * dt / two_pi_i;
            nodes.push(RiemannNode { contour, t, z, c });
        }
    }
    nodes
}

/// `Σ_j C_j P(z_j - ξ)/(z_j - ξ)`
pub fn riemann_eval(nodes: &[RiemannNode], p: &DampingFunction, xi: C64) -> C64 {
    nodes.iter().map(|n| n.c * p.p(n.z - xi) / (n.z - xi)).sum()
}

/// Sample points of `closure(T^{F,G})`: `columns` abscissae in `[-x_in, x_in]`,
/// `far` geometric abscissae in `(x_in, 100 x_in]` split between both sides.
pub fn validation_grid(strip: &GeneralizedStrip, x_in: f64, columns: usize, far: usize, heights: usize) -> Vec<C64> {
    let mut xs: Vec<f64> = (0..columns).map(|i| -x_in + 2.0 * x_in * i as f64 / (columns - 1).max(1) as f64).collect();
    let half = far / 2;
    for i in 1..=half {
        let x = x_in * 100f64.powf(i as f64 / half as f64);
        xs.push(x);
        xs.push(-x);
    }
    let mut pts = Vec::with_capacity(xs.len() * heights);
    for x in xs {
        let (lo, hi) = (-strip.lower.eval(x), strip.upper.eval(x));
        for k in 0..heights {
            pts.push(C64::new(x, lo + (hi - lo) * k as f64 / (heights - 1) as f64));
        }
    }
    pts
}

fn weighted_error(
    setup: &RungeSetup,
    f: &dyn Target,
    pts: &[C64],
    approx: impl Fn(C64) -> C64 + Sync,
    exec: Exec,
) -> Result<(f64, C64)> {
    let wn = setup.system.member(setup.indices.n)?;
    let errs = map_slice(exec, pts, |&xi| {
        let d = (f.eval(xi) - approx(xi)).norm();
        if d == 0.0 {
            f64::NEG_INFINITY
        } else {
            wn.eval(xi.re.abs()) + d.ln()
        }
    });
    let (k, e) = errs.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (k, &e)| if e > b.1 { (k, e) } else { b });
    Ok((e.exp(), pts[k]))
}

/// Smallest `R` on the ladder `r_start·1.5^k` with tail bound `≤ budget`.
pub fn choose_truncation(f: &dyn Target, setup: &RungeSetup, budget: f64, cfg: &RungeConfig) -> Result<(f64, f64)> {
    let mut r = cfg.r_start;
    while r <= cfg.r_max {
        if let Ok(t) = setup.tail_bound(f, r, &cfg.quad) {
            if t <= budget {
                return Ok((r, t));
            }
        }
        r *= 1.5;
    }
    Err(Error::Budget { stage: "truncation".into(), detail: format!("tail above {budget:e} for R <= {}", cfg.r_max) })
}

/// Riemann sums with spacing `dt_start/2^k` until the weighted validation
/// error is `≤ budget`.
pub fn riemann_discretize(f: &dyn Target, setup: &RungeSetup, budget: f64, cfg: &RungeConfig) -> Result<RiemannSum> {
    let (r, tail_bound) = choose_truncation(f, setup, 0.5 * budget, cfg)?;
    let pts =
        validation_grid(&setup.strip, r, cfg.validation_columns, cfg.validation_far_columns, cfg.validation_heights);
    let mut dt = cfg.dt_start;
    loop {
        let nodes = riemann_nodes(f, setup, r, dt);
        if nodes.len() > cfg.max_nodes {
            return Err(Error::Budget {
                stage: "riemann".into(),
                detail: format!("{} nodes needed at dt = {dt}", nodes.len()),
            });
        }
        let (err, _) = weighted_error(setup, f, &pts, |xi| riemann_eval(&nodes, &setup.damping, xi), cfg.exec)?;
        if err <= budget {
            let dt = 2.0 * r / (nodes.len() / 2) as f64;
            return Ok(RiemannSum { r, dt, nodes, validation_error: err, tail_bound });
        }
        dt *= 0.5;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DampedTerm {
    pub contour: u8,
    pub t: f64,
    pub node: C64,
    pub coefficient: C64,
    /// `≈ 1/(z_j - ξ)` on `closure(T^{F,G})`.
    pub rational: RationalFunction,
    pub push_bound: f64,
}

/// `g(ξ) = Σ_j C_j P(z_j - ξ) R_j(ξ)`, holomorphic on `T^{bF,bG}`.
#[derive(Clone, Debug)]
pub struct RationalDampedSum {
    pub damping: DampingFunction,
    pub strip: GeneralizedStrip,
    pub b: f64,
    pub terms: Vec<DampedTerm>,
}

/// On-disk form; the damping function is rebuilt from its descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SumFile {
    schema_version: u32,
    damping: DampingDescriptor,
    strip: GeneralizedStrip,
    b: f64,
    terms: Vec<DampedTerm>,
}

impl RationalDampedSum {
    pub fn eval(&self, xi: C64) -> C64 {
        self.terms.iter().map(|t| t.coefficient * self.damping.p(t.node - xi) * t.rational.eval(xi)).sum()
    }

    pub fn eval_many(&self, xis: &[C64], exec: Exec) -> Vec<C64> {
        map_slice(exec, xis, |&xi| self.eval(xi))
    }

    pub fn validity_strip(&self) -> GeneralizedStrip {
        self.strip.scaled(self.b)
    }

    /// Smallest distance from a pole to `closure(T^{bF,bG})`.
    pub fn min_pole_distance(&self) -> f64 {
        let s = self.validity_strip();
        self.terms.iter().map(|t| s.distance_to_closure(t.rational.pole)).fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SumFile {
            schema_version: SCHEMA_VERSION,
            damping: self.damping.descriptor(),
            strip: self.strip.clone(),
            b: self.b,
            terms: self.terms.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: SumFile = serde_json::from_str(s)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!("schema version {} (expected {SCHEMA_VERSION})", file.schema_version)));
        }
        Ok(RationalDampedSum {
            damping: DampingFunction::from_descriptor(&file.damping)?,
            strip: file.strip,
            b: file.b,
            terms: file.terms,
        })
    }
}

impl PartialEq for RationalDampedSum {
    fn eq(&self, o: &Self) -> bool {
        self.damping.descriptor() == o.damping.descriptor()
            && self.strip == o.strip
            && self.b == o.b
            && self.terms == o.terms
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproximationCertificate {
    pub target: String,
    pub eps: f64,
    /// `sup e^{w_N(|Re ξ|)}|f(ξ) - g(ξ)|` on the validation grid.
    pub achieved: f64,
    pub achieved_at: C64,
    pub validation_points: usize,
    pub indices: RungeIndices,
    pub h: f64,
    pub separation: f64,
    pub truncation: f64,
    pub tail_bound: f64,
    pub nodes: usize,
    pub dt: f64,
    pub riemann_error: f64,
    /// `D ≥ sup e^{w_N}|C_j P(z_j - ξ)|`.
    pub d_bound: f64,
    pub push_budget: f64,
    pub push_certified: f64,
    pub max_degree: usize,
    pub total_degree: usize,
    pub min_pole_distance: f64,
    /// `max |∂̄g|` on interior samples of `T^{bF,bG}`.
    pub holomorphy_residual: f64,
    /// The same residual divided by `max(1, |g|)` on each stencil; `g` is
    /// astronomically large near the original nodes, so only this one is
    /// resolvable in double precision.
    pub holomorphy_relative: f64,
    /// `b' < b` and `(K, log sup e^{w_K}|g|)` on `closure(T^{b'F,b'G})`.
    pub membership_scale: f64,
    pub membership: Vec<(usize, f64)>,
    /// `e^{w_N}|C_j P(z_j - ξ)| ≤ A|Q(0)||C_j|e^{w_L(|Re z_j|)}` on the samples.
    pub transfer_ok: bool,
    pub accepted: bool,
}

/// Fourth-order `∂̄f(z)` and `max |f|` over the stencil.
fn dbar4(f: &impl Fn(C64) -> C64, z: C64, d: f64) -> (C64, f64) {
    let mut scale = 0.0f64;
    let mut diff = |e: C64| {
        let v = [f(z + 2.0 * e), f(z + e), f(z - e), f(z - 2.0 * e)];
        scale = v.iter().fold(scale, |m, x| m.max(x.norm()));
        (-v[0] + 8.0 * v[1] - 8.0 * v[2] + v[3]) / (12.0 * d)
    };
    let (dx, dy) = (diff(C64::new(d, 0.0)), diff(C64::new(0.0, d)));
    (0.5 * (dx + C64::new(0.0, 1.0) * dy), scale)
}

/// Approximates `f` (holomorphic on `T^{aF,aG}` with finite `w_M` norm) on
/// `closure(T^{F,G})` to weighted accuracy `eps`.
pub fn runge_approximate(
    f: &dyn Target,
    setup: &RungeSetup,
    eps: f64,
    cfg: &RungeConfig,
) -> Result<(RationalDampedSum, ApproximationCertificate)> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    check_membership(f, setup)?;
    let ix = &setup.indices;
    let rs = riemann_discretize(f, setup, 0.5 * eps, cfg).map_err(|e| e.in_stage("riemann"))?;
    let wl = setup.system.member(ix.l)?;
    let ln_aq0 = ix.a_const.ln() + setup.damping.ln_abs_q0();
    let d_bound = rs.nodes.iter().map(|n| (ln_aq0 + n.c.norm().ln() + wl.eval(n.t.abs())).exp()).fold(0.0, f64::max);
    let push_budget = 0.5 * eps / (d_bound * rs.nodes.len() as f64);
    let k_strip = setup.strip.clone();
    let bstrip = setup.strip.scaled(setup.b);
    let pushed = map_slice(cfg.exec, &rs.nodes, |n| {
        let sign = if n.contour == 1 { 1.0 } else { -1.0 };
        let edge = if n.contour == 1 { bstrip.upper.eval(n.z.re) } else { bstrip.lower.eval(n.z.re) };
        let beta = C64::new(n.z.re, sign * (edge + setup.pole_margin));
        pole_push(n.z, beta, &k_strip, push_budget, &cfg.push).map(|p| (*n, p))
    });
    let mut terms = Vec::with_capacity(pushed.len());
    for p in pushed {
        let (n, p) = p.map_err(|e| e.in_stage("pole push"))?;
        terms.push(DampedTerm {
            contour: n.contour,
            t: n.t,
            node: n.z,
            coefficient: n.c,
            // 1/(z - ξ) = -1/(ξ - z)
            rational: p.rational.scaled(C64::new(-1.0, 0.0)),
            push_bound: p.certified,
        });
    }
    terms.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.contour.cmp(&b.contour)));
    let push_certified = d_bound * terms.iter().map(|t| t.push_bound).sum::<f64>();
    let sum = RationalDampedSum { damping: setup.damping.clone(), strip: setup.strip.clone(), b: setup.b, terms };

    let pts =
        validation_grid(&setup.strip, rs.r, cfg.validation_columns, cfg.validation_far_columns, cfg.validation_heights);
    let (achieved, achieved_at) = weighted_error(setup, f, &pts, |xi| sum.eval(xi), cfg.exec)?;
    let transfer_ok = transfer_check(&sum, setup, &pts, ln_aq0, cfg.exec)?;
    let (holomorphy_residual, holomorphy_relative) = holomorphy(&sum, setup, rs.r, cfg.holomorphy_step, cfg.exec);
    let membership_scale = 0.5 * (1.0 + setup.b);
    let membership = membership(&sum, setup, membership_scale, cfg.exec)?;
    let min_pole_distance = sum.min_pole_distance();
    let max_degree = sum.terms.iter().map(|t| t.rational.degree()).max().unwrap_or(0);
    let total_degree = sum.terms.iter().map(|t| t.rational.degree()).sum();
    let accepted = achieved <= eps
        && rs.validation_error <= 0.5 * eps
        && push_certified <= 0.5 * eps
        && min_pole_distance >= setup.pair.eps
        && holomorphy_relative <= 1e-6
        && membership.iter().all(|m| m.1.is_finite())
        && transfer_ok;
    let cert = ApproximationCertificate {
        target: f.describe(),
        eps,
        achieved,
        achieved_at,
        validation_points: pts.len(),
        indices: ix.clone(),
        h: setup.h,
        separation: setup.pair.eps,
        truncation: rs.r,
        tail_bound: rs.tail_bound,
        nodes: sum.terms.len(),
        dt: rs.dt,
        riemann_error: rs.validation_error,
        d_bound,
        push_budget,
        push_certified,
        max_degree,
        total_degree,
        min_pole_distance,
        holomorphy_residual,
        holomorphy_relative,
        membership_scale,
        membership,
        transfer_ok,
        accepted,
    };
    Ok((sum, cert))
}

/// `sup e^{w_M}|f|` over `closure(T^{aF,aG})` samples must be finite and
/// decaying at the far end.
fn check_membership(f: &dyn Target, setup: &RungeSetup) -> Result<()> {
    let wm = setup.system.member(setup.indices.m)?;
    let s = setup.strip.scaled(setup.a);
    let mut xs = vec![0.0];
    xs.extend((0..=200).map(|k| 1e-2 * 1e6f64.powf(k as f64 / 200.0)));
    let col = |x: f64| {
        (0..=16)
            .flat_map(|j| {
                let (lo, hi) = (-s.lower.eval(x), s.upper.eval(x));
                let y = lo + (hi - lo) * j as f64 / 16.0;
                [C64::new(x, y), C64::new(-x, y)]
            })
            .map(|z| wm.eval(z.re.abs()) + f.eval(z).norm().ln())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let vals: Vec<f64> = xs.iter().map(|&x| col(x)).collect();
    let sup = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let last = *vals.last().unwrap();
    if sup.is_nan() || sup == f64::INFINITY || !(last < sup) {
        return Err(Error::Refused(format!("target has no finite w_{} norm on the a-strip", setup.indices.m)));
    }
    Ok(())
}

fn transfer_check(sum: &RationalDampedSum, setup: &RungeSetup, pts: &[C64], ln_aq0: f64, exec: Exec) -> Result<bool> {
    let wn = setup.system.member(setup.indices.n)?;
    let wl = setup.system.member(setup.indices.l)?;
    let ok = map_slice(exec, pts, |&xi| {
        sum.terms.iter().all(|t| {
            let lhs = wn.eval(xi.re.abs()) + sum.damping.ln_p(t.node - xi).re;
            lhs <= ln_aq0 + wl.eval(t.node.re.abs()) + 1e-9
        })
    });
    Ok(ok.into_iter().all(|b| b))
}

/// `(max |∂̄g|, max |∂̄g|/max(1, |g| on the stencil))` over a grid in `T^{0.95bF,0.95bG}`.
fn holomorphy(sum: &RationalDampedSum, setup: &RungeSetup, r: f64, delta: f64, exec: Exec) -> (f64, f64) {
    let s = setup.strip.scaled(0.95 * setup.b);
    let (nx, ny) = (41, 9);
    let pts: Vec<C64> = (0..nx * ny)
        .map(|k| {
            let (i, j) = (k / ny, k % ny);
            let x = -r + 2.0 * r * i as f64 / (nx - 1) as f64;
            let (lo, hi) = (-s.lower.eval(x), s.upper.eval(x));
            C64::new(x, lo + (hi - lo) * j as f64 / (ny - 1) as f64)
        })
        .collect();
    let res = map_slice(exec, &pts, |&z| {
        let (d, scale) = dbar4(&|w| sum.eval(w), z, delta);
        (d.norm(), d.norm() / scale.max(1.0))
    });
    res.into_iter().fold((0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
}

fn membership(sum: &RationalDampedSum, setup: &RungeSetup, scale: f64, exec: Exec) -> Result<Vec<(usize, f64)>> {
    let k = setup.indices.k;
    let wk = setup.system.member(k)?;
    let s = setup.strip.scaled(scale);
    let mut xs = vec![0.0];
    xs.extend((0..=120).map(|i| 1e-2 * 1e5f64.powf(i as f64 / 120.0)));
    let cols = map_range(exec, xs.len(), |i| {
        let x = xs[i];
        (0..=16)
            .flat_map(|j| {
                let (lo, hi) = (-s.lower.eval(x), s.upper.eval(x));
                let y = lo + (hi - lo) * j as f64 / 16.0;
                [C64::new(x, y), C64::new(-x, y)]
            })
            .map(|z| {
                let v = sum.eval(z).norm();
                if v == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    wk.eval(x) + v.ln()
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let sup = cols.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let last = *cols.last().unwrap();
    let finite = sup.is_finite() && last < sup;
    Ok(vec![(k, if finite { sup } else { f64::INFINITY })])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::nontrivial_element;
    use crate::weights::WeightFunction;

    fn setup() -> (RungeSetup, NontrivialElement) {
        let ws = WeightSystem::scaled_argument(WeightFunction::power(0.5));
        let strip = GeneralizedStrip::horizontal(1.0);
        let s = RungeSetup::new(&strip, &ws, 1, None, None, 2.0, 3.0, &RungeConfig::default()).unwrap();
        let el = nontrivial_element(&ws, &strip.scaled(2.0)).unwrap();
        (s, el)
    }

    #[test]
    fn indices_for_power_half() {
        let (s, _) = setup();
        let ix = &s.indices;
        assert_eq!((ix.n, ix.l, ix.m, ix.k, ix.k_tilde), (1, 2, 3, 4, 8));
        assert!(s.h > 2.0 * s.b * s.strip.max_sup());
        assert_eq!(s.damping.p(C64::new(0.0, 0.0)), C64::new(1.0, 0.0));
    }

    #[test]
    fn constant_reproduced_by_four_contours() {
        let (s, _) = setup();
        let kappa = C64::new(0.7, -0.2);
        let f = FnTarget(|_| kappa, "const".into());
        let xis = [C64::new(0.0, 0.0), C64::new(1.5, 0.9), C64::new(-3.0, -1.0)];
        let rep = contour_representation(&f, &s, &xis, 8.0, &RungeConfig::default()).unwrap();
        for k in 0..xis.len() {
            assert!((rep.values[k] + rep.sides[k] - kappa).norm() < 1e-8, "{}", rep.values[k] + rep.sides[k]);
        }
    }

    #[test]
    fn representation_self_convergence() {
        let (s, el) = setup();
        let cfg = RungeConfig::default();
        let xi = [C64::new(0.0, 0.0), C64::new(0.5, 1.0)];
        let r20 = contour_representation(&el, &s, &xi, 20.0, &cfg).unwrap();
        let r40 = contour_representation(&el, &s, &xi, 40.0, &cfg).unwrap();
        for k in 0..xi.len() {
            assert!((r20.values[k] - r40.values[k]).norm() <= r20.tail_bound + 1e-9);
            assert!((r40.values[k] - el.eval(xi[k])).norm() <= r40.tail_bound + 1e-8);
        }
    }

    #[test]
    fn midpoint_error_halves_for_linear_integrand() {
        // first-order behaviour of left sums against the midpoint rule on t ↦ t
        let exact = 0.5;
        let left = |j: usize| (0..j).map(|i| i as f64 / j as f64).sum::<f64>() / j as f64;
        let mid = |j: usize| (0..j).map(|i| (i as f64 + 0.5) / j as f64).sum::<f64>() / j as f64;
        let e1 = (exact - left(16)).abs();
        let e2 = (exact - left(32)).abs();
        assert!((e1 / e2 - 2.0).abs() < 1e-9);
        assert!((exact - mid(16)).abs() < 1e-15);
    }
}
