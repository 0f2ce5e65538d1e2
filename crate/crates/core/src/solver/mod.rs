//! The damped-kernel ∂̄ solver `f = (gφ) ∗ P/(πz)`, the Laplace composition
//! `Δ = 4∂∂̄` and the surjectivity dashboard.

mod dashboard;
mod source;

pub use dashboard::{surjectivity_dashboard, DashboardConfig, DashboardReport};
pub use source::{source_grid, Manufactured};

use crate::damping::{damping_for_system, DampingConfig, DampingDescriptor};
use crate::exec::Exec;
use crate::geometry::{build_cutoff, CutoffBounds, CutoffFunction, GeneralizedStrip};
use crate::numerics::{
    convolve_cauchy, dbar_apply, kernel_integrability, laplace_apply, weighted_sup, ConvolveConfig, GridFunction,
    StripGrid, WeightedNorm, WeightedSup,
};
use crate::quadrature::QuadConfig;
use crate::weights::{
    check_condition, n_pair_integral, subadditivity_constants, subadditivity_excess, Condition, TailRecord,
    WeightSystem,
};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// Multi-indices `(∂_x, ∂_y)` of order ≤ 2 reported for the solution.
pub const ALPHAS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

/// Indices covered by the audited chain.
const CHAIN_ALPHAS: [(usize, usize); 3] = [(0, 0), (1, 0), (0, 1)];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveConfig {
    pub exec: Exec,
    pub convolve: ConvolveConfig,
    pub damping: DampingConfig,
    pub quad: QuadConfig,
    /// Candidates `M+1..=M+k_search` for the (N) index.
    pub k_search: usize,
    /// `h = h_factor · a_M · max(sup F, sup G)`.
    pub h_factor: f64,
    /// Cutoff mollification resolution as a fraction of `hx`.
    pub cutoff_resolution: f64,
    /// Cap on source-nodes × target-nodes.
    pub max_work: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        let exec = Exec::default();
        SolveConfig {
            exec,
            convolve: ConvolveConfig { exec, ..Default::default() },
            damping: DampingConfig::default(),
            quad: QuadConfig::default(),
            k_search: 16,
            h_factor: 2.5,
            cutoff_resolution: 0.25,
            max_work: 2e10,
        }
    }
}

impl SolveConfig {
    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self.convolve.exec = exec;
        self
    }
}

#[derive(Clone, Debug)]
pub struct SolveRequest {
    pub strip: GeneralizedStrip,
    pub system: WeightSystem,
    /// Target index `N`.
    pub n: usize,
    /// Source index `M`.
    pub m: usize,
    pub a_n: f64,
    pub a_m: f64,
    /// Cutoff scale; `(a_N + a_M)/2` when absent.
    pub b: Option<f64>,
    /// Samples of `g` on the `a_M` grid.
    pub source: GridFunction,
    pub tol: f64,
}

impl SolveRequest {
    pub fn new(system: &WeightSystem, n: usize, m: usize, a_n: f64, a_m: f64, source: GridFunction) -> Self {
        SolveRequest {
            strip: source.grid.strip.clone(),
            system: system.clone(),
            n,
            m,
            a_n,
            a_m,
            b: None,
            source,
            tol: 1e-2,
        }
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = Some(b);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn b(&self) -> f64 {
        self.b.unwrap_or(0.5 * (self.a_n + self.a_m))
    }

    fn validate(&self) -> Result<()> {
        let b = self.b();
        if self.n == 0 || self.n >= self.m {
            return Err(Error::Domain(format!("need 1 <= N < M, got N={} M={}", self.n, self.m)));
        }
        if !(0.0 < self.a_n && self.a_n < b && b < self.a_m && self.a_m <= 1.0) {
            return Err(Error::Domain(format!("need 0 < a_N < b < a_M <= 1, got {} {} {}", self.a_n, b, self.a_m)));
        }
        if self.source.grid.strip != self.strip || (self.source.grid.a - self.a_m).abs() > 1e-12 {
            return Err(Error::Grid(format!("source grid is not the a_M = {} grid of the strip", self.a_m)));
        }
        if self.source.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Domain("source has non-finite samples".into()));
        }
        let p = weighted_sup(&self.source, &WeightedNorm::new(&self.system, self.m))?;
        if p.ln_value.is_nan() || p.ln_value == f64::INFINITY {
            return Err(Error::Domain("source has infinite weighted norm".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormEntry {
    pub alpha: (usize, usize),
    pub sup: WeightedSup,
}

/// One line of the estimate chain
/// `e^{w_N}|D^α f| ≤ C·I·Σ_β binom(α,β) sup|D^{α-β}φ| p_{M,β,b}(g)`, in logs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainEntry {
    pub alpha: (usize, usize),
    pub ln_bound: f64,
    pub ln_observed: f64,
    pub within: bool,
}

/// The constants behind one convolution step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantAudit {
    pub stage: String,
    pub source_index: usize,
    pub target_index: usize,
    pub a_source: f64,
    pub b: f64,
    pub a_target: f64,
    /// `M'` of the subadditivity estimate, when it came from the (α) witness.
    pub subadditivity_index: Option<usize>,
    /// `log C` with `w_N(t+s) ≤ w_M(t) + w_M(s) + log C`.
    pub ln_c: Option<f64>,
    pub c_origin: String,
    pub k: usize,
    pub k_integral: TailRecord,
    pub h: f64,
    pub damping: DampingDescriptor,
    pub damping_min_margin: f64,
    pub ln_abs_q0: f64,
    /// `∫ e^{w_M}|P|/(π|z|)` over `T_h`.
    pub kernel_integral: f64,
    pub cutoff: CutoffBounds,
    /// `p_{M,β,b}` of the stage source.
    pub source_norms: Vec<NormEntry>,
    pub chain: Vec<ChainEntry>,
}

impl ConstantAudit {
    pub fn within_chain(&self) -> Option<bool> {
        if self.chain.is_empty() {
            None
        } else {
            Some(self.chain.iter().all(|c| c.within))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operator {
    Dbar,
    Laplace,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub operator: Operator,
    pub n: usize,
    pub m: usize,
    pub tol: f64,
    pub solution: GridFunction,
    pub source: GridFunction,
    /// `sup e^{w_N}|Lf - g|` over interior target nodes.
    pub residual: WeightedSup,
    pub norms: Vec<NormEntry>,
    /// Final-stage audit; the Laplace solver lists both stages in `stages`.
    pub audit: ConstantAudit,
    pub stages: Vec<ConstantAudit>,
    pub accepted: bool,
    pub hint: Option<String>,
    pub system: WeightSystem,
}

impl SolveReport {
    /// Rebuilds the residual from the stored solution and source.
    pub fn recompute_residual(&self) -> Result<WeightedSup> {
        residual(&self.solution, &self.source, self.operator, &self.system, self.n)
    }

    /// The report without grid data, for JSON output.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "operator": self.operator,
            "system": self.system.describe(),
            "n": self.n,
            "m": self.m,
            "tol": self.tol,
            "grid": self.solution.grid.describe(),
            "residual": self.residual,
            "norms": self.norms,
            "audit": self.audit,
            "stages": self.stages,
            "accepted": self.accepted,
            "hint": self.hint,
        })
    }
}

fn check_hypotheses(ws: &WeightSystem, quad: &QuadConfig) -> Result<()> {
    for c in [Condition::Eps0, Condition::NSystem] {
        let rep = check_condition(ws, c, quad);
        if rep.verdict.fails() {
            return Err(Error::Refused(format!("{} fails {:?}: {}", ws.describe(), c, rep.note)));
        }
    }
    Ok(())
}

/// Smallest `K` in `m+1..=m+k_search` with a convergent `∫ e^{w_m - w_K}`.
pub fn select_k(ws: &WeightSystem, m: usize, cfg: &SolveConfig) -> Result<(usize, TailRecord)> {
    let last = ws.max_index().map_or(m + cfg.k_search, |x| x.min(m + cfg.k_search));
    for k in m + 1..=last {
        let (v, rec) = n_pair_integral(ws, m, k, &cfg.quad)?;
        if v.holds() {
            return Ok((k, rec));
        }
    }
    Err(Error::Budget {
        stage: "K-search".into(),
        detail: format!("no K in {}..={last} with finite (N) integral", m + 1),
    })
}

/// `log C` for `w_n(t+s) ≤ w_m(t) + w_m(s) + log C`, with its origin.
fn subadditivity(ws: &WeightSystem, n: usize, m: usize) -> (Option<usize>, Option<f64>, String) {
    let witness = subadditivity_constants(ws, n).ok();
    if let Some((mp, a)) = witness {
        if mp <= m {
            return (Some(mp), Some(a.ln()), format!("(alpha) witness M'={mp}"));
        }
    }
    let mp = witness.map(|w| w.0);
    match subadditivity_excess(ws, n, m) {
        Ok(Some(c)) => (mp, Some(c), "sampled excess".into()),
        _ => (mp, None, "unavailable".into()),
    }
}

/// Target grid at scale `a` over `|x| ≤ x_max`: a lattice matching the
/// source when possible. `x_max - source.x_max` should be a multiple of `hx`.
pub fn target_grid(source: &StripGrid, a: f64, x_max: f64) -> Result<StripGrid> {
    if source.strip.is_constant() {
        if let Ok(g) = StripGrid::lattice(&source.strip, a, x_max, source.hx) {
            if (g.hy() - source.hy()).abs() < 1e-12 {
                return Ok(g);
            }
        }
    }
    let ny = (((source.ny - 1) as f64 * a / source.a).round() as usize + 1).max(5);
    StripGrid::new(&source.strip, a, x_max, source.hx, ny)
}

struct Stage {
    f: GridFunction,
    audit: ConstantAudit,
}

/// One (LP) step from `source` (weights `w_m`, scale `source.grid.a`) to the
/// `a_t` grid with weights `w_n`.
#[allow(clippy::too_many_arguments)]
fn lp_step(
    label: &str,
    ws: &WeightSystem,
    n: usize,
    m: usize,
    b: f64,
    a_t: f64,
    x_t: f64,
    source: &GridFunction,
    cfg: &SolveConfig,
) -> Result<Stage> {
    let sg = &source.grid;
    let strip = &sg.strip;
    let (mp, ln_c, c_origin) = subadditivity(ws, n, m);
    let (k, k_integral) = select_k(ws, m, cfg)?;
    let h = cfg.h_factor * sg.a * strip.max_sup();
    let damping = damping_for_system(ws, k, h, &cfg.damping)?;
    let cutoff = build_cutoff(strip, a_t, b, cfg.cutoff_resolution * sg.hx)?;
    let tg = target_grid(sg, a_t, x_t)?;
    let live = source.values.iter().filter(|v| v.norm() > 0.0).count();
    let work = live as f64 * tg.len() as f64;
    if work > cfg.max_work {
        return Err(Error::Budget { stage: label.into(), detail: format!("{work:.3e} kernel evaluations") });
    }
    let gphi = cutoff_product(source, &cutoff);
    let f = convolve_cauchy(&gphi, Some(&damping), &tg, &cfg.convolve)?;
    let wm = ws.member(m)?;
    let kernel_integral = kernel_integrability(&damping, &wm, &cfg.quad)?;
    let source_norms = CHAIN_ALPHAS
        .iter()
        .map(|&alpha| {
            let sup = weighted_sup(source, &WeightedNorm::new(ws, m).with_alpha(alpha).with_scale(b))?;
            Ok(NormEntry { alpha, sup })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut audit = ConstantAudit {
        stage: label.into(),
        source_index: m,
        target_index: n,
        a_source: sg.a,
        b,
        a_target: a_t,
        subadditivity_index: mp,
        ln_c,
        c_origin,
        k,
        k_integral,
        h,
        damping: damping.descriptor(),
        damping_min_margin: damping.certificate.min_margin,
        ln_abs_q0: damping.ln_abs_q0(),
        kernel_integral,
        cutoff: cutoff.bounds,
        source_norms,
        chain: Vec::new(),
    };
    fill_chain(&mut audit, &f, ws)?;
    Ok(Stage { f, audit })
}

fn cutoff_product(source: &GridFunction, cutoff: &CutoffFunction) -> GridFunction {
    let mut out = source.map(&format!("{}*phi", source.name), |z, v| v * cutoff.eval(z));
    out.valid_margin = 0;
    for k in 0..out.values.len() {
        if !source.is_valid(k) {
            out.values[k] = C64::new(0.0, 0.0);
        }
    }
    out
}

fn fill_chain(audit: &mut ConstantAudit, f: &GridFunction, ws: &WeightSystem) -> Result<()> {
    let Some(ln_c) = audit.ln_c else { return Ok(()) };
    let ln_i = audit.kernel_integral.ln();
    let p = |alpha| audit.source_norms.iter().find(|e| e.alpha == alpha).map(|e| e.sup.ln_value).unwrap();
    let lse = |xs: &[f64]| {
        let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            m
        } else {
            m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
        }
    };
    let cb = audit.cutoff;
    let mut chain = Vec::new();
    for alpha in CHAIN_ALPHAS {
        let sum = match alpha {
            (0, 0) => p((0, 0)),
            (1, 0) => lse(&[p((1, 0)), cb.dx.ln() + p((0, 0))]),
            _ => lse(&[p((0, 1)), cb.dy.ln() + p((0, 0))]),
        };
        let ln_bound = ln_c + ln_i + sum;
        let obs = weighted_sup(f, &WeightedNorm::new(ws, audit.target_index).with_alpha(alpha))?;
        chain.push(ChainEntry {
            alpha,
            ln_bound,
            ln_observed: obs.ln_value,
            within: obs.ln_value <= ln_bound + 1e-9 * ln_bound.abs().max(1.0),
        });
    }
    audit.chain = chain;
    Ok(())
}

/// `g` read at the nodes of `grid`; `None` where it cannot be interpolated.
fn resample(g: &GridFunction, grid: &StripGrid) -> Vec<Option<C64>> {
    grid.nodes().into_iter().map(|z| g.interpolate(z)).collect()
}

fn residual(f: &GridFunction, g: &GridFunction, op: Operator, ws: &WeightSystem, n: usize) -> Result<WeightedSup> {
    let lf = match op {
        Operator::Dbar => dbar_apply(f)?,
        Operator::Laplace => laplace_apply(f)?,
    };
    let gs = resample(g, &f.grid);
    let mut diff = lf.clone();
    diff.name = "residual".into();
    for k in 0..diff.values.len() {
        diff.values[k] = match (lf.is_valid(k), gs[k]) {
            (true, Some(v)) => lf.values[k] - v,
            _ => C64::new(0.0, 0.0),
        };
    }
    weighted_sup(&diff, &WeightedNorm::new(ws, n))
}

fn norms(f: &GridFunction, ws: &WeightSystem, n: usize) -> Result<Vec<NormEntry>> {
    ALPHAS
        .iter()
        .map(|&alpha| Ok(NormEntry { alpha, sup: weighted_sup(f, &WeightedNorm::new(ws, n).with_alpha(alpha))? }))
        .collect()
}

fn finish(
    op: Operator,
    req: &SolveRequest,
    f: GridFunction,
    audit: ConstantAudit,
    stages: Vec<ConstantAudit>,
) -> Result<SolveReport> {
    let residual = residual(&f, &req.source, op, &req.system, req.n)?;
    let norms = norms(&f, &req.system, req.n)?;
    let accepted = residual.value <= req.tol || residual.ln_value == f64::NEG_INFINITY;
    let hint = (!accepted).then(|| {
        format!(
            "residual {:.3e} above tol {:.3e}; the discretisation error is O(hx^2), try hx = {:.4}",
            residual.value,
            req.tol,
            f.grid.hx * (req.tol / residual.value).sqrt() * 0.9
        )
    });
    Ok(SolveReport {
        operator: op,
        n: req.n,
        m: req.m,
        tol: req.tol,
        solution: f,
        source: req.source.clone(),
        residual,
        norms,
        audit,
        stages,
        accepted,
        hint,
        system: req.system.clone(),
    })
}

/// Solves `∂̄f = g` on the `a_N` strip by `f = (gφ) ∗ P/(πz)`.
pub fn solve_dbar(req: &SolveRequest, cfg: &SolveConfig) -> Result<SolveReport> {
    req.validate()?;
    check_hypotheses(&req.system, &cfg.quad)?;
    let st = lp_step("dbar", &req.system, req.n, req.m, req.b(), req.a_n, req.source.grid.x_max, &req.source, cfg)?;
    let mut f = st.f;
    f.name = "f".into();
    f.provenance = format!("solve_dbar[{}]", f.provenance);
    finish(Operator::Dbar, req, f, st.audit.clone(), vec![st.audit])
}

/// Solves `Δu = g`: `∂̄v = conj(g)`, `h = conj(v)` (so `∂h = g`), then
/// `∂̄u = h/4`. The intermediate strip sits at `(a_N + a_M)/2` and keeps
/// index `M`; the cutoffs use the midpoints of each scale pair.
///
/// `v` only decays like `|P|`, so the intermediate grid extends the source
/// grid by `X/4` on each side; truncating `h` at `|x| = X` would put a jump
/// next to the nodes where the residual is measured.
pub fn solve_laplace(req: &SolveRequest, cfg: &SolveConfig) -> Result<SolveReport> {
    req.validate()?;
    check_hypotheses(&req.system, &cfg.quad)?;
    let a_i = 0.5 * (req.a_n + req.a_m);
    let (b1, b2) = match req.b {
        Some(b) if b > a_i => (b, 0.5 * (req.a_n + a_i)),
        Some(b) => (0.5 * (a_i + req.a_m), b),
        None => (0.5 * (a_i + req.a_m), 0.5 * (req.a_n + a_i)),
    };
    let conj_g = req.source.conj();
    let sg = &req.source.grid;
    let x_i = sg.x_max + (0.25 * sg.x_max / sg.hx).round() * sg.hx;
    let s1 = lp_step("laplace/1", &req.system, req.m, req.m, b1, a_i, x_i, &conj_g, cfg)
        .map_err(|e| e.in_stage("laplace stage 1"))?;
    let h = s1.f.map("h/4", |_, v| v.conj() * 0.25);
    let s2 = lp_step("laplace/2", &req.system, req.n, req.m, b2, req.a_n, sg.x_max, &h, cfg)
        .map_err(|e| e.in_stage("laplace stage 2"))?;
    let mut u = s2.f;
    u.name = "u".into();
    u.provenance = format!("solve_laplace[{}]", u.provenance);
    finish(Operator::Laplace, req, u, s2.audit.clone(), vec![s1.audit, s2.audit])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightFunction;

    fn sys() -> WeightSystem {
        WeightSystem::scaled_argument(WeightFunction::power(0.5))
    }

    fn grid(hx: f64) -> StripGrid {
        source_grid(&GeneralizedStrip::horizontal(1.0), 0.9, 8.0, hx).unwrap()
    }

    #[test]
    fn zero_source_gives_zero() {
        let g = GridFunction::zeros(&grid(0.1), "g");
        let req = SolveRequest::new(&sys(), 1, 2, 0.3, 0.9, g);
        for rep in
            [solve_dbar(&req, &SolveConfig::default()).unwrap(), solve_laplace(&req, &SolveConfig::default()).unwrap()]
        {
            assert!(rep.solution.values.iter().all(|v| v.norm() == 0.0));
            assert_eq!(rep.residual.value, 0.0);
            assert!(rep.accepted);
        }
    }

    #[test]
    fn request_orderings_are_checked() {
        let g = GridFunction::zeros(&grid(0.1), "g");
        let cfg = SolveConfig::default();
        assert!(matches!(
            solve_dbar(&SolveRequest::new(&sys(), 2, 2, 0.3, 0.9, g.clone()), &cfg),
            Err(Error::Domain(_))
        ));
        assert!(matches!(solve_dbar(&SolveRequest::new(&sys(), 1, 2, 0.3, 0.8, g.clone()), &cfg), Err(Error::Grid(_))));
        let r = SolveRequest::new(&sys(), 1, 2, 0.3, 0.9, g).with_b(0.2);
        assert!(matches!(solve_dbar(&r, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn refuses_failing_eps0() {
        let ws = WeightSystem::scaled_argument(WeightFunction::exp_power_log(1.0, 0.0));
        let g = GridFunction::zeros(&grid(0.1), "g");
        let r = solve_dbar(&SolveRequest::new(&ws, 1, 2, 0.3, 0.9, g), &SolveConfig::default());
        assert!(matches!(r, Err(Error::Refused(_))));
    }

    #[test]
    fn k_search_picks_first_convergent_index() {
        let (k, rec) = select_k(&sys(), 2, &SolveConfig::default()).unwrap();
        assert_eq!(k, 3);
        assert!(rec.converged);
    }

    #[test]
    fn manufactured_dbar_residual_and_chain() {
        let g = Manufactured::DbarConj.source(&grid(0.1)).unwrap();
        let req = SolveRequest::new(&sys(), 1, 2, 0.3, 0.9, g).with_tol(1e-2);
        let rep = solve_dbar(&req, &SolveConfig::default()).unwrap();
        assert!(rep.accepted, "{:?}", rep.residual);
        assert_eq!(rep.audit.k, 3);
        assert_eq!(rep.audit.within_chain(), Some(true));
        let again = rep.recompute_residual().unwrap();
        assert_eq!(again.value, rep.residual.value);
        assert!(rep.norms.iter().all(|e| e.sup.value.is_finite()));
    }

    #[test]
    fn conjugation_identity() {
        // ∂(conj v) = conj(∂̄ v)
        let gr = grid(0.05);
        let v = GridFunction::from_fn(&gr, "v", Exec::Sequential, |z| (z * z * 0.3).exp() * z.conj()).unwrap();
        let lhs = crate::numerics::partial_apply(&v.conj()).unwrap();
        let rhs = dbar_apply(&v).unwrap().conj();
        for k in 0..lhs.values.len() {
            if lhs.is_valid(k) {
                assert!((lhs.values[k] - rhs.values[k]).norm() < 1e-12);
            }
        }
    }
}
