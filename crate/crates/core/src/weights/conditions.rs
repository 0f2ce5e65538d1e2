use super::{Family, SystemKind, WeightFunction, WeightSystem};
use crate::quadrature::{integrate, integrate_to_infinity, ImproperResult, QuadConfig};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    Alpha,
    Eps0,
    NSystem,
    NInside,
    NOutside,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    HoldsAnalytic,
    FailsAnalytic,
    HoldsNumericHeuristic,
    FailsNumericHeuristic,
    Inconclusive,
}

impl Verdict {
    pub fn holds(self) -> bool {
        matches!(self, Verdict::HoldsAnalytic | Verdict::HoldsNumericHeuristic)
    }

    pub fn fails(self) -> bool {
        matches!(self, Verdict::FailsAnalytic | Verdict::FailsNumericHeuristic)
    }

    pub fn is_analytic(self) -> bool {
        matches!(self, Verdict::HoldsAnalytic | Verdict::FailsAnalytic)
    }

    fn analytic(b: bool) -> Self {
        if b {
            Verdict::HoldsAnalytic
        } else {
            Verdict::FailsAnalytic
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRecord {
    pub label: String,
    pub value: f64,
    pub truncation: f64,
    pub tail_bound: f64,
    pub converged: bool,
}

impl TailRecord {
    fn from_result(label: String, r: &ImproperResult<f64>) -> Self {
        TailRecord { label, value: r.value, truncation: r.truncation, tail_bound: r.tail_bound, converged: r.converged }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Index `M` (for `N = 1`) of condition (α) or (N).
    pub m: Option<usize>,
    /// Constant `A` of condition (α).
    pub a: Option<f64>,
    /// Constant `C` of the single-weight conditions.
    pub c: Option<f64>,
    pub integrals: Vec<TailRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub verdict: Verdict,
    pub witness: Witness,
    pub note: String,
}

struct Rules {
    alpha: bool,
    eps0: bool,
    n_inside: bool,
    n_outside: bool,
}

fn family_rules(w: &WeightFunction) -> Option<Rules> {
    Some(match w.family {
        Family::Power { .. } => Rules { alpha: true, eps0: true, n_inside: true, n_outside: true },
        Family::PowerLog { a, b } if a > 0.0 => {
            let _ = b;
            Rules { alpha: true, eps0: true, n_inside: true, n_outside: true }
        }
        Family::PowerLog { b, .. } | Family::LogPower { b } => {
            Rules { alpha: true, eps0: true, n_inside: b >= 2.0, n_outside: b >= 1.0 }
        }
        Family::ExpPowerLog { a, b } => Rules {
            alpha: a == 0.0 && b <= 1.0,
            eps0: (0.0..1.0).contains(&a) || (a == 1.0 && b < 0.0),
            n_inside: true,
            n_outside: true,
        },
        Family::Tabulated { .. } => return None,
    })
}

/// Sample points for sup-type checks: 0 and a geometric ladder to 1e8.
fn sup_samples() -> Vec<f64> {
    let mut v = vec![0.0];
    let n = 480;
    for k in 0..=n {
        v.push(1e-6 * 10f64.powf(14.0 * k as f64 / n as f64));
    }
    v
}

fn ln_integrand(f: impl Fn(f64) -> f64) -> impl Fn(f64) -> f64 {
    move |t| {
        let e = f(t);
        if e.is_nan() {
            0.0
        } else {
            e.exp()
        }
    }
}

/// `∫_0^∞ w(t) e^{-μt} dt` by doubling truncation.
pub fn eps0_tail_integral(w: &WeightFunction, mu: f64, cfg: &QuadConfig) -> Result<(f64, bool)> {
    let r = eps0_integral(w, mu, cfg)?;
    Ok((r.value, r.converged))
}

fn eps0_integral(w: &WeightFunction, mu: f64, cfg: &QuadConfig) -> Result<ImproperResult<f64>> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("mu must be > 0, got {mu}")));
    }
    let f = ln_integrand(|t| w.ln_eval(t) - mu * t);
    Ok(integrate_to_infinity(f, 0.0, 1.0, cfg))
}

/// Panel-growth test used when an improper integral fails to converge:
/// the last eight doubling panels never shrink ⇒ divergence (heuristic).
fn panels_grow(f: &impl Fn(f64) -> f64, cfg: &QuadConfig) -> Option<bool> {
    let mut prev: Option<f64> = None;
    let mut streak = 0;
    let mut count = 0;
    let mut lo = 1.0;
    for _ in 0..40 {
        let p = integrate(f, lo, 2.0 * lo, cfg).value.abs();
        if !p.is_finite() {
            return if streak >= 8 { Some(true) } else { None };
        }
        count += 1;
        if let Some(q) = prev {
            if p >= q {
                streak += 1;
            } else {
                streak = 0;
            }
        }
        prev = Some(p);
        lo *= 2.0;
    }
    if count >= 12 {
        Some(streak >= 8)
    } else {
        None
    }
}

/// Classify a positive improper integral `∫_0^∞ exp(g)` numerically.
fn classify_exp_integral(label: String, g: impl Fn(f64) -> f64, cfg: &QuadConfig) -> (Verdict, TailRecord) {
    let f = ln_integrand(g);
    let r = integrate_to_infinity(&f, 0.0, 1.0, cfg);
    let rec = TailRecord::from_result(label, &r);
    if r.converged {
        return (Verdict::HoldsNumericHeuristic, rec);
    }
    let v = match panels_grow(&f, cfg) {
        Some(true) => Verdict::FailsNumericHeuristic,
        _ => Verdict::Inconclusive,
    };
    (v, rec)
}

const EPS0_MUS: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

fn eps0_numeric(w: &WeightFunction, cfg: &QuadConfig) -> (Verdict, Witness, String) {
    let mut wit = Witness::default();
    let mut all = true;
    for mu in EPS0_MUS {
        let r = eps0_integral(w, mu, cfg).expect("positive mu");
        all &= r.converged;
        wit.integrals.push(TailRecord::from_result(format!("int w e^(-{mu} t)"), &r));
    }
    if all {
        return (Verdict::HoldsNumericHeuristic, wit, "converged for every tested mu".into());
    }
    // growth-rate test: rho(T) = ln w(T)/T non-decreasing on the last doublings
    let rho: Vec<f64> = (10..=40)
        .map(|j| {
            let t = 2f64.powi(j);
            w.ln_eval(t) / t
        })
        .collect();
    let tail = &rho[rho.len() - 9..];
    let growing = tail[0] > 0.0 && tail.windows(2).all(|p| p[1] >= p[0] * (1.0 - 1e-12));
    if growing {
        (
            Verdict::FailsNumericHeuristic,
            wit,
            format!("ln w(T)/T non-decreasing up to T=2^40 (last value {:.4e})", tail[8]),
        )
    } else {
        (Verdict::Inconclusive, wit, "a tail integral did not converge within budget".into())
    }
}

fn n_inside_witness(w: &WeightFunction, cfg: &QuadConfig) -> (Verdict, Witness) {
    let mut wit = Witness::default();
    let mut last = Verdict::Inconclusive;
    for c in [2.0, 3.0, 4.0, 8.0, 16.0] {
        let (v, rec) = classify_exp_integral(
            format!("int e^(w(t)-w({c}t))"),
            |t| w.eval_saturating(t) - w.eval_saturating(c * t),
            cfg,
        );
        wit.integrals.push(rec);
        if v.holds() {
            wit.c = Some(c);
            return (v, wit);
        }
        last = v;
    }
    (last, wit)
}

fn n_outside_witness(w: &WeightFunction, cfg: &QuadConfig) -> (Verdict, Witness) {
    let mut wit = Witness::default();
    let mut last = Verdict::Inconclusive;
    for c in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        let (v, rec) = classify_exp_integral(format!("int e^(-{c} w(t))"), |t| -c * w.eval_saturating(t), cfg);
        wit.integrals.push(rec);
        if v.holds() {
            wit.c = Some(c);
            return (v, wit);
        }
        last = v;
    }
    (last, wit)
}

fn analytic_alpha_c(w: &WeightFunction) -> Option<f64> {
    let l2 = std::f64::consts::LN_2;
    match w.family {
        Family::Power { a } => Some(2f64.powf(a)),
        Family::PowerLog { a, b } => Some(2f64.powf(a) * (1.0 + l2).powf(b.max(0.0))),
        Family::LogPower { b } => Some((1.0 + l2).powf(b)),
        Family::ExpPowerLog { a, b } if a == 0.0 && b <= 1.0 => Some(l2.powf(b).exp()),
        _ => None,
    }
}

/// Witness `(C, A)` for the single-weight condition `w(2t) ≤ C w(t) + log A`,
/// with `A` measured on the sample ladder. `None` if no candidate keeps the
/// excess bounded.
pub fn alpha_single_witness(w: &WeightFunction) -> Option<(f64, f64)> {
    let ts = sup_samples();
    let mut cands: Vec<f64> = analytic_alpha_c(w).into_iter().collect();
    cands.extend([1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
    for c in cands {
        let ex: Vec<f64> = ts.iter().map(|&t| w.eval(2.0 * t) - c * w.eval(t)).collect();
        if ex.iter().any(|e| !e.is_finite()) {
            continue;
        }
        let max = ex.iter().cloned().fold(0.0, f64::max);
        // excess must not be growing at the end of the ladder
        let n = ex.len();
        let late = ex[n - 40..].iter().cloned().fold(f64::MIN, f64::max);
        let early = ex[..n - 40].iter().cloned().fold(0.0, f64::max);
        if late <= early.max(0.0) + 1e-9 * (1.0 + early.abs()) && max < 700.0 {
            return Some((c, (max * (1.0 + 1e-9) + 1e-12).exp()));
        }
    }
    None
}

/// Witness `(C, A)` of `2w(t) ≤ w(Ct) + log A` if one is found on samples.
pub fn doubling_witness(w: &WeightFunction) -> Option<(f64, f64)> {
    let ts = sup_samples();
    let mut c = 2.0;
    while c <= 1024.0 {
        let ex: Vec<f64> = ts.iter().map(|&t| 2.0 * w.eval(t) - w.eval(c * t)).collect();
        if ex.iter().all(|e| e.is_finite()) {
            let n = ex.len();
            let late = ex[n - 40..].iter().cloned().fold(f64::MIN, f64::max);
            let early = ex[..n - 40].iter().cloned().fold(0.0, f64::max);
            let max = ex.iter().cloned().fold(0.0, f64::max);
            if late <= early + 1e-9 * (1.0 + early.abs()) && max < 700.0 {
                return Some((c, (max * (1.0 + 1e-9) + 1e-12).exp()));
            }
        }
        c *= 2.0;
    }
    None
}

/// Bounded search for the (α) witness of index `n` on an explicit list.
fn alpha_scan(ws: &WeightSystem, n: usize) -> Option<(usize, f64)> {
    let ts = sup_samples();
    let wn = ws.member(n).ok()?;
    let top = ws.max_index().map_or(n + 16, |k| k.min(n + 16));
    for m in n + 1..=top {
        let wm = ws.member(m).ok()?;
        let max = ts.iter().map(|&t| wn.eval(2.0 * t) - wm.eval(t)).fold(0.0, |acc: f64, e| {
            if e.is_nan() {
                f64::INFINITY
            } else {
                acc.max(e)
            }
        });
        for k in 0..=64 {
            if max <= k as f64 * std::f64::consts::LN_2 {
                return Some((m, 2f64.powi(k)));
            }
        }
    }
    None
}

/// The (α) witness `(M, A)` for index `n`, from the system structure when
/// available and from a bounded scan otherwise.
pub(crate) fn alpha_witness(ws: &WeightSystem, n: usize) -> Option<(usize, f64)> {
    match &ws.kind {
        SystemKind::ScaledArgument(_) => Some((2 * n, 1.0)),
        SystemKind::ScaledValue(w) => {
            let (c, a) = alpha_single_witness(w)?;
            let m = ((n as f64 * c).ceil() as usize).max(n + 1);
            Some((m, a.powi(n as i32)))
        }
        SystemKind::Explicit(_) => alpha_scan(ws, n),
    }
}

fn n_system_scan(ws: &WeightSystem, cfg: &QuadConfig) -> (Verdict, Witness) {
    let mut wit = Witness::default();
    let top = ws.max_index().unwrap_or(17);
    let w1 = ws.member(1).unwrap();
    let mut last = Verdict::Inconclusive;
    for m in 2..=top.min(17) {
        let wm = ws.member(m).unwrap();
        let (v, rec) = classify_exp_integral(
            format!("int e^(w_1 - w_{m})"),
            |t| w1.eval_saturating(t) - wm.eval_saturating(t),
            cfg,
        );
        wit.integrals.push(rec);
        if v.holds() {
            wit.m = Some(m);
            return (v, wit);
        }
        last = v;
    }
    (last, wit)
}

fn report(condition: Condition, verdict: Verdict, witness: Witness, note: impl Into<String>) -> ConditionReport {
    ConditionReport { condition, verdict, witness, note: note.into() }
}

/// The numeric heuristic for a single weight, bypassing the family rules:
/// (ε)₀ from tail integrals, (α) from the witness search, (N)_i and (N)_o from
/// their integral witnesses.
pub fn numeric_verdict(w: &WeightFunction, cond: Condition, cfg: &QuadConfig) -> ConditionReport {
    match cond {
        Condition::Eps0 => {
            let (v, wit, note) = eps0_numeric(w, cfg);
            report(cond, v, wit, note)
        }
        Condition::Alpha => {
            let found = alpha_single_witness(w);
            let mut wit = Witness::default();
            if let Some((c, a)) = found {
                wit.c = Some(c);
                wit.a = Some(a);
            }
            let v = if found.is_some() { Verdict::HoldsNumericHeuristic } else { Verdict::FailsNumericHeuristic };
            report(cond, v, wit, "candidates C in {1,..,64} on t in [0, 1e8]")
        }
        Condition::NInside | Condition::NSystem => {
            let (v, wit) = n_inside_witness(w, cfg);
            report(cond, v, wit, "C in {2,3,4,8,16}")
        }
        Condition::NOutside => {
            let (v, wit) = n_outside_witness(w, cfg);
            report(cond, v, wit, "C in {0.5,..,16}")
        }
    }
}

/// Classify condition `cond` for `W`: analytic rules for built-in families,
/// labelled numeric heuristics otherwise.
pub fn check_condition(ws: &WeightSystem, cond: Condition, cfg: &QuadConfig) -> ConditionReport {
    use Condition::*;
    let gen = ws.generator();
    let rules = gen.and_then(family_rules);
    match (&ws.kind, cond) {
        (SystemKind::ScaledArgument(_), Alpha) => {
            let wit = Witness { m: Some(2), a: Some(1.0), ..Default::default() };
            report(cond, Verdict::HoldsAnalytic, wit, "w_N(2t) = w_{2N}(t)")
        }
        (SystemKind::ScaledValue(w), Alpha) => {
            let found = alpha_single_witness(w);
            let mut wit = Witness::default();
            if let Some((c, a)) = found {
                wit.c = Some(c);
                wit.a = Some(a);
                wit.m = Some((c.ceil() as usize).max(2));
            }
            match &rules {
                Some(r) => report(cond, Verdict::analytic(r.alpha), wit, "single-weight (alpha) rule"),
                None => {
                    let v =
                        if found.is_some() { Verdict::HoldsNumericHeuristic } else { Verdict::FailsNumericHeuristic };
                    report(cond, v, wit, "candidates C in {1,..,64} on t in [0, 1e8]")
                }
            }
        }
        (SystemKind::Explicit(_), Alpha) => match alpha_scan(ws, 1) {
            Some((m, a)) => {
                let wit = Witness { m: Some(m), a: Some(a), ..Default::default() };
                report(cond, Verdict::HoldsNumericHeuristic, wit, "scan M in N+1..N+16, A = 2^k, N = 1")
            }
            None => report(
                cond,
                Verdict::FailsNumericHeuristic,
                Witness::default(),
                "no witness in M in N+1..N+16, A <= 2^64",
            ),
        },
        (SystemKind::Explicit(v), Eps0) => {
            // the whole system satisfies (ε)₀ iff every member does; test the largest
            let (verdict, wit, note) = eps0_numeric(v.last().unwrap(), cfg);
            report(cond, verdict, wit, format!("largest member: {note}"))
        }
        (_, Eps0) => {
            let w = gen.unwrap();
            match &rules {
                Some(r) => report(cond, Verdict::analytic(r.eps0), Witness::default(), "family rule"),
                None => {
                    let (v, wit, note) = eps0_numeric(w, cfg);
                    report(cond, v, wit, note)
                }
            }
        }
        (SystemKind::Explicit(_), NSystem) => {
            let (v, wit) = n_system_scan(ws, cfg);
            report(cond, v, wit, "N = 1, scan of M")
        }
        (SystemKind::ScaledArgument(_), NSystem) => {
            let mut r = check_condition(ws, NInside, cfg);
            r.condition = NSystem;
            r.note = format!("W_w satisfies (N) iff w satisfies (N)_i; {}", r.note);
            r
        }
        (SystemKind::ScaledValue(_), NSystem) => {
            let mut r = check_condition(ws, NOutside, cfg);
            r.condition = NSystem;
            r.note = format!("W~_w satisfies (N) iff w satisfies (N)_o; {}", r.note);
            r
        }
        (SystemKind::Explicit(v), NInside | NOutside) => {
            let w = &v[0];
            let (verdict, wit) = if cond == NInside { n_inside_witness(w, cfg) } else { n_outside_witness(w, cfg) };
            report(cond, verdict, wit, "single-weight condition applied to the first member")
        }
        (_, NInside) => {
            let w = gen.unwrap();
            let (v, wit) = n_inside_witness(w, cfg);
            match &rules {
                Some(r) => report(cond, Verdict::analytic(r.n_inside), wit, "family rule; C from numeric search"),
                None => report(cond, v, wit, "C in {2,3,4,8,16}"),
            }
        }
        (_, NOutside) => {
            let w = gen.unwrap();
            let (v, wit) = n_outside_witness(w, cfg);
            match &rules {
                Some(r) => report(cond, Verdict::analytic(r.n_outside), wit, "family rule; C from numeric search"),
                None => report(cond, v, wit, "C in {0.5,..,16}"),
            }
        }
    }
}

/// `(M, A)` with `w_N(t+s) ≤ w_M(t) + w_M(s) + log A`, validated on random pairs.
///
/// Follows `w_N(t+s) ≤ w_N(2t) + w_N(2s)` and the (α) witness, so the returned
/// `A` is the square of the (α) constant. `W̃_w` with an exactly subadditive
/// generator short-cuts to `(N, 1)`.
pub fn subadditivity_constants(ws: &WeightSystem, n: usize) -> Result<(usize, f64)> {
    let (m, a) = match &ws.kind {
        SystemKind::ScaledValue(w) if w.is_exactly_subadditive() => (n, 1.0),
        _ => {
            let (m, a) =
                alpha_witness(ws, n).ok_or_else(|| Error::Refused(format!("no (alpha) witness for index {n}")))?;
            (m, a * a)
        }
    };
    let wn = ws.member(n)?;
    let wm = ws.member(m)?;
    let log_a = a.ln();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + n as u64);
    let mut pairs: Vec<(f64, f64)> = vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
    for _ in 0..10_000 {
        let t = if rng.gen_bool(0.05) { 0.0 } else { 10f64.powf(rng.gen_range(-6.0..6.0)) };
        let s = 10f64.powf(rng.gen_range(-6.0..6.0));
        pairs.push((t, s));
    }
    for (t, s) in pairs {
        let lhs = wn.eval(t + s);
        let rhs = wm.eval(t) + wm.eval(s) + log_a;
        if !(lhs.is_finite() && rhs.is_finite()) {
            continue;
        }
        if lhs > rhs + 1e-10 * (1.0 + rhs.abs()) {
            return Err(Error::Counterexample { t, s, excess: lhs - rhs });
        }
    }
    Ok((m, a))
}

/// `∫_0^∞ e^{w_m(t) - w_k(t)} dt`, the (N) integral for one index pair.
pub fn n_pair_integral(ws: &WeightSystem, m: usize, k: usize, cfg: &QuadConfig) -> Result<(Verdict, TailRecord)> {
    let (wm, wk) = (ws.member(m)?, ws.member(k)?);
    Ok(classify_exp_integral(format!("int e^(w_{m}-w_{k})"), |t| wm.eval_saturating(t) - wk.eval_saturating(t), cfg))
}

/// Smallest `log C ≥ 0` with `w_n(t+s) ≤ w_m(t) + w_m(s) + log C` on a
/// sample grid; `None` when the excess still grows at the end of the grid.
pub fn subadditivity_excess(ws: &WeightSystem, n: usize, m: usize) -> Result<Option<f64>> {
    let (wn, wm) = (ws.member(n)?, ws.member(m)?);
    let ts: Vec<f64> = std::iter::once(0.0).chain((0..=120).map(|k| 1e-6 * 10f64.powf(k as f64 / 10.0))).collect();
    let excess = |t: f64, s: f64| wn.eval(t + s) - wm.eval(t) - wm.eval(s);
    let mut sup = 0.0f64;
    for &t in &ts {
        for &s in &ts {
            let e = excess(t, s);
            if e.is_finite() {
                sup = sup.max(e);
            }
        }
    }
    let edge = ts[ts.len() - 1];
    let growing = excess(edge, edge) > excess(0.5 * edge, 0.5 * edge) + 1e-9 && excess(edge, edge) > 0.0;
    Ok((!growing).then_some(sup))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadConfig {
        QuadConfig::default()
    }

    #[test]
    fn eps0_tail_examples() {
        let (v, ok) = eps0_tail_integral(&WeightFunction::power(1.0), 1.0, &cfg()).unwrap();
        assert!(ok && (v - 1.0).abs() < 1e-6);
        let (v, ok) = eps0_tail_integral(&WeightFunction::power(2.0), 1.0, &cfg()).unwrap();
        assert!(ok && (v - 2.0).abs() < 1e-6);
        let (_, ok) = eps0_tail_integral(&WeightFunction::exp_power_log(1.0, 0.0), 0.5, &cfg()).unwrap();
        assert!(!ok);
        assert!(eps0_tail_integral(&WeightFunction::power(1.0), 0.0, &cfg()).is_err());
    }

    #[test]
    fn scaled_value_power_log_alpha_and_n_outside() {
        for (a, b) in [(0.5, -2.0), (1.0, 0.0), (2.0, 1.0)] {
            let ws = WeightSystem::scaled_value(WeightFunction::power_log(a, b));
            assert_eq!(check_condition(&ws, Condition::Alpha, &cfg()).verdict, Verdict::HoldsAnalytic);
            assert_eq!(check_condition(&ws, Condition::NOutside, &cfg()).verdict, Verdict::HoldsAnalytic);
        }
    }

    #[test]
    fn exp_linear_fails_eps0() {
        let ws = WeightSystem::scaled_argument(WeightFunction::exp_power_log(1.0, 0.0));
        assert_eq!(check_condition(&ws, Condition::Eps0, &cfg()).verdict, Verdict::FailsAnalytic);
    }

    #[test]
    fn linear_n_inside_witness() {
        let ws = WeightSystem::scaled_argument(WeightFunction::power(1.0));
        let r = check_condition(&ws, Condition::NInside, &cfg());
        assert_eq!(r.verdict, Verdict::HoldsAnalytic);
        assert_eq!(r.witness.c, Some(2.0));
        // ∫ e^{t-2t} dt = 1
        assert!((r.witness.integrals[0].value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn subadditivity_examples() {
        let ws = WeightSystem::scaled_argument(WeightFunction::power(2.0));
        assert_eq!(subadditivity_constants(&ws, 1).unwrap(), (2, 1.0));
        let ws = WeightSystem::scaled_argument(WeightFunction::exp_power_log(0.5, 0.0));
        assert_eq!(subadditivity_constants(&ws, 1).unwrap(), (2, 1.0));
        let ws = WeightSystem::scaled_value(WeightFunction::power(1.0));
        assert_eq!(subadditivity_constants(&ws, 1).unwrap(), (1, 1.0));
    }

    #[test]
    fn tabulated_uses_heuristics() {
        let w = WeightFunction::tabulated(vec![0.0, 1.0, 10.0], vec![0.0, 1.0, 4.0]).unwrap();
        let ws = WeightSystem::scaled_argument(w);
        let r = check_condition(&ws, Condition::Eps0, &cfg());
        assert_eq!(r.verdict, Verdict::HoldsNumericHeuristic);
        assert_eq!(r.witness.integrals.len(), 4);
        assert!(r.witness.integrals.iter().all(|t| t.truncation > 0.0));
    }

    #[test]
    fn explicit_system_alpha_scan() {
        let ws = WeightSystem::explicit((1..=6).map(|k| WeightFunction::power(1.0).scale_value(k as f64)).collect())
            .unwrap();
        let r = check_condition(&ws, Condition::Alpha, &cfg());
        assert_eq!(r.verdict, Verdict::HoldsNumericHeuristic);
        assert_eq!(r.witness.m, Some(2));
    }

    #[test]
    fn counterexample_is_reported() {
        // an explicit system whose (α) scan succeeds but whose subadditivity needs more:
        // w_1 = t², w_2 = 4t² passes (α) but not with a smaller M; force a violation by
        // checking a fabricated witness directly
        let ws = WeightSystem::explicit(vec![WeightFunction::power(2.0), WeightFunction::power(2.0).scale_value(1.5)])
            .unwrap();
        assert!(matches!(subadditivity_constants(&ws, 1), Err(Error::Refused(_)) | Err(Error::Counterexample { .. })));
    }
}
