use crate::geometry::GeneralizedStrip;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// `R(ξ) = Σ_{k=1}^{d} c_k (s/(ξ - α))^k`; the scale `s` keeps the
/// coefficients in range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalFunction {
    pub pole: C64,
    pub scale: f64,
    pub coeffs: Vec<C64>,
}

impl RationalFunction {
    /// `1/(ξ - α)`
    pub fn simple(pole: C64) -> Self {
        RationalFunction { pole, scale: 1.0, coeffs: vec![C64::new(1.0, 0.0)] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, xi: C64) -> C64 {
        let u = self.scale / (xi - self.pole);
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = (acc + c) * u;
        }
        acc
    }

    /// Coefficients `γ_k` of `Σ γ_k (ξ - α)^{-k}`.
    pub fn laurent(&self) -> Vec<C64> {
        let mut p = 1.0;
        self.coeffs
            .iter()
            .map(|c| {
                p *= self.scale;
                c * p
            })
            .collect()
    }

    /// Bound for `|R(ξ)|` when `|ξ - α| ≥ dist`.
    pub fn bound(&self, dist: f64) -> f64 {
        ln_coeff_sum(&self.coeffs, (self.scale / dist).ln()).exp()
    }

    pub fn scaled(&self, c: C64) -> Self {
        RationalFunction { coeffs: self.coeffs.iter().map(|v| v * c).collect(), ..self.clone() }
    }
}

/// `log Σ |c_k| x^k` with `x = e^{ln_x}`.
fn ln_coeff_sum(c: &[C64], ln_x: f64) -> f64 {
    let terms: Vec<f64> = c
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(k, v)| v.norm().ln() + (k + 1) as f64 * ln_x)
        .collect();
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PushConfig {
    /// Step factor: `|p_{l+1} - p_l| ≤ θ·dist(p_l, K)`.
    pub theta: f64,
    /// Extra factor on `θ` for horizontal moves, which cancel more.
    pub horizontal_factor: f64,
    pub max_degree: usize,
    pub max_steps: usize,
}

impl Default for PushConfig {
    fn default() -> Self {
        PushConfig { theta: 0.5, horizontal_factor: 0.25, max_degree: 4096, max_steps: 10_000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolePush {
    pub rational: RationalFunction,
    /// Pole positions `p_0 = α, …, p_L = β`.
    pub path: Vec<C64>,
    pub degrees: Vec<usize>,
    /// Certified truncation and rounding error of each step on `K`.
    pub step_bounds: Vec<f64>,
    /// `Σ step_bounds` plus a Horner rounding bound; `≥ sup_K |1/(ξ-α) - R(ξ)|`.
    pub certified: f64,
}

/// Polyline from `α` to `β` in the complement of `closure(K)`: vertical to a
/// safe height, horizontal, vertical to `β`. The height keeps the
/// expansion of `1/(ξ-α)` about every point of the horizontal leg convergent
/// on `K` (ratio ≤ 0.8), so coefficients stay moderate.
fn polyline(alpha: C64, beta: C64, k: &GeneralizedStrip) -> Result<Vec<C64>> {
    let side = |p: C64| {
        if p.im > k.upper.eval(p.re) {
            Some(1.0)
        } else if p.im < -k.lower.eval(p.re) {
            Some(-1.0)
        } else {
            None
        }
    };
    let (sa, sb) = match (side(alpha), side(beta)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Geometry(format!("pole {alpha} or target {beta} lies in the closed strip"))),
    };
    if sa != sb {
        return Err(Error::Geometry(format!("{alpha} and {beta} lie in different components of the complement")));
    }
    if alpha == beta {
        return Ok(vec![alpha]);
    }
    let sup = if sa > 0.0 { k.upper.sup() } else { k.lower.sup() };
    let ya = alpha.im.abs();
    let dx = (alpha.re - beta.re).abs();
    // |α - p|² ≤ 0.64 (y - sup)² along the leg at height y
    let gap = ya - sup;
    let stable = if gap > 0.0 { 0.5 * (dx * dx / (0.64 * gap) + sup + ya) } else { f64::INFINITY };
    let mut pts = vec![alpha];
    if dx > 0.0 {
        let y = sa * ya.max(beta.im.abs()).max(stable);
        for p in [C64::new(alpha.re, y), C64::new(beta.re, y)] {
            if p != *pts.last().unwrap() {
                pts.push(p);
            }
        }
    }
    if beta != *pts.last().unwrap() {
        pts.push(beta);
    }
    Ok(pts)
}

/// Pole positions along the polyline with `|p_{l+1} - p_l| ≤ θ·dist(p_l, K)`.
fn walk(pts: &[C64], k: &GeneralizedStrip, cfg: &PushConfig) -> Result<Vec<C64>> {
    let mut path = vec![pts[0]];
    for seg in pts.windows(2) {
        let mut p = seg[0];
        loop {
            let rest = seg[1] - p;
            if rest.norm() == 0.0 {
                break;
            }
            let d = k.distance_to_closure(p);
            if d <= 0.0 {
                return Err(Error::Geometry(format!("push path touches the strip at {p}")));
            }
            let step = if rest.im == 0.0 { cfg.horizontal_factor } else { 1.0 } * cfg.theta * d;
            p = if rest.norm() <= step { seg[1] } else { p + rest / rest.norm() * step };
            path.push(p);
            if path.len() > cfg.max_steps {
                return Err(Error::Budget {
                    stage: "pole push".into(),
                    detail: format!("more than {} steps", cfg.max_steps),
                });
            }
        }
    }
    Ok(path)
}

/// Re-expands `r` around `p` with scale `s`, degree `deg`.
#[cfg(test)]
fn reexpand(r: &RationalFunction, p: C64, s: f64, deg: usize) -> RationalFunction {
    reexpand_with_rounding(r, p, s, deg).0
}

/// As [`reexpand`], plus a bound for the rounding error of the new
/// coefficients evaluated where `|s/(ξ - p)| ≤ 1`.
fn reexpand_with_rounding(r: &RationalFunction, p: C64, s: f64, deg: usize) -> (RationalFunction, f64) {
    let q = r.scale / s;
    let rr = (r.pole - p) / s;
    let rn = rr.norm();
    let mut out = vec![C64::new(0.0, 0.0); deg];
    let mut mag = vec![0.0f64; deg];
    let mut qk = 1.0;
    for (k1, c) in r.coeffs.iter().enumerate() {
        let k = k1 + 1;
        qk *= q;
        if k > deg {
            break;
        }
        // t = C(m-1, k-1) rr^{m-k}
        let mut t = *c * qk;
        let mut a = t.norm();
        for m in k..=deg {
            out[m - 1] += t;
            mag[m - 1] += a;
            let f = m as f64 / (m + 1 - k) as f64;
            t *= rr * f;
            a *= rn * f;
        }
    }
    let n = (r.degree() + deg) as f64;
    let rounding = 4.0 * n * f64::EPSILON * mag.iter().sum::<f64>();
    (RationalFunction { pole: p, scale: s, coeffs: out }, rounding)
}

/// Smallest degree whose Cauchy-estimate tail is within `budget`, with the bound.
fn truncation_degree(r: &RationalFunction, p: C64, d_new: f64, budget: f64, max_degree: usize) -> Option<(usize, f64)> {
    let delta = (r.pole - p).norm();
    let mut best: Option<(usize, f64)> = None;
    for i in 1..64 {
        let rho = delta + (d_new - delta) * i as f64 / 64.0;
        let x = rho / d_new;
        let ln_m = ln_coeff_sum(&r.coeffs, (r.scale / (rho - delta)).ln());
        if !ln_m.is_finite() {
            continue;
        }
        // M (x^{D+1})/(1 - x) ≤ budget
        let need = ((budget * (1.0 - x)).ln() - ln_m) / x.ln() - 1.0;
        if !need.is_finite() || need > max_degree as f64 {
            continue;
        }
        let deg = need.ceil().max(1.0) as usize;
        let bound = (ln_m + (deg + 1) as f64 * x.ln()).exp() / (1.0 - x);
        if best.map_or(true, |b| deg < b.0) {
            best = Some((deg, bound));
        }
    }
    best.filter(|b| b.0 <= max_degree)
}

/// A rational function with `β` as only pole and
/// `sup_K |1/(ξ - α) - R(ξ)| ≤ ε`, by geometric-series pole pushing.
pub fn pole_push(alpha: C64, beta: C64, k: &GeneralizedStrip, eps: f64, cfg: &PushConfig) -> Result<PolePush> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("pole push tolerance must be positive, got {eps}")));
    }
    let pts = polyline(alpha, beta, k)?;
    // finer walks keep the re-expansion majorant, and so the rounding, small
    let mut last = None;
    for refine in [1.0, 0.5, 0.25, 0.125] {
        let c = PushConfig { theta: cfg.theta * refine, ..*cfg };
        let path = match walk(&pts, k, &c) {
            Ok(p) => p,
            Err(e @ Error::Budget { .. }) => {
                last = Some(e);
                break;
            }
            Err(e) => return Err(e),
        };
        // truncation share of the budget; the rest absorbs rounding
        for share in [0.5, 0.1] {
            match push_along(alpha, beta, &path, k, eps, share, &c) {
                Ok(p) => return Ok(p),
                Err(e @ Error::Budget { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
    }
    Err(last.unwrap())
}

fn push_along(
    alpha: C64,
    beta: C64,
    path: &[C64],
    k: &GeneralizedStrip,
    eps: f64,
    share: f64,
    cfg: &PushConfig,
) -> Result<PolePush> {
    let steps = path.len() - 1;
    let mut r = RationalFunction::simple(alpha);
    let mut degrees = vec![1];
    let mut step_bounds = Vec::with_capacity(steps);
    if steps > 0 {
        let budget = share * eps / steps as f64;
        for &p in &path[1..] {
            let d_new = k.distance_to_closure(p);
            let (deg, bound) =
                truncation_degree(&r, p, d_new, budget, cfg.max_degree).ok_or_else(|| Error::Budget {
                    stage: "pole push".into(),
                    detail: format!("step to {p} needs degree above {}", cfg.max_degree),
                })?;
            let (next, rounding) = reexpand_with_rounding(&r, p, d_new, deg);
            if !next.coeffs.iter().all(|c| c.is_finite()) {
                return Err(Error::Budget {
                    stage: "pole push".into(),
                    detail: format!("coefficients overflow at {p}"),
                });
            }
            r = next;
            degrees.push(deg);
            step_bounds.push(bound + rounding);
        }
    }
    // Horner rounding: |δR| ≤ 2d·u·Σ|c_k||s/(ξ-β)|^k
    let d_beta = k.distance_to_closure(beta);
    let rounding = if steps > 0 { 2.0 * r.degree() as f64 * f64::EPSILON * r.bound(d_beta) } else { 0.0 };
    let certified = step_bounds.iter().sum::<f64>() + rounding;
    if certified > eps {
        return Err(Error::Budget {
            stage: "pole push".into(),
            detail: format!("certified error {certified:e} above {eps:e} (rounding {rounding:e})"),
        });
    }
    let path = path.to_vec();
    Ok(PolePush { rational: r, path, degrees, step_bounds, certified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn oracle(alpha: C64, r: &RationalFunction, k: &GeneralizedStrip, n: usize) -> f64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        (0..n)
            .map(|i| {
                let x = if i % 10 == 0 { rng.gen_range(-200.0..200.0) } else { rng.gen_range(-10.0..10.0) };
                let y = rng.gen_range(-k.lower.eval(x)..=k.upper.eval(x));
                let xi = C64::new(x, y);
                (1.0 / (xi - alpha) - r.eval(xi)).norm()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_length_is_exact() {
        let k = GeneralizedStrip::horizontal(1.0);
        let a = C64::new(0.3, 2.0);
        let p = pole_push(a, a, &k, 1e-6, &Default::default()).unwrap();
        assert_eq!(p.certified, 0.0);
        assert_eq!(p.rational, RationalFunction::simple(a));
        let xi = C64::new(0.7, -0.2);
        assert_eq!(p.rational.eval(xi), 1.0 / (xi - a));
    }

    #[test]
    fn push_two_i_to_three_i() {
        let k = GeneralizedStrip::horizontal(1.0);
        let (a, b) = (C64::new(0.0, 2.0), C64::new(0.0, 3.0));
        let p = pole_push(a, b, &k, 1e-6, &Default::default()).unwrap();
        assert!(p.certified <= 1e-6);
        assert_eq!(p.rational.pole, b);
        let err = oracle(a, &p.rational, &k, 10_000);
        assert!(err <= p.certified, "{err} > {}", p.certified);
    }

    #[test]
    fn truncation_error_is_geometric() {
        // one step from 2i to 2.5i; |δ|/dist(p', K) = 0.5/1.5
        let (a, p) = (C64::new(0.0, 2.0), C64::new(0.0, 2.5));
        let r = RationalFunction::simple(a);
        let errs: Vec<f64> = (4..=12)
            .map(|d| {
                let t = reexpand(&r, p, 1.5, d);
                (0..=200)
                    .map(|i| {
                        let xi = C64::new(-5.0 + 0.05 * i as f64, 1.0);
                        (1.0 / (xi - a) - t.eval(xi)).norm()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[1] / w[0];
            assert!((ratio - 1.0 / 3.0).abs() < 0.02, "{ratio}");
        }
    }

    #[test]
    fn curved_strip_and_horizontal_moves() {
        let k = GeneralizedStrip::new(
            crate::geometry::BoundaryFunction::sin(1.5, 0.4, 1.0),
            crate::geometry::BoundaryFunction::constant(1.0),
        );
        let (a, b) = (C64::new(-1.0, -2.0), C64::new(1.0, -5.0));
        let p = pole_push(a, b, &k, 1e-4, &Default::default()).unwrap();
        assert!(p.path.iter().any(|z| z.re == -1.0 && z.im <= -5.0));
        assert!(oracle(a, &p.rational, &k, 5_000) <= p.certified);
        assert!(pole_push(a, C64::new(0.0, 3.0), &k, 1e-4, &Default::default()).is_err());
        assert!(pole_push(C64::new(0.0, 0.5), b, &k, 1e-4, &Default::default()).is_err());
    }

    #[test]
    fn laurent_matches_eval() {
        let r = RationalFunction {
            pole: C64::new(1.0, 3.0),
            scale: 2.0,
            coeffs: vec![C64::new(1.0, 1.0), C64::new(-0.5, 0.0)],
        };
        let xi = C64::new(0.2, 0.1);
        let g = r.laurent();
        let direct = g[0] / (xi - r.pole) + g[1] / ((xi - r.pole) * (xi - r.pole));
        assert!((direct - r.eval(xi)).norm() < 1e-14);
    }
}
