//! Gauss–Legendre rules, adaptive Gauss–Kronrod (7/15) integration and
//! doubling truncation for integrals over `[a, ∞)`.

use crate::C64;
use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

/// Values that can be integrated: `f64` and `Complex64`.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of subintervals for one adaptive integral.
    pub max_intervals: usize,
    /// Maximum number of doublings of the truncation point for improper integrals.
    pub max_doublings: usize,
    /// An improper integral is declared convergent only when successive
    /// doubling panels shrink at least by this ratio.
    pub tail_ratio: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { abs_tol: 1e-10, rel_tol: 1e-8, max_intervals: 2000, max_doublings: 60, tail_ratio: 0.5 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod panel with the embedded 7-point Gauss error estimate.
pub fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = hl * XGK[j];
        let s = f(c - x) + f(c + x);
        rk = rk + s * WGK[j];
        if j % 2 == 1 {
            rg = rg + s * WG[j / 2];
        }
    }
    let val = rk * hl;
    let err = ((rk - rg) * hl).magnitude();
    (val, err)
}

/// Adaptive integration over `[a, b]` with global bisection of the worst panel.
pub fn integrate<T: QuadValue, F: Fn(f64) -> T>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> QuadResult<T> {
    integrate_breaks(f, &[a, b], cfg)
}

/// Adaptive integration over consecutive intervals of `points` (sorted).
pub fn integrate_breaks<T: QuadValue, F: Fn(f64) -> T>(f: F, points: &[f64], cfg: &QuadConfig) -> QuadResult<T> {
    let mut panels: Vec<(f64, f64, T, f64)> = Vec::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(&f, w[0], w[1]);
            panels.push((w[0], w[1], v, e));
        }
    }
    let mut evals = 15 * panels.len();
    loop {
        let total = panels.iter().fold(T::zero(), |acc, p| acc + p.2);
        let err: f64 = panels.iter().map(|p| p.3).sum();
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.magnitude());
        if !err.is_finite() || !total.magnitude().is_finite() {
            return QuadResult { value: total, error: err, evaluations: evals, converged: false };
        }
        if err <= tol || panels.len() >= cfg.max_intervals {
            return QuadResult { value: total, error: err, evaluations: evals, converged: err <= tol };
        }
        let (k, _) =
            panels.iter().enumerate().fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (a, b, _, _) = panels.swap_remove(k);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            // cannot split further in floating point
            return QuadResult { value: total, error: err, evaluations: evals, converged: false };
        }
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        evals += 30;
        panels.push((a, m, v1, e1));
        panels.push((m, b, v2, e2));
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ImproperResult<T> {
    pub value: T,
    /// Last truncation point reached.
    pub truncation: f64,
    /// Estimated remaining tail (geometric extrapolation of the panel ratio).
    pub tail_bound: f64,
    pub converged: bool,
    pub doublings: usize,
}

/// `∫_a^∞ f` by doubling truncation: panels `[a, a+T], [a+T, a+2T], …`.
///
/// Convergence is declared when the panel ratio drops below `cfg.tail_ratio`
/// and the geometric tail estimate is below the relative/absolute tolerance.
pub fn integrate_to_infinity<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    first: f64,
    cfg: &QuadConfig,
) -> ImproperResult<T> {
    let mut lo = a;
    let mut width = first;
    let mut total = T::zero();
    let mut prev: Option<f64> = None;
    for k in 0..cfg.max_doublings {
        let hi = lo + width;
        let r = integrate(&f, lo, hi, cfg);
        let p = r.value.magnitude();
        if !p.is_finite() || !r.value.magnitude().is_finite() {
            return ImproperResult {
                value: total,
                truncation: lo,
                tail_bound: f64::INFINITY,
                converged: false,
                doublings: k,
            };
        }
        total = total + r.value;
        let tot = total.magnitude();
        if p == 0.0 && k > 0 {
            return ImproperResult { value: total, truncation: hi, tail_bound: 0.0, converged: true, doublings: k };
        }
        if let Some(q) = prev {
            let ratio = if q > 0.0 { p / q } else { f64::INFINITY };
            if ratio < cfg.tail_ratio {
                let tail = p * ratio / (1.0 - ratio);
                if tail <= cfg.abs_tol.max(cfg.rel_tol * tot) {
                    return ImproperResult {
                        value: total,
                        truncation: hi,
                        tail_bound: tail,
                        converged: true,
                        doublings: k,
                    };
                }
            }
        }
        prev = Some(p);
        lo = hi;
        width *= 2.0;
    }
    ImproperResult {
        value: total,
        truncation: lo,
        tail_bound: f64::INFINITY,
        converged: false,
        doublings: cfg.max_doublings,
    }
}

/// `∫_{-∞}^{∞} f` as two one-sided improper integrals from `centre`.
pub fn integrate_real_line<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    centre: f64,
    first: f64,
    cfg: &QuadConfig,
) -> ImproperResult<T> {
    let r = integrate_to_infinity(&f, centre, first, cfg);
    let l = integrate_to_infinity(|t| f(2.0 * centre - t), centre, first, cfg);
    ImproperResult {
        value: r.value + l.value,
        truncation: r.truncation.min(l.truncation),
        tail_bound: r.tail_bound + l.tail_bound,
        converged: r.converged && l.converged,
        doublings: r.doublings.max(l.doublings),
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pm) = (p1, p0);
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Cached rules for the sizes used by the 2-D kernels.
pub fn gl_cached(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static G8: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static G16: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static G32: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    match n {
        8 => G8.get_or_init(|| gauss_legendre(8)),
        16 => G16.get_or_init(|| gauss_legendre(16)),
        32 => G32.get_or_init(|| gauss_legendre(32)),
        _ => panic!("no cached Gauss rule of size {n}"),
    }
}

/// Fixed Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_fixed<T: QuadValue, F: Fn(f64) -> T>(f: F, a: f64, b: f64, n: usize) -> T {
    let (x, w) = gl_cached(n);
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let mut s = T::zero();
    for (xi, wi) in x.iter().zip(w) {
        s = s + f(c + hl * xi) * *wi;
    }
    s * hl
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 8, 16, 32] {
            let (x, w) = gauss_legendre(n);
            let ws: f64 = w.iter().sum();
            assert!((ws - 2.0).abs() < 1e-13, "n={n}");
            // degree 2n-1 monomial t^(2n-2): ∫ = 2/(2n-1)
            let d = 2 * n - 2;
            let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(d as i32)).sum();
            assert!((s - 2.0 / (d as f64 + 1.0)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = integrate(|t: f64| t.sqrt().recip(), 0.0, 1.0, &QuadConfig::default());
        assert!((r.value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn improper_gamma_values() {
        let cfg = QuadConfig::default();
        let r = integrate_to_infinity(|t: f64| t * t * (-t).exp(), 0.0, 1.0, &cfg);
        assert!(r.converged);
        assert!((r.value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn improper_divergence_is_flagged() {
        let cfg = QuadConfig::default();
        let r = integrate_to_infinity(|t: f64| (0.5 * t).exp(), 0.0, 1.0, &cfg);
        assert!(!r.converged);
        let r = integrate_to_infinity(|t: f64| 1.0 / (1.0 + t), 0.0, 1.0, &cfg);
        assert!(!r.converged);
    }

    #[test]
    fn complex_integrand() {
        let r = integrate(|t: f64| C64::new(0.0, t).exp(), 0.0, std::f64::consts::PI, &QuadConfig::default());
        assert!((r.value - C64::new(0.0, 2.0)).norm() < 1e-10);
    }
}
