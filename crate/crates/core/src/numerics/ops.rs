use super::{GridFunction, StripGrid};
use crate::weights::WeightSystem;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// Per-column geometry of the map `(x, s) ↦ (x, L(x) + s·H(x))`.
struct ColumnJet {
    l1: f64,
    l2: f64,
    h: f64,
    h1: f64,
    h2: f64,
}

fn boundary_jet(b: &crate::geometry::BoundaryFunction, x: f64) -> (f64, f64, f64) {
    let v = b.eval(x);
    let d1 = b.derivative(x, 1).unwrap_or_else(|| {
        let e = 1e-5;
        (b.eval(x + e) - b.eval(x - e)) / (2.0 * e)
    });
    let d2 = b.derivative(x, 2).unwrap_or_else(|| {
        let e = 1e-4;
        (b.eval(x + e) - 2.0 * v + b.eval(x - e)) / (e * e)
    });
    (v, d1, d2)
}

fn column_jet(g: &StripGrid, x: f64) -> ColumnJet {
    let (f, f1, f2) = boundary_jet(&g.strip.upper, x);
    let (gg, g1, g2) = boundary_jet(&g.strip.lower, x);
    let a = g.a;
    ColumnJet { l1: -a * g1, l2: -a * g2, h: a * (f + gg), h1: a * (f1 + g1), h2: a * (f2 + g2) }
}

struct Stencil {
    ux: C64,
    us: C64,
    uxx: C64,
    uss: C64,
    uxs: C64,
}

fn stencil(f: &GridFunction, i: usize, j: usize) -> Stencil {
    let g = &f.grid;
    let (hx, hs) = (g.hx, g.hs());
    let u = |di: isize, dj: isize| f.at((i as isize + di) as usize, (j as isize + dj) as usize);
    let c = u(0, 0);
    Stencil {
        ux: (u(1, 0) - u(-1, 0)) / (2.0 * hx),
        us: (u(0, 1) - u(0, -1)) / (2.0 * hs),
        uxx: (u(1, 0) - 2.0 * c + u(-1, 0)) / (hx * hx),
        uss: (u(0, 1) - 2.0 * c + u(0, -1)) / (hs * hs),
        uxs: (u(1, 1) - u(1, -1) - u(-1, 1) + u(-1, -1)) / (4.0 * hx * hs),
    }
}

fn apply(f: &GridFunction, name: &str, op: impl Fn(&Stencil, &ColumnJet, f64) -> C64) -> Result<GridFunction> {
    let g = &f.grid;
    let m = f.valid_margin + 1;
    if g.nx < 2 * m + 1 || g.ny < 2 * m + 1 {
        return Err(Error::Grid(format!("grid too coarse for `{name}` (margin {m})")));
    }
    let mut out = vec![C64::new(0.0, 0.0); g.len()];
    for i in m..g.nx - m {
        let jet = column_jet(g, g.x(i));
        for j in m..g.ny - m {
            out[g.index(i, j)] = op(&stencil(f, i, j), &jet, g.s(j));
        }
    }
    let mut r = GridFunction::new(g.clone(), out, &format!("{name}({})", f.name), name)?;
    r.valid_margin = m;
    Ok(r)
}

/// `(f_x, f_y)` from the chain rule, `s_x = -(L' + sH')/H`, `s_y = 1/H`.
fn first(st: &Stencil, jet: &ColumnJet, s: f64) -> (C64, C64) {
    let sx = -(jet.l1 + s * jet.h1) / jet.h;
    (st.ux + st.us * sx, st.us / jet.h)
}

pub fn partial_x(f: &GridFunction) -> Result<GridFunction> {
    apply(f, "dx", |st, jet, s| first(st, jet, s).0)
}

pub fn partial_y(f: &GridFunction) -> Result<GridFunction> {
    apply(f, "dy", |st, jet, s| first(st, jet, s).1)
}

/// `∂̄f = (f_x + i f_y)/2`
pub fn dbar_apply(f: &GridFunction) -> Result<GridFunction> {
    apply(f, "dbar", |st, jet, s| {
        let (fx, fy) = first(st, jet, s);
        0.5 * (fx + C64::new(0.0, 1.0) * fy)
    })
}

/// `∂f = (f_x - i f_y)/2`
pub fn partial_apply(f: &GridFunction) -> Result<GridFunction> {
    apply(f, "d", |st, jet, s| {
        let (fx, fy) = first(st, jet, s);
        0.5 * (fx - C64::new(0.0, 1.0) * fy)
    })
}

/// `Δf`; the 5-point stencil on straight strips, with the mapping terms added
/// on curved ones.
pub fn laplace_apply(f: &GridFunction) -> Result<GridFunction> {
    apply(f, "laplace", |st, jet, s| {
        let sx = -(jet.l1 + s * jet.h1) / jet.h;
        let sxx = -(jet.l2 + s * jet.h2) / jet.h - 2.0 * sx * jet.h1 / jet.h;
        st.uxx + 2.0 * st.uxs * sx + st.uss * (sx * sx + 1.0 / (jet.h * jet.h)) + st.us * sxx
    })
}

/// The seminorm `p_{N,α,a}`: sup of `e^{w_N(|Re ξ|)}|D^α f(ξ)|` over nodes in
/// `closure(T^{aF,aG})`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedNorm {
    pub system: WeightSystem,
    pub n: usize,
    /// Orders of `∂_x` and `∂_y`.
    pub alpha: (usize, usize),
    /// Restrict to `|Im| ≤ a·boundary`; `None` uses every node.
    pub a: Option<f64>,
}

impl WeightedNorm {
    pub fn new(system: &WeightSystem, n: usize) -> Self {
        WeightedNorm { system: system.clone(), n, alpha: (0, 0), a: None }
    }

    pub fn with_alpha(mut self, alpha: (usize, usize)) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_scale(mut self, a: f64) -> Self {
        self.a = Some(a);
        self
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WeightedSup {
    pub value: f64,
    /// `log` of the value; finite even where the value overflows.
    pub ln_value: f64,
    pub argmax: Option<(f64, f64)>,
}

pub fn weighted_sup(f: &GridFunction, norm: &WeightedNorm) -> Result<WeightedSup> {
    let mut d = f.clone();
    for _ in 0..norm.alpha.0 {
        d = partial_x(&d)?;
    }
    for _ in 0..norm.alpha.1 {
        d = partial_y(&d)?;
    }
    let w = norm.system.member(norm.n)?;
    let strip = norm.a.map(|a| f.grid.strip.scaled(a));
    let mut best = (f64::NEG_INFINITY, None);
    for k in 0..d.values.len() {
        if !d.is_valid(k) {
            continue;
        }
        let z = d.grid.node(k);
        if let Some(s) = &strip {
            let tol = 1e-12 * (1.0 + z.im.abs());
            if z.im > s.upper.eval(z.re) + tol || z.im < -s.lower.eval(z.re) - tol {
                continue;
            }
        }
        let m = d.values[k].norm();
        if m == 0.0 {
            continue;
        }
        let lw = w.eval(z.re.abs());
        let l = if lw.is_finite() { lw + m.ln() } else { w.ln_eval(z.re.abs()).exp() + m.ln() };
        if l > best.0 {
            best = (l, Some((z.re, z.im)));
        }
    }
    Ok(WeightedSup { value: best.0.exp(), ln_value: best.0, argmax: best.1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::geometry::{BoundaryFunction, GeneralizedStrip};
    use crate::weights::WeightFunction;

    fn grids(h: f64) -> Vec<StripGrid> {
        vec![
            StripGrid::new(&GeneralizedStrip::horizontal(1.0), 1.0, 2.0, h, (2.0 / h).round() as usize + 1).unwrap(),
            StripGrid::new(
                &GeneralizedStrip::new(BoundaryFunction::sin(1.5, 0.4, 1.0), BoundaryFunction::constant(1.0)),
                0.8,
                2.0,
                h,
                (2.0 / h).round() as usize + 1,
            )
            .unwrap(),
        ]
    }

    fn err(f: &GridFunction, exact: impl Fn(C64) -> C64) -> f64 {
        (0..f.values.len())
            .filter(|&k| f.is_valid(k))
            .map(|k| (f.values[k] - exact(f.grid.node(k))).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn dbar_examples() {
        // exact on straight strips, O(h²) along curved level lines
        for (g, tol) in grids(0.05).into_iter().zip([1e-10, 2.5e-3]) {
            let f = GridFunction::from_fn(&g, "zbar", Exec::Sequential, |z| z.conj()).unwrap();
            assert!(err(&dbar_apply(&f).unwrap(), |_| C64::new(1.0, 0.0)) < tol);
            let f = GridFunction::from_fn(&g, "z2", Exec::Sequential, |z| z * z).unwrap();
            assert!(err(&dbar_apply(&f).unwrap(), |_| C64::new(0.0, 0.0)) < tol);
            let f = GridFunction::from_fn(&g, "abs2", Exec::Sequential, |z| z * z.conj()).unwrap();
            assert!(err(&dbar_apply(&f).unwrap(), |z| z) < tol);
        }
    }

    #[test]
    fn laplace_examples() {
        for (g, tol) in grids(0.05).into_iter().zip([1e-8, 1e-2]) {
            let f = GridFunction::from_fn(&g, "re z2", Exec::Sequential, |z| C64::new((z * z).re, 0.0)).unwrap();
            assert!(err(&laplace_apply(&f).unwrap(), |_| C64::new(0.0, 0.0)) < tol);
            let f = GridFunction::from_fn(&g, "x2", Exec::Sequential, |z| C64::new(z.re * z.re, 0.0)).unwrap();
            assert!(err(&laplace_apply(&f).unwrap(), |_| C64::new(2.0, 0.0)) < tol);
        }
    }

    #[test]
    fn second_order_convergence() {
        let gauss = |z: C64| C64::new((-z.re * z.re - z.im * z.im).exp(), 0.0);
        let lap = |z: C64| {
            let r2 = z.re * z.re + z.im * z.im;
            C64::new((4.0 * r2 - 4.0) * (-r2).exp(), 0.0)
        };
        let dbar_exact = |z: C64| -z * (-(z.re * z.re + z.im * z.im)).exp();
        for which in 0..2 {
            let e: Vec<(f64, f64)> = [0.1, 0.05, 0.025]
                .iter()
                .map(|&h| {
                    let g = &grids(h)[which];
                    let f = GridFunction::from_fn(g, "g", Exec::Sequential, gauss).unwrap();
                    (err(&laplace_apply(&f).unwrap(), lap), err(&dbar_apply(&f).unwrap(), dbar_exact))
                })
                .collect();
            for k in 0..2 {
                let p1 = (e[k].0 / e[k + 1].0).log2();
                let p2 = (e[k].1 / e[k + 1].1).log2();
                assert!((1.8..=2.2).contains(&p1) && (1.8..=2.2).contains(&p2), "{which}: {p1} {p2}");
            }
        }
    }

    #[test]
    fn laplace_is_four_d_dbar() {
        for h in [0.1, 0.05] {
            for g in grids(h) {
                let f = GridFunction::from_fn(&g, "f", Exec::Sequential, |z| (z * 0.7).sin() * z.conj()).unwrap();
                let a = laplace_apply(&f).unwrap();
                let b = partial_apply(&dbar_apply(&f).unwrap()).unwrap().map("4ddbar", |_, v| 4.0 * v);
                let d = b.sub(&a).unwrap();
                assert!(d.max_abs() < 2.0 * h * h, "{}", d.max_abs());
            }
        }
    }

    #[test]
    fn weighted_sup_examples() {
        let s = GeneralizedStrip::horizontal(0.5);
        let g = StripGrid::new(&s, 1.0, 6.0, 0.01, 11).unwrap();
        let ws = WeightSystem::scaled_value(WeightFunction::power(1.0));
        let f = GridFunction::from_fn(&g, "gauss", Exec::Sequential, |z| (-z * z).exp()).unwrap();
        let p1 = weighted_sup(&f, &WeightedNorm::new(&ws, 1)).unwrap();
        let p2 = weighted_sup(&f, &WeightedNorm::new(&ws, 2)).unwrap();
        assert!(p1.value.is_finite() && p1.value <= p2.value);
        // max of N·x - x² + y² at x = N/2, |y| = 0.5
        let (x, y) = p2.argmax.unwrap();
        assert!((x.abs() - 1.0).abs() < 0.011 && (y.abs() - 0.5).abs() < 1e-12);
        assert!((p2.ln_value - (1.0 + 0.25)).abs() < 1e-3);
        let z = GridFunction::zeros(&g, "0");
        assert_eq!(weighted_sup(&z, &WeightedNorm::new(&ws, 3)).unwrap().value, 0.0);
    }
}
