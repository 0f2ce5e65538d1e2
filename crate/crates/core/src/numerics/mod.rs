//! Boundary-fitted strip grids, grid functions, finite-difference operators,
//! weighted sup-norms, Cauchy-type convolution and contour quadrature.

mod convolve;
mod ops;

pub use convolve::{convolve_cauchy, kernel_integrability, ConvolveConfig};
pub use ops::{
    dbar_apply, laplace_apply, partial_apply, partial_x, partial_y, weighted_sup, WeightedNorm, WeightedSup,
};

use crate::exec::{map_range, Exec};
use crate::geometry::{Contour, GeneralizedStrip};
use crate::quadrature::{integrate, QuadConfig, QuadResult};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

/// Nodes `x_i + i·y_{ij}` with `x_i = -X + i·hx` and `ny` levels per column
/// spread evenly between `-aG(x_i)` and `aF(x_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripGrid {
    pub strip: GeneralizedStrip,
    pub a: f64,
    pub x_max: f64,
    pub hx: f64,
    pub nx: usize,
    pub ny: usize,
}

impl StripGrid {
    pub fn new(strip: &GeneralizedStrip, a: f64, x_max: f64, hx: f64, ny: usize) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) || !(x_max > 0.0) || !(hx > 0.0) || ny < 3 {
            return Err(Error::Grid(format!("bad grid parameters a={a}, X={x_max}, hx={hx}, ny={ny}")));
        }
        let cells = (2.0 * x_max / hx).round() as usize;
        if cells < 2 {
            return Err(Error::Grid("fewer than 3 columns".into()));
        }
        Ok(StripGrid { strip: strip.clone(), a, x_max, hx: 2.0 * x_max / cells as f64, nx: cells + 1, ny })
    }

    /// Default layout: `X = 20(1 + sup F + sup G)`, `hx = 0.05`, 33 levels.
    pub fn with_defaults(strip: &GeneralizedStrip, a: f64) -> Result<Self> {
        let x = 20.0 * (1.0 + strip.upper.sup() + strip.lower.sup());
        Self::new(strip, a, x, 0.05, 33)
    }

    /// Square lattice on a horizontal strip: vertical spacing equal to `hx`.
    pub fn lattice(strip: &GeneralizedStrip, a: f64, x_max: f64, hx: f64) -> Result<Self> {
        if !strip.is_constant() {
            return Err(Error::Grid("lattice grids need constant boundaries".into()));
        }
        let height = a * (strip.upper.sup() + strip.lower.sup());
        let n = height / hx;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) || n.round() < 2.0 {
            return Err(Error::Grid(format!("height {height} is not a multiple of hx = {hx}")));
        }
        Self::new(strip, a, x_max, hx, n.round() as usize + 1)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k / self.ny, k % self.ny)
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.x_max
        } else {
            -self.x_max + i as f64 * self.hx
        }
    }

    /// `s_j ∈ [0, 1]`
    pub fn s(&self, j: usize) -> f64 {
        j as f64 / (self.ny - 1) as f64
    }

    pub fn hs(&self) -> f64 {
        1.0 / (self.ny - 1) as f64
    }

    /// Lower edge `-aG(x)` and height `a(F+G)(x)` of a column.
    pub fn column(&self, x: f64) -> (f64, f64) {
        let lo = -self.a * self.strip.lower.eval(x);
        (lo, self.a * self.strip.upper.eval(x) - lo)
    }

    pub fn y(&self, i: usize, j: usize) -> f64 {
        let x = self.x(i);
        let (lo, h) = self.column(x);
        if j + 1 == self.ny {
            self.a * self.strip.upper.eval(x)
        } else {
            lo + self.s(j) * h
        }
    }

    pub fn node(&self, k: usize) -> C64 {
        let (i, j) = self.ij(k);
        C64::new(self.x(i), self.y(i, j))
    }

    pub fn nodes(&self) -> Vec<C64> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Vertical spacing on lattice grids.
    pub fn hy(&self) -> f64 {
        self.column(0.0).1 * self.hs()
    }

    pub fn describe(&self) -> String {
        format!(
            "a={} X={} hx={} nx={} ny={} strip[{}]",
            self.a,
            self.x_max,
            self.hx,
            self.nx,
            self.ny,
            self.strip.describe()
        )
    }
}

fn snap(t: f64) -> f64 {
    if t < 1e-9 {
        0.0
    } else if t > 1.0 - 1e-9 {
        1.0
    } else {
        t
    }
}

/// Complex samples on a [`StripGrid`]. Nodes within `valid_margin` of the
/// grid edge carry no data (stored as 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: StripGrid,
    pub values: Vec<C64>,
    pub name: String,
    pub provenance: String,
    pub valid_margin: usize,
}

impl GridFunction {
    pub fn new(grid: StripGrid, values: Vec<C64>, name: &str, provenance: &str) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if let Some(k) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Grid(format!("non-finite value at node {k} of `{name}`")));
        }
        Ok(GridFunction { grid, values, name: name.into(), provenance: provenance.into(), valid_margin: 0 })
    }

    pub fn from_fn(grid: &StripGrid, name: &str, exec: Exec, f: impl Fn(C64) -> C64 + Sync) -> Result<Self> {
        let values = map_range(exec, grid.len(), |k| f(grid.node(k)));
        Self::new(grid.clone(), values, name, "sampled")
    }

    pub fn zeros(grid: &StripGrid, name: &str) -> Self {
        GridFunction {
            grid: grid.clone(),
            values: vec![C64::new(0.0, 0.0); grid.len()],
            name: name.into(),
            provenance: "zero".into(),
            valid_margin: 0,
        }
    }

    pub fn is_valid(&self, k: usize) -> bool {
        let (i, j) = self.grid.ij(k);
        let m = self.valid_margin;
        i >= m && i + m < self.grid.nx && j >= m && j + m < self.grid.ny
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, name: &str, f: impl Fn(C64, C64) -> C64) -> GridFunction {
        let values = self.values.iter().enumerate().map(|(k, &v)| f(self.grid.node(k), v)).collect();
        GridFunction { values, name: name.into(), ..self.clone() }
    }

    pub fn conj(&self) -> GridFunction {
        self.map(&format!("conj({})", self.name), |_, v| v.conj())
    }

    /// Pointwise `self - other` on the same grid.
    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.grid != other.grid {
            return Err(Error::Grid("grid mismatch".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(GridFunction {
            values,
            name: format!("{}-{}", self.name, other.name),
            valid_margin: self.valid_margin.max(other.valid_margin),
            ..self.clone()
        })
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.values.len()).filter(|&k| self.is_valid(k)).map(|k| self.values[k].norm()).fold(0.0, f64::max)
    }

    /// Bilinear interpolation in the `(x, s)` coordinates of the grid; `None`
    /// outside the grid or next to nodes without data.
    pub fn interpolate(&self, z: C64) -> Option<C64> {
        let g = &self.grid;
        let u = (z.re + g.x_max) / g.hx;
        if !(u >= -1e-9 && u <= (g.nx - 1) as f64 + 1e-9) {
            return None;
        }
        let i = (u.floor() as usize).min(g.nx - 2);
        let fu = snap(u - i as f64);
        let (lo, h) = g.column(z.re);
        let v = (z.im - lo) / h / g.hs();
        if !(v >= -1e-9 && v <= (g.ny - 1) as f64 + 1e-9) {
            return None;
        }
        let j = (v.floor() as usize).min(g.ny - 2);
        let fv = snap(v - j as f64);
        let ks = [g.index(i, j), g.index(i + 1, j), g.index(i, j + 1), g.index(i + 1, j + 1)];
        let wts = [(1.0 - fu) * (1.0 - fv), fu * (1.0 - fv), (1.0 - fu) * fv, fu * fv];
        let mut acc = C64::new(0.0, 0.0);
        for (k, w) in ks.iter().zip(wts) {
            if w > 0.0 {
                if !self.is_valid(*k) {
                    return None;
                }
                acc += self.values[*k] * w;
            }
        }
        Some(acc)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv_to(&mut f)?;
        Ok(())
    }

    pub fn write_csv_to(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "# name={}", self.name)?;
        writeln!(out, "# provenance={}", self.provenance)?;
        writeln!(out, "# valid_margin={}", self.valid_margin)?;
        writeln!(out, "# grid={}", serde_json::to_string(&self.grid)?)?;
        writeln!(out, "x,y,re,im")?;
        for (k, v) in self.values.iter().enumerate() {
            let z = self.grid.node(k);
            writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", z.re, z.im, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_csv_from(f)
    }

    pub fn read_csv_from(r: impl BufRead) -> Result<Self> {
        let (mut name, mut prov, mut margin, mut grid) = (String::new(), String::new(), 0usize, None);
        let mut values = Vec::new();
        let bad = |m: String| Error::Parse(m);
        for line in r.lines() {
            let line = line?;
            if let Some(meta) = line.strip_prefix('#') {
                let (k, v) = meta.trim().split_once('=').ok_or_else(|| bad(format!("bad header `{line}`")))?;
                match k {
                    "name" => name = v.into(),
                    "provenance" => prov = v.into(),
                    "valid_margin" => margin = v.parse().map_err(|_| bad(format!("bad margin `{v}`")))?,
                    "grid" => grid = Some(serde_json::from_str::<StripGrid>(v)?),
                    _ => {}
                }
                continue;
            }
            if line.trim().is_empty() || line.starts_with('x') {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|_| bad(format!("bad number in `{line}`"))))
                .collect::<Result<_>>()?;
            if cols.len() != 4 {
                return Err(bad(format!("expected 4 columns in `{line}`")));
            }
            values.push((C64::new(cols[0], cols[1]), C64::new(cols[2], cols[3])));
        }
        let grid = grid.ok_or_else(|| bad("missing grid header".into()))?;
        if values.len() != grid.len() {
            return Err(bad(format!("{} rows for {} nodes", values.len(), grid.len())));
        }
        for (k, (z, _)) in values.iter().enumerate() {
            if (grid.node(k) - z).norm() > 1e-12 * (1.0 + z.norm()) {
                return Err(bad(format!("row {k} does not match the grid node")));
            }
        }
        let mut g = GridFunction::new(grid, values.into_iter().map(|p| p.1).collect(), &name, &prov)?;
        g.valid_margin = margin;
        Ok(g)
    }
}

/// `∫_Γ f(z) dz` along the contour's orientation.
pub fn contour_integral(f: impl Fn(C64) -> C64, contour: &Contour, cfg: &QuadConfig) -> QuadResult<C64> {
    let r = integrate(|t| f(contour.point(t)) * contour.tangent(t), contour.lo, contour.hi, cfg);
    QuadResult { value: r.value * contour.orientation, ..r }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_contours, smooth_interpolate, BoundaryFunction};

    #[test]
    fn boundary_fitted_nodes_stay_in_strip() {
        let s = GeneralizedStrip::new(BoundaryFunction::sin(2.0, 0.5, 1.0), BoundaryFunction::constant(1.0));
        let g = StripGrid::new(&s, 0.7, 5.0, 0.1, 9).unwrap();
        for z in g.nodes() {
            assert!(s.scaled(0.7).contains_closure(z));
        }
        assert_eq!(g.x(g.nx - 1), 5.0);
    }

    #[test]
    fn lattice_requires_alignment() {
        let s = GeneralizedStrip::horizontal(1.0);
        let g = StripGrid::lattice(&s, 0.9, 12.0, 0.05).unwrap();
        assert_eq!(g.ny, 37);
        assert!((g.hy() - 0.05).abs() < 1e-12);
        assert!(StripGrid::lattice(&s, 0.9, 12.0, 0.07).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let s = GeneralizedStrip::new(BoundaryFunction::sin(2.0, 0.5, 1.0), BoundaryFunction::constant(1.0));
        let g = StripGrid::new(&s, 0.5, 2.0, 0.1, 5).unwrap();
        let mut f = GridFunction::from_fn(&g, "f", Exec::Sequential, |z| (z * 1.7).exp() / 3.0).unwrap();
        f.valid_margin = 1;
        let mut buf = Vec::new();
        f.write_csv_to(&mut buf).unwrap();
        let back = GridFunction::read_csv_from(&buf[..]).unwrap();
        assert_eq!(back, f);
        for (a, b) in back.values.iter().zip(&f.values) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn contour_cauchy_values() {
        let p = smooth_interpolate(&GeneralizedStrip::horizontal(1.0), 0.5, 2).unwrap();
        let cs = boundary_contours(&p, 3.0).unwrap();
        let cfg = QuadConfig { abs_tol: 1e-13, rel_tol: 1e-12, ..Default::default() };
        let wind = |xi: C64| cs.iter().map(|c| contour_integral(|z| 1.0 / (z - xi), c, &cfg).value).sum::<C64>();
        let two_pi_i = C64::new(0.0, std::f64::consts::TAU);
        assert!((wind(C64::new(0.5, 0.1)) - two_pi_i).norm() < 1e-8);
        assert!(wind(C64::new(0.5, 2.0)).norm() < 1e-8);
    }

    #[test]
    fn contour_self_convergence() {
        let p = smooth_interpolate(&GeneralizedStrip::horizontal(4.0 / 3.0), 0.5, 2).unwrap();
        assert!((p.phi.eval(0.0) - 1.0).abs() < 1e-15);
        let cs = boundary_contours(&p, 10.0).unwrap();
        let coarse = contour_integral(|z| (-z * z).exp(), &cs[0], &QuadConfig::default()).value;
        let fine = contour_integral(
            |z| (-z * z).exp(),
            &cs[0],
            &QuadConfig { abs_tol: 1e-14, rel_tol: 1e-14, max_intervals: 8000, ..Default::default() },
        )
        .value;
        assert!((coarse - fine).norm() < 1e-8);
        // e^{-z²} integrated along Im z = 1 right to left over |t| ≤ 10
        let exact = -C64::new(std::f64::consts::PI.sqrt(), 0.0);
        assert!((fine - exact).norm() < 1e-9);
    }
}
