use crate::exec::Exec;
use crate::geometry::GeneralizedStrip;
use crate::numerics::{GridFunction, StripGrid};
use crate::{Error, Result, C64};

/// Source grid at scale `a_M`: square lattice on horizontal strips when the
/// height is a multiple of `hx`, otherwise `≈ height/hx` levels.
pub fn source_grid(strip: &GeneralizedStrip, a_m: f64, x_max: f64, hx: f64) -> Result<StripGrid> {
    if let Ok(g) = StripGrid::lattice(strip, a_m, x_max, hx) {
        return Ok(g);
    }
    let height = a_m * (strip.upper.sup() + strip.lower.sup());
    let ny = ((height / hx).round() as usize + 1).max(9);
    StripGrid::new(strip, a_m, x_max, hx, ny)
}

/// Built-in sources with known preimages, `e(ξ) = exp(-(ξ² + 4)^{3/4})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Manufactured {
    /// `f₀ = ξ̄·e`, `g = ∂̄f₀ = e`.
    DbarConj,
    /// `u₀ = ξ̄²·e`, `g = Δu₀ = 8ξ̄·e'`.
    LaplaceConj2,
    Zero,
}

const R2: f64 = 4.0;
const D: f64 = 0.75;

fn e(z: C64) -> C64 {
    (-(z * z + R2).powf(D)).exp()
}

fn de(z: C64) -> C64 {
    let u = z * z + R2;
    -e(z) * D * u.powf(D - 1.0) * 2.0 * z
}

impl Manufactured {
    pub const IDS: [&'static str; 3] = ["dbar-conj", "laplace-conj2", "zero"];

    pub fn parse(id: &str) -> Result<Self> {
        match id {
            "dbar-conj" => Ok(Manufactured::DbarConj),
            "laplace-conj2" => Ok(Manufactured::LaplaceConj2),
            "zero" => Ok(Manufactured::Zero),
            _ => Err(Error::Parse(format!("unknown source `{id}` (built-ins: {})", Self::IDS.join(", ")))),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Manufactured::DbarConj => "dbar-conj",
            Manufactured::LaplaceConj2 => "laplace-conj2",
            Manufactured::Zero => "zero",
        }
    }

    /// The preimage `f₀` or `u₀`.
    pub fn preimage(self, z: C64) -> C64 {
        match self {
            Manufactured::DbarConj => z.conj() * e(z),
            Manufactured::LaplaceConj2 => z.conj() * z.conj() * e(z),
            Manufactured::Zero => C64::new(0.0, 0.0),
        }
    }

    pub fn eval(self, z: C64) -> C64 {
        match self {
            Manufactured::DbarConj => e(z),
            Manufactured::LaplaceConj2 => 8.0 * z.conj() * de(z),
            Manufactured::Zero => C64::new(0.0, 0.0),
        }
    }

    pub fn source(self, grid: &StripGrid) -> Result<GridFunction> {
        let mut g = GridFunction::from_fn(grid, self.id(), Exec::default(), |z| self.eval(z))?;
        g.provenance = format!("manufactured:{}", self.id());
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dbar_apply, laplace_apply};

    #[test]
    fn sources_match_operators_on_preimages() {
        let grid = source_grid(&GeneralizedStrip::horizontal(1.0), 0.9, 6.0, 0.025).unwrap();
        for (m, tol) in [(Manufactured::DbarConj, 2e-3), (Manufactured::LaplaceConj2, 2e-2)] {
            let f0 = GridFunction::from_fn(&grid, "f0", Exec::default(), |z| m.preimage(z)).unwrap();
            let lf = if m == Manufactured::DbarConj { dbar_apply(&f0) } else { laplace_apply(&f0) }.unwrap();
            let err = (0..lf.values.len())
                .filter(|&k| lf.is_valid(k))
                .map(|k| (lf.values[k] - m.eval(grid.node(k))).norm())
                .fold(0.0, f64::max);
            assert!(err < tol, "{} {err}", m.id());
        }
    }

    #[test]
    fn ids_round_trip() {
        for id in Manufactured::IDS {
            assert_eq!(Manufactured::parse(id).unwrap().id(), id);
        }
        assert!(Manufactured::parse("nope").is_err());
    }
}
