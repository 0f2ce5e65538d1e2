use super::SmoothBoundaryPair;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ContourPath {
    /// `t ↦ t + i·sign·B(t)` on `[-R, R]`.
    Graph { boundary: super::BoundaryFunction, sign: f64 },
    /// `s ↦ x + is` on `[lo, hi]`.
    Vertical { x: f64 },
}

/// A parameterized path over the ascending interval `[lo, hi]`, traversed
/// forwards when `orientation = 1` and backwards when `-1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Contour {
    pub label: String,
    pub path: ContourPath,
    pub lo: f64,
    pub hi: f64,
    pub orientation: f64,
}

impl Contour {
    pub fn point(&self, t: f64) -> C64 {
        match &self.path {
            ContourPath::Graph { boundary, sign } => C64::new(t, sign * boundary.eval(t)),
            ContourPath::Vertical { x } => C64::new(*x, t),
        }
    }

    /// `dz/dt` along the ascending parameter.
    pub fn tangent(&self, t: f64) -> C64 {
        match &self.path {
            ContourPath::Graph { boundary, sign } => C64::new(1.0, sign * boundary.derivative(t, 1).unwrap_or(0.0)),
            ContourPath::Vertical { .. } => C64::new(0.0, 1.0),
        }
    }

    pub fn start(&self) -> C64 {
        self.point(if self.orientation > 0.0 { self.lo } else { self.hi })
    }

    pub fn end(&self) -> C64 {
        self.point(if self.orientation > 0.0 { self.hi } else { self.lo })
    }

    pub fn reversed(&self) -> Contour {
        Contour { orientation: -self.orientation, ..self.clone() }
    }

    pub fn length(&self) -> f64 {
        match &self.path {
            ContourPath::Vertical { .. } => self.hi - self.lo,
            ContourPath::Graph { .. } => {
                crate::quadrature::integrate(|t| self.tangent(t).norm(), self.lo, self.hi, &Default::default()).value
            }
        }
    }
}

/// `Γ₁` (upper graph, right to left), `Γ₂` (lower graph, left to right),
/// `Γ₃` (`x = R`, upwards), `Γ₄` (`x = -R`, downwards).
pub fn boundary_contours(pair: &SmoothBoundaryPair, r: f64) -> Result<[Contour; 4]> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("truncation R must be positive, got {r}")));
    }
    let (phi, psi) = (&pair.phi, &pair.psi);
    Ok([
        Contour {
            label: "gamma1".into(),
            path: ContourPath::Graph { boundary: phi.clone(), sign: 1.0 },
            lo: -r,
            hi: r,
            orientation: -1.0,
        },
        Contour {
            label: "gamma2".into(),
            path: ContourPath::Graph { boundary: psi.clone(), sign: -1.0 },
            lo: -r,
            hi: r,
            orientation: 1.0,
        },
        Contour {
            label: "gamma3".into(),
            path: ContourPath::Vertical { x: r },
            lo: -psi.eval(r),
            hi: phi.eval(r),
            orientation: 1.0,
        },
        Contour {
            label: "gamma4".into(),
            path: ContourPath::Vertical { x: -r },
            lo: -psi.eval(-r),
            hi: phi.eval(-r),
            orientation: -1.0,
        },
    ])
}
