use super::{BoundaryFunction, GeneralizedStrip};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// `ε > 0` with `closure(T^{aF,aG}) + B̄(0, ε) ⊆ T^{F,G}`.
pub fn separation_radius(strip: &GeneralizedStrip, a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!("separation radius needs 0 < a < 1, got {a}")));
    }
    let (f, g) = (&strip.upper, &strip.lower);
    let eps_p = 0.5 * ((1.0 - a) / (1.0 + a)) * f.inf().min(g.inf());
    let delta = f.modulus(eps_p).min(g.modulus(eps_p));
    let eps = delta.min(eps_p).min(a * f.inf()).min(a * g.inf());
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Geometry(format!("no usable separation radius (ε = {eps})")));
    }
    Ok(eps)
}

/// Smooth boundaries `Φ, Ψ` squeezed between `aF` and `F` (resp. `G`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothBoundaryPair {
    pub phi: BoundaryFunction,
    pub psi: BoundaryFunction,
    /// Separation radius for both inclusions.
    pub eps: f64,
    /// The intermediate factor `c`.
    pub c: f64,
    pub a: f64,
    /// `sup |Φ^{(k)}|`, `k = 0..=order`.
    pub phi_bounds: Vec<f64>,
    pub psi_bounds: Vec<f64>,
}

impl SmoothBoundaryPair {
    /// The strip `T^{Φ,Ψ}`.
    pub fn strip(&self) -> GeneralizedStrip {
        GeneralizedStrip::new(self.phi.clone(), self.psi.clone())
    }
}

/// Mollification of `f` to uniform accuracy `err`.
pub(crate) fn smoothed(f: &BoundaryFunction, err: f64) -> Result<BoundaryFunction> {
    if f.lipschitz() == 0.0 {
        return Ok(BoundaryFunction::constant(f.eval(0.0)));
    }
    f.mollify(f.modulus(err))
}

fn bounds(b: &BoundaryFunction, order: usize) -> Result<Vec<f64>> {
    (0..=order)
        .map(|k| {
            b.derivative_bound(k)
                .ok_or_else(|| Error::Geometry(format!("no derivative bound of order {k} for {}", b.describe())))
        })
        .collect()
}

pub fn smooth_interpolate(strip: &GeneralizedStrip, a: f64, order: usize) -> Result<SmoothBoundaryPair> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!("smooth interpolation needs 0 < a < 1, got {a}")));
    }
    let c = 0.5 * (a + 1.0);
    let mid = strip.scaled(c);
    let eps1 = separation_radius(&mid, a / c)?;
    let eps2 = separation_radius(strip, c)?;
    let eta = eps1.min(eps2) / 3.0;
    let phi = smoothed(&mid.upper, eta)?;
    let psi = smoothed(&mid.lower, eta)?;
    Ok(SmoothBoundaryPair {
        phi_bounds: bounds(&phi, order)?,
        psi_bounds: bounds(&psi, order)?,
        phi,
        psi,
        eps: eta,
        c,
        a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use rand::{Rng, SeedableRng};

    fn ball_inclusion(inner: &GeneralizedStrip, outer: &GeneralizedStrip, eps: f64, seed: u64) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let span = 10.0 * (1.0 + outer.upper.sup() + outer.lower.sup());
        for _ in 0..10_000 {
            let x = rng.gen_range(-span..span);
            let up = rng.gen_bool(0.5);
            let y = if up { inner.upper.eval(x) } else { -inner.lower.eval(x) };
            for k in 0..16 {
                let th = k as f64 * std::f64::consts::TAU / 16.0;
                let p = C64::new(x, y) + C64::from_polar(eps, th);
                assert!(outer.contains(p), "{p} escapes");
            }
        }
    }

    #[test]
    fn constant_strip_radius() {
        let s = GeneralizedStrip::horizontal(1.0);
        let e = separation_radius(&s, 0.5).unwrap();
        assert!(e < 0.5 && 0.5 + e < 1.0);
        let e = separation_radius(&s, 0.999).unwrap();
        assert!(e > 0.0 && e <= 0.0005);
        assert!(separation_radius(&s, 1.0).is_err());
    }

    #[test]
    fn sin_strip_ball_inclusion() {
        let s = GeneralizedStrip::new(BoundaryFunction::sin(2.0, 1.0, 1.0), BoundaryFunction::constant(1.0));
        let e = separation_radius(&s, 0.9).unwrap();
        ball_inclusion(&s.scaled(0.9), &s, e, 7);
    }

    #[test]
    fn interpolant_of_constant_is_exact() {
        let s = GeneralizedStrip::horizontal(2.0);
        let p = smooth_interpolate(&s, 0.5, 3).unwrap();
        assert_eq!(p.phi.eval(1.3), 0.75 * 2.0);
        assert_eq!(p.psi_bounds[1], 0.0);
    }

    #[test]
    fn interpolant_inclusions() {
        for s in [
            GeneralizedStrip::horizontal(1.0),
            GeneralizedStrip::new(BoundaryFunction::zigzag(1.0, 0.4, 2.0), BoundaryFunction::sin(1.5, 0.5, 2.0)),
        ] {
            let p = smooth_interpolate(&s, 0.5, 2).unwrap();
            ball_inclusion(&s.scaled(0.5), &p.strip(), p.eps, 1);
            ball_inclusion(&p.strip(), &s, p.eps, 2);
            for k in 0..4000 {
                let t = -20.0 + 0.01 * k as f64;
                assert!((p.c * s.upper.eval(t) - p.phi.eval(t)).abs() <= p.eps);
            }
        }
    }

    #[test]
    fn mollified_zigzag_slope() {
        let s = GeneralizedStrip::horizontal(1.0);
        let z = BoundaryFunction::zigzag(1.0, 0.4, 2.0);
        let s = GeneralizedStrip::new(z.clone(), s.lower);
        let p = smooth_interpolate(&s, 0.5, 2).unwrap();
        let h = 1e-4;
        for k in 0..1000 {
            let t = -2.0 + 0.004 * k as f64;
            let fd = (p.phi.eval(t + h) - p.phi.eval(t - h)) / (2.0 * h);
            assert!(fd.abs() <= p.c * z.lipschitz() + 1e-8);
        }
    }
}
