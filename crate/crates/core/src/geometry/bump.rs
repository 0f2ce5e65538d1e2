//! Polynomial bump `β(u) = (315/256)(1-u²)^4` on `[-1, 1]` and its derivatives.

use std::sync::OnceLock;

const NORM: f64 = 315.0 / 256.0;

/// Coefficients of `β` in powers of `u` (degree 8).
fn coeffs() -> [f64; 9] {
    // (1-u²)^4 = 1 - 4u² + 6u⁴ - 4u⁶ + u⁸
    let mut c = [0.0; 9];
    c[0] = 1.0;
    c[2] = -4.0;
    c[4] = 6.0;
    c[6] = -4.0;
    c[8] = 1.0;
    for v in &mut c {
        *v *= NORM;
    }
    c
}

/// `β^{(k)}(u)` for `|u| ≤ 1`, zero outside.
pub fn bump_derivative(u: f64, k: usize) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let mut c = coeffs().to_vec();
    for _ in 0..k {
        if c.len() <= 1 {
            return 0.0;
        }
        c = (1..c.len()).map(|i| c[i] * i as f64).collect();
    }
    c.iter().rev().fold(0.0, |acc, &ci| acc * u + ci)
}

/// `‖β^{(k)}‖_{L¹}` for `k = 0..=4`.
pub fn bump_l1(k: usize) -> f64 {
    static NORMS: OnceLock<[f64; 5]> = OnceLock::new();
    NORMS.get_or_init(|| {
        let mut out = [0.0; 5];
        let n = 20000;
        for (k, o) in out.iter_mut().enumerate() {
            let h = 2.0 / n as f64;
            // midpoint rule; the integrands are polynomials with few sign changes
            *o = (0..n).map(|i| bump_derivative(-1.0 + (i as f64 + 0.5) * h, k).abs() * h).sum::<f64>() * (1.0 + 1e-6);
        }
        out
    })[k]
}

/// `∫ β(s) cos(ω s) ds`, the cosine transform used for mollified sinusoids.
pub fn bump_cosine(omega: f64) -> f64 {
    crate::quadrature::gauss_fixed(|s: f64| bump_derivative(s, 0) * (omega * s).cos(), -1.0, 1.0, 32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_mass_and_symmetry() {
        let m = crate::quadrature::gauss_fixed(|u: f64| bump_derivative(u, 0), -1.0, 1.0, 16);
        assert!((m - 1.0).abs() < 1e-13);
        assert_eq!(bump_derivative(0.3, 1), -bump_derivative(-0.3, 1));
        assert!((bump_cosine(0.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for k in 0..4 {
            for &u in &[-0.7, -0.1, 0.4, 0.9] {
                let fd = (bump_derivative(u + h, k) - bump_derivative(u - h, k)) / (2.0 * h);
                assert!((fd - bump_derivative(u, k + 1)).abs() < 1e-4 * (1.0 + fd.abs()));
            }
        }
    }
}
