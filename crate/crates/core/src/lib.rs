//! Weighted ∂̄ and Laplace solvers on generalized strips.
//!
//! The crate is organised bottom-up:
//!
//! * [`weights`] – weight functions, weight systems and condition checks.
//! * [`geometry`] – boundary curves, strips, smooth interpolants, cutoffs and contours.
//! * [`damping`] – holomorphic damping functions `Q` with certified lower bounds.
//! * [`numerics`] – grids, finite differences, weighted norms, Cauchy convolution.
//! * [`solver`] – the damped-kernel ∂̄ solver, the Laplace composition and the dashboard.
//! * [`runge`] – contour representation, Riemann sums, pole pushing and rational damped sums.

pub mod damping;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod numerics;
pub mod quadrature;
pub mod runge;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
