//! Quadrature and special functions.

mod quadrature;
mod special;

pub use quadrature::{
    gauss_legendre, integrate, integrate_adaptive, integrate_jet, integrate_semi_infinite,
    integrate_semi_infinite_adaptive, require_converged, semi_infinite, QuadResult, QuadValue, QuadratureConfig,
};
pub use special::{exp_integral_e, gamma_zero};
