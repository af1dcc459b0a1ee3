//! Casimir-Lifshitz interaction energies from an expansion in the
//! dielectric contrast.
//!
//! The crate provides the exact planar Lifshitz energy, its order-by-order
//! expansion in either the raw contrast δε or the Clausius-Mossotti
//! parameter β = 3(ε−1)/(ε+2), many-body terms for spheres, Casimir-Polder
//! asymptotics, and the second-order energy of two rough half-spaces.
//!
//! Everything is generic over the scalar type ([`Real`]); the `*64`
//! aliases below fix it to `f64`.
//!
//! Units throughout: ħ = c = 1, frequencies in units of the plasma
//! frequency ω_p, lengths in units of c/ω_p. The plasma wavelength is
//! therefore λ_p = 2π.

pub mod bodies;
pub mod dielectric;
pub mod error;
pub mod jets;
pub mod kernels;
pub mod numerics;
pub mod planar;
pub mod roughsurf;
pub mod scalar;

pub use dielectric::{DielectricModel, Frequency};
pub use error::{Error, Result};
pub use jets::{Amplitude, Jet, MAX_ORDER};
pub use kernels::KernelTensor;
pub use numerics::{QuadResult, QuadratureConfig};
pub use scalar::Real;

pub type DielectricModel64 = DielectricModel<f64>;
pub type Jet64 = Jet<f64>;
pub type KernelTensor64 = KernelTensor<f64>;
pub type QuadratureConfig64 = QuadratureConfig<f64>;
pub type PlanarSystem64 = planar::PlanarSystem<f64>;
pub type SeriesResult64 = planar::SeriesResult<f64>;
pub type SphereBody64 = bodies::SphereBody<f64>;
pub type BodyAssembly64 = bodies::BodyAssembly<f64>;
pub type HeightProfile64 = roughsurf::HeightProfile<f64>;
pub type RoughPair64 = roughsurf::RoughPair<f64>;

/// Plasma wavelength in internal length units.
pub fn plasma_wavelength<T: Real>() -> T {
    T::PI() + T::PI()
}
