//! Pseudo-spectral simulation and analysis of the Kawahara equation
//!
//! ```text
//! u_t + u u_x + alpha u_xxx + beta u_xxxxx = 0
//! ```
//!
//! on a periodic box, with diagnostics for the uniform radius of spatial
//! analyticity: Gevrey norms, exponential-decay radius fits, the Gevrey
//! commutator and its almost-conservation audit, and numerical checks of the
//! dyadic resonance estimates.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which every tolerance in the test suite
//! assumes.

pub mod dynamics;
pub mod error;
pub mod gevrey;
pub mod multiplier;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = spectral::Grid<f64>;
pub type Field = spectral::SpectralField<f64>;
pub type Params = spectral::EquationParams<f64>;
pub type Config = dynamics::EvolutionConfig<f64>;
pub type Trajectory = dynamics::Trajectory<f64>;
pub type Gevrey = gevrey::GevreyParams<f64>;
pub type Radius = gevrey::RadiusEstimate<f64>;

pub type Grid32 = spectral::Grid<f32>;
pub type Field32 = spectral::SpectralField<f32>;
