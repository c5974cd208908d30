//! Workbench for the low-density-limit quantum stochastic calculus.
//!
//! * [`algebra`]: symbolic master-field algebra (commutators, normal order,
//!   vacuum expectation, delta contraction).
//! * [`golden`]: mechanical normal ordering of the evolution equation and
//!   verification of the resulting coefficients.
//! * [`spectral`]: numerical coefficients `gamma_eps`, `T_eps`, `Gamma` and
//!   the vacuum decay.
//! * [`prelimit`]: convergence of the rescaled kernels to their limits.
//! * [`scatter`]: one-particle scattering cross-check of the coefficients.

pub mod algebra;
pub mod band;
pub mod error;
pub mod exec;
pub mod golden;
pub mod linalg;
pub mod prelimit;
pub mod quad;
pub mod scatter;
pub mod spectral;

pub use band::Band;
pub use error::{Error, Result};
