//! Numerical evaluation of the limit-equation coefficients for a concrete
//! reservoir and atom.

pub mod beta;
pub mod coefficients;
pub mod model;

pub use beta::{beta_inner, BetaArg, BetaValue};
pub use coefficients::{
    check_damping, decay_curve, drift_density, gamma_eps, gamma_matrix, n_eps, principal_value,
    principal_value_fn,
    semigroup_residual, t_eps_from_gammas, t_eps_matrix, weight_w, DecayPoint,
};
pub use model::{DensityShape, EnergyDensity, SpectralModel, SystemModel, ThermalConvention};
