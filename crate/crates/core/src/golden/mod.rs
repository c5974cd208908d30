//! Normal ordering of the evolution equation in the low-density limit and
//! checks of the resulting stochastic differential equation.

mod closed;
mod normal;
mod qsde;
mod verify;

pub use closed::{commutator_bu, normally_ordered, number_u, pivot_rhs};
pub use normal::{
    hamiltonian_integrand, integral_equation_rhs, Basis, Evaluator, Instantiation, Label, Monomial, OperatorForm,
};
pub use qsde::{
    derive_qsde, fm_consistency, number_intensity_residual, r_from_gammas, FmOperator, FmVector, Process,
    QsdeCoefficients, QsdeTerm,
};
pub use verify::{
    normal_order_forms, verify_normal_order, verify_te_identity, verify_theorem2, verify_theorem3, Residuals,
};
