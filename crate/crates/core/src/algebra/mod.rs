//! Symbolic algebra of the master-field generators `B`, `B+` and `N`.
//!
//! Expressions are sums of terms `c * int(...) * scalars * system word *
//! noise word` with exact complex rational coefficients `c`. Distributions
//! are kept symbolic and only the products produced by the commutation table
//! are admitted; anything else is reported as an error.

mod commutator;
mod expr;
mod order;
mod symbols;
mod text;

pub use commutator::{commutator, commutator_expr, commutator_ordered, Later};
pub use expr::{coeff, coeff_ratio, contract_deltas, Binder, Coeff, Expr, Term};
pub use order::{
    expand_number, normal_order, normal_order_with, vacuum_expectation, vacuum_expectation_with, TimeOrdering,
};
pub use symbols::{Atom, Energies, Factor, GenKind, Generator, Mode, SysSym, Var};
pub use text::parse_expr;
