//! Odd-variable calculus: forms, the de Rham differential and the
//! associative algebra of normal-ordered differential operators on forms.

mod form;
mod op;
pub mod xi;

pub use form::DifferentialForm;
pub use op::{spatial_monomial, BlockMatrix, DerivIndex, DifferentialOperator, OpKey};
pub use xi::XiMonomial;
