//! Exact polynomial differential forms, operators on them, and the deformation
//! and cohomology computations built on top.

pub mod cocycles;
pub mod deformation;
pub mod error;
pub mod exterior;
pub mod liecalc;
pub mod linalg;
pub mod obstruction;
pub mod poly;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};

pub type Poly = poly::Polynomial<Rational>;
pub type Form = exterior::DifferentialForm<Rational>;
pub type DiffOp = exterior::DifferentialOperator<Rational>;
pub type VectorField = liecalc::PolyVectorField<Rational>;
