//! Generalized Bernstein bases and operators on exponential-polynomial spaces.
//!
//! A space is described by a conjugation-closed [`Spectrum`]; on an interval
//! where it is an extended Chebyshev space it has a unique (up to scaling)
//! Bernstein basis, and a positive operator fixing two prescribed elements
//! `f0`, `f1` exists exactly when a ratio test on their coefficients holds.

pub mod basis;
pub mod chain;
pub mod error;
pub mod expspace;
pub mod fixtures;
pub mod linalg;
pub mod operator;
pub mod roots;
pub mod tolerances;

pub use basis::{build_bernstein_basis, build_bernstein_basis_for, BernsteinBasis, BasisWarning};
pub use error::{Error, Result};
pub use expspace::{
    build_space, verify_ect_heuristic, Differentiable, Eigenvalue, ExpSpace, FunctionFamily, Interval, SpaceElement,
    Spectrum,
};
pub use operator::{build_operator, BernsteinOperator, ExpansionCoeffs, FeasibilityReport};
pub use tolerances::Tolerances;
