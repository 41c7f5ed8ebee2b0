//! Eigenvalue laboratory for self-adjoint operators on the unit interval.
//!
//! The operators handled here are
//!
//! * `h = -d²/dx² - p` with `y(0) = y(1) = 0`,
//! * `H = d⁴/dx⁴ + 2 d/dx p d/dx + q` with `y = y'' = 0` at both ends,
//! * `H + Q` and `h² + Q` for a multiplication perturbation `Q`.
//!
//! Coefficients are finite trigonometric polynomials in `cos(πjx)`, `sin(πjx)`
//! ([`coeffs::Coefficient`]), so every functional a trace identity needs is
//! evaluated in closed form. Operators are discretized in the sine basis
//! `√2 sin(πnx)` ([`operator`]), diagonalized by a Householder/QL solver with a
//! Jacobi cross-check ([`eigen`]), and the regularized eigenvalue sums are
//! compared with their closed-form values in [`traces`]. [`inverse`] runs
//! shifted families of operators and reads the coefficients back off the
//! spectra.

pub mod cli;
pub mod coeffs;
pub mod eigen;
pub mod error;
pub mod inverse;
pub mod operator;
pub mod sum;
pub mod traces;

pub use coeffs::{Coefficient, CosineSeq, Functionals};
pub use eigen::Spectrum;
pub use error::{Error, Result};
pub use operator::{GalerkinMatrix, OperatorKind, OperatorSpec};
pub use traces::{AccelMode, FormulaId, TraceInputs, TraceReport};
