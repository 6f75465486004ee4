//! Biorthogonal polynomials of the coupled two-matrix model, computed through
//! their multiple-orthogonality characterization, together with the
//! `d x d` Riemann-Hilbert matrix `Y` they generate and numerical checks of
//! every condition that matrix must satisfy.

pub mod cauchy;
pub mod error;
pub mod linalg;
pub mod moments;
pub mod mop;
pub mod oracle;
pub mod poly;
pub mod potentials;
pub mod quadrature;
pub mod rh;

pub use cauchy::{CauchyColumn, Density, FnDensity, PolyWeightDensity};
pub use error::{Error, Result};
pub use moments::{MomentSet, WeightFunctions};
pub use mop::{Diagnostics, DualRow, MopSolution};
pub use poly::Polynomial;
pub use potentials::{multi_index, pi_basis_check, pi_poly, Potential, PotentialRole, ProblemSpec};
pub use quadrature::QuadratureRule;
pub use rh::{AsymptoticTable, Checks, VerificationReport, VerifyConfig, YMatrix, ZerosReport};
