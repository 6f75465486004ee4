//! Shared fixtures for the benchmarks.

use biorth::ProblemSpec;

/// V(x) = x^2, W(y) = y^4, tau = 1/2 at degree `k`.
pub fn quartic(k: usize) -> ProblemSpec {
    ProblemSpec::from_coeffs(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0, 0.0, 1.0], 0.5, k).expect("valid fixture")
}

/// Quadratic W, the 2 x 2 case.
pub fn gaussian(k: usize) -> ProblemSpec {
    ProblemSpec::from_coeffs(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], 0.5, k).expect("valid fixture")
}
