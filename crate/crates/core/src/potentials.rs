//! Potentials, problem data and the derivative polynomials of `y^j e^{-W(y)}`.

use std::fmt;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Largest polynomial degree `k` accepted in double precision.
pub const MAX_DEGREE_K: usize = 12;
/// Largest `deg W` accepted in double precision.
pub const MAX_DEGREE_W: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialRole {
    V,
    W,
}

impl fmt::Display for PotentialRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialRole::V => write!(f, "V"),
            PotentialRole::W => write!(f, "W"),
        }
    }
}

/// A confining polynomial potential: even degree at least two and a strictly
/// positive leading coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    poly: Polynomial,
    role: PotentialRole,
}

impl Potential {
    pub fn new(poly: Polynomial, role: PotentialRole) -> Result<Self> {
        if poly.coeffs().iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "{role} has non-finite coefficients"
            )));
        }
        let deg = poly.degree().unwrap_or(0);
        if deg < 2 || !deg.is_multiple_of(2) {
            return Err(Error::InvalidSpec(format!(
                "{role} must have even degree >= 2 (got degree {deg})"
            )));
        }
        if poly.leading_coeff() <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "{role} must have a positive leading coefficient"
            )));
        }
        Ok(Self { poly, role })
    }

    pub fn from_coeffs(coeffs: Vec<f64>, role: PotentialRole) -> Result<Self> {
        Self::new(Polynomial::new(coeffs), role)
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    pub fn role(&self) -> PotentialRole {
        self.role
    }

    pub fn degree(&self) -> usize {
        self.poly.degree().expect("validated potential is nonzero")
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.poly.eval(x)
    }

    /// True when the potential only contains even powers.
    pub fn is_even(&self) -> bool {
        self.poly
            .coeffs()
            .iter()
            .enumerate()
            .all(|(i, &c)| i % 2 == 0 || c == 0.0)
    }
}

/// The data of one biorthogonal polynomial problem: potentials `V` and `W`,
/// the coupling `tau` and the degree `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    v: Potential,
    w: Potential,
    tau: f64,
    k: usize,
}

impl ProblemSpec {
    pub fn new(v: Potential, w: Potential, tau: f64, k: usize) -> Result<Self> {
        if v.role() != PotentialRole::V || w.role() != PotentialRole::W {
            return Err(Error::InvalidSpec(
                "potentials passed in the wrong roles".into(),
            ));
        }
        if !tau.is_finite() {
            return Err(Error::InvalidSpec("tau must be finite".into()));
        }
        if tau == 0.0 {
            return Err(Error::InvalidSpec("tau must be nonzero".into()));
        }
        // With both potentials quadratic the coupled exponent is a quadratic
        // form and only decays when it is negative definite.
        if v.degree() == 2 && w.degree() == 2 && v.poly().leading_coeff() * w.poly().leading_coeff() <= tau * tau {
            return Err(Error::InvalidSpec(format!(
                "integrals diverge: quadratic V and W need lc(V) * lc(W) > tau^2 (tau = {tau})"
            )));
        }
        Ok(Self { v, w, tau, k })
    }

    /// Convenience constructor from raw ascending coefficient lists.
    pub fn from_coeffs(v: Vec<f64>, w: Vec<f64>, tau: f64, k: usize) -> Result<Self> {
        Self::new(
            Potential::from_coeffs(v, PotentialRole::V)?,
            Potential::from_coeffs(w, PotentialRole::W)?,
            tau,
            k,
        )
    }

    pub fn v(&self) -> &Potential {
        &self.v
    }

    pub fn w(&self) -> &Potential {
        &self.w
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `d = deg W`; the Riemann-Hilbert matrix is `d x d`.
    pub fn d(&self) -> usize {
        self.w.degree()
    }

    /// Same potentials and coupling, different degree.
    pub fn with_k(&self, k: usize) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.v.clone(), self.w.clone(), tau, self.k)
    }

    pub fn multi_index(&self) -> Vec<usize> {
        multi_index(self.k, self.d())
    }

    pub fn has_even_potentials(&self) -> bool {
        self.v.is_even() && self.w.is_even()
    }

    /// Rejects requests beyond the double-precision degree budget.
    pub fn check_budget(&self) -> Result<()> {
        if self.k > MAX_DEGREE_K {
            return Err(Error::Conditioning(format!(
                "k = {} exceeds the supported maximum {MAX_DEGREE_K}",
                self.k
            )));
        }
        if self.d() > MAX_DEGREE_W {
            return Err(Error::Conditioning(format!(
                "deg W = {} exceeds the supported maximum {MAX_DEGREE_W}",
                self.d()
            )));
        }
        Ok(())
    }
}

/// Multi-index `n_j = floor((k + d - 2 - j) / (d - 1))`, `j = 0..d-2`.
pub fn multi_index(k: usize, d: usize) -> Vec<usize> {
    assert!(d >= 2, "multi_index needs d >= 2");
    (0..d - 1).map(|j| (k + d - 2 - j) / (d - 1)).collect()
}

/// The polynomial `pi` with `d^i/dy^i (y^j e^{-W(y)}) = pi(y) e^{-W(y)}`,
/// built by `i` applications of `pi <- pi' - pi W'`.
pub fn pi_poly(i: usize, j: usize, w: &Potential) -> Polynomial {
    let dw = w.poly().derivative();
    let mut pi = Polynomial::monomial(j, 1.0);
    for _ in 0..i {
        pi = &pi.derivative() - &(&pi * &dw);
    }
    pi
}

/// True when `{pi_{(d-1)i+j} : i < n_j, j = 0..d-2}` has exact degrees forming
/// a permutation of `0..k`, which makes it a basis of polynomials of degree < k.
pub fn pi_basis_check(k: usize, d: usize, w: &Potential) -> bool {
    let mut seen = vec![false; k];
    for (j, &nj) in multi_index(k, d).iter().enumerate() {
        for i in 0..nj {
            match pi_poly(i, j, w).degree() {
                Some(deg) if deg < k && !seen[deg] => seen[deg] = true,
                _ => return false,
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quartic() -> Potential {
        Potential::from_coeffs(vec![0.0, 0.0, 0.0, 0.0, 1.0], PotentialRole::W).unwrap()
    }

    #[test]
    fn multi_index_examples() {
        assert_eq!(multi_index(5, 4), vec![2, 2, 1]);
        assert_eq!(multi_index(3, 4), vec![1, 1, 1]);
        assert_eq!(multi_index(0, 4), vec![0, 0, 0]);
        assert_eq!(multi_index(4, 2), vec![4]);
    }

    #[test]
    fn pi_poly_examples() {
        let w = quartic();
        assert_eq!(pi_poly(0, 2, &w), Polynomial::monomial(2, 1.0));
        assert_eq!(pi_poly(1, 0, &w), Polynomial::monomial(3, -4.0));
        // symbolic reference: d^2/dy^2 (y e^{-y^4}) = (16y^7 - 20y^3) e^{-y^4}
        let p = pi_poly(2, 1, &w);
        assert_eq!(p.degree(), Some(7));
        assert_eq!(p.leading_coeff(), 16.0);
        assert_eq!(p, Polynomial::new(vec![0.0, 0.0, 0.0, -20.0, 0.0, 0.0, 0.0, 16.0]));
        // d^3/dy^3 e^{-y^4} = (-64y^9 + 144y^5 - 24y) e^{-y^4}
        let mut c = vec![0.0; 10];
        c[1] = -24.0;
        c[5] = 144.0;
        c[9] = -64.0;
        assert_eq!(pi_poly(3, 0, &w), Polynomial::new(c));
    }

    #[test]
    fn pi_basis_examples() {
        let w = quartic();
        assert!(pi_basis_check(3, 4, &w));
        assert!(pi_basis_check(4, 4, &w));
        assert!(pi_basis_check(7, 4, &w));
        assert!(pi_basis_check(0, 4, &w));
    }

    #[test]
    fn potential_validation() {
        assert!(Potential::from_coeffs(vec![0.0, 0.0, 0.0, 1.0], PotentialRole::W).is_err());
        assert!(Potential::from_coeffs(vec![0.0, 0.0, -1.0], PotentialRole::V).is_err());
        assert!(Potential::from_coeffs(vec![1.0], PotentialRole::V).is_err());
        assert!(Potential::from_coeffs(vec![0.0, 1.0, 1.0], PotentialRole::V).is_ok());
    }

    #[test]
    fn spec_validation() {
        let err = ProblemSpec::from_coeffs(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0, 0.0, 1.0], 0.0, 3)
            .unwrap_err();
        assert!(err.to_string().contains("tau must be nonzero"));
        assert!(ProblemSpec::from_coeffs(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], 1.0, 3).is_err());
        let s = ProblemSpec::from_coeffs(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], 0.5, 3).unwrap();
        assert_eq!(s.d(), 2);
        let big = ProblemSpec::from_coeffs(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], 0.5, 13).unwrap();
        assert!(matches!(big.check_budget(), Err(Error::Conditioning(_))));
    }

    #[test]
    fn ibp_step_identity_at_polynomial_level() {
        // d/dy (f e^{-W}) = (f' - f W') e^{-W}: check against the product rule
        // written out on the exponential with a finite difference.
        let w = Potential::from_coeffs(vec![0.3, -0.2, -1.0, 0.0, 1.0], PotentialRole::W).unwrap();
        let f = Polynomial::new(vec![1.0, -2.0, 0.5]);
        let g = &f.derivative() - &(&f * &w.poly().derivative());
        let h = 1e-5;
        for &y in &[-1.3, -0.2, 0.4, 1.1] {
            let e = |t: f64| f.eval(t) * (-w.eval(t)).exp();
            let fd = (e(y + h) - e(y - h)) / (2.0 * h);
            let exact = g.eval(y) * (-w.eval(y)).exp();
            assert!((fd - exact).abs() < 1e-8, "{fd} vs {exact}");
        }
    }

    proptest! {
        #[test]
        fn multi_index_sums_to_k(k in 0usize..40, d in 2usize..8) {
            let n = multi_index(k, d);
            prop_assert_eq!(n.len(), d - 1);
            prop_assert_eq!(n.iter().sum::<usize>(), k);
            prop_assert!(n.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn pi_poly_exact_degree(i in 0usize..=6, d in prop::sample::select(vec![2usize, 4, 6]), j in 0usize..5, lc in 0.5f64..2.0) {
            let j = j % (d - 1);
            let mut c = vec![0.1; d + 1];
            c[d] = lc;
            let w = Potential::from_coeffs(c, PotentialRole::W).unwrap();
            prop_assert_eq!(pi_poly(i, j, &w).degree(), Some(i * (d - 1) + j));
        }
    }
}
