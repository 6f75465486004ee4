//! Independent reference routes: both biorthogonal families straight from the
//! bimoment Gram matrix, the pairing table, and the closed-form reduction
//! for quadratic `W`.
//!
//! Nothing here goes through the multiple-orthogonality solver; only the
//! quadrature layer is shared.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::moments::MomentSet;
use crate::poly::Polynomial;
use crate::potentials::{Potential, PotentialRole};
use crate::quadrature::build_rule_with_power;

/// Monic `p` and `q` of degree `k` with `sum_a p_a B[a][b] = 0` for `b < k`
/// and `sum_b B[a][b] q_b = 0` for `a < k`.
pub fn biorth_pair_from_bimoments(m: &MomentSet, k: usize) -> Result<(Polynomial, Polynomial)> {
    if k > m.spec().k() {
        return Err(Error::InvalidSpec(format!(
            "bimoments only available up to order {}, requested {k}",
            m.spec().k()
        )));
    }
    if k == 0 {
        return Ok((Polynomial::one(), Polynomial::one()));
    }
    let b = m.bimoment_matrix();
    // p: unknowns p_0..p_{k-1}, one equation per column index b < k.
    let ap = DMatrix::from_fn(k, k, |row, a| b[(a, row)]);
    let rp = DVector::from_fn(k, |row, _| -b[(k, row)]);
    let aq = DMatrix::from_fn(k, k, |row, c| b[(row, c)]);
    let rq = DVector::from_fn(k, |row, _| -b[(row, k)]);
    Ok((monic_from(&ap, &rp, "bimoment p")?, monic_from(&aq, &rq, "bimoment q")?))
}

fn monic_from(a: &DMatrix<f64>, rhs: &DVector<f64>, what: &str) -> Result<Polynomial> {
    let lu = a.clone().full_piv_lu();
    let x = lu.solve(rhs).ok_or_else(|| Error::SingularSystem {
        what: what.to_string(),
        condition: f64::INFINITY,
    })?;
    let mut coeffs: Vec<f64> = x.iter().copied().collect();
    coeffs.push(1.0);
    Ok(Polynomial::new(coeffs))
}

fn pairing_terms(p: &Polynomial, q: &Polynomial, m: &MomentSet) -> (f64, f64) {
    let mut value = 0.0;
    let mut scale = 0.0;
    for (a, &pa) in p.coeffs().iter().enumerate() {
        for (b, &qb) in q.coeffs().iter().enumerate() {
            let t = pa * qb * m.bimoment(a, b);
            value += t;
            scale += t.abs();
        }
    }
    (value, scale)
}

/// `|sum_{a,b} p_a q_b B[a][b]|` relative to the sum of the absolute terms.
pub fn biorthogonality_residual_direct(p: &Polynomial, q: &Polynomial, m: &MomentSet) -> f64 {
    let (value, scale) = pairing_terms(p, q, m);
    if scale == 0.0 {
        0.0
    } else {
        value.abs() / scale
    }
}

/// Pairings of `p_0..p_n` against `q_0..q_n`.
#[derive(Debug, Clone)]
pub struct PairingTable {
    pub p: Vec<Polynomial>,
    pub q: Vec<Polynomial>,
    /// Raw pairing values `[i][j]`.
    pub values: Vec<Vec<f64>>,
    /// Same entries divided by their absolute term sums.
    pub relative: Vec<Vec<f64>>,
}

impl PairingTable {
    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, row) in self.relative.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i != j {
                    worst = worst.max(v);
                }
            }
        }
        worst
    }

    /// Smallest relative diagonal entry; should be far from zero.
    pub fn min_diagonal(&self) -> f64 {
        (0..self.relative.len())
            .map(|i| self.relative[i][i])
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn pairing_table(m: &MomentSet, n: usize) -> Result<PairingTable> {
    let mut p = Vec::with_capacity(n + 1);
    let mut q = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let (pk, qk) = biorth_pair_from_bimoments(m, k)?;
        p.push(pk);
        q.push(qk);
    }
    let mut values = vec![vec![0.0; n + 1]; n + 1];
    let mut relative = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=n {
            let (v, s) = pairing_terms(&p[i], &q[j], m);
            values[i][j] = v;
            relative[i][j] = if s == 0.0 { 0.0 } else { v.abs() / s };
        }
    }
    Ok(PairingTable { p, q, values, relative })
}

/// Affine normal form of a quadratic `W(y) = c2 y^2 + c1 y + c0`. After
/// `y = u / s` with `s = sqrt(c2)` it reads `u^2 + 2 b u + c` and the
/// coupling becomes `tau / s`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticNormalForm {
    pub s: f64,
    pub tau: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadraticNormalForm {
    pub fn of(w: &Potential, tau: f64) -> Result<Self> {
        if w.degree() != 2 {
            return Err(Error::InvalidSpec(format!(
                "quadratic reduction needs deg W = 2, got {}",
                w.degree()
            )));
        }
        let c2 = w.poly().coeff(2);
        let s = c2.sqrt();
        Ok(Self {
            s,
            tau: tau / s,
            b: w.poly().coeff(1) / (2.0 * s),
            c: w.poly().coeff(0),
        })
    }

    /// `V(x) - (tau x - b)^2`, minus the log of the effective weight.
    pub fn effective_potential(&self, v: &Potential) -> Polynomial {
        let lin = Polynomial::new(vec![-self.b, self.tau]);
        v.poly() - &(&lin * &lin)
    }
}

#[derive(Debug, Clone)]
pub struct Degree2Reduction {
    pub normal_form: QuadraticNormalForm,
    pub effective_potential: Polynomial,
    /// `h_n = int x^n e^{-U(x)} dx` for `n <= 2k`.
    pub hankel_moments: Vec<f64>,
    pub p: Polynomial,
}

/// Monic orthogonal polynomial of degree `k` for the weight
/// `e^{-V(x) + (tau x - b)^2}`, by modified Gram-Schmidt on its moments.
pub fn degree2_reduction(v: &Potential, w: &Potential, tau: f64, k: usize, digits: u32) -> Result<Degree2Reduction> {
    let normal_form = QuadraticNormalForm::of(w, tau)?;
    let u = normal_form.effective_potential(v);
    let weight = Potential::new(u.clone(), PotentialRole::V).map_err(|_| {
        Error::InvalidSpec(format!("effective weight potential {u} is not confining"))
    })?;
    let rule = build_rule_with_power(&weight, 0.0, (2 * k) as u32, digits)?.rule;
    let hankel_moments = (0..=2 * k)
        .map(|n| rule.integrate(|x| x.powi(n as i32) * (-u.eval(x)).exp()))
        .collect::<Result<Vec<_>>>()?;
    let p = gram_schmidt_monic(&hankel_moments, k)?;
    Ok(Degree2Reduction {
        normal_form,
        effective_potential: u,
        hankel_moments,
        p,
    })
}

fn hankel_inner(h: &[f64], f: &Polynomial, g: &Polynomial) -> f64 {
    let mut s = 0.0;
    for (a, &fa) in f.coeffs().iter().enumerate() {
        for (b, &gb) in g.coeffs().iter().enumerate() {
            s += fa * gb * h[a + b];
        }
    }
    s
}

fn gram_schmidt_monic(h: &[f64], k: usize) -> Result<Polynomial> {
    let mut basis: Vec<(Polynomial, f64)> = Vec::with_capacity(k);
    for n in 0..=k {
        let mut v = Polynomial::monomial(n, 1.0);
        // Two passes keep the monomial basis orthogonal enough for small k.
        for _ in 0..2 {
            for (e, norm) in &basis {
                let c = hankel_inner(h, &v, e) / norm;
                v = &v - &e.scale(c);
            }
        }
        if n == k {
            return Ok(v);
        }
        let norm = hankel_inner(h, &v, &v);
        if !(norm > 0.0) {
            return Err(Error::SingularSystem {
                what: format!("Gram-Schmidt step {n}"),
                condition: f64::INFINITY,
            });
        }
        basis.push((v, norm));
    }
    unreachable!()
}

/// Tolerance of every oracle comparison.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

/// Cross-checks of a solved `p_k` against the independent routes.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub p: Polynomial,
    pub q: Polynomial,
    /// Normwise coefficient distance between `p_k` and the Gram-route `p`.
    pub route_error: f64,
    pub pairing: PairingTable,
    /// Present when `deg W = 2`, with the coefficient distance to `p_k`.
    pub degree2: Option<(Degree2Reduction, f64)>,
}

impl OracleReport {
    pub fn run(m: &MomentSet, pk: &Polynomial, digits: u32) -> Result<Self> {
        let spec = m.spec();
        let k = spec.k();
        let (p, q) = biorth_pair_from_bimoments(m, k)?;
        let pairing = pairing_table(m, k)?;
        let degree2 = if spec.w().degree() == 2 {
            let r = degree2_reduction(spec.v(), spec.w(), spec.tau(), k, digits)?;
            let err = pk.relative_distance(&r.p);
            Some((r, err))
        } else {
            None
        };
        Ok(Self {
            route_error: pk.relative_distance(&p),
            p,
            q,
            pairing,
            degree2,
        })
    }

    pub fn passed(&self) -> bool {
        self.route_error < ORACLE_TOLERANCE
            && self.pairing.max_off_diagonal() < ORACLE_TOLERANCE
            && self.pairing.min_diagonal() > ORACLE_TOLERANCE
            && self.degree2.as_ref().is_none_or(|(_, e)| *e < ORACLE_TOLERANCE)
    }
}
