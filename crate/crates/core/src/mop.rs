//! Multiple-orthogonality systems.
//!
//! The monic `p_k` is fixed by `int p_k(x) x^i w_j(x) dx = 0` for `i < n_j`.
//! Each dual row `j` is a polynomial `r_j` of degree `< k` satisfying the same
//! conditions except the single slot `(n_j - 1, j)`, where
//! `int r_j x^{n_j - 1} w_j = 1`. The row of `Y` is `-2 pi i r_j`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{null_vector, solve_equilibrated};
use crate::moments::{MomentSet, WeightFunctions};
use crate::poly::Polynomial;
use crate::potentials::{pi_poly, ProblemSpec};
use crate::quadrature::build_rule_with_power;

/// Orthogonality residual above which a solve is reported as failed.
pub const SOLVER_TOLERANCE: f64 = 1e-8;

/// `-2 pi i`, the normalization carried by every dual row.
pub fn dual_prefactor() -> Complex64 {
    Complex64::new(0.0, -2.0 * PI)
}

/// All `(i, j)` with `i < n_j`, ordered by `j` then `i`.
pub fn orthogonality_conditions(n: &[usize]) -> Vec<(usize, usize)> {
    n.iter()
        .enumerate()
        .flat_map(|(j, &nj)| (0..nj).map(move |i| (i, j)))
        .collect()
}

/// The homogeneous conditions of dual row `j`: every orthogonality condition except
/// `(n_j - 1, j)`.
pub fn dual_conditions(n: &[usize], j: usize) -> Vec<(usize, usize)> {
    orthogonality_conditions(n)
        .into_iter()
        .filter(|&(i, l)| !(l == j && i + 1 == n[j]))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum DualRow {
    /// `Y` row `(-2 pi i) * (r, C(r w_0), ..., C(r w_{d-2}))`.
    Normalized { r: Polynomial, prefactor: Complex64 },
    /// `n_j = 0`: no condition slot exists and the row of `Y` is a unit row.
    Unit,
}

impl DualRow {
    pub fn polynomial(&self) -> Polynomial {
        match self {
            DualRow::Normalized { r, .. } => r.clone(),
            DualRow::Unit => Polynomial::zero(),
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, DualRow::Unit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Largest relative residual over the orthogonality conditions for `p_k` and the
    /// homogeneous conditions of every dual row.
    pub max_orthogonality: f64,
    pub pk_condition: f64,
    pub dual_conditions: Vec<f64>,
    /// `int r_j x^{n_j - 1} w_j`, which should be one.
    pub dual_normalization: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MopSolution {
    pub spec: ProblemSpec,
    pub pk: Polynomial,
    pub duals: Vec<DualRow>,
    pub diagnostics: Diagnostics,
}

fn moment_row(m: &MomentSet, i: usize, j: usize, cols: usize) -> impl Iterator<Item = f64> + '_ {
    (0..cols).map(move |c| m.mixed(i + c, j))
}

/// The monic `p_k` and the equilibrated condition number of its system.
pub fn solve_pk(m: &MomentSet) -> Result<(Polynomial, f64)> {
    let spec = m.spec();
    let k = spec.k();
    let rows = orthogonality_conditions(&spec.multi_index());
    let mut a = DMatrix::zeros(k, k);
    let mut b = DVector::zeros(k);
    for (row, &(i, j)) in rows.iter().enumerate() {
        for (c, v) in moment_row(m, i, j, k).enumerate() {
            a[(row, c)] = v;
        }
        b[row] = -m.mixed(i + k, j);
    }
    let solved = solve_equilibrated(&a, &b, "multiple orthogonality system for p_k")?;
    let mut coeffs: Vec<f64> = solved.x.iter().copied().collect();
    coeffs.push(1.0);
    Ok((Polynomial::new(coeffs), solved.condition))
}

/// Dual row `j` and the condition estimate of its homogeneous system.
pub fn solve_dual(m: &MomentSet, j: usize) -> Result<(DualRow, f64)> {
    let spec = m.spec();
    let k = spec.k();
    let n = spec.multi_index();
    if n[j] == 0 {
        return Ok((DualRow::Unit, 1.0));
    }
    let rows = dual_conditions(&n, j);
    let mut a = DMatrix::zeros(k - 1, k);
    for (row, &(i, l)) in rows.iter().enumerate() {
        for (c, v) in moment_row(m, i, l, k).enumerate() {
            a[(row, c)] = v;
        }
    }
    let solved = null_vector(&a, &format!("homogeneous system of dual row {j}"))?;
    let r = Polynomial::new(solved.x.iter().copied().collect());
    let slot = n[j] - 1;
    let nu = m.moment_of(&r, slot, j);
    let scale = m.moment_scale(&r, slot, j);
    if !(nu.abs() > 1e-12 * scale) {
        return Err(Error::NormalizationImpossible { row: j, value: nu });
    }
    Ok((
        DualRow::Normalized {
            r: r.scale(1.0 / nu),
            prefactor: dual_prefactor(),
        },
        solved.condition,
    ))
}

/// `max |int p x^i w_j| / max_c |p_c int x^{i+c} w_j|` over `conditions`.
pub fn orthogonality_residual(p: &Polynomial, m: &MomentSet, conditions: &[(usize, usize)]) -> f64 {
    conditions
        .iter()
        .map(|&(i, j)| {
            let scale = m.moment_scale(p, i, j);
            if scale == 0.0 {
                0.0
            } else {
                m.moment_of(p, i, j).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

impl MopSolution {
    pub fn solve(m: &MomentSet) -> Result<Self> {
        let spec = m.spec().clone();
        let n = spec.multi_index();
        let (pk, pk_condition) = solve_pk(m)?;
        let mut max_orthogonality = orthogonality_residual(&pk, m, &orthogonality_conditions(&n));
        let mut duals = Vec::with_capacity(n.len());
        let mut dual_conds = Vec::with_capacity(n.len());
        let mut dual_norm = Vec::with_capacity(n.len());
        for j in 0..n.len() {
            let (row, cond) = solve_dual(m, j)?;
            if let DualRow::Normalized { r, .. } = &row {
                max_orthogonality = max_orthogonality.max(orthogonality_residual(r, m, &dual_conditions(&n, j)));
                dual_norm.push(m.moment_of(r, n[j] - 1, j));
            } else {
                dual_norm.push(f64::NAN);
            }
            duals.push(row);
            dual_conds.push(cond);
        }
        if max_orthogonality > SOLVER_TOLERANCE {
            return Err(Error::Conditioning(format!(
                "orthogonality residual {max_orthogonality:.3e} exceeds {SOLVER_TOLERANCE:.0e}"
            )));
        }
        Ok(Self {
            spec,
            pk,
            duals,
            diagnostics: Diagnostics {
                max_orthogonality,
                pk_condition,
                dual_conditions: dual_conds,
                dual_normalization: dual_norm,
            },
        })
    }
}

impl MopSolution {
    /// Wraps externally supplied polynomials, e.g. loaded artifacts, with
    /// freshly evaluated residuals. Condition estimates are unknown and set
    /// to NaN; large residuals are reported, not rejected.
    pub fn from_parts(m: &MomentSet, pk: Polynomial, duals: Vec<DualRow>) -> Result<Self> {
        let spec = m.spec().clone();
        let n = spec.multi_index();
        let k = spec.k();
        if pk.degree() != Some(k) || !pk.is_monic() {
            return Err(Error::InvalidSpec(format!("p_k must be monic of degree {k}, got {pk}")));
        }
        if duals.len() != n.len() {
            return Err(Error::InvalidSpec(format!(
                "expected {} dual rows, got {}",
                n.len(),
                duals.len()
            )));
        }
        let mut max_orthogonality = orthogonality_residual(&pk, m, &orthogonality_conditions(&n));
        let mut dual_norm = Vec::with_capacity(n.len());
        for (j, row) in duals.iter().enumerate() {
            match row {
                DualRow::Unit if n[j] == 0 => dual_norm.push(f64::NAN),
                DualRow::Normalized { r, .. } if n[j] > 0 && r.degree().unwrap_or(0) < k => {
                    max_orthogonality = max_orthogonality.max(orthogonality_residual(r, m, &dual_conditions(&n, j)));
                    dual_norm.push(m.moment_of(r, n[j] - 1, j));
                }
                _ => {
                    return Err(Error::InvalidSpec(format!(
                        "dual row {j} does not fit n_{j} = {} and k = {k}",
                        n[j]
                    )))
                }
            }
        }
        Ok(Self {
            spec,
            pk,
            duals,
            diagnostics: Diagnostics {
                max_orthogonality,
                pk_condition: f64::NAN,
                dual_conditions: vec![f64::NAN; n.len()],
                dual_normalization: dual_norm,
            },
        })
    }
}

/// Both sides of the integration-by-parts identity
/// `int int f(x) pi(y) e^{-V-W+2 tau x y} = (-2 tau)^i int f(x) x^i w_j(x) dx`
/// where `pi(y) e^{-W} = d^i/dy^i (y^j e^{-W})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `int int |f(x) pi(y)| e^{...}`, the size of the integrand.
    pub scale: f64,
}

impl IbpCheck {
    /// `|lhs - rhs|` relative to the larger side, or to `scale` when both
    /// sides vanish (parity).
    pub fn relative_discrepancy(&self) -> f64 {
        let size = self.lhs.abs().max(self.rhs.abs());
        let denom = if size > 1e-10 * self.scale { size } else { self.scale };
        if denom == 0.0 {
            0.0
        } else {
            (self.lhs - self.rhs).abs() / denom
        }
    }
}

pub fn ibp_identity_check(spec: &ProblemSpec, f: &Polynomial, i: usize, j: usize, digits: u32) -> Result<IbpCheck> {
    let pi = pi_poly(i, j, spec.w());
    let deg_pi = pi.degree().unwrap_or(0);
    let deg_f = f.degree().unwrap_or(0);
    let table = WeightFunctions::new(spec.w().clone(), spec.v().clone(), spec.tau(), deg_pi.max(j), digits);
    let outer = table.outer_rule(deg_f + i + 2)?;
    let tau = spec.tau();
    let (mut lhs, mut rhs, mut scale) = (0.0, 0.0, 0.0);
    for (x, omega) in outer.iter() {
        let fx = f.eval(x);
        // left side: pointwise integrand pi(y) e^{-V(x) - W(y) + 2 tau x y}
        let inner = build_rule_with_power(spec.w(), 2.0 * tau * x, deg_pi as u32, digits)?;
        let v = spec.v().eval(x);
        let (mut acc, mut acc_abs) = (0.0, 0.0);
        for (y, wy) in inner.rule.iter() {
            let e = wy * (-v - spec.w().eval(y) + 2.0 * tau * x * y).exp();
            let py = pi.eval(y);
            acc += e * py;
            acc_abs += e * py.abs();
        }
        lhs += omega * fx * acc;
        scale += omega * fx.abs() * acc_abs;
        // right side from the tabulated weight
        rhs += omega * fx * x.powi(i as i32) * table.weight(j, x)?;
    }
    Ok(IbpCheck {
        lhs,
        rhs: (-2.0 * tau).powi(i as i32) * rhs,
        scale,
    })
}
