//! Small dense solves for the moment systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Systems whose equilibrated condition estimate exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct Solved {
    pub x: DVector<f64>,
    /// 2-norm condition number of the equilibrated matrix.
    pub condition: f64,
}

/// Row then column max-element scaling factors.
fn equilibrate(a: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let rows = DVector::from_iterator(
        a.nrows(),
        a.row_iter().map(|r| inv_or_one(r.amax())),
    );
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| rows[i] * a[(i, j)]);
    let cols = DVector::from_iterator(
        a.ncols(),
        scaled.column_iter().map(|c| inv_or_one(c.amax())),
    );
    (rows, cols)
}

fn inv_or_one(v: f64) -> f64 {
    if v > 0.0 {
        1.0 / v
    } else {
        1.0
    }
}

fn condition_2norm(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves a square system after row/column equilibration, with one step of
/// iterative refinement.
pub fn solve_equilibrated(a: &DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<Solved> {
    assert!(a.is_square() && a.nrows() == b.len());
    let n = a.nrows();
    if n == 0 {
        return Ok(Solved {
            x: DVector::zeros(0),
            condition: 1.0,
        });
    }
    let (r, c) = equilibrate(a);
    let scaled = DMatrix::from_fn(n, n, |i, j| r[i] * a[(i, j)] * c[j]);
    let condition = condition_2norm(&scaled);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::SingularSystem {
            what: what.to_string(),
            condition,
        });
    }
    let lu = scaled.clone().lu();
    let rhs = b.component_mul(&r);
    let mut y = lu.solve(&rhs).ok_or_else(|| Error::SingularSystem {
        what: what.to_string(),
        condition,
    })?;
    let residual = &rhs - &scaled * &y;
    if let Some(dy) = lu.solve(&residual) {
        y += dy;
    }
    Ok(Solved {
        x: y.component_mul(&c),
        condition,
    })
}

/// Spans the null space of an `(n-1) x n` matrix of full row rank by Gaussian
/// elimination with complete pivoting. The free variable is the last pivot
/// column; it is fixed to one before back substitution.
pub fn null_vector(a: &DMatrix<f64>, what: &str) -> Result<Solved> {
    let m = a.nrows();
    let n = a.ncols();
    assert_eq!(m + 1, n, "null_vector expects one more column than rows");
    if m == 0 {
        return Ok(Solved {
            x: DVector::from_element(1, 1.0),
            condition: 1.0,
        });
    }
    let (r, c) = equilibrate(a);
    let mut u = DMatrix::from_fn(m, n, |i, j| r[i] * a[(i, j)] * c[j]);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut pivots = Vec::with_capacity(m);
    for t in 0..m {
        let (mut pi, mut pj, mut best) = (t, t, 0.0);
        for i in t..m {
            for j in t..n {
                let v = u[(i, j)].abs();
                if v > best {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best == 0.0 {
            return Err(Error::SingularSystem {
                what: what.to_string(),
                condition: f64::INFINITY,
            });
        }
        u.swap_rows(t, pi);
        u.swap_columns(t, pj);
        perm.swap(t, pj);
        pivots.push(best);
        for i in t + 1..m {
            let f = u[(i, t)] / u[(t, t)];
            if f != 0.0 {
                for j in t..n {
                    u[(i, j)] -= f * u[(t, j)];
                }
            }
        }
    }
    let condition = match (pivots.first(), pivots.last()) {
        (Some(a), Some(b)) => a / b,
        _ => 1.0,
    };
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::SingularSystem {
            what: what.to_string(),
            condition,
        });
    }
    let mut z = vec![0.0; n];
    z[n - 1] = 1.0;
    for t in (0..m).rev() {
        let s: f64 = (t + 1..n).map(|j| u[(t, j)] * z[j]).sum();
        z[t] = -s / u[(t, t)];
    }
    let mut x = DVector::zeros(n);
    for (j, &p) in perm.iter().enumerate() {
        x[p] = z[j] * c[p];
    }
    Ok(Solved { x, condition })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn badly_scaled_system() {
        // diag(2^20, 2^-10, 1) * M * diag(2^-15, 2^8, 1) with M well conditioned
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let rs = [2f64.powi(20), 2f64.powi(-10), 1.0];
        let cs = [2f64.powi(-15), 2f64.powi(8), 1.0];
        let a = DMatrix::from_fn(3, 3, |i, j| rs[i] * m[(i, j)] * cs[j]);
        let x_true = DVector::from_vec(vec![2f64.powi(15), -2f64.powi(-7), 3.0]);
        let b = &a * &x_true;
        let s = solve_equilibrated(&a, &b, "test").unwrap();
        for i in 0..3 {
            assert!(((s.x[i] - x_true[i]) / x_true[i]).abs() < 1e-14, "{}", s.x);
        }
        assert!(s.condition < 10.0);
    }

    #[test]
    fn singular_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(
            solve_equilibrated(&a, &b, "s"),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn null_vector_is_annihilated() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 0.5, -1.0, 4.0]);
        let s = null_vector(&a, "n").unwrap();
        assert!((&a * &s.x).amax() < 1e-14 * s.x.amax());
        assert!(s.x.amax() > 0.0);
    }

    #[test]
    fn null_vector_of_empty_system() {
        let a = DMatrix::<f64>::zeros(0, 1);
        let s = null_vector(&a, "n").unwrap();
        assert_eq!(s.x.len(), 1);
        assert_eq!(s.x[0], 1.0);
    }
}
