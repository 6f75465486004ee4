//! Cauchy transforms `C(f)(z) = (1/2 pi i) int f(x) / (x - z) dx` of densities
//! supported (to quadrature accuracy) on a truncated interval `[-R, R]`.
//!
//! Evaluation strategy by region:
//! * `|z| > 2R`: the geometric expansion of `1/(x - z)` with explicitly
//!   computed moments, `C(f)(z) = -sum_{i<n} mu_i z^{-i-1} / (2 pi i)
//!   + z^{-n} C(x^n f)(z)`, where `n` is the column's expansion order.
//! * otherwise: composite 16-point Gauss-Legendre on panels refined around
//!   `Re z` until every panel's Bernstein ellipse through `z` has parameter at
//!   least 3. This stays accurate arbitrarily close to the axis.
//! * on the axis: Plemelj boundary values from a principal value computed by
//!   singularity subtraction on the column's base rule.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moments::WeightFunctions;
use crate::poly::Polynomial;
use crate::quadrature::QuadratureRule;

const PANEL_NODES: usize = 16;
const MIN_ELLIPSE: f64 = 3.0;
const MAX_PANEL_DEPTH: usize = 60;

/// A real density on the line.
pub trait Density: Send + Sync {
    fn value(&self, x: f64) -> f64;
}

/// Wraps a closure as a density.
pub struct FnDensity<F>(pub F);

impl<F: Fn(f64) -> f64 + Send + Sync> Density for FnDensity<F> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// `r(x) w_j(x)`, with `w_j` from a shared weight table. Weight failures are
/// reported as NaN and surface as `NonFinite` in the integrators.
pub struct PolyWeightDensity {
    poly: Polynomial,
    j: usize,
    weights: Arc<WeightFunctions>,
}

impl PolyWeightDensity {
    pub fn new(poly: Polynomial, j: usize, weights: Arc<WeightFunctions>) -> Self {
        assert!(j <= weights.max_power(), "weight index beyond tabulated range");
        Self { poly, j, weights }
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }
}

impl Density for PolyWeightDensity {
    fn value(&self, x: f64) -> f64 {
        if self.poly.is_zero() {
            return 0.0;
        }
        match self.weights.weight(self.j, x) {
            Ok(w) => self.poly.eval(x) * w,
            Err(_) => f64::NAN,
        }
    }
}

/// One Cauchy-transform entry of `Y`: a density, its base rule, and its
/// `(row, column)` position.
#[derive(Clone)]
pub struct CauchyColumn {
    density: Arc<dyn Density>,
    rule: QuadratureRule,
    label: (usize, usize),
    expansion_order: usize,
}

impl fmt::Debug for CauchyColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CauchyColumn")
            .field("label", &self.label)
            .field("expansion_order", &self.expansion_order)
            .field("truncation_radius", &self.rule.truncation_radius())
            .finish_non_exhaustive()
    }
}

fn two_pi_i() -> Complex64 {
    Complex64::new(0.0, 2.0 * PI)
}

impl CauchyColumn {
    pub fn new(density: Arc<dyn Density>, rule: QuadratureRule, label: (usize, usize)) -> Self {
        Self {
            density,
            rule,
            label,
            expansion_order: 0,
        }
    }

    /// Number of moments peeled off explicitly when `|z| > 2R`.
    pub fn with_expansion_order(mut self, n: usize) -> Self {
        self.expansion_order = n;
        self
    }

    pub fn label(&self) -> (usize, usize) {
        self.label
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn density(&self, x: f64) -> f64 {
        self.density.value(x)
    }

    pub fn expansion_order(&self) -> usize {
        self.expansion_order
    }

    /// `int x^i f(x) dx` on the base rule.
    pub fn moment(&self, i: usize) -> Result<f64> {
        self.rule.integrate(|x| x.powi(i as i32) * self.density.value(x))
    }

    fn crossover(&self) -> f64 {
        2.0 * self.rule.truncation_radius()
    }

    /// `(1 / 2 pi i) int x^n f(x) / (x - z) dx`.
    fn transform_with_power(&self, n: usize, z: Complex64) -> Result<Complex64> {
        if z.im == 0.0 {
            return Err(Error::OnRealAxis { re: z.re, im: z.im });
        }
        let integrand = |x: f64| -> Result<Complex64> {
            let v = self.density.value(x) * x.powi(n as i32);
            if !v.is_finite() {
                return Err(Error::NonFinite { x });
            }
            Ok(v / (Complex64::new(x, 0.0) - z))
        };
        let sum = if z.norm() > self.crossover() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, w) in self.rule.iter() {
                acc += w * integrand(x)?;
            }
            acc
        } else {
            let r = self.rule.truncation_radius();
            let pieces = (2.0 * r).ceil().max(1.0) as usize;
            let h = 2.0 * r / pieces as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..pieces {
                let a = -r + p as f64 * h;
                acc += panel_sum(a, a + h, z, &integrand, 0)?;
            }
            acc
        };
        Ok(sum / two_pi_i())
    }

    /// `C(f)(z)` for `Im z != 0`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let n = self.expansion_order;
        if n == 0 || z.norm() <= self.crossover() {
            return self.transform_with_power(0, z);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let mut zinv_pow = z.inv();
        for i in 0..n {
            acc -= self.moment(i)? * zinv_pow / two_pi_i();
            zinv_pow /= z;
        }
        // zinv_pow is now z^{-n-1}; the remainder carries z^{-n}.
        Ok(acc + self.transform_with_power(n, z)? * zinv_pow * z)
    }

    /// Remainder form `z^{-n} (1 / 2 pi i) int f(x) x^n / (x - z) dx`, equal to
    /// `C(f)(z)` when the first `n` moments of `f` vanish.
    pub fn asymptotic_tail(&self, n: usize, z: Complex64) -> Result<Complex64> {
        Ok(self.transform_with_power(n, z)? / z.powu(n as u32))
    }

    /// Boundary values `(C_+(f)(x0), C_-(f)(x0))` from above and below.
    pub fn plemelj_boundary(&self, x0: f64) -> Result<(Complex64, Complex64)> {
        let pv = self.rule.principal_value(|x| self.density.value(x), x0)?;
        let f0 = self.density.value(x0);
        let mid = Complex64::new(pv, 0.0) / two_pi_i();
        Ok((mid + 0.5 * f0, mid - 0.5 * f0))
    }
}

/// Bernstein ellipse parameter of `z` relative to `[a, b]`.
fn ellipse_parameter(a: f64, b: f64, z: Complex64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let t = (z - c) / h;
    let s = (t * t - 1.0).sqrt();
    (t + s).norm().max((t - s).norm())
}

fn panel_sum(
    a: f64,
    b: f64,
    z: Complex64,
    integrand: &impl Fn(f64) -> Result<Complex64>,
    depth: usize,
) -> Result<Complex64> {
    if depth < MAX_PANEL_DEPTH && ellipse_parameter(a, b, z) < MIN_ELLIPSE {
        let m = 0.5 * (a + b);
        return Ok(panel_sum(a, m, z, integrand, depth + 1)? + panel_sum(m, b, z, integrand, depth + 1)?);
    }
    let rule = QuadratureRule::on_interval(PANEL_NODES, a, b, 0.5 * (b - a));
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in rule.iter() {
        acc += w * integrand(x)?;
    }
    Ok(acc)
}

pub fn cauchy_eval(col: &CauchyColumn, z: Complex64) -> Result<Complex64> {
    col.eval(z)
}

pub fn plemelj_boundary(col: &CauchyColumn, x0: f64) -> Result<(Complex64, Complex64)> {
    col.plemelj_boundary(x0)
}

pub fn asymptotic_tail(col: &CauchyColumn, n: usize, z: Complex64) -> Result<Complex64> {
    col.asymptotic_tail(n, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Potential, PotentialRole};
    use crate::quadrature::build_rule;

    fn gaussian_column(a: f64) -> CauchyColumn {
        let pot = Potential::from_coeffs(vec![0.0, 0.0, a], PotentialRole::V).unwrap();
        let rule = build_rule(&pot, 0.0, 12).unwrap();
        CauchyColumn::new(Arc::new(FnDensity(move |x: f64| (-a * x * x).exp())), rule, (0, 1))
    }

    fn quartic_rule() -> QuadratureRule {
        let pot = Potential::from_coeffs(vec![0.0, 0.0, 0.0, 0.0, 1.0], PotentialRole::V).unwrap();
        build_rule(&pot, 0.0, 12).unwrap()
    }

    #[test]
    fn schwarz_reflection() {
        // The 1/(2 pi i) prefactor flips sign under conjugation:
        // C(f)(conj z) = -conj(C(f)(z)) for real f.
        let col = gaussian_column(1.0);
        for z in [Complex64::new(0.3, 0.7), Complex64::new(-2.0, 0.2), Complex64::new(15.0, 3.0)] {
            let up = col.eval(z).unwrap();
            let down = col.eval(z.conj()).unwrap();
            assert!((up + down.conj()).norm() < 1e-14 * up.norm(), "{z}: {up} vs {down}");
        }
    }

    #[test]
    fn zero_mean_decays_faster() {
        let col = CauchyColumn::new(Arc::new(FnDensity(|x: f64| x * (-x.powi(4)).exp())), quartic_rule(), (0, 1));
        let mut prev = f64::INFINITY;
        for t in [10.0, 100.0, 1000.0] {
            let z = Complex64::new(0.0, t);
            let v = (z * col.eval(z).unwrap()).norm();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn real_axis_rejected() {
        let col = gaussian_column(1.0);
        assert!(matches!(col.eval(Complex64::new(1.0, 0.0)), Err(Error::OnRealAxis { .. })));
    }

    #[test]
    fn plemelj_even_density_at_origin() {
        let col = gaussian_column(1.0);
        let (plus, minus) = col.plemelj_boundary(0.0).unwrap();
        assert!((plus - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((minus - Complex64::new(-0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn plemelj_jump_is_density() {
        let col = gaussian_column(0.8);
        for &x0 in &[-2.0, -0.3, 0.0, 1.1, 3.5] {
            let (plus, minus) = col.plemelj_boundary(x0).unwrap();
            assert!((plus - minus - col.density(x0)).norm() < 1e-15);
        }
    }

    #[test]
    fn tail_order_zero_is_direct() {
        let col = gaussian_column(1.0);
        let z = Complex64::new(0.4, 1.3);
        assert_eq!(col.asymptotic_tail(0, z).unwrap(), col.eval(z).unwrap());
    }

    #[test]
    fn remainder_form_for_zero_mean() {
        let col = CauchyColumn::new(Arc::new(FnDensity(|x: f64| x * (-x.powi(4)).exp())), quartic_rule(), (0, 1));
        let z = Complex64::new(0.0, 2.0);
        let direct = col.eval(z).unwrap();
        let tail = col.asymptotic_tail(1, z).unwrap();
        assert!((direct - tail).norm() < 1e-9 * direct.norm());
    }

    #[test]
    fn expansion_matches_panels_across_crossover() {
        let base = gaussian_column(1.0);
        let r = base.rule().truncation_radius();
        let expanded = base.clone().with_expansion_order(3);
        let z = Complex64::new(1.2 * r, 1.4 * r);
        let a = expanded.eval(z).unwrap();
        let b = base.eval(z).unwrap();
        assert!((a - b).norm() < 1e-12 * b.norm());
    }
}
