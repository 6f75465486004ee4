//! Weight functions `w_j(x) = int y^j e^{-V(x) - W(y) + 2 tau x y} dy`, mixed
//! moments `int x^i w_j(x) dx` and bimoments
//! `int int x^a y^b e^{-V(x) - W(y) + 2 tau x y} dx dy`.
//!
//! All integrals are iterated: an inner Gauss-Legendre rule in `y` rebuilt for
//! every shift `2 tau x`, and an outer rule in `x` sized from the actual outer
//! integrand envelope.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;

use crate::error::Result;
use crate::poly::Polynomial;
use crate::potentials::{Potential, ProblemSpec};
use crate::quadrature::{build_rule_for_envelope, build_rule_with_power, EnvelopeRule, QuadratureRule, DEFAULT_TARGET_DIGITS};

/// Partial integrals `u_b(x) = e^{-outer(x)} int y^b e^{-inner(y) + 2 tau x y} dy`
/// tabulated for `b = 0..=max_power`, memoised per evaluation point.
///
/// With `inner = W`, `outer = V` these are the weights `w_b`. Swapping the
/// potentials integrates over `x` first instead.
pub struct WeightFunctions {
    inner: Potential,
    outer: Potential,
    tau: f64,
    max_power: usize,
    digits: u32,
    cache: Mutex<HashMap<u64, Arc<[f64]>>>,
}

impl std::fmt::Debug for WeightFunctions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightFunctions")
            .field("tau", &self.tau)
            .field("max_power", &self.max_power)
            .field("digits", &self.digits)
            .finish_non_exhaustive()
    }
}

impl WeightFunctions {
    pub fn new(inner: Potential, outer: Potential, tau: f64, max_power: usize, digits: u32) -> Self {
        Self {
            inner,
            outer,
            tau,
            max_power,
            digits,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Weights `w_0..w_P` of a problem, `P = max(k, d - 1)`.
    pub fn for_spec(spec: &ProblemSpec, digits: u32) -> Self {
        let max_power = spec.k().max(spec.d() - 1);
        Self::new(spec.w().clone(), spec.v().clone(), spec.tau(), max_power, digits)
    }

    pub fn max_power(&self) -> usize {
        self.max_power
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn outer_potential(&self) -> &Potential {
        &self.outer
    }

    /// Inner rule for the shift `2 tau x`.
    pub fn inner_rule(&self, x: f64) -> Result<EnvelopeRule> {
        build_rule_with_power(&self.inner, 2.0 * self.tau * x, self.max_power as u32, self.digits)
    }

    /// Inner integrals scaled by `e^{-log_scale}`; returns `(values, log_scale)`.
    fn scaled_integrals(&self, x: f64) -> Result<(Vec<f64>, f64)> {
        if x < 0.0 && self.inner.is_even() {
            // y -> -y turns the shift 2 tau x into -2 tau x exactly.
            let (mut vals, log_peak) = self.scaled_integrals(-x)?;
            vals.iter_mut().skip(1).step_by(2).for_each(|v| *v = -*v);
            return Ok((vals, log_peak));
        }
        let EnvelopeRule { rule, log_peak } = self.inner_rule(x)?;
        let shift = 2.0 * self.tau * x;
        let mut out = vec![0.0; self.max_power + 1];
        for (y, w) in rule.iter() {
            let base = w * (-self.inner.eval(y) + shift * y - log_peak).exp();
            let mut yp = 1.0;
            for slot in out.iter_mut() {
                *slot += base * yp;
                yp *= y;
            }
        }
        Ok((out, log_peak))
    }

    /// `[u_0(x), ..., u_P(x)]`.
    pub fn at(&self, x: f64) -> Result<Arc<[f64]>> {
        let key = x.to_bits();
        if let Some(v) = self.cache.lock().expect("weight cache poisoned").get(&key) {
            return Ok(Arc::clone(v));
        }
        let (vals, log_scale) = self.scaled_integrals(x)?;
        let factor = (log_scale - self.outer.eval(x)).exp();
        let vals: Arc<[f64]> = vals.into_iter().map(|v| v * factor).collect();
        self.cache
            .lock()
            .expect("weight cache poisoned")
            .insert(key, Arc::clone(&vals));
        Ok(vals)
    }

    /// `u_j(x)`; `j` must not exceed `max_power`.
    pub fn weight(&self, j: usize, x: f64) -> Result<f64> {
        Ok(self.at(x)?[j])
    }

    /// Log of an envelope dominating `(1 + x^2)^{p/2} |u_b(x)|` for all tabulated `b`.
    fn log_outer_envelope(&self, x: f64, outer_power: usize) -> Result<f64> {
        let (vals, log_scale) = self.scaled_integrals(x)?;
        let even = self.max_power - self.max_power % 2;
        let magnitude = vals[0] + vals[even];
        Ok(magnitude.ln() + log_scale - self.outer.eval(x) + 0.5 * outer_power as f64 * (1.0 + x * x).ln())
    }

    /// Outer rule adapted to `x^p u_b(x)` for `p <= outer_power`.
    pub fn outer_rule(&self, outer_power: usize) -> Result<QuadratureRule> {
        // Inner failures surface as NaN, which never passes the tail test.
        let env = |x: f64| self.log_outer_envelope(x, outer_power).unwrap_or(f64::NAN);
        build_rule_for_envelope(env, self.digits).map(|r| r.rule)
    }

    pub fn cached_points(&self) -> usize {
        self.cache.lock().expect("weight cache poisoned").len()
    }
}

/// `w_j(x)` for a problem, evaluated from scratch.
pub fn weight_eval(spec: &ProblemSpec, j: usize, x: f64) -> Result<f64> {
    WeightFunctions::new(spec.w().clone(), spec.v().clone(), spec.tau(), j, DEFAULT_TARGET_DIGITS).weight(j, x)
}

/// Neumaier summation. Moments with odd symmetry cancel across mirrored
/// nodes, and plain accumulation would leave round-off of the size of the
/// individual terms.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Mixed moments and bimoments of one problem, computed once.
#[derive(Debug, Clone)]
pub struct MomentSet {
    spec: ProblemSpec,
    weights: Arc<WeightFunctions>,
    outer: QuadratureRule,
    mixed: Vec<Vec<f64>>,
    bimoment: Vec<Vec<f64>>,
}

impl MomentSet {
    pub fn compute(spec: &ProblemSpec) -> Result<Self> {
        Self::compute_with_digits(spec, DEFAULT_TARGET_DIGITS)
    }

    pub fn compute_with_digits(spec: &ProblemSpec, digits: u32) -> Result<Self> {
        spec.check_budget()?;
        let k = spec.k();
        let d = spec.d();
        let mixed_max = Self::mixed_len(spec) - 1;
        let weights = Arc::new(WeightFunctions::for_spec(spec, digits));
        let outer = weights.outer_rule(mixed_max + 2)?;

        let mut mixed = vec![vec![Compensated::default(); d - 1]; mixed_max + 1];
        let mut bimoment = vec![vec![Compensated::default(); k + 1]; k + 1];
        for (x, omega) in outer.iter() {
            let u = weights.at(x)?;
            let mut xp = omega;
            for i in 0..=mixed_max {
                for (j, slot) in mixed[i].iter_mut().enumerate() {
                    slot.add(xp * u[j]);
                }
                if i <= k {
                    for (b, slot) in bimoment[i].iter_mut().enumerate() {
                        slot.add(xp * u[b]);
                    }
                }
                xp *= x;
            }
        }
        let finish = |t: Vec<Vec<Compensated>>| -> Vec<Vec<f64>> {
            t.into_iter().map(|r| r.into_iter().map(Compensated::value).collect()).collect()
        };
        Ok(Self {
            spec: spec.clone(),
            weights,
            outer,
            mixed: finish(mixed),
            bimoment: finish(bimoment),
        })
    }

    /// Number of mixed-moment rows: indices `0..=k + n_0` cover every product
    /// `x^i x^c` with `i < n_j` and `c <= k`.
    fn mixed_len(spec: &ProblemSpec) -> usize {
        spec.k() + spec.multi_index()[0] + 1
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn weights(&self) -> &Arc<WeightFunctions> {
        &self.weights
    }

    pub fn outer_rule(&self) -> &QuadratureRule {
        &self.outer
    }

    /// `int x^i w_j(x) dx`.
    pub fn mixed(&self, i: usize, j: usize) -> f64 {
        self.mixed[i][j]
    }

    pub fn mixed_rows(&self) -> &[Vec<f64>] {
        &self.mixed
    }

    /// `int int x^a y^b e^{...} dx dy`.
    pub fn bimoment(&self, a: usize, b: usize) -> f64 {
        self.bimoment[a][b]
    }

    pub fn bimoment_rows(&self) -> &[Vec<f64>] {
        &self.bimoment
    }

    pub fn bimoment_matrix(&self) -> DMatrix<f64> {
        let n = self.bimoment.len();
        DMatrix::from_fn(n, n, |a, b| self.bimoment[a][b])
    }

    /// `int f(x) x^i w_j(x) dx` expanded over the mixed moments.
    pub fn moment_of(&self, f: &Polynomial, i: usize, j: usize) -> f64 {
        f.coeffs()
            .iter()
            .enumerate()
            .map(|(c, &fc)| fc * self.mixed[i + c][j])
            .sum()
    }

    /// `max_c |f_c int x^{i+c} w_j|`, the size of the terms summed by `moment_of`.
    pub fn moment_scale(&self, f: &Polynomial, i: usize, j: usize) -> f64 {
        f.coeffs()
            .iter()
            .enumerate()
            .map(|(c, &fc)| (fc * self.mixed[i + c][j]).abs())
            .fold(0.0, f64::max)
    }
}

/// Bimoments with the integration order reversed (inner in `x`, outer in `y`).
pub fn bimoments_y_first(spec: &ProblemSpec, digits: u32) -> Result<Vec<Vec<f64>>> {
    spec.check_budget()?;
    let k = spec.k();
    let table = WeightFunctions::new(spec.v().clone(), spec.w().clone(), spec.tau(), k, digits);
    let outer = table.outer_rule(k + 2)?;
    let mut transposed = vec![vec![0.0; k + 1]; k + 1];
    for (y, omega) in outer.iter() {
        let u = table.at(y)?;
        let mut yp = omega;
        for row in transposed.iter_mut() {
            for (a, slot) in row.iter_mut().enumerate() {
                *slot += yp * u[a];
            }
            yp *= y;
        }
    }
    Ok((0..=k).map(|a| (0..=k).map(|b| transposed[b][a]).collect()).collect())
}
