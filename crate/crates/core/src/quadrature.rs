//! Truncated Gauss-Legendre rules for integrals against rapidly decaying
//! exponential envelopes such as `e^{-W(y) + s y}`.
//!
//! A rule is built in two stages. The truncation radius `R` is the first
//! integer radius at which the integrand envelope has fallen below
//! `10^-(digits+2)` of its peak (probed at `R`, `R + 1/2`, `R + 1`, `3R/2` and
//! `2R` on both sides). The node count is then doubled, starting from 16, until
//! the probe integral of the envelope changes by less than `10^-digits`
//! relative.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};
use crate::potentials::Potential;

pub const DEFAULT_TARGET_DIGITS: u32 = 12;

const MIN_NODES_LOG2: usize = 4;
const MAX_NODES_LOG2: usize = 11;
const MAX_RADIUS: usize = 200;
const SCAN_STEP: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    truncation_radius: f64,
}

/// Reference Gauss-Legendre rules on `[-1, 1]` with `2^m` nodes, sorted by node.
fn reference_rule(log2_n: usize) -> &'static [(f64, f64)] {
    static RULES: OnceLock<Vec<OnceLock<Vec<(f64, f64)>>>> = OnceLock::new();
    let table = RULES.get_or_init(|| (0..=MAX_NODES_LOG2 + 1).map(|_| OnceLock::new()).collect());
    table[log2_n].get_or_init(|| {
        let rule = GaussLegendre::new(1 << log2_n).expect("degree >= 2");
        let mut pairs = rule.into_node_weight_pairs();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        symmetrize(&mut pairs);
        pairs
    })
}

/// Makes a sorted rule exactly mirror-symmetric, so odd integrands of even
/// weights cancel to round-off.
fn symmetrize(pairs: &mut [(f64, f64)]) {
    let n = pairs.len();
    for i in 0..n / 2 {
        let (lo, hi) = (pairs[i], pairs[n - 1 - i]);
        let t = 0.5 * (hi.0 - lo.0);
        let w = 0.5 * (hi.1 + lo.1);
        pairs[i] = (-t, w);
        pairs[n - 1 - i] = (t, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
}

fn gauss_legendre_pairs(n: usize) -> Vec<(f64, f64)> {
    let log2 = n.trailing_zeros() as usize;
    if n.is_power_of_two() && (1..=MAX_NODES_LOG2 + 1).contains(&log2) {
        reference_rule(log2).to_vec()
    } else {
        let mut pairs = GaussLegendre::new(n.max(2))
            .expect("degree >= 2")
            .into_node_weight_pairs();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        symmetrize(&mut pairs);
        pairs
    }
}

impl QuadratureRule {
    /// `n`-point Gauss-Legendre rule mapped to `[-radius, radius]`.
    pub fn gauss_legendre(n: usize, radius: f64) -> Self {
        Self::on_interval(n, -radius, radius, radius)
    }

    /// `n`-point Gauss-Legendre rule on `[a, b]`. `truncation_radius` is metadata
    /// describing the interval the rule stands in for.
    pub(crate) fn on_interval(n: usize, a: f64, b: f64, truncation_radius: f64) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let (nodes, weights) = gauss_legendre_pairs(n)
            .into_iter()
            .map(|(t, w)| (mid + half * t, half * w))
            .unzip();
        Self {
            nodes,
            weights,
            truncation_radius,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `sum_i weights[i] * f(nodes[i])`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (x, w) in self.iter() {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFinite { x });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Principal value of `int_{-R}^{R} f(x) / (x - x0) dx` by subtracting the
    /// singularity: `int (f(x) - f(x0)) / (x - x0) dx + f(x0) log|(R - x0) / (R + x0)|`.
    pub fn principal_value(&self, f: impl Fn(f64) -> f64, x0: f64) -> Result<f64> {
        let r = self.truncation_radius;
        let f0 = f(x0);
        if !f0.is_finite() {
            return Err(Error::NonFinite { x: x0 });
        }
        // Nodes this close to x0 would lose all digits in the difference quotient.
        let near = 1e-7 * r.max(1.0);
        let slope = if self.nodes.iter().any(|x| (x - x0).abs() < near) {
            central_difference(&f, x0, 1e-5 * r.max(1.0))
        } else {
            0.0
        };
        let smooth = self.integrate(|x| {
            let h = x - x0;
            if h.abs() < near {
                slope
            } else {
                (f(x) - f0) / h
            }
        })?;
        let log_term = if f0 == 0.0 {
            0.0
        } else {
            f0 * ((r - x0) / (r + x0)).abs().ln()
        };
        Ok(smooth + log_term)
    }
}

fn central_difference(f: &impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// `rule.integrate`, spelled as a free function.
pub fn integrate_1d(rule: &QuadratureRule, integrand: impl Fn(f64) -> f64) -> Result<f64> {
    rule.integrate(integrand)
}

pub fn principal_value(rule: &QuadratureRule, f: impl Fn(f64) -> f64, x0: f64) -> Result<f64> {
    rule.principal_value(f, x0)
}

/// A rule together with the log of the envelope peak found while building it.
#[derive(Clone, Debug)]
pub struct EnvelopeRule {
    pub rule: QuadratureRule,
    pub log_peak: f64,
}

/// Builds a rule for an integrand whose magnitude is `exp(log_envelope(y))`.
pub fn build_rule_for_envelope(
    log_envelope: impl Fn(f64) -> f64,
    target_digits: u32,
) -> Result<EnvelopeRule> {
    let drop = (target_digits as f64 + 2.0) * std::f64::consts::LN_10;
    let mut peak = log_envelope(0.0);
    let mut scanned = 0.0f64;
    let mut radius = None;
    for r in 2..=MAX_RADIUS {
        let r = r as f64;
        let mut y = scanned + SCAN_STEP;
        while y <= r + 1e-12 {
            peak = peak.max(log_envelope(y)).max(log_envelope(-y));
            y += SCAN_STEP;
        }
        scanned = r;
        if peak.is_nan() || peak == f64::INFINITY {
            return Err(Error::NonConvergent(format!(
                "envelope not finite while scanning radius {r}"
            )));
        }
        let threshold = peak - drop;
        let tails_small = [r, r + 0.5, r + 1.0, 1.5 * r, 2.0 * r]
            .iter()
            .all(|&t| log_envelope(t) < threshold && log_envelope(-t) < threshold);
        if tails_small {
            radius = Some(r);
            break;
        }
    }
    let radius = radius.ok_or_else(|| {
        Error::NonConvergent(format!("envelope does not decay within radius {MAX_RADIUS}"))
    })?;

    let tol = 10f64.powi(-(target_digits as i32));
    let probe = |n: usize| -> Result<f64> {
        QuadratureRule::gauss_legendre(n, radius).integrate(|y| (log_envelope(y) - peak).exp())
    };
    let mut n = 1 << MIN_NODES_LOG2;
    let mut previous = probe(n)?;
    while n < (1 << MAX_NODES_LOG2) {
        let current = probe(2 * n)?;
        n *= 2;
        if (current - previous).abs() <= tol * current.abs() {
            return Ok(EnvelopeRule {
                rule: QuadratureRule::gauss_legendre(n, radius),
                log_peak: peak,
            });
        }
        previous = current;
    }
    Err(Error::NonConvergent(format!(
        "node doubling did not stabilise below {} nodes (radius {radius})",
        1 << MAX_NODES_LOG2
    )))
}

/// Rule for integrals against `e^{-potential(y) + shift * y}`, optionally with a
/// polynomial growth allowance `(1 + y^2)^{power/2}` folded into the envelope.
pub fn build_rule_with_power(
    potential: &Potential,
    shift: f64,
    power: u32,
    target_digits: u32,
) -> Result<EnvelopeRule> {
    let half_power = 0.5 * power as f64;
    build_rule_for_envelope(
        |y| -potential.eval(y) + shift * y + half_power * (1.0 + y * y).ln(),
        target_digits,
    )
}

/// Rule for integrals against `e^{-potential(y) + shift * y}`.
pub fn build_rule(potential: &Potential, shift: f64, target_digits: u32) -> Result<QuadratureRule> {
    build_rule_with_power(potential, shift, 0, target_digits).map(|r| r.rule)
}
