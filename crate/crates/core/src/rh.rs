//! The `d x d` matrix `Y` built from `p_k`, the dual rows and their Cauchy
//! transforms, and numerical checks of its jump, asymptotics, determinant
//! and the zeros of `p_k`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cauchy::{CauchyColumn, PolyWeightDensity};
use crate::error::Result;
use crate::moments::{MomentSet, WeightFunctions};
use crate::mop::{DualRow, MopSolution};
use crate::poly::Polynomial;
use crate::potentials::ProblemSpec;

#[derive(Debug, Clone)]
pub enum YRow {
    /// `prefactor * (poly, C(poly w_0), ..., C(poly w_{d-2}))`.
    Polynomial {
        poly: Polynomial,
        prefactor: Complex64,
        columns: Vec<CauchyColumn>,
    },
    /// Unit row `e_index`, used for dual rows with `n_j = 0`.
    Unit { index: usize },
}

#[derive(Debug, Clone)]
pub struct YMatrix {
    spec: ProblemSpec,
    n: Vec<usize>,
    rows: Vec<YRow>,
    weights: Arc<WeightFunctions>,
}

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn c1() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl YMatrix {
    pub fn assemble(sol: &MopSolution, m: &MomentSet) -> Result<Self> {
        let spec = m.spec().clone();
        let n = spec.multi_index();
        let weights = Arc::clone(m.weights());
        let rule = m.outer_rule();
        let row = |a: usize, poly: &Polynomial, prefactor: Complex64| YRow::Polynomial {
            poly: poly.clone(),
            prefactor,
            columns: n
                .iter()
                .enumerate()
                .map(|(b, &nb)| {
                    let density = PolyWeightDensity::new(poly.clone(), b, Arc::clone(&weights));
                    CauchyColumn::new(Arc::new(density), rule.clone(), (a, b + 1)).with_expansion_order(nb)
                })
                .collect(),
        };
        let mut rows = vec![row(0, &sol.pk, c1())];
        for (j, dual) in sol.duals.iter().enumerate() {
            rows.push(match dual {
                DualRow::Normalized { r, prefactor } => row(j + 1, r, *prefactor),
                DualRow::Unit => YRow::Unit { index: j + 1 },
            });
        }
        Ok(Self {
            spec,
            n,
            rows,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn multi_index(&self) -> &[usize] {
        &self.n
    }

    pub fn rows(&self) -> &[YRow] {
        &self.rows
    }

    /// Truncation radius of the Cauchy densities.
    pub fn truncation_radius(&self) -> f64 {
        self.rows
            .iter()
            .find_map(|r| match r {
                YRow::Polynomial { columns, .. } => columns.first().map(|c| c.rule().truncation_radius()),
                YRow::Unit { .. } => None,
            })
            .unwrap_or(0.0)
    }

    /// With a corrupted row for perturbation probes.
    pub fn with_scaled_row(&self, row: usize, factor: f64) -> Self {
        let mut out = self.clone();
        if let YRow::Polynomial { prefactor, .. } = &mut out.rows[row] {
            *prefactor *= factor;
        }
        out
    }

    /// `Y(z)` for `Im z != 0`.
    pub fn eval(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let d = self.dim();
        let mut y = DMatrix::from_element(d, d, c0());
        for (a, row) in self.rows.iter().enumerate() {
            match row {
                YRow::Polynomial { poly, prefactor, columns } => {
                    y[(a, 0)] = prefactor * poly.eval_complex(z);
                    for (b, col) in columns.iter().enumerate() {
                        y[(a, b + 1)] = prefactor * col.eval(z)?;
                    }
                }
                YRow::Unit { index } => y[(a, *index)] = c1(),
            }
        }
        Ok(y)
    }

    /// Boundary values `(Y_+(x), Y_-(x))`.
    pub fn boundary_values(&self, x: f64) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
        let d = self.dim();
        let mut plus = DMatrix::from_element(d, d, c0());
        let mut minus = DMatrix::from_element(d, d, c0());
        for (a, row) in self.rows.iter().enumerate() {
            match row {
                YRow::Polynomial { poly, prefactor, columns } => {
                    let p = prefactor * poly.eval(x);
                    plus[(a, 0)] = p;
                    minus[(a, 0)] = p;
                    for (b, col) in columns.iter().enumerate() {
                        let (cp, cm) = col.plemelj_boundary(x)?;
                        plus[(a, b + 1)] = prefactor * cp;
                        minus[(a, b + 1)] = prefactor * cm;
                    }
                }
                YRow::Unit { index } => {
                    plus[(a, *index)] = c1();
                    minus[(a, *index)] = c1();
                }
            }
        }
        Ok((plus, minus))
    }

    /// Identity with `(w_0(x), ..., w_{d-2}(x))` after the leading one of the first row.
    pub fn jump_matrix(&self, x: f64) -> Result<DMatrix<Complex64>> {
        let d = self.dim();
        let u = self.weights.at(x)?;
        let mut j = DMatrix::identity(d, d);
        for b in 0..d - 1 {
            j[(0, b + 1)] = Complex64::new(u[b], 0.0);
        }
        Ok(j)
    }

    /// `diag(z^{-k}, z^{n_0}, ..., z^{n_{d-2}})`, applied on the right.
    fn inverse_normalization(&self, z: Complex64) -> Vec<Complex64> {
        let mut out = vec![z.powu(self.spec.k() as u32).inv()];
        out.extend(self.n.iter().map(|&nj| z.powu(nj as u32)));
        out
    }
}

/// Per-entry `max |Y_+(x) - Y_-(x) J(x)|` over the grid.
pub fn jump_residuals(y: &YMatrix, grid: &[f64]) -> Result<DMatrix<f64>> {
    let d = y.dim();
    let mut worst = DMatrix::<f64>::zeros(d, d);
    for &x in grid {
        let (plus, minus) = y.boundary_values(x)?;
        let residual = plus - minus * y.jump_matrix(x)?;
        worst.zip_apply(&residual, |w: &mut f64, r| *w = w.max(r.norm()));
    }
    Ok(worst)
}

/// `max |Y_+(x) - Y_-(x) J(x)|` over the grid and all entries.
pub fn verify_jump(y: &YMatrix, grid: &[f64]) -> Result<f64> {
    Ok(jump_residuals(y, grid)?.max())
}

#[derive(Debug, Clone)]
pub struct AsymptoticSample {
    pub radius: f64,
    pub theta: f64,
    /// `|(Y(z) D(z)^{-1} - I)_{ab}| |z|` per entry.
    pub scaled: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct AsymptoticTable {
    pub dim: usize,
    pub samples: Vec<AsymptoticSample>,
}

impl AsymptoticTable {
    pub const NOISE_FLOOR: f64 = 1e-9;

    pub fn max_per_entry(&self) -> DMatrix<f64> {
        let mut out = DMatrix::<f64>::zeros(self.dim, self.dim);
        for s in &self.samples {
            out.zip_apply(&s.scaled, |a: &mut f64, b| *a = a.max(b));
        }
        out
    }

    /// Largest ratio `s(z_{i+1}) / s(z_i)` between consecutive radii on the
    /// same ray, over all entries. Pairs that both sit below
    /// [`Self::NOISE_FLOOR`] are round-off and contribute nothing.
    pub fn worst_growth(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, s) in self.samples.iter().enumerate() {
            let next = self.samples[i + 1..]
                .iter()
                .filter(|t| t.theta == s.theta && t.radius > s.radius)
                .min_by(|a, b| a.radius.total_cmp(&b.radius));
            let Some(next) = next else { continue };
            for (a, b) in s.scaled.iter().zip(next.scaled.iter()) {
                let ratio = if a.max(*b) < Self::NOISE_FLOOR {
                    0.0
                } else if *a == 0.0 {
                    f64::INFINITY
                } else {
                    b / a
                };
                worst = worst.max(ratio);
            }
        }
        worst
    }

    pub fn all_finite(&self) -> bool {
        self.samples.iter().all(|s| s.scaled.iter().all(|v| v.is_finite()))
    }
}

/// Samples `|(Y D^{-1} - I)_{ab}| |z|` at `z = r e^{i theta}`.
pub fn verify_asymptotics(y: &YMatrix, radii: &[f64], rays: &[f64]) -> Result<AsymptoticTable> {
    let d = y.dim();
    let mut samples = Vec::with_capacity(radii.len() * rays.len());
    for &theta in rays {
        for &radius in radii {
            let z = Complex64::from_polar(radius, theta);
            let yz = y.eval(z)?;
            let dinv = y.inverse_normalization(z);
            let scaled = DMatrix::from_fn(d, d, |a, b| {
                let delta = if a == b { c1() } else { c0() };
                (yz[(a, b)] * dinv[b] - delta).norm() * radius
            });
            samples.push(AsymptoticSample { radius, theta, scaled });
        }
    }
    Ok(AsymptoticTable { dim: d, samples })
}

/// `max |det Y(z) - 1|` over the points.
pub fn verify_det(y: &YMatrix, points: &[Complex64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &z in points {
        let det = y.eval(z)?.determinant();
        worst = worst.max((det - 1.0).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZerosReport {
    /// Companion-matrix eigenvalues sorted by real part.
    pub roots: Vec<Complex64>,
    pub count_real: usize,
    /// Smallest distance between consecutive real parts; infinite below two roots.
    pub min_gap: f64,
    pub max_imag: f64,
    /// `max(1, max |root|)`
    pub scale: f64,
    /// Extent of the real parts, or `scale` when it is zero.
    pub range: f64,
}

impl ZerosReport {
    pub const IMAG_TOLERANCE: f64 = 1e-7;
    pub const GAP_TOLERANCE: f64 = 1e-6;

    pub fn all_real(&self) -> bool {
        self.count_real == self.roots.len()
    }

    pub fn simple(&self) -> bool {
        self.min_gap > Self::GAP_TOLERANCE * self.range
    }

    pub fn real_roots(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.re).collect()
    }
}

/// Roots of a polynomial from the eigenvalues of its companion matrix.
pub fn verify_zeros(p: &Polynomial) -> ZerosReport {
    let deg = p.degree().unwrap_or(0);
    let mut roots: Vec<Complex64> = if deg == 0 {
        Vec::new()
    } else {
        let lead = p.leading_coeff();
        let companion = DMatrix::from_fn(deg, deg, |i, j| {
            if j == deg - 1 {
                -p.coeff(i) / lead
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        companion.complex_eigenvalues().iter().copied().collect()
    };
    roots.sort_by(|a, b| a.re.total_cmp(&b.re));
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let max_imag = roots.iter().map(|r| r.im.abs()).fold(0.0, f64::max);
    let count_real = roots
        .iter()
        .filter(|r| r.im.abs() < ZerosReport::IMAG_TOLERANCE * scale)
        .count();
    let min_gap = roots
        .windows(2)
        .map(|w| (w[1].re - w[0].re).abs())
        .fold(f64::INFINITY, f64::min);
    let extent = match (roots.first(), roots.last()) {
        (Some(a), Some(b)) => b.re - a.re,
        _ => 0.0,
    };
    ZerosReport {
        roots,
        count_real,
        min_gap,
        max_imag,
        scale,
        range: if extent > 0.0 { extent } else { scale },
    }
}

/// Default verification grids.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub jump_grid: Vec<f64>,
    pub radii: Vec<f64>,
    pub rays: Vec<f64>,
    pub det_points: Vec<Complex64>,
    pub tolerance_jump: f64,
    pub tolerance_det: f64,
    /// Allowed growth factor of `s(z)` between consecutive radii.
    pub growth_slack: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            jump_grid: linspace(-3.0, 3.0, 41),
            radii: vec![20.0, 40.0, 80.0],
            rays: vec![PI / 4.0, PI / 2.0, 3.0 * PI / 4.0],
            det_points: default_det_points(),
            tolerance_jump: 1e-6,
            tolerance_det: 1e-6,
            growth_slack: 3.0,
        }
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Ten fixed points with `|Im z| >= 0.5` and `|z| <= 10`.
pub fn default_det_points() -> Vec<Complex64> {
    [
        (0.0, 2.0),
        (-3.0, 2.0),
        (5.0, -4.0),
        (0.5, 0.5),
        (-1.0, -0.7),
        (6.0, 6.0),
        (-8.0, 0.5),
        (2.5, -1.5),
        (-4.0, -6.0),
        (1.0, 9.0),
    ]
    .into_iter()
    .map(|(re, im)| Complex64::new(re, im))
    .collect()
}

/// Which checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checks {
    pub jump: bool,
    pub asymptotics: bool,
    pub det: bool,
    pub zeros: bool,
}

impl Checks {
    pub const ALL: Checks = Checks {
        jump: true,
        asymptotics: true,
        det: true,
        zeros: true,
    };
    pub const NONE: Checks = Checks {
        jump: false,
        asymptotics: false,
        det: false,
        zeros: false,
    };
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub jump_residual_max: Option<f64>,
    pub jump_residuals: Option<DMatrix<f64>>,
    pub asymptotics: Option<AsymptoticTable>,
    pub det_deviation_max: Option<f64>,
    pub zeros: Option<ZerosReport>,
    pub config: VerifyConfig,
}

impl VerificationReport {
    pub fn empty(config: VerifyConfig) -> Self {
        Self {
            jump_residual_max: None,
            jump_residuals: None,
            asymptotics: None,
            det_deviation_max: None,
            zeros: None,
            config,
        }
    }

    /// Runs the selected checks on `y`. Radii closer than twice the
    /// truncation radius are pushed outwards, keeping their ratios.
    pub fn run(y: &YMatrix, pk: &Polynomial, mut config: VerifyConfig, checks: Checks) -> Result<Self> {
        let far = 2.0 * y.truncation_radius();
        if let Some(&r0) = config.radii.iter().min_by(|a, b| a.total_cmp(b)) {
            if r0 <= far {
                let factor = (far / r0).ceil() + 1.0;
                config.radii.iter_mut().for_each(|r| *r *= factor);
            }
        }
        let mut report = Self::empty(config);
        let cfg = &report.config;
        if checks.jump {
            let entries = jump_residuals(y, &cfg.jump_grid)?;
            report.jump_residual_max = Some(entries.max());
            report.jump_residuals = Some(entries);
        }
        if checks.asymptotics {
            report.asymptotics = Some(verify_asymptotics(y, &cfg.radii, &cfg.rays)?);
        }
        if checks.det {
            report.det_deviation_max = Some(verify_det(y, &cfg.det_points)?);
        }
        if checks.zeros {
            report.zeros = Some(verify_zeros(pk));
        }
        Ok(report)
    }

    pub fn jump_ok(&self) -> bool {
        self.jump_residual_max.is_none_or(|r| r < self.config.tolerance_jump)
    }

    pub fn asymptotics_ok(&self) -> bool {
        self.asymptotics
            .as_ref()
            .is_none_or(|t| t.all_finite() && t.worst_growth() <= self.config.growth_slack)
    }

    pub fn det_ok(&self) -> bool {
        self.det_deviation_max.is_none_or(|r| r < self.config.tolerance_det)
    }

    pub fn zeros_ok(&self) -> bool {
        self.zeros.as_ref().is_none_or(|z| z.all_real() && z.simple())
    }

    pub fn passed(&self) -> bool {
        self.jump_ok() && self.asymptotics_ok() && self.det_ok() && self.zeros_ok()
    }
}
