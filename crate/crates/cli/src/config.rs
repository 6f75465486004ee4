//! Problem configuration files.
//!
//! ```toml
//! V.coeffs = [0.0, 0.0, 1.0]
//! W.coeffs = [0.0, 0.0, 0.0, 0.0, 1.0]
//! tau = 0.5
//! k = 3
//! output_dir = "out"
//! ```

use std::path::{Path, PathBuf};

use biorth::rh::{linspace, VerifyConfig};
use biorth::ProblemSpec;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct Coeffs {
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct Quadrature {
    #[serde(default = "default_digits")]
    target_digits: u32,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct Verify {
    #[serde(default = "default_tolerance")]
    tolerance_jump: f64,
    #[serde(default = "default_tolerance")]
    tolerance_det: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct Grid {
    #[serde(default = "default_x_min")]
    x_min: f64,
    #[serde(default = "default_x_max")]
    x_max: f64,
    #[serde(default = "default_points")]
    points: usize,
}

fn default_digits() -> u32 {
    biorth::quadrature::DEFAULT_TARGET_DIGITS
}

fn default_tolerance() -> f64 {
    1e-6
}

fn default_x_min() -> f64 {
    -3.0
}

fn default_x_max() -> f64 {
    3.0
}

fn default_points() -> usize {
    41
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            target_digits: default_digits(),
        }
    }
}

impl Default for Verify {
    fn default() -> Self {
        Self {
            tolerance_jump: default_tolerance(),
            tolerance_det: default_tolerance(),
        }
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            x_min: default_x_min(),
            x_max: default_x_max(),
            points: default_points(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "V")]
    v: Coeffs,
    #[serde(rename = "W")]
    w: Coeffs,
    tau: f64,
    k: usize,
    #[serde(default)]
    quadrature: Quadrature,
    #[serde(default)]
    verify: Verify,
    #[serde(default)]
    grid: Grid,
    output_dir: Option<PathBuf>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub spec: ProblemSpec,
    pub target_digits: u32,
    pub tolerance_jump: f64,
    pub tolerance_det: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    /// Resolved against the directory holding the config file.
    pub output_dir: PathBuf,
}

pub const DEFAULT_OUTPUT_DIR: &str = "biorth-out";

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        let spec = ProblemSpec::from_coeffs(raw.v.coeffs, raw.w.coeffs, raw.tau, raw.k)?;
        let digits = raw.quadrature.target_digits;
        if !(4..=15).contains(&digits) {
            return Err(CliError::Config(format!(
                "quadrature.target_digits must lie in 4..=15, got {digits}"
            )));
        }
        for (name, tol) in [
            ("verify.tolerance_jump", raw.verify.tolerance_jump),
            ("verify.tolerance_det", raw.verify.tolerance_det),
        ] {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(CliError::Config(format!("{name} must be positive, got {tol}")));
            }
        }
        let g = raw.grid;
        if !(g.x_min.is_finite() && g.x_max.is_finite() && g.x_min < g.x_max) {
            return Err(CliError::Config(format!(
                "grid.x_min must be below grid.x_max, got {} and {}",
                g.x_min, g.x_max
            )));
        }
        if g.points < 2 {
            return Err(CliError::Config(format!("grid.points must be at least 2, got {}", g.points)));
        }
        let output_dir = base.join(raw.output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)));
        Ok(Self {
            spec,
            target_digits: digits,
            tolerance_jump: raw.verify.tolerance_jump,
            tolerance_det: raw.verify.tolerance_det,
            x_min: g.x_min,
            x_max: g.x_max,
            points: g.points,
            output_dir,
        })
    }

    pub fn grid(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.points)
    }

    pub fn verify_config(&self) -> VerifyConfig {
        VerifyConfig {
            jump_grid: self.grid(),
            tolerance_jump: self.tolerance_jump,
            tolerance_det: self.tolerance_det,
            ..VerifyConfig::default()
        }
    }
}
