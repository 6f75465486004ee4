use std::path::{Path, PathBuf};

use biorth::mop::SOLVER_TOLERANCE;
use biorth::oracle::{OracleReport, ORACLE_TOLERANCE};
use biorth::{Checks, MomentSet, MopSolution, VerificationReport, YMatrix};

use crate::artifacts::{self, real, Csv, KeyValues};
use crate::config::Config;
use crate::CliError;

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(";")
}

fn problem_keys(cfg: &Config, m: &MomentSet) -> KeyValues {
    let spec = &cfg.spec;
    let mut kv = KeyValues::default();
    kv.push("k", spec.k());
    kv.push("d", spec.d());
    kv.push_real("tau", spec.tau());
    kv.push("multi_index", join(&spec.multi_index(), |n| n.to_string()));
    kv.push("target_digits", cfg.target_digits);
    kv.push_real("truncation_radius", m.outer_rule().truncation_radius());
    kv.push("outer_nodes", m.outer_rule().len());
    kv
}

fn moments_for(cfg: &Config) -> Result<MomentSet, CliError> {
    Ok(MomentSet::compute_with_digits(&cfg.spec, cfg.target_digits)?)
}

/// Solves for `p_k` and the dual rows and writes them out.
pub fn compute(cfg: &Config) -> Result<Vec<PathBuf>, CliError> {
    let m = moments_for(cfg)?;
    let sol = MopSolution::solve(&m)?;
    let k = cfg.spec.k();

    let mut diag = problem_keys(cfg, &m);
    let d = &sol.diagnostics;
    diag.push_real("solver_tolerance", SOLVER_TOLERANCE);
    diag.push_real("max_orthogonality", d.max_orthogonality);
    diag.push_real("pk_condition", d.pk_condition);
    for (j, dual) in sol.duals.iter().enumerate() {
        diag.push(format!("dual_{j}_kind"), if dual.is_unit() { "unit" } else { "normalized" });
        if !dual.is_unit() {
            diag.push_real(format!("dual_{j}_condition"), d.dual_conditions[j]);
            diag.push_real(format!("dual_{j}_normalization"), d.dual_normalization[j]);
        }
    }

    let mut samples = Csv::new(&["x", "pk"]);
    for x in cfg.grid() {
        samples.row(&[real(x), real(sol.pk.eval(x))]);
    }
    let zeros = biorth::rh::verify_zeros(&sol.pk);
    let mut zcsv = Csv::new(&["index", "re", "im"]);
    for (i, z) in zeros.roots.iter().enumerate() {
        zcsv.row(&[(i + 1).to_string(), real(z.re), real(z.im)]);
    }

    artifacts::write_all(
        &cfg.output_dir,
        vec![
            (artifacts::PK_FILE, artifacts::pk_csv(&sol.pk)),
            (artifacts::DUALS_FILE, artifacts::duals_csv(&sol.duals, k)),
            (artifacts::DIAGNOSTICS_FILE, diag.render()),
            (artifacts::SAMPLES_FILE, samples.into_string()),
            (artifacts::ZEROS_FILE, zcsv.into_string()),
        ],
    )
}

/// Dumps the mixed moments and the bimoment matrix.
pub fn moments(cfg: &Config) -> Result<Vec<PathBuf>, CliError> {
    let m = moments_for(cfg)?;
    let d = cfg.spec.d();
    let k = cfg.spec.k();
    let header: Vec<String> = (0..d - 1).map(|j| format!("w{j}")).collect();
    let mut mixed = Csv::new(&header);
    for row in m.mixed_rows() {
        mixed.row(&row.iter().map(|&v| real(v)).collect::<Vec<_>>());
    }
    let header: Vec<String> = (0..=k).map(|b| format!("b{b}")).collect();
    let mut bi = Csv::new(&header);
    for row in m.bimoment_rows() {
        bi.row(&row.iter().map(|&v| real(v)).collect::<Vec<_>>());
    }
    artifacts::write_all(
        &cfg.output_dir,
        vec![
            (artifacts::MOMENTS_FILE, mixed.into_string()),
            (artifacts::BIMOMENTS_FILE, bi.into_string()),
        ],
    )
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifyFlags {
    pub oracle: bool,
    pub jump: bool,
    pub asymptotics: bool,
    pub det: bool,
    pub zeros: bool,
}

impl VerifyFlags {
    pub const ALL: VerifyFlags = VerifyFlags {
        oracle: true,
        jump: true,
        asymptotics: true,
        det: true,
        zeros: true,
    };

    /// No selection means everything.
    pub fn or_all(self) -> Self {
        if self == Self::default() {
            Self::ALL
        } else {
            self
        }
    }

    fn checks(self) -> Checks {
        Checks {
            jump: self.jump,
            asymptotics: self.asymptotics,
            det: self.det,
            zeros: self.zeros,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub passed: bool,
    pub report: KeyValues,
    pub files: Vec<PathBuf>,
}

fn load_solution(m: &MomentSet, dir: &Path) -> Result<MopSolution, CliError> {
    let read = |name: &str| {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|source| CliError::Io { path, source })
    };
    let pk = artifacts::read_pk(&read(artifacts::PK_FILE)?)?;
    let duals = artifacts::read_duals(&read(artifacts::DUALS_FILE)?, m.spec().d() - 1)?;
    Ok(MopSolution::from_parts(m, pk, duals)?)
}

/// Runs the selected checks; `artifacts` points at a previous `compute`
/// output to verify instead of solving afresh.
pub fn verify(cfg: &Config, flags: VerifyFlags, artifacts: Option<&Path>) -> Result<VerifyOutcome, CliError> {
    let m = moments_for(cfg)?;
    let sol = match artifacts {
        Some(dir) => load_solution(&m, dir)?,
        None => MopSolution::solve(&m)?,
    };
    let y = YMatrix::assemble(&sol, &m)?;
    let report = VerificationReport::run(&y, &sol.pk, cfg.verify_config(), flags.checks())?;
    let oracle = if flags.oracle {
        Some(OracleReport::run(&m, &sol.pk, cfg.target_digits)?)
    } else {
        None
    };

    let mut kv = KeyValues::default();
    kv.push("source", if artifacts.is_some() { "artifacts" } else { "solved" });
    kv.entries.extend(problem_keys(cfg, &m).entries);
    let orthogonality_ok = sol.diagnostics.max_orthogonality < SOLVER_TOLERANCE;
    kv.push_real("solver_tolerance", SOLVER_TOLERANCE);
    kv.push_real("max_orthogonality", sol.diagnostics.max_orthogonality);
    kv.push("orthogonality_ok", orthogonality_ok);

    let mut residuals = Csv::new(&["check", "row", "col", "radius", "theta", "value"]);
    let c = &report.config;
    if let (Some(max), Some(entries)) = (report.jump_residual_max, &report.jump_residuals) {
        kv.push_real("tolerance_jump", c.tolerance_jump);
        kv.push("jump_grid_points", c.jump_grid.len());
        kv.push_real("jump_x_min", cfg.x_min);
        kv.push_real("jump_x_max", cfg.x_max);
        kv.push_real("jump_residual_max", max);
        kv.push("jump_ok", report.jump_ok());
        for (a, row) in entries.row_iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                residuals.row(&["jump".into(), (a + 1).to_string(), (b + 1).to_string(), String::new(), String::new(), real(*v)]);
            }
        }
    }
    if let Some(table) = &report.asymptotics {
        kv.push("asymptotic_radii", join(&c.radii, |r| real(*r)));
        kv.push("asymptotic_rays", join(&c.rays, |t| real(*t)));
        kv.push_real("asymptotic_growth_slack", c.growth_slack);
        kv.push_real("asymptotic_worst_growth", table.worst_growth());
        let max = table.max_per_entry();
        kv.push_real("asymptotic_max_scaled", max.max());
        kv.push("asymptotics_ok", report.asymptotics_ok());
        for s in &table.samples {
            for (a, row) in s.scaled.row_iter().enumerate() {
                for (b, v) in row.iter().enumerate() {
                    residuals.row(&[
                        "asymptotic".into(),
                        (a + 1).to_string(),
                        (b + 1).to_string(),
                        real(s.radius),
                        real(s.theta),
                        real(*v),
                    ]);
                }
            }
        }
        for (a, row) in max.row_iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                residuals.row(&["asymptotic_max".into(), (a + 1).to_string(), (b + 1).to_string(), String::new(), String::new(), real(*v)]);
            }
        }
    }
    if let Some(dev) = report.det_deviation_max {
        kv.push_real("tolerance_det", c.tolerance_det);
        kv.push("det_points", c.det_points.len());
        kv.push_real("det_deviation_max", dev);
        kv.push("det_ok", report.det_ok());
    }
    if let Some(z) = &report.zeros {
        kv.push("zeros_total", z.roots.len());
        kv.push("zeros_count_real", z.count_real);
        kv.push_real("zeros_min_gap", z.min_gap);
        kv.push_real("zeros_max_imag", z.max_imag);
        kv.push_real("zeros_range", z.range);
        for (i, r) in z.roots.iter().enumerate() {
            kv.push_real(format!("zero_{}_re", i + 1), r.re);
            kv.push_real(format!("zero_{}_im", i + 1), r.im);
        }
        kv.push("zeros_ok", report.zeros_ok());
    }
    let oracle_ok = oracle.as_ref().is_none_or(OracleReport::passed);
    if let Some(o) = &oracle {
        kv.push_real("oracle_tolerance", ORACLE_TOLERANCE);
        kv.push_real("oracle_route_error", o.route_error);
        kv.push_real("oracle_pairing_max_off_diagonal", o.pairing.max_off_diagonal());
        kv.push_real("oracle_pairing_min_diagonal", o.pairing.min_diagonal());
        for (i, row) in o.pairing.values.iter().enumerate() {
            kv.push_real(format!("oracle_pairing_diagonal_{i}"), row[i]);
        }
        if let Some((r, err)) = &o.degree2 {
            let nf = &r.normal_form;
            kv.push_real("oracle_degree2_scale", nf.s);
            kv.push_real("oracle_degree2_tau", nf.tau);
            kv.push_real("oracle_degree2_b", nf.b);
            kv.push_real("oracle_degree2_c", nf.c);
            kv.push_real("oracle_degree2_error", *err);
        }
        kv.push("oracle_ok", oracle_ok);
        for (i, row) in o.pairing.relative.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                residuals.row(&["pairing".into(), (i + 1).to_string(), (j + 1).to_string(), String::new(), String::new(), real(*v)]);
            }
        }
    }
    let passed = orthogonality_ok && report.passed() && oracle_ok;
    kv.push("passed", passed);

    let files = artifacts::write_all(
        &cfg.output_dir,
        vec![
            (artifacts::REPORT_FILE, kv.render()),
            (artifacts::RESIDUALS_FILE, residuals.into_string()),
        ],
    )?;
    Ok(VerifyOutcome {
        passed,
        report: kv,
        files,
    })
}
