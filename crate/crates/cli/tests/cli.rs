use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use biorth_cli::artifacts::KeyValues;
use tempfile::TempDir;

const REFERENCE: &str = "V.coeffs = [0.0, 0.0, 1.0]\nW.coeffs = [0.0, 0.0, 0.0, 0.0, 1.0]\ntau = 0.5\n";

struct Case {
    dir: TempDir,
    config: PathBuf,
}

impl Case {
    fn new(body: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("problem.toml");
        // Top-level key first so a trailing table in `body` cannot capture it.
        std::fs::write(&config, format!("output_dir = \"out\"\n{body}")).unwrap();
        Self { dir, config }
    }

    fn reference(k: usize) -> Self {
        Self::new(&format!("{REFERENCE}k = {k}\n"))
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_biorth"))
            .arg(args[0])
            .arg(&self.config)
            .args(&args[1..])
            .output()
            .unwrap()
    }

    fn report(&self) -> KeyValues {
        KeyValues::parse(&read(&self.out().join("report.txt")))
    }
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn number(kv: &KeyValues, key: &str) -> f64 {
    kv.get(key).unwrap_or_else(|| panic!("missing {key}")).parse().unwrap()
}

#[test]
fn compute_writes_every_artifact() {
    let case = Case::reference(3);
    let o = case.run(&["compute"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["pk.csv", "duals.csv", "diagnostics.txt", "pk_samples.csv", "zeros.csv"] {
        assert!(case.out().join(f).is_file(), "{f} missing");
    }
    let pk = read(&case.out().join("pk.csv"));
    let lines: Vec<_> = pk.lines().collect();
    assert_eq!(lines[0], "power,coefficient");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("3,1.0000000000000000e0"));
    assert_eq!(read(&case.out().join("pk_samples.csv")).lines().count(), 42);
    assert_eq!(read(&case.out().join("zeros.csv")).lines().count(), 4);
}

#[test]
fn output_dir_flag_overrides_config() {
    let case = Case::reference(2);
    let other = case.dir.path().join("elsewhere");
    let o = case.run(&["compute", "--output-dir", other.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(other.join("pk.csv").is_file());
    assert!(!case.out().exists());
}

#[test]
fn zero_tau_is_rejected_with_exit_2() {
    let case = Case::new("V.coeffs = [0.0, 0.0, 1.0]\nW.coeffs = [0.0, 0.0, 0.0, 0.0, 1.0]\ntau = 0.0\nk = 3\n");
    let o = case.run(&["compute"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("tau must be nonzero"), "{}", stderr(&o));
    assert!(!case.out().exists());
}

#[test]
fn odd_w_is_rejected_with_exit_2() {
    let case = Case::new("V.coeffs = [0.0, 0.0, 1.0]\nW.coeffs = [0.0, 0.0, 0.0, 1.0]\ntau = 0.5\nk = 3\n");
    let o = case.run(&["verify", "--all"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("even"), "{}", stderr(&o));
}

#[test]
fn missing_config_is_exit_2() {
    let o = Command::new(env!("CARGO_BIN_EXE_biorth"))
        .args(["compute", "/nonexistent/problem.toml"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn unknown_key_is_exit_2() {
    let case = Case::new(&format!("{REFERENCE}k = 2\nbogus = 1\n"));
    assert_eq!(code(&case.run(&["compute"])), 2);
}

#[test]
fn degree_beyond_budget_is_exit_3() {
    let case = Case::reference(13);
    let o = case.run(&["compute"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn verify_all_passes_on_the_reference_problem() {
    let case = Case::reference(4);
    let o = case.run(&["verify", "--all"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let kv = case.report();
    assert_eq!(kv.get("passed"), Some("true"));
    for key in ["jump_ok", "asymptotics_ok", "det_ok", "zeros_ok", "oracle_ok", "orthogonality_ok"] {
        assert_eq!(kv.get(key), Some("true"), "{key}");
    }
    assert!(number(&kv, "jump_residual_max") < 1e-6);
    assert!(number(&kv, "det_deviation_max") < 1e-6);
    assert!(number(&kv, "asymptotic_worst_growth") <= 3.0);
    assert!(number(&kv, "oracle_route_error") < 1e-8);

    let residuals = read(&case.out().join("residuals.csv"));
    assert!(residuals.starts_with("check,row,col,radius,theta,value\n"));
    let jump_rows = residuals.lines().filter(|l| l.starts_with("jump,")).count();
    assert_eq!(jump_rows, 16);
}

#[test]
fn no_flags_means_all_checks() {
    let case = Case::reference(2);
    assert_eq!(code(&case.run(&["verify"])), 0);
    let kv = case.report();
    for key in ["jump_ok", "asymptotics_ok", "det_ok", "zeros_ok", "oracle_ok"] {
        assert!(kv.get(key).is_some(), "{key}");
    }
}

#[test]
fn single_check_reports_only_that_check() {
    let case = Case::reference(5);
    let o = case.run(&["verify", "--zeros"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let kv = case.report();
    assert_eq!(kv.get("zeros_total"), Some("5"));
    assert_eq!(kv.get("zeros_count_real"), Some("5"));
    assert!(kv.get("jump_ok").is_none());
    assert!(kv.get("det_ok").is_none());
    assert!(kv.get("oracle_ok").is_none());
}

#[test]
fn impossible_tolerance_fails_with_exit_4_and_keeps_the_report() {
    let case = Case::new(&format!("{REFERENCE}k = 3\n[verify]\ntolerance_det = 1e-30\n"));
    let o = case.run(&["verify", "--det"]);
    assert_eq!(code(&o), 4);
    let kv = case.report();
    assert_eq!(kv.get("det_ok"), Some("false"));
    assert_eq!(kv.get("passed"), Some("false"));
}

#[test]
fn verifying_saved_artifacts_matches_a_fresh_solve() {
    let case = Case::reference(5);
    assert_eq!(code(&case.run(&["compute"])), 0);
    assert_eq!(code(&case.run(&["verify", "--all"])), 0);
    let fresh = case.report();
    let out = case.out();
    let o = case.run(&["verify", "--all", "--artifacts", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let saved = case.report();
    assert_eq!(saved.get("source"), Some("artifacts"));
    let strip = |kv: &KeyValues| kv.entries.iter().filter(|(k, _)| k != "source").cloned().collect::<Vec<_>>();
    assert_eq!(strip(&fresh), strip(&saved));
}

#[test]
fn corrupt_artifacts_are_exit_2() {
    let case = Case::reference(3);
    assert_eq!(code(&case.run(&["compute"])), 0);
    std::fs::write(case.out().join("pk.csv"), "power,coefficient\n0,abc\n").unwrap();
    let out = case.out();
    let o = case.run(&["verify", "--artifacts", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn moments_dump_has_the_expected_shape_and_parity() {
    let k = 4;
    let case = Case::reference(k);
    let o = case.run(&["moments"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let mixed = read(&case.out().join("moments.csv"));
    assert_eq!(mixed.lines().next(), Some("w0,w1,w2"));

    let bi = read(&case.out().join("bimoments.csv"));
    let mut lines = bi.lines();
    assert_eq!(lines.next(), Some("b0,b1,b2,b3,b4"));
    let grid: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(grid.len(), k + 1);
    assert!(grid.iter().all(|r| r.len() == k + 1));
    let scale = grid.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    for (a, row) in grid.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            if (a + b) % 2 == 1 {
                assert!(v.abs() < 1e-10 * scale, "B[{a}][{b}] = {v}");
            }
        }
    }

    // The (0, 0) bimoment is the first pairing diagonal entry.
    assert_eq!(code(&case.run(&["verify", "--oracle"])), 0);
    let b00 = bi.lines().nth(1).unwrap().split(',').next().unwrap().to_string();
    assert_eq!(case.report().get("oracle_pairing_diagonal_0"), Some(b00.as_str()));
}
