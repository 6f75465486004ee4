//! CSV and key=value artifacts. Reals are printed as `{:.16e}`, which
//! round-trips every `f64` exactly, so reloading an artifact gives back the
//! same bits.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use biorth::{DualRow, Polynomial};
use num_complex::Complex64;

use crate::CliError;

pub const PK_FILE: &str = "pk.csv";
pub const DUALS_FILE: &str = "duals.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.txt";
pub const SAMPLES_FILE: &str = "pk_samples.csv";
pub const ZEROS_FILE: &str = "zeros.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const RESIDUALS_FILE: &str = "residuals.csv";
pub const MOMENTS_FILE: &str = "moments.csv";
pub const BIMOMENTS_FILE: &str = "bimoments.csv";

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut csv = Self::default();
        csv.row(header);
        csv
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(f.as_ref());
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Ordered `key=value` lines.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct KeyValues {
    pub entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn push_real(&mut self, key: impl Into<String>, value: f64) {
        self.push(key, real(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { entries }
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn write_all(dir: &Path, files: Vec<(&str, String)>) -> Result<Vec<PathBuf>, CliError> {
    files
        .into_iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            write_atomic(&path, &text)?;
            Ok(path)
        })
        .collect()
}

pub fn pk_csv(pk: &Polynomial) -> String {
    let k = pk.degree().unwrap_or(0);
    let mut csv = Csv::new(&["power", "coefficient"]);
    for i in 0..=k {
        csv.row(&[i.to_string(), real(pk.coeff(i))]);
    }
    csv.into_string()
}

/// One line per coefficient of each normalized dual row (powers `0..k`),
/// one line with empty numeric fields per unit row. `row` is the 1-based row
/// of `Y`.
pub fn duals_csv(duals: &[DualRow], k: usize) -> String {
    let mut csv = Csv::new(&["j", "row", "kind", "power", "coefficient", "prefactor_re", "prefactor_im"]);
    for (j, dual) in duals.iter().enumerate() {
        let row = (j + 2).to_string();
        match dual {
            DualRow::Normalized { r, prefactor } => {
                for p in 0..k {
                    csv.row(&[
                        j.to_string(),
                        row.clone(),
                        "normalized".to_string(),
                        p.to_string(),
                        real(r.coeff(p)),
                        real(prefactor.re),
                        real(prefactor.im),
                    ]);
                }
            }
            DualRow::Unit => csv.row(&[j.to_string(), row, "unit".into(), String::new(), String::new(), String::new(), String::new()]),
        }
    }
    csv.into_string()
}

fn artifact_err(file: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Artifact(format!("{file}: {msg}"))
}

fn data_rows<'a>(text: &'a str, file: &str, header: &str) -> Result<impl Iterator<Item = Vec<&'a str>>, CliError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header => {}
        other => return Err(artifact_err(file, format!("unexpected header {other:?}"))),
    }
    Ok(lines.filter(|l| !l.is_empty()).map(|l| l.split(',').collect()))
}

fn parse_real(file: &str, field: &str) -> Result<f64, CliError> {
    field
        .parse::<f64>()
        .map_err(|e| artifact_err(file, format!("bad number {field:?}: {e}")))
}

pub fn read_pk(text: &str) -> Result<Polynomial, CliError> {
    let mut coeffs = Vec::new();
    for (i, fields) in data_rows(text, PK_FILE, "power,coefficient")?.enumerate() {
        if fields.len() != 2 || fields[0] != i.to_string() {
            return Err(artifact_err(PK_FILE, format!("malformed row {}", i + 1)));
        }
        coeffs.push(parse_real(PK_FILE, fields[1])?);
    }
    Ok(Polynomial::new(coeffs))
}

pub fn read_duals(text: &str, dual_count: usize) -> Result<Vec<DualRow>, CliError> {
    let header = "j,row,kind,power,coefficient,prefactor_re,prefactor_im";
    let mut rows: Vec<Option<(Vec<f64>, Complex64)>> = Vec::new();
    let mut kinds: Vec<Option<bool>> = vec![None; dual_count];
    for fields in data_rows(text, DUALS_FILE, header)? {
        if fields.len() != 7 {
            return Err(artifact_err(DUALS_FILE, "expected 7 fields"));
        }
        let j: usize = fields[0]
            .parse()
            .ok()
            .filter(|&j| j < dual_count)
            .ok_or_else(|| artifact_err(DUALS_FILE, format!("bad row index {:?}", fields[0])))?;
        rows.resize(dual_count, None);
        match fields[2] {
            "unit" => {
                if kinds[j].replace(false).is_some() {
                    return Err(artifact_err(DUALS_FILE, format!("row {j} listed twice")));
                }
            }
            "normalized" => {
                if kinds[j] == Some(false) {
                    return Err(artifact_err(DUALS_FILE, format!("row {j} is both unit and normalized")));
                }
                kinds[j] = Some(true);
                let power: usize = fields[3]
                    .parse()
                    .map_err(|_| artifact_err(DUALS_FILE, format!("bad power {:?}", fields[3])))?;
                let c = parse_real(DUALS_FILE, fields[4])?;
                let pre = Complex64::new(parse_real(DUALS_FILE, fields[5])?, parse_real(DUALS_FILE, fields[6])?);
                let slot = rows[j].get_or_insert_with(|| (Vec::new(), pre));
                if power != slot.0.len() || slot.1 != pre {
                    return Err(artifact_err(DUALS_FILE, format!("row {j} out of order or mixed prefactors")));
                }
                slot.0.push(c);
            }
            other => return Err(artifact_err(DUALS_FILE, format!("unknown kind {other:?}"))),
        }
    }
    rows.resize(dual_count, None);
    kinds
        .into_iter()
        .zip(rows)
        .enumerate()
        .map(|(j, (kind, row))| match (kind, row) {
            (Some(false), _) => Ok(DualRow::Unit),
            (Some(true), Some((coeffs, prefactor))) => Ok(DualRow::Normalized {
                r: Polynomial::new(coeffs),
                prefactor,
            }),
            _ => Err(artifact_err(DUALS_FILE, format!("row {j} missing"))),
        })
        .collect()
}
