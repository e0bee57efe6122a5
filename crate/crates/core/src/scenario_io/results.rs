use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::control::{ControlMode, TrajectoryBundle};
use crate::error::{EmtError, Result};
use crate::theorems::{CheckCertificate, GapSeries};

/// A numeric table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn columns_with_prefix(&self, prefix: &str) -> Vec<(String, Vec<f64>)> {
        self.header
            .iter()
            .enumerate()
            .filter(|(_, h)| {
                h.strip_prefix(prefix).is_some_and(|rest| {
                    !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit())
                })
            })
            .map(|(j, h)| (h.clone(), self.rows.iter().map(|r| r[j]).collect()))
            .collect()
    }
}

/// `t, x_1..x_N, costate_1..costate_N, controls, utility`. Controls are
/// `y_1..y_N` in allocation mode and a single `Y` in scalar mode; `utility`
/// is the running discounted integral.
pub fn trajectory_table(bundle: &TrajectoryBundle) -> ResultTable {
    let n = bundle.state.series.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=n).map(|i| format!("costate_{i}")));
    match bundle.control.mode {
        ControlMode::AllocationSimplex => header.extend((1..=n).map(|i| format!("y_{i}"))),
        ControlMode::ScalarBounded => header.push("Y".to_string()),
    }
    header.push("utility".to_string());
    let rows = bundle
        .times()
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut r = Vec::with_capacity(header.len());
            r.push(*t);
            r.extend_from_slice(bundle.state.series.row(k));
            r.extend_from_slice(bundle.costate.series.row(k));
            r.extend_from_slice(bundle.control.series.row(k));
            r.push(bundle.running_utility[k]);
            r
        })
        .collect();
    ResultTable { header, rows }
}

pub fn gap_table(gap: &GapSeries) -> ResultTable {
    ResultTable {
        header: vec!["t".into(), "sup_gap".into(), "envelope".into()],
        rows: gap
            .times
            .iter()
            .zip(&gap.gap)
            .zip(&gap.envelope)
            .map(|((t, g), e)| vec![*t, *g, *e])
            .collect(),
    }
}

fn render_table(table: &ResultTable) -> String {
    let mut out = table.header.join(",");
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_table(path: &Path, table: &ResultTable) -> Result<()> {
    fs::write(path, render_table(table)).map_err(|e| EmtError::io(path, e))
}

pub fn read_table(path: &Path) -> Result<ResultTable> {
    let text = fs::read_to_string(path).map_err(|e| EmtError::io(path, e))?;
    let bad = |reason: String| EmtError::Table {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = text.lines();
    let header: Vec<String> = match lines.next() {
        Some(h) if !h.trim().is_empty() => h.split(',').map(|s| s.trim().to_string()).collect(),
        _ => return Err(bad("missing header".into())),
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
        if row.len() != header.len() {
            return Err(bad(format!(
                "row {} has {} cells, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(ResultTable { header, rows })
}

pub fn certificate_report(certs: &[CheckCertificate]) -> String {
    let mut out = String::new();
    for c in certs {
        let _ = writeln!(out, "{c}");
    }
    out
}

pub fn scenario_hash(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Everything a run leaves on disk.
#[derive(Debug, Clone, Copy)]
pub struct RunRecord<'a> {
    pub scenario_text: &'a str,
    pub seed: u64,
    pub overrides: &'a [String],
    pub bundle: Option<&'a TrajectoryBundle>,
    pub gap: Option<&'a GapSeries>,
    pub certificates: &'a [CheckCertificate],
}

/// Writes `trajectories.csv`, `gap.csv`, `certificates.txt` (each only when
/// there is something to put in it) and `manifest.txt`, which records the
/// scenario hash, seed, overrides and a digest of every other file.
pub fn write_results(out_dir: &Path, record: &RunRecord<'_>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| EmtError::io(out_dir, e))?;
    let mut files: Vec<(&str, String)> = Vec::new();
    if let Some(b) = record.bundle {
        files.push(("trajectories.csv", render_table(&trajectory_table(b))));
    }
    if let Some(g) = record.gap {
        files.push(("gap.csv", render_table(&gap_table(g))));
    }
    if !record.certificates.is_empty() {
        files.push(("certificates.txt", certificate_report(record.certificates)));
    }

    let mut manifest = String::new();
    let _ = writeln!(
        manifest,
        "scenario_sha256 = {}",
        scenario_hash(record.scenario_text)
    );
    let _ = writeln!(manifest, "seed = {}", record.seed);
    for ov in record.overrides {
        let _ = writeln!(manifest, "override = {ov}");
    }
    for (name, body) in &files {
        let _ = writeln!(
            manifest,
            "file = {name} {}",
            hex(&Sha256::digest(body.as_bytes()))
        );
    }
    files.push(("manifest.txt", manifest));

    let mut written = Vec::new();
    for (name, body) in files {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(|e| EmtError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
