//! Output bundle: digest-tracked files, event-study plot data and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::hdfe::{event_term, FitResult};
use crate::util::{fmt_f64, sha256_hex, write_atomic};
use crate::{Error, Result};

/// Output directory that remembers the digest of every file written through it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf(), files: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `bytes` to `rel` (slash-separated) and records its digest.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = rel.split('/').fold(self.root.clone(), |p, part| p.join(part));
        write_atomic(&path, bytes)?;
        self.files.insert(rel.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    pub fn files(&self) -> &BTreeMap<String, String> {
        &self.files
    }
}

/// One event-study point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub subsample: String,
    pub year: i32,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_obs: usize,
}

/// Interaction estimates per year plus an explicit zero row for the reference year.
pub fn plot_rows(subsample: &str, fit: &FitResult, years: &[i32], reference_year: i32) -> Vec<PlotRow> {
    let n_obs = fit.manifest.n_obs;
    years
        .iter()
        .filter_map(|&year| {
            if year == reference_year {
                return Some(PlotRow { subsample: subsample.into(), year, estimate: 0.0, ci_low: 0.0, ci_high: 0.0, n_obs });
            }
            fit.coef(&event_term(year)).map(|c| PlotRow {
                subsample: subsample.into(),
                year,
                estimate: c.estimate,
                ci_low: c.ci_low,
                ci_high: c.ci_high,
                n_obs,
            })
        })
        .collect()
}

pub fn plot_rows_csv(rows: &[PlotRow]) -> String {
    let mut s = String::from("subsample,year,estimate,ci_low,ci_high,n_obs\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.subsample,
            r.year,
            fmt_f64(r.estimate),
            fmt_f64(r.ci_low),
            fmt_f64(r.ci_high),
            r.n_obs
        ));
    }
    s
}

pub fn plot_rows_json(rows: &[PlotRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)? + "\n")
}

pub fn read_plot_rows_csv(text: &str) -> Result<Vec<PlotRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsampleStatus {
    pub name: String,
    /// `ok`, `empty` or `single_year`.
    pub status: String,
    pub n_obs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub prng: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
    pub subsamples: Vec<SubsampleStatus>,
    pub warnings: Vec<String>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Recomputes every listed digest and returns the files that differ.
    pub fn verify(&self, root: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.files {
            let path = f.path.split('/').fold(root.to_path_buf(), |p, part| p.join(part));
            if crate::util::file_digest(&path)? != f.sha256 {
                bad.push(f.path.clone());
            }
        }
        Ok(bad)
    }
}

pub fn file_entries(files: &BTreeMap<String, String>) -> Vec<FileEntry> {
    files.iter().map(|(p, d)| FileEntry { path: p.clone(), sha256: d.clone() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_carry_identical_numbers() {
        let rows = vec![
            PlotRow { subsample: "all".into(), year: 2021, estimate: 1.0 / 3.0, ci_low: -0.1, ci_high: 0.7, n_obs: 10 },
            PlotRow { subsample: "all".into(), year: 2022, estimate: 0.0, ci_low: 0.0, ci_high: 0.0, n_obs: 10 },
        ];
        let from_csv = read_plot_rows_csv(&plot_rows_csv(&rows)).unwrap();
        let from_json: Vec<PlotRow> = serde_json::from_str(&plot_rows_json(&rows).unwrap()).unwrap();
        assert_eq!(from_csv, rows);
        assert_eq!(from_json, rows);
    }

    #[test]
    fn output_dir_tracks_digests() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write("a/b.txt", b"hello").unwrap();
        assert_eq!(out.files()["a/b.txt"], sha256_hex(b"hello"));
        assert_eq!(std::fs::read(dir.path().join("a").join("b.txt")).unwrap(), b"hello");
    }
}
