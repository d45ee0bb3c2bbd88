//! Newline-delimited corpus records.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One indexed publication.
///
/// `author_countries` holds one entry per author (the first listed
/// affiliation). An empty string marks an author whose affiliation country is
/// unknown; such records are flagged as incomplete, never imputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub year: i32,
    pub journal_id: String,
    pub journal_if: f64,
    pub scopus_fields: Vec<String>,
    pub author_countries: Vec<String>,
}

impl PublicationRecord {
    pub fn n_authors(&self) -> usize {
        self.author_countries.len()
    }

    /// Title and abstract joined by a single space.
    pub fn text(&self) -> String {
        let mut s = String::with_capacity(self.title.len() + self.abstract_text.len() + 1);
        s.push_str(&self.title);
        s.push(' ');
        s.push_str(&self.abstract_text);
        s
    }

    pub fn has_text(&self) -> bool {
        !(self.title.trim().is_empty() && self.abstract_text.trim().is_empty())
    }

    pub fn has_incomplete_affiliation(&self) -> bool {
        self.author_countries.iter().any(|c| c.is_empty())
    }

    /// Distinct known affiliation countries in sorted order.
    pub fn distinct_countries(&self) -> BTreeSet<&str> {
        self.author_countries
            .iter()
            .filter(|c| !c.is_empty())
            .map(String::as_str)
            .collect()
    }

    /// True when every author is affiliated with `country`.
    pub fn is_pure(&self, country: &str) -> bool {
        !self.author_countries.is_empty() && self.author_countries.iter().all(|c| c == country)
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<serde_json::Value>,
    title: Option<String>,
    #[serde(rename = "abstract")]
    abstract_text: Option<String>,
    year: Option<i64>,
    journal_id: Option<serde_json::Value>,
    journal_if: Option<f64>,
    scopus_fields: Option<Vec<String>>,
    author_countries: Option<Vec<Option<String>>>,
    n_authors: Option<u64>,
}

fn key_string(v: serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) if !s.trim().is_empty() => Some(s),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub first: i32,
    pub last: i32,
}

impl Default for YearRange {
    fn default() -> Self {
        YearRange {
            first: 2021,
            last: 2024,
        }
    }
}

impl YearRange {
    pub fn contains(&self, year: i32) -> bool {
        (self.first..=self.last).contains(&year)
    }
}

/// Parses one corpus line. `line_no` is 1-based and only used for error reports.
pub fn parse_record(line: &str, line_no: usize, years: YearRange) -> Result<PublicationRecord> {
    let malformed = |reason: String| Error::MalformedRecord {
        line: line_no,
        reason,
    };
    let raw: RawRecord =
        serde_json::from_str(line).map_err(|e| malformed(format!("invalid JSON: {e}")))?;

    let id = raw
        .id
        .and_then(key_string)
        .ok_or_else(|| malformed("missing id".into()))?;
    let year = raw.year.ok_or_else(|| malformed("missing year".into()))?;
    let year = i32::try_from(year).map_err(|_| malformed(format!("year {year} out of range")))?;
    if !years.contains(year) {
        return Err(malformed(format!(
            "year {year} outside {}..={}",
            years.first, years.last
        )));
    }
    let journal_id = raw
        .journal_id
        .and_then(key_string)
        .ok_or_else(|| malformed("missing journal_id".into()))?;
    let journal_if = raw
        .journal_if
        .ok_or_else(|| malformed("missing journal_if".into()))?;
    if !(journal_if.is_finite() && journal_if >= 0.0) {
        return Err(malformed(format!("journal_if {journal_if} is not a nonnegative number")));
    }
    let author_countries: Vec<String> = raw
        .author_countries
        .unwrap_or_default()
        .into_iter()
        .map(|c| c.map(|s| s.trim().to_ascii_uppercase()).unwrap_or_default())
        .collect();
    if author_countries.is_empty() {
        return Err(malformed("no authors".into()));
    }
    if let Some(n) = raw.n_authors {
        if n as usize != author_countries.len() {
            return Err(malformed(format!(
                "n_authors {n} disagrees with {} author countries",
                author_countries.len()
            )));
        }
    }
    let scopus_fields = raw
        .scopus_fields
        .unwrap_or_default()
        .into_iter()
        .map(|f| f.trim().to_string())
        .filter(|f| !f.is_empty())
        .collect();

    Ok(PublicationRecord {
        id,
        title: raw.title.unwrap_or_default(),
        abstract_text: raw.abstract_text.unwrap_or_default(),
        year,
        journal_id,
        journal_if,
        scopus_fields,
        author_countries,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy)]
pub struct ReadOptions {
    pub years: YearRange,
    /// Abort on the first malformed line instead of skipping it.
    pub strict: bool,
    /// Number of partitions parsed in parallel. Output order never depends on it.
    pub partitions: usize,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            years: YearRange::default(),
            strict: false,
            partitions: 1,
        }
    }
}

/// Parsed corpus in canonical (id-sorted) order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub records: Vec<PublicationRecord>,
    pub skipped: Vec<SkippedLine>,
    /// Ids of records dropped because both title and abstract were empty.
    pub excluded_no_text: Vec<String>,
    /// Ids of records with at least one author lacking an affiliation country.
    pub incomplete_affiliation: Vec<String>,
}

impl Corpus {
    pub fn get(&self, id: &str) -> Option<&PublicationRecord> {
        self.records
            .binary_search_by(|r| r.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.records[i])
    }
}

pub fn read_corpus(path: &Path, opts: &ReadOptions) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    parse_lines(&lines, opts)
}

pub fn parse_lines(lines: &[String], opts: &ReadOptions) -> Result<Corpus> {
    let parts = opts.partitions.max(1);
    let chunk = lines.len().div_ceil(parts).max(1);
    let parsed: Vec<(usize, Result<PublicationRecord>)> = lines
        .par_chunks(chunk)
        .enumerate()
        .flat_map_iter(|(ci, block)| {
            block.iter().enumerate().filter_map(move |(i, line)| {
                let line_no = ci * chunk + i + 1;
                if line.trim().is_empty() {
                    None
                } else {
                    Some((line_no, parse_record(line, line_no, opts.years)))
                }
            })
        })
        .collect();

    let mut corpus = Corpus::default();
    let mut seen = BTreeSet::new();
    for (line_no, res) in parsed {
        match res {
            Ok(rec) => {
                if !seen.insert(rec.id.clone()) {
                    let err = Error::MalformedRecord {
                        line: line_no,
                        reason: format!("duplicate id {:?}", rec.id),
                    };
                    if opts.strict {
                        return Err(err);
                    }
                    tracing::warn!("{err}; skipped");
                    corpus.skipped.push(SkippedLine {
                        line: line_no,
                        reason: err.to_string(),
                    });
                } else if !rec.has_text() {
                    corpus.excluded_no_text.push(rec.id);
                } else {
                    if rec.has_incomplete_affiliation() {
                        corpus.incomplete_affiliation.push(rec.id.clone());
                    }
                    corpus.records.push(rec);
                }
            }
            Err(err) => {
                if opts.strict {
                    return Err(err);
                }
                tracing::warn!("{err}; skipped");
                let line = match &err {
                    Error::MalformedRecord { line, .. } => *line,
                    _ => line_no,
                };
                corpus.skipped.push(SkippedLine {
                    line,
                    reason: err.to_string(),
                });
            }
        }
    }
    corpus.records.sort_by(|a, b| a.id.cmp(&b.id));
    corpus.excluded_no_text.sort();
    corpus.incomplete_affiliation.sort();
    Ok(corpus)
}

/// Serializes a record back into one corpus line.
pub fn to_line(rec: &PublicationRecord) -> String {
    serde_json::to_string(rec).expect("record serialization is infallible")
}
