//! Field-year frequencies of marker patterns.
//!
//! Counting is a partition-and-merge reduction: each partition builds a
//! partial table and partial tables are merged by integer addition, so the
//! result never depends on the partition count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::vocab::{tokenize, Matcher, StemPattern, Vocabulary};
use crate::corpus::PublicationRecord;

/// How relative frequency is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyMode {
    /// Share of publications containing at least one match.
    #[default]
    Document,
    /// Matching tokens per token.
    Token,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hits {
    pub doc_hits: u64,
    pub tok_hits: u64,
}

/// Counts for one (field, year) stratum.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub doc_total: u64,
    pub tok_total: u64,
    /// Indexed like the vocabulary patterns.
    pub hits: Vec<Hits>,
}

impl Stratum {
    fn merge(&mut self, other: &Stratum) {
        self.doc_total += other.doc_total;
        self.tok_total += other.tok_total;
        if self.hits.len() < other.hits.len() {
            self.hits.resize(other.hits.len(), Hits::default());
        }
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            a.doc_hits += b.doc_hits;
            a.tok_hits += b.tok_hits;
        }
    }

    /// (numerator, denominator) of the relative frequency of pattern `i`.
    pub fn ratio(&self, i: usize, mode: FrequencyMode) -> (u64, u64) {
        let h = self.hits.get(i).copied().unwrap_or_default();
        match mode {
            FrequencyMode::Document => (h.doc_hits, self.doc_total),
            FrequencyMode::Token => (h.tok_hits, self.tok_total),
        }
    }

    pub fn rel_freq(&self, i: usize, mode: FrequencyMode) -> f64 {
        let (num, den) = self.ratio(i, mode);
        if den == 0 { 0.0 } else { num as f64 / den as f64 }
    }
}

/// Map (detailed field, year) → stratum counts over a fixed pattern list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermFrequencyTable {
    pub patterns: Vec<StemPattern>,
    pub strata: BTreeMap<(String, i32), Stratum>,
}

impl TermFrequencyTable {
    pub fn stratum(&self, field: &str, year: i32) -> Option<&Stratum> {
        self.strata.get(&(field.to_string(), year))
    }

    /// Index of a pattern given as displayed (`delv*`) or as a bare stem.
    pub fn pattern_index(&self, stem: &str) -> Option<usize> {
        self.patterns
            .iter()
            .position(|p| p.to_string() == stem)
            .or_else(|| self.patterns.iter().position(|p| p.stem == stem))
    }

    /// (doc_hits, doc_total) for a pattern, if the stratum exists.
    pub fn doc_counts(&self, field: &str, year: i32, stem: &str) -> Option<(u64, u64)> {
        let i = self.pattern_index(stem)?;
        self.stratum(field, year).map(|s| s.ratio(i, FrequencyMode::Document))
    }

    pub fn fields(&self) -> Vec<String> {
        let mut f: Vec<String> = self.strata.keys().map(|(f, _)| f.clone()).collect();
        f.dedup();
        f
    }

    fn merge(mut self, other: TermFrequencyTable) -> TermFrequencyTable {
        for (k, s) in other.strata {
            self.strata.entry(k).or_default().merge(&s);
        }
        self
    }
}

/// Per-document pattern hits: (doc matched?, token-level count), plus token total.
pub(crate) fn document_hits(matcher: &Matcher, text: &str) -> (Vec<Hits>, u64) {
    let tokens = tokenize(text);
    let mut hits = vec![Hits::default(); matcher.patterns().len()];
    for t in &tokens {
        matcher.for_each_match(t, |i| {
            hits[i].tok_hits += 1;
            hits[i].doc_hits = 1;
        });
    }
    (hits, tokens.len() as u64)
}

/// Counts, per assigned (field, year), the publications containing each
/// pattern. A publication listed in several fields counts in each of them.
/// `assignments` maps record ids to their detailed fields; records without an
/// entry are ignored.
pub fn compute_frequencies(
    records: &[PublicationRecord],
    assignments: &BTreeMap<String, Vec<String>>,
    vocab: &Vocabulary,
    partitions: usize,
) -> TermFrequencyTable {
    let matcher = Matcher::new(vocab.patterns());
    let empty = || TermFrequencyTable {
        patterns: vocab.patterns().to_vec(),
        strata: BTreeMap::new(),
    };
    let chunk = records.len().div_ceil(partitions.max(1)).max(1);
    records
        .par_chunks(chunk)
        .map(|block| {
            let mut table = empty();
            for r in block {
                let Some(fields) = assignments.get(&r.id) else { continue };
                if fields.is_empty() {
                    continue;
                }
                let (hits, n_tokens) = document_hits(&matcher, &r.text());
                let doc = Stratum {
                    doc_total: 1,
                    tok_total: n_tokens,
                    hits,
                };
                for f in fields {
                    table.strata.entry((f.clone(), r.year)).or_default().merge(&doc);
                }
            }
            table
        })
        .reduce(empty, TermFrequencyTable::merge)
}
