//! Synthetic publication records with controlled marker usage.
//!
//! Each field-year stratum holds a fixed number of records. Exact quotas
//! decide which of them are assisted (k distinct markers from the field's
//! marker pool) and which carry a single background marker from the full
//! vocabulary; the rest are built only from a phrase bank that matches no
//! vocabulary pattern.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use super::rng::{std_normal, substream, SynthRng};
use crate::corpus::PublicationRecord;
use crate::lexicon::vocab::Matcher;
use crate::lexicon::Vocabulary;
use crate::{Error, Result};

/// Words that match no marker pattern.
pub const PHRASE_BANK: &[&str] = &[
    "we", "measure", "the", "rate", "of", "growth", "in", "sample", "cells", "under", "heat", "and", "report", "data",
    "from", "a", "model", "flow", "results", "show", "that", "method", "yields", "higher", "yield", "across", "sites",
    "this", "study", "tests", "new", "approach", "for", "signal", "noise", "trial", "patients", "with", "low", "dose",
    "field", "survey", "shows", "mixed", "outcomes", "at", "two", "time", "points", "our", "design", "uses", "random",
    "blocks", "to", "estimate", "effects", "on", "soil", "water", "use", "by", "crops", "steel", "beams", "fail",
    "load", "cycles", "market", "prices", "respond", "policy", "shocks", "firms", "labor", "demand",
];

/// How a record's authors are composed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuthorMix {
    /// All authors in the United States.
    pub us_pure: f64,
    /// One non-English country plus a U.S. or U.K. coauthor.
    pub with_english: f64,
    /// Two different non-English countries.
    pub international: f64,
}

impl Default for AuthorMix {
    fn default() -> Self {
        AuthorMix {
            us_pure: 0.30,
            with_english: 0.15,
            international: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextParams {
    pub fields: Vec<String>,
    pub years: Vec<i32>,
    pub per_stratum: usize,
    /// Share of each stratum carrying one background marker.
    pub background_rate: f64,
    /// Share of each stratum designated assisted, per year.
    pub assisted_rate: BTreeMap<i32, f64>,
    /// Distinct markers injected into an assisted record.
    pub k_markers: usize,
    /// Size of each field's marker pool.
    pub markers_per_field: usize,
    pub countries: Vec<String>,
    pub journals_per_field: usize,
    pub mix: AuthorMix,
    pub seed: u64,
}

impl Default for TextParams {
    fn default() -> Self {
        TextParams {
            fields: vec!["Chemistry".into(), "Medicine".into(), "Economics".into()],
            years: vec![2021, 2022, 2023, 2024],
            per_stratum: 200,
            background_rate: 0.10,
            assisted_rate: BTreeMap::from([(2023, 0.15), (2024, 0.30)]),
            k_markers: 2,
            markers_per_field: 4,
            countries: ["FR", "DE", "CN", "JP", "BR", "IN", "CH", "KR"].map(String::from).to_vec(),
            journals_per_field: 10,
            mix: AuthorMix::default(),
            seed: 0,
        }
    }
}

impl TextParams {
    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.fields.is_empty() || self.years.is_empty() || self.per_stratum == 0 {
            return bad("fields, years and per_stratum must be non-empty");
        }
        if self.k_markers == 0 || self.k_markers > self.markers_per_field {
            return bad("k_markers must be between 1 and markers_per_field");
        }
        if self.markers_per_field > injectable_patterns(vocab).len() {
            return bad("markers_per_field exceeds the injectable vocabulary size");
        }
        let rates = [self.background_rate, self.mix.us_pure, self.mix.with_english, self.mix.international];
        if rates.iter().chain(self.assisted_rate.values()).any(|p| !(0.0..=1.0).contains(p)) {
            return bad("rates must lie in [0, 1]");
        }
        if self.mix.us_pure + self.mix.with_english + self.mix.international > 1.0 {
            return bad("author mix shares exceed 1");
        }
        if self.countries.len() < 2 || self.journals_per_field == 0 {
            return bad("at least two countries and one journal per field are required");
        }
        Ok(())
    }

    fn quota(rate: f64, n: usize) -> usize {
        (rate * n as f64).round() as usize
    }

    pub fn assisted_quota(&self, year: i32) -> usize {
        Self::quota(self.assisted_rate.get(&year).copied().unwrap_or(0.0), self.per_stratum)
    }

    pub fn background_quota(&self, year: i32) -> usize {
        let left = self.per_stratum - self.assisted_quota(year);
        Self::quota(self.background_rate, self.per_stratum).min(left)
    }
}

/// Patterns whose bare stem, used as a token, matches no other pattern.
/// `embarked` is left out because it also matches `embark*`.
pub fn injectable_patterns(vocab: &Vocabulary) -> Vec<usize> {
    let m = Matcher::new(vocab.patterns());
    (0..vocab.len())
        .filter(|&i| {
            let mut n = 0;
            m.for_each_match(&vocab.patterns()[i].stem, |_| n += 1);
            n == 1
        })
        .collect()
}

/// Pattern indices forming a field's marker pool.
pub fn field_marker_pool(injectable: &[usize], field_index: usize, size: usize) -> Vec<usize> {
    (0..size).map(|i| injectable[(field_index * size + i) % injectable.len()]).collect()
}

/// Role of a generated record within its stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextRole {
    Plain,
    Background,
    Assisted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TextLabel {
    pub id: String,
    pub role: TextRole,
    /// Injected vocabulary stems.
    pub markers: Vec<String>,
}

fn sentence(rng: &mut SynthRng, words: usize) -> Vec<String> {
    (0..words).map(|_| PHRASE_BANK[rng.random_range(0..PHRASE_BANK.len())].to_string()).collect()
}

fn authors(rng: &mut SynthRng, p: &TextParams) -> Vec<String> {
    let n = rng.random_range(1..=6usize);
    let u: f64 = rng.random();
    let main = p.countries[rng.random_range(0..p.countries.len())].clone();
    let m = &p.mix;
    if u < m.us_pure {
        vec!["US".to_string(); n]
    } else if u < m.us_pure + m.with_english {
        let eng = if rng.random::<bool>() { "US" } else { "GB" };
        let mut a = vec![main; n.max(2) - 1];
        a.push(eng.into());
        a
    } else if u < m.us_pure + m.with_english + m.international {
        let other = loop {
            let c = &p.countries[rng.random_range(0..p.countries.len())];
            if *c != main {
                break c.clone();
            }
        };
        let mut a = vec![main; n.max(2) - 1];
        a.push(other);
        a
    } else {
        vec![main; n]
    }
}

pub fn journal_id(field_index: usize, j: usize) -> String {
    format!("J{field_index:02}{j:03}")
}

/// Impact factor of a synthetic journal; a pure function of its position.
pub fn journal_impact(seed: u64, field_index: usize, j: usize) -> f64 {
    let mut rng = substream(seed, 1_000_000 + (field_index * 1000 + j) as u64);
    ((0.8 + 0.6 * std_normal(&mut rng)).exp() * 1000.0).round() / 1000.0
}

/// Records sorted by id together with their construction labels.
pub fn gen_text_corpus(p: &TextParams, vocab: &Vocabulary) -> Result<(Vec<PublicationRecord>, Vec<TextLabel>)> {
    p.validate(vocab)?;
    let mut rng = substream(p.seed, 10);
    let mut records = Vec::new();
    let mut labels = Vec::new();
    let injectable = injectable_patterns(vocab);
    let mut background_cursor = 0usize;
    for (fi, field) in p.fields.iter().enumerate() {
        let pool = field_marker_pool(&injectable, fi, p.markers_per_field);
        for &year in &p.years {
            let n_assist = p.assisted_quota(year);
            let n_back = p.background_quota(year);
            let mut roles: Vec<TextRole> = std::iter::repeat_n(TextRole::Assisted, n_assist)
                .chain(std::iter::repeat_n(TextRole::Background, n_back))
                .chain(std::iter::repeat_n(TextRole::Plain, p.per_stratum - n_assist - n_back))
                .collect();
            roles.shuffle(&mut rng);
            for (i, role) in roles.into_iter().enumerate() {
                let id = format!("{year}-{fi:02}-{i:05}");
                let markers: Vec<usize> = match role {
                    TextRole::Plain => vec![],
                    TextRole::Background => {
                        background_cursor = (background_cursor + 1) % injectable.len();
                        vec![injectable[background_cursor]]
                    }
                    TextRole::Assisted => {
                        let mut m = pool.clone();
                        m.shuffle(&mut rng);
                        m.truncate(p.k_markers);
                        m.sort_unstable();
                        m
                    }
                };
                let title = sentence(&mut rng, 8).join(" ");
                let mut body = sentence(&mut rng, 40);
                for &m in &markers {
                    let pos = rng.random_range(0..=body.len());
                    body.insert(pos, vocab.patterns()[m].stem.clone());
                }
                let j = rng.random_range(0..p.journals_per_field);
                records.push(PublicationRecord {
                    id: id.clone(),
                    title,
                    abstract_text: body.join(" "),
                    year,
                    journal_id: journal_id(fi, j),
                    journal_if: journal_impact(p.seed, fi, j),
                    scopus_fields: vec![field.clone()],
                    author_countries: authors(&mut rng, p),
                });
                labels.push(TextLabel {
                    id,
                    role,
                    markers: markers.iter().map(|&m| vocab.patterns()[m].stem.clone()).collect(),
                });
            }
        }
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    labels.sort_by(|a, b| a.id.cmp(&b.id));
    Ok((records, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{match_stems, tokenize};

    #[test]
    fn phrase_bank_is_marker_free() {
        let vocab = Vocabulary::default();
        let tokens: Vec<String> = PHRASE_BANK.iter().map(|s| s.to_string()).collect();
        assert!(match_stems(&tokens, vocab.patterns()).is_empty());
    }

    #[test]
    fn roles_match_construction() {
        let vocab = Vocabulary::default();
        let p = TextParams { per_stratum: 50, ..TextParams::default() };
        let (recs, labels) = gen_text_corpus(&p, &vocab).unwrap();
        assert_eq!(recs.len(), 3 * 4 * 50);
        for (r, l) in recs.iter().zip(&labels) {
            let stems = match_stems(&tokenize(&r.text()), vocab.patterns());
            match l.role {
                TextRole::Plain => assert!(stems.is_empty()),
                TextRole::Background => assert_eq!(stems.len(), 1),
                TextRole::Assisted => assert_eq!(stems.len(), p.k_markers),
            }
        }
        let with_marker_2021 = recs
            .iter()
            .filter(|r| r.year == 2021 && r.scopus_fields[0] == "Chemistry")
            .filter(|r| !match_stems(&tokenize(&r.text()), vocab.patterns()).is_empty())
            .count();
        assert_eq!(with_marker_2021, p.background_quota(2021));
    }

    #[test]
    fn deterministic() {
        let vocab = Vocabulary::default();
        let p = TextParams { per_stratum: 20, seed: 4, ..TextParams::default() };
        assert_eq!(gen_text_corpus(&p, &vocab).unwrap().0, gen_text_corpus(&p, &vocab).unwrap().0);
    }
}
