//! Publication-level GenAI flags under the any-field rule.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::markers::{csv_field, MarkerSet};
use super::vocab::{tokenize, Matcher, StemPattern};
use crate::corpus::{CellFlag, PublicationRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenAIFlag {
    pub pub_id: String,
    /// Largest number of distinct kept stems found in any single assigned field.
    pub distinct_hits: u32,
    pub flagged_any_field: bool,
    /// Some assigned field has at least two distinct kept stems.
    pub flagged_strict: bool,
    pub hit_stems: BTreeSet<String>,
}

impl GenAIFlag {
    pub fn cell_flag(&self) -> CellFlag {
        CellFlag {
            distinct_hits: self.distinct_hits,
            flagged_any_field: self.flagged_any_field,
            flagged_strict: self.flagged_strict,
        }
    }
}

/// How a flag becomes a treatment indicator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreatmentRule {
    /// One distinct stem suffices.
    #[default]
    AnyField,
    /// Two distinct stems are required; single-hit publications are left
    /// out of both the treated and the control group.
    Strict,
}

impl TreatmentRule {
    pub fn from_min_distinct(min_distinct: u32) -> Result<Self> {
        match min_distinct {
            1 => Ok(TreatmentRule::AnyField),
            2 => Ok(TreatmentRule::Strict),
            other => Err(Error::InvalidConfig(format!("min_distinct must be 1 or 2, got {other}"))),
        }
    }

    pub fn min_distinct(&self) -> u32 {
        match self {
            TreatmentRule::AnyField => 1,
            TreatmentRule::Strict => 2,
        }
    }

    /// `Some(treated)` or `None` when the observation is excluded.
    pub fn treatment(&self, flag: &CellFlag) -> Option<bool> {
        match self {
            TreatmentRule::AnyField => Some(flag.flagged_any_field),
            TreatmentRule::Strict if flag.distinct_hits == 1 => None,
            TreatmentRule::Strict => Some(flag.flagged_strict),
        }
    }
}

/// Matches a token against the kept patterns of one field. A token counts
/// once, for the longest kept pattern it matches (an exact pattern wins a
/// tie), so `embarked` is one term even when both `embarked` and `embark*`
/// are kept.
fn field_hits(tokens: &[String], matcher: &Matcher, kept: &[bool]) -> BTreeSet<usize> {
    let pats = matcher.patterns();
    let mut out = BTreeSet::new();
    for t in tokens {
        let mut best: Option<usize> = None;
        matcher.for_each_match(t, |i| {
            if !kept[i] {
                return;
            }
            best = Some(match best {
                None => i,
                Some(b) => {
                    let key = |k: usize| (pats[k].stem.len(), !pats[k].prefix_match);
                    if key(i) > key(b) { i } else { b }
                }
            });
        });
        if let Some(b) = best {
            out.insert(b);
        }
    }
    out
}

/// Per-field kept masks over a shared pattern list.
pub struct FlagContext<'a> {
    matcher: Matcher,
    kept: BTreeMap<&'a str, Vec<bool>>,
}

impl<'a> FlagContext<'a> {
    pub fn new(markers: &'a MarkerSet) -> Self {
        let patterns: Vec<StemPattern> = markers
            .fields
            .values()
            .next()
            .map(|v| v.iter().map(|e| e.pattern.clone()).collect())
            .unwrap_or_default();
        let kept = markers
            .fields
            .iter()
            .map(|(f, evals)| (f.as_str(), evals.iter().map(|e| e.kept).collect()))
            .collect();
        FlagContext {
            matcher: Matcher::new(&patterns),
            kept,
        }
    }

    /// Flags a record from its title and abstract against each assigned
    /// field's kept markers. Fields absent from the marker set contribute no
    /// hits.
    pub fn flag(&self, record: &PublicationRecord, fields: &[String]) -> GenAIFlag {
        let tokens = tokenize(&record.text());
        let mut best = 0u32;
        let mut stems = BTreeSet::new();
        for f in fields {
            let Some(kept) = self.kept.get(f.as_str()) else { continue };
            let hits = field_hits(&tokens, &self.matcher, kept);
            best = best.max(hits.len() as u32);
            stems.extend(hits.into_iter().map(|i| self.matcher.patterns()[i].to_string()));
        }
        GenAIFlag {
            pub_id: record.id.clone(),
            distinct_hits: best,
            flagged_any_field: best >= 1,
            flagged_strict: best >= 2,
            hit_stems: stems,
        }
    }
}

pub fn flag_publication(record: &PublicationRecord, fields: &[String], markers: &MarkerSet) -> GenAIFlag {
    FlagContext::new(markers).flag(record, fields)
}

/// Flags every record that has field assignments; output sorted by id.
pub fn flag_corpus(
    records: &[PublicationRecord],
    assignments: &BTreeMap<String, Vec<String>>,
    markers: &MarkerSet,
    partitions: usize,
) -> Vec<GenAIFlag> {
    let ctx = FlagContext::new(markers);
    let chunk = records.len().div_ceil(partitions.max(1)).max(1);
    let mut flags: Vec<GenAIFlag> = records
        .par_chunks(chunk)
        .flat_map_iter(|block| {
            let ctx = &ctx;
            block
                .iter()
                .filter_map(move |r| assignments.get(&r.id).map(|f| ctx.flag(r, f)))
        })
        .collect();
    flags.sort_by(|a, b| a.pub_id.cmp(&b.pub_id));
    flags
}

/// Delimited export `pub_id,distinct_hits,flagged_any_field,flagged_strict`.
pub fn flags_to_csv(flags: &[GenAIFlag]) -> String {
    let mut s = String::from("pub_id,distinct_hits,flagged_any_field,flagged_strict\n");
    for f in flags {
        s.push_str(&format!(
            "{},{},{},{}\n",
            csv_field(&f.pub_id),
            f.distinct_hits,
            f.flagged_any_field,
            f.flagged_strict
        ));
    }
    s
}

pub fn read_flags_csv(path: &std::path::Path) -> Result<Vec<GenAIFlag>> {
    #[derive(Deserialize)]
    struct Row {
        pub_id: String,
        distinct_hits: u32,
        flagged_any_field: bool,
        flagged_strict: bool,
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let r = row?;
        out.push(GenAIFlag {
            pub_id: r.pub_id,
            distinct_hits: r.distinct_hits,
            flagged_any_field: r.flagged_any_field,
            flagged_strict: r.flagged_strict,
            hit_stems: BTreeSet::new(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::markers::{FilterConfig, MarkerEval};

    fn markers(per_field: &[(&str, &[(&str, bool)])]) -> MarkerSet {
        let all: Vec<StemPattern> = ["delv*", "pivotal*", "showcas*", "embarked", "embark*"]
            .iter()
            .map(|p| StemPattern::parse(p).unwrap())
            .collect();
        let fields = per_field
            .iter()
            .map(|(f, kept)| {
                let evals = all
                    .iter()
                    .map(|p| MarkerEval {
                        pattern: p.clone(),
                        base_hits: 0,
                        base_total: 1,
                        end_hits: 0,
                        end_total: 1,
                        fold_change: None,
                        kept: kept.iter().any(|(s, k)| *k && *s == p.to_string()),
                    })
                    .collect();
                (f.to_string(), evals)
            })
            .collect();
        MarkerSet { config: FilterConfig::default(), fields }
    }

    fn rec(title: &str, abs: &str) -> PublicationRecord {
        PublicationRecord {
            id: "x".into(),
            title: title.into(),
            abstract_text: abs.into(),
            year: 2024,
            journal_id: "J".into(),
            journal_if: 1.0,
            scopus_fields: vec![],
            author_countries: vec!["FR".into()],
        }
    }

    #[test]
    fn single_hit_flags_any_field_only() {
        let m = markers(&[("Chem", &[("delv*", true)])]);
        let f = flag_publication(&rec("We delve deeper", ""), &["Chem".into()], &m);
        assert_eq!((f.distinct_hits, f.flagged_any_field, f.flagged_strict), (1, true, false));
    }

    #[test]
    fn two_stems_flag_strict() {
        let m = markers(&[("Chem", &[("pivotal*", true), ("showcas*", true)])]);
        let f = flag_publication(&rec("", "A pivotal method that showcases X"), &["Chem".into()], &m);
        assert!(f.flagged_strict && f.flagged_any_field);
        assert_eq!(f.hit_stems, ["pivotal*", "showcas*"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn stem_filtered_in_every_assigned_field_does_not_flag() {
        let m = markers(&[("Chem", &[("pivotal*", true)]), ("Bio", &[("delv*", true)])]);
        let f = flag_publication(&rec("", "we delve"), &["Chem".into()], &m);
        assert!(!f.flagged_any_field);
        let g = flag_publication(&rec("", "we delve"), &["Chem".into(), "Bio".into()], &m);
        assert!(g.flagged_any_field);
    }

    #[test]
    fn distinct_hits_are_per_field_not_pooled() {
        let m = markers(&[("Chem", &[("pivotal*", true)]), ("Bio", &[("delv*", true)])]);
        let f = flag_publication(&rec("pivotal", "delve"), &["Chem".into(), "Bio".into()], &m);
        assert_eq!(f.distinct_hits, 1);
        assert!(!f.flagged_strict);
    }

    #[test]
    fn one_token_is_one_term() {
        let m = markers(&[("Chem", &[("embarked", true), ("embark*", true)])]);
        assert_eq!(flag_publication(&rec("embarked", ""), &["Chem".into()], &m).distinct_hits, 1);
        assert_eq!(flag_publication(&rec("embarked on embarking", ""), &["Chem".into()], &m).distinct_hits, 2);
    }

    #[test]
    fn treatment_rules() {
        let one = CellFlag { distinct_hits: 1, flagged_any_field: true, flagged_strict: false };
        let two = CellFlag { distinct_hits: 2, flagged_any_field: true, flagged_strict: true };
        let none = CellFlag { distinct_hits: 0, flagged_any_field: false, flagged_strict: false };
        assert_eq!(TreatmentRule::AnyField.treatment(&one), Some(true));
        assert_eq!(TreatmentRule::Strict.treatment(&one), None);
        assert_eq!(TreatmentRule::Strict.treatment(&two), Some(true));
        assert_eq!(TreatmentRule::Strict.treatment(&none), Some(false));
        assert!(TreatmentRule::from_min_distinct(3).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = markers(&[("Chem", &[("delv*", true)])]);
        let flags = vec![flag_publication(&rec("delve", ""), &["Chem".into()], &m)];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("flags.csv");
        std::fs::write(&p, flags_to_csv(&flags)).unwrap();
        let back = read_flags_csv(&p).unwrap();
        assert_eq!(back[0].cell_flag(), flags[0].cell_flag());
    }
}
