//! Fold-change filtering of marker patterns, field by field.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::frequency::{FrequencyMode, TermFrequencyTable};
use super::vocab::StemPattern;
use crate::util::fmt_f64;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub base_year: i32,
    pub end_year: i32,
    /// Minimum ratio of end-year to base-year relative frequency. 4 means a
    /// 300% increase.
    pub threshold_fold: f64,
    /// Minimum end-year document hits for a pattern to be kept in a field.
    /// Also the qualifying bar for patterns absent in the base year.
    pub min_support: u64,
    pub mode: FrequencyMode,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            base_year: 2021,
            end_year: 2024,
            threshold_fold: 4.0,
            min_support: 30,
            mode: FrequencyMode::Document,
        }
    }
}

/// Evaluation of one pattern in one field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerEval {
    pub pattern: StemPattern,
    pub base_hits: u64,
    pub base_total: u64,
    pub end_hits: u64,
    pub end_total: u64,
    /// `None` when the pattern is absent in both years; infinite when it is
    /// absent only in the base year.
    pub fold_change: Option<f64>,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerSet {
    pub config: FilterConfig,
    pub fields: BTreeMap<String, Vec<MarkerEval>>,
}

impl MarkerSet {
    /// Patterns kept for `field`; empty for unknown fields.
    pub fn kept(&self, field: &str) -> Vec<&StemPattern> {
        self.fields
            .get(field)
            .map(|v| v.iter().filter(|e| e.kept).map(|e| &e.pattern).collect())
            .unwrap_or_default()
    }

    pub fn kept_stems(&self, field: &str) -> Vec<String> {
        self.kept(field).into_iter().map(|p| p.to_string()).collect()
    }

    /// Delimited export `field,stem,fold_change,kept`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("field,stem,fold_change,kept\n");
        for (field, evals) in &self.fields {
            for e in evals {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    csv_field(field),
                    e.pattern,
                    e.fold_change.map(fmt_f64).unwrap_or_default(),
                    e.kept
                ));
            }
        }
        s
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Keeps, per field, the patterns whose relative frequency grew by at least
/// `threshold_fold` between the base and end years.
///
/// The ratio is evaluated as `(end_hits * base_total) / (base_hits * end_total)`
/// from exact integer products, so round thresholds compare exactly. A
/// pattern absent in the base year qualifies when its end-year document hits
/// reach `min_support`; every kept pattern must reach `min_support`.
pub fn filter_markers(table: &TermFrequencyTable, cfg: &FilterConfig) -> Result<MarkerSet> {
    if cfg.threshold_fold.is_nan() || cfg.threshold_fold < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "threshold_fold {} must be at least 1",
            cfg.threshold_fold
        )));
    }
    let mut fields = BTreeMap::new();
    for field in table.fields() {
        let base = table
            .stratum(&field, cfg.base_year)
            .filter(|s| s.doc_total > 0)
            .ok_or_else(|| Error::MissingBaseYear {
                field: field.clone(),
                year: cfg.base_year,
            })?;
        let end = table
            .stratum(&field, cfg.end_year)
            .filter(|s| s.doc_total > 0)
            .ok_or_else(|| Error::MissingEndYear {
                field: field.clone(),
                year: cfg.end_year,
            })?;
        let evals = table
            .patterns
            .iter()
            .enumerate()
            .map(|(i, pattern)| {
                let (b_num, b_den) = base.ratio(i, cfg.mode);
                let (e_num, e_den) = end.ratio(i, cfg.mode);
                let fold_change = match (b_num, e_num) {
                    (0, 0) => None,
                    (0, _) => Some(f64::INFINITY),
                    _ => Some((e_num as u128 * b_den as u128) as f64 / (b_num as u128 * e_den as u128) as f64),
                };
                let end_docs = end.ratio(i, FrequencyMode::Document).0;
                let kept = end_docs >= cfg.min_support
                    && match fold_change {
                        None => false,
                        Some(f) if f.is_infinite() => true,
                        Some(f) => f >= cfg.threshold_fold,
                    };
                MarkerEval {
                    pattern: pattern.clone(),
                    base_hits: b_num,
                    base_total: b_den,
                    end_hits: e_num,
                    end_total: e_den,
                    fold_change,
                    kept,
                }
            })
            .collect();
        fields.insert(field, evals);
    }
    Ok(MarkerSet {
        config: *cfg,
        fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::frequency::{Hits, Stratum};

    /// One field, three patterns with chosen (base_hits, end_hits).
    fn table(base_total: u64, end_total: u64, hits: &[(u64, u64)]) -> TermFrequencyTable {
        let patterns: Vec<StemPattern> = (0..hits.len())
            .map(|i| StemPattern::new(&"abcdefgh"[i..i + 1].repeat(3), true).unwrap())
            .collect();
        let mk = |total, pick: &dyn Fn(&(u64, u64)) -> u64| Stratum {
            doc_total: total,
            tok_total: total * 10,
            hits: hits.iter().map(|h| Hits { doc_hits: pick(h), tok_hits: pick(h) }).collect(),
        };
        let mut strata = BTreeMap::new();
        strata.insert(("F".to_string(), 2021), mk(base_total, &|h| h.0));
        strata.insert(("F".to_string(), 2024), mk(end_total, &|h| h.1));
        TermFrequencyTable { patterns, strata }
    }

    fn kept_at(t: &TermFrequencyTable, fold: f64) -> Vec<bool> {
        let cfg = FilterConfig { threshold_fold: fold, min_support: 1, ..FilterConfig::default() };
        filter_markers(t, &cfg).unwrap().fields["F"].iter().map(|e| e.kept).collect()
    }

    #[test]
    fn fold_thresholds() {
        // 0.01 -> 0.05 (5x), 0.02 -> 0.06 (3x), 0.03 -> 0.03 (1x)
        let t = table(100, 100, &[(1, 5), (2, 6), (3, 3)]);
        assert_eq!(kept_at(&t, 3.0), vec![true, true, false]);
        assert_eq!(kept_at(&t, 4.0), vec![true, false, false]);
        assert_eq!(kept_at(&t, 5.0), vec![true, false, false]);
        let set = filter_markers(&t, &FilterConfig { min_support: 1, ..FilterConfig::default() }).unwrap();
        assert_eq!(set.fields["F"][0].fold_change, Some(5.0));
        assert_eq!(set.fields["F"][1].fold_change, Some(3.0));
    }

    #[test]
    fn zero_base_needs_support() {
        let t = table(50, 50, &[(0, 30), (0, 29), (0, 0)]);
        let cfg = FilterConfig::default();
        let set = filter_markers(&t, &cfg).unwrap();
        let kept: Vec<bool> = set.fields["F"].iter().map(|e| e.kept).collect();
        assert_eq!(kept, vec![true, false, false]);
        assert_eq!(set.fields["F"][0].fold_change, Some(f64::INFINITY));
        assert_eq!(set.fields["F"][2].fold_change, None);
    }

    #[test]
    fn support_floor_applies_to_finite_folds() {
        let t = table(1000, 100, &[(1, 10)]);
        let strict = FilterConfig { min_support: 30, ..FilterConfig::default() };
        assert!(!filter_markers(&t, &strict).unwrap().fields["F"][0].kept);
        let loose = FilterConfig { min_support: 10, ..FilterConfig::default() };
        assert!(filter_markers(&t, &loose).unwrap().fields["F"][0].kept);
    }

    #[test]
    fn missing_years_error() {
        let mut t = table(10, 10, &[(1, 1)]);
        t.strata.remove(&("F".to_string(), 2021));
        assert!(matches!(filter_markers(&t, &FilterConfig::default()), Err(Error::MissingBaseYear { .. })));
        let mut t = table(10, 10, &[(1, 1)]);
        t.strata.remove(&("F".to_string(), 2024));
        assert!(matches!(filter_markers(&t, &FilterConfig::default()), Err(Error::MissingEndYear { .. })));
        assert!(filter_markers(&table(1, 1, &[]), &FilterConfig { threshold_fold: 0.5, ..FilterConfig::default() }).is_err());
    }

    #[test]
    fn csv_export_columns() {
        let t = table(100, 100, &[(1, 5)]);
        let s = filter_markers(&t, &FilterConfig { min_support: 1, ..FilterConfig::default() }).unwrap().to_csv();
        assert_eq!(s, "field,stem,fold_change,kept\nF,aaa*,5.0,true\n");
    }
}
