//! Design matrices for the event-study regression.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::PanelCell;
use crate::lexicon::TreatmentRule;
use crate::{Error, Result};

pub const DEFAULT_REFERENCE_YEAR: i32 = 2022;

/// Absorbable fixed-effect dimensions of a panel cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeDim {
    Country,
    Field,
    Journal,
    Year,
    JournalYear,
}

impl FeDim {
    pub const ALL: [FeDim; 5] = [FeDim::Country, FeDim::Field, FeDim::Journal, FeDim::Year, FeDim::JournalYear];

    pub fn as_str(&self) -> &'static str {
        match self {
            FeDim::Country => "country",
            FeDim::Field => "field",
            FeDim::Journal => "journal",
            FeDim::Year => "year",
            FeDim::JournalYear => "journal_x_year",
        }
    }

    fn key(&self, c: &PanelCell) -> String {
        let k = c.fe_keys();
        match self {
            FeDim::Country => k.country,
            FeDim::Field => k.field,
            FeDim::Journal => k.journal,
            FeDim::Year => k.year,
            FeDim::JournalYear => k.journal_year,
        }
    }
}

impl fmt::Display for FeDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeDim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeDim::ALL
            .into_iter()
            .find(|d| d.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown fixed-effect dimension {s:?}")))
    }
}

/// One categorical column with levels numbered 0..n_levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub name: String,
    pub ids: Vec<u32>,
    pub n_levels: usize,
}

impl Factor {
    /// Numbers levels in sorted key order, so the coding does not depend on row order.
    pub fn from_keys<K: Ord + Clone>(name: impl Into<String>, keys: &[K]) -> Self {
        let levels: BTreeSet<&K> = keys.iter().collect();
        let index: BTreeMap<&K, u32> = levels.into_iter().enumerate().map(|(i, k)| (k, i as u32)).collect();
        Factor {
            name: name.into(),
            ids: keys.iter().map(|k| index[k]).collect(),
            n_levels: index.len(),
        }
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0usize; self.n_levels];
        for &g in &self.ids {
            c[g as usize] += 1;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub y: Vec<f64>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub factors: Vec<Factor>,
    pub clusters: Factor,
}

impl DesignMatrix {
    pub fn new(
        y: Vec<f64>,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        factors: Vec<Factor>,
        clusters: Factor,
    ) -> Result<Self> {
        let n = y.len();
        if names.len() != columns.len() {
            return Err(Error::InvalidConfig("one name per regressor column is required".into()));
        }
        if columns.iter().any(|c| c.len() != n)
            || factors.iter().any(|f| f.ids.len() != n)
            || clusters.ids.len() != n
        {
            return Err(Error::InvalidConfig("design columns differ in length".into()));
        }
        if y.iter().chain(columns.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("design contains non-finite values".into()));
        }
        Ok(DesignMatrix {
            y,
            names,
            columns,
            factors,
            clusters,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }
}

pub fn event_term(year: i32) -> String {
    format!("genai_x_{year}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    pub reference_year: i32,
    pub treatment: TreatmentRule,
    pub fe_dims: Vec<FeDim>,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            reference_year: DEFAULT_REFERENCE_YEAR,
            treatment: TreatmentRule::AnyField,
            fe_dims: FeDim::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuiltDesign {
    pub design: DesignMatrix,
    pub years: Vec<i32>,
    /// Cells left out by the treatment rule.
    pub excluded: usize,
}

/// Regressors `genai`, `genai_x_<year>` for every year but the reference,
/// `n_authors` and `eng_coauthor`; outcome is the similarity score; clusters
/// are journals.
pub fn build_design(cells: &[PanelCell], cfg: &DesignConfig) -> Result<BuiltDesign> {
    let mut kept: Vec<(&PanelCell, f64, bool)> = Vec::with_capacity(cells.len());
    let mut excluded = 0;
    for c in cells {
        let flag = c.flag.ok_or_else(|| Error::MissingFlag(c.pub_id.clone()))?;
        let sim = c.similarity.ok_or_else(|| Error::MissingScore {
            pub_id: c.pub_id.clone(),
            field: c.detailed_field.clone(),
        })?;
        match cfg.treatment.treatment(&flag) {
            Some(t) => kept.push((c, sim, t)),
            None => excluded += 1,
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let years: Vec<i32> = kept.iter().map(|k| k.0.year).collect::<BTreeSet<_>>().into_iter().collect();
    if years.len() < 2 {
        return Err(Error::SingleYearPanel);
    }
    if !years.contains(&cfg.reference_year) {
        return Err(Error::InvalidConfig(format!(
            "reference year {} is absent from the panel years {years:?}",
            cfg.reference_year
        )));
    }
    let event_years: Vec<i32> = years.iter().copied().filter(|&y| y != cfg.reference_year).collect();

    let mut names = vec!["genai".to_string()];
    names.extend(event_years.iter().map(|&y| event_term(y)));
    names.push("n_authors".into());
    names.push("eng_coauthor".into());

    let n = kept.len();
    let mut columns = vec![Vec::with_capacity(n); names.len()];
    let mut y = Vec::with_capacity(n);
    for (c, sim, treated) in &kept {
        let g = if *treated { 1.0 } else { 0.0 };
        y.push(*sim);
        columns[0].push(g);
        for (j, &ey) in event_years.iter().enumerate() {
            columns[1 + j].push(if c.year == ey { g } else { 0.0 });
        }
        columns[names.len() - 2].push(c.n_authors as f64);
        columns[names.len() - 1].push(if c.has_eng_coauthor { 1.0 } else { 0.0 });
    }
    let factors = cfg
        .fe_dims
        .iter()
        .map(|d| {
            let keys: Vec<String> = kept.iter().map(|k| d.key(k.0)).collect();
            Factor::from_keys(d.as_str(), &keys)
        })
        .collect();
    let journals: Vec<&str> = kept.iter().map(|k| k.0.journal_id.as_str()).collect();
    let clusters = Factor::from_keys("journal", &journals);
    Ok(BuiltDesign {
        design: DesignMatrix::new(y, names, columns, factors, clusters)?,
        years,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CellFlag, FieldGroup};

    fn cell(id: &str, year: i32, genai: bool) -> PanelCell {
        PanelCell {
            pub_id: id.into(),
            country_code: "FR".into(),
            detailed_field: "Physics".into(),
            aggregated_group: FieldGroup::PhysSci,
            year,
            journal_id: "J1".into(),
            journal_if: 1.0,
            n_authors: 4,
            has_eng_coauthor: true,
            domestic: false,
            flag: Some(CellFlag { distinct_hits: genai as u32, flagged_any_field: genai, flagged_strict: false }),
            similarity: Some(0.8),
        }
    }

    #[test]
    fn interaction_columns_skip_reference_year() {
        let cells: Vec<_> = (2021..=2024).map(|y| cell(&format!("p{y}"), y, y == 2024)).collect();
        let b = build_design(&cells, &DesignConfig::default()).unwrap();
        let d = &b.design;
        assert_eq!(d.names, vec!["genai", "genai_x_2021", "genai_x_2023", "genai_x_2024", "n_authors", "eng_coauthor"]);
        // 2021 cell, not flagged: all interactions 0
        assert_eq!((0..4).map(|j| d.columns[j][0]).collect::<Vec<_>>(), vec![0.0; 4]);
        // 2024 cell, flagged
        assert_eq!((0..4).map(|j| d.columns[j][3]).collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(d.factors.len(), 5);
        assert_eq!(d.factors[4].n_levels, 4);
        assert_eq!(d.clusters.n_levels, 1);
    }

    #[test]
    fn errors() {
        assert!(matches!(build_design(&[cell("a", 2022, false)], &DesignConfig::default()), Err(Error::SingleYearPanel)));
        let mut c = cell("a", 2022, false);
        c.similarity = None;
        assert!(matches!(build_design(&[c], &DesignConfig::default()), Err(Error::MissingScore { .. })));
        let mut c = cell("a", 2022, false);
        c.flag = None;
        assert!(matches!(build_design(&[c], &DesignConfig::default()), Err(Error::MissingFlag(_))));
    }

    #[test]
    fn strict_rule_excludes_single_hits() {
        let cells = vec![cell("a", 2021, true), cell("b", 2022, false), cell("c", 2023, false)];
        let cfg = DesignConfig { treatment: TreatmentRule::Strict, ..DesignConfig::default() };
        let b = build_design(&cells, &cfg).unwrap();
        assert_eq!(b.excluded, 1);
        assert_eq!(b.design.n_obs(), 2);
    }

    #[test]
    fn factor_coding_is_order_free() {
        let f = Factor::from_keys("x", &["b", "a", "b", "c"]);
        assert_eq!(f.ids, vec![1, 0, 1, 2]);
        assert_eq!(f.counts(), vec![1, 2, 1]);
    }
}
