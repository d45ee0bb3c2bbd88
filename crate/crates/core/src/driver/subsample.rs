//! Sample splits applied to panel cells before estimation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{CountryTable, FieldGroup, PanelCell};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SubsampleRule {
    All,
    DomesticOnly,
    InternationalOnly,
    DomesticCliClose,
    DomesticCliDistant,
    IntlWithEngCoauthor,
    IntlNoEngCoauthor,
    HighImpactJournal,
    LowImpactJournal,
    ByAggregatedField(FieldGroup),
}

impl SubsampleRule {
    pub fn name(&self) -> String {
        match self {
            SubsampleRule::All => "all".into(),
            SubsampleRule::DomesticOnly => "domestic_only".into(),
            SubsampleRule::InternationalOnly => "international_only".into(),
            SubsampleRule::DomesticCliClose => "domestic_cli_close".into(),
            SubsampleRule::DomesticCliDistant => "domestic_cli_distant".into(),
            SubsampleRule::IntlWithEngCoauthor => "intl_with_eng_coauthor".into(),
            SubsampleRule::IntlNoEngCoauthor => "intl_no_eng_coauthor".into(),
            SubsampleRule::HighImpactJournal => "high_impact_journal".into(),
            SubsampleRule::LowImpactJournal => "low_impact_journal".into(),
            SubsampleRule::ByAggregatedField(g) => format!("field:{}", g.as_str()),
        }
    }

    /// The usual set of splits: the full sample and every paired split.
    pub fn standard_set() -> Vec<SubsampleRule> {
        let mut v = vec![
            SubsampleRule::All,
            SubsampleRule::DomesticOnly,
            SubsampleRule::InternationalOnly,
            SubsampleRule::DomesticCliClose,
            SubsampleRule::DomesticCliDistant,
            SubsampleRule::IntlWithEngCoauthor,
            SubsampleRule::IntlNoEngCoauthor,
            SubsampleRule::HighImpactJournal,
            SubsampleRule::LowImpactJournal,
        ];
        v.extend(FieldGroup::INCLUDED.iter().map(|g| SubsampleRule::ByAggregatedField(*g)));
        v
    }
}

impl fmt::Display for SubsampleRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for SubsampleRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(g) = s.strip_prefix("field:") {
            let group: FieldGroup = g.parse()?;
            if group == FieldGroup::Excluded {
                return Err(Error::InvalidConfig("excluded fields form no subsample".into()));
            }
            return Ok(SubsampleRule::ByAggregatedField(group));
        }
        Ok(match s.to_ascii_lowercase().as_str() {
            "all" => SubsampleRule::All,
            "domestic_only" | "domestic" => SubsampleRule::DomesticOnly,
            "international_only" | "international" => SubsampleRule::InternationalOnly,
            "domestic_cli_close" => SubsampleRule::DomesticCliClose,
            "domestic_cli_distant" => SubsampleRule::DomesticCliDistant,
            "intl_with_eng_coauthor" => SubsampleRule::IntlWithEngCoauthor,
            "intl_no_eng_coauthor" => SubsampleRule::IntlNoEngCoauthor,
            "high_impact_journal" => SubsampleRule::HighImpactJournal,
            "low_impact_journal" => SubsampleRule::LowImpactJournal,
            other => return Err(Error::InvalidConfig(format!("unknown subsample rule {other:?}"))),
        })
    }
}

impl TryFrom<String> for SubsampleRule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SubsampleRule> for String {
    fn from(r: SubsampleRule) -> String {
        r.name()
    }
}

/// What the CLI median is taken over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MedianBasis {
    /// Distinct countries, each counted once.
    #[default]
    Countries,
    /// Cells, so countries count in proportion to their output.
    Publications,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CliSide {
    Close,
    Distant,
}

/// Lower median: element `(n - 1) / 2` of the sorted values.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

/// Countries at or above the lower median of the distinct scores are Close.
pub fn median_split_cli(scores: &BTreeMap<String, f64>) -> Result<(f64, BTreeMap<String, CliSide>)> {
    if scores.is_empty() {
        return Err(Error::AllMissing);
    }
    if scores.len() < 2 {
        return Err(Error::DegenerateSplit("a CLI split needs at least two countries".into()));
    }
    let mut distinct: Vec<f64> = scores.values().copied().collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let median = lower_median(&distinct).expect("non-empty");
    Ok((median, split_at(scores, median)))
}

fn split_at(scores: &BTreeMap<String, f64>, median: f64) -> BTreeMap<String, CliSide> {
    scores
        .iter()
        .map(|(c, &s)| (c.clone(), if s >= median { CliSide::Close } else { CliSide::Distant }))
        .collect()
}

/// CLI of every country touched by `cells`.
fn touched_cli(cells: &[&PanelCell], meta: &CountryTable) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for c in cells {
        if out.contains_key(&c.country_code) {
            continue;
        }
        let m = meta.require(&c.country_code)?;
        let s = m.cli_score.ok_or_else(|| Error::MissingCli(c.country_code.clone()))?;
        out.insert(c.country_code.clone(), s);
    }
    Ok(out)
}

/// CLI sides of the countries in the domestic subsample.
pub fn domestic_cli_sides(
    cells: &[PanelCell],
    meta: &CountryTable,
    basis: MedianBasis,
) -> Result<(f64, BTreeMap<String, CliSide>)> {
    let domestic: Vec<&PanelCell> = cells.iter().filter(|c| c.domestic).collect();
    let scores = touched_cli(&domestic, meta)?;
    match basis {
        MedianBasis::Countries => median_split_cli(&scores),
        MedianBasis::Publications => {
            if scores.len() < 2 {
                return median_split_cli(&scores);
            }
            let weighted: Vec<f64> = domestic.iter().map(|c| scores[&c.country_code]).collect();
            let median = lower_median(&weighted).expect("non-empty");
            Ok((median, split_at(&scores, median)))
        }
    }
}

/// Lower median of the distinct journals' impact factors within each field.
pub fn field_impact_medians(cells: &[PanelCell]) -> BTreeMap<String, f64> {
    let mut per: BTreeMap<&str, BTreeMap<&str, (f64, usize)>> = BTreeMap::new();
    let mut seen: BTreeSet<(&str, &str, &str)> = BTreeSet::new();
    for c in cells {
        // One impact observation per publication, not per country cell.
        if !seen.insert((&c.detailed_field, &c.journal_id, &c.pub_id)) {
            continue;
        }
        let e = per.entry(&c.detailed_field).or_default().entry(&c.journal_id).or_default();
        e.0 += c.journal_if;
        e.1 += 1;
    }
    per.into_iter()
        .map(|(f, js)| {
            let v: Vec<f64> = js.values().map(|(s, n)| s / *n as f64).collect();
            (f.to_string(), lower_median(&v).expect("non-empty"))
        })
        .collect()
}

/// Cells retained by `rule`.
pub fn split_subsample(
    cells: &[PanelCell],
    rule: SubsampleRule,
    meta: &CountryTable,
    basis: MedianBasis,
) -> Result<Vec<PanelCell>> {
    let keep = |pred: &dyn Fn(&PanelCell) -> bool| cells.iter().filter(|c| pred(c)).cloned().collect::<Vec<_>>();
    Ok(match rule {
        SubsampleRule::All => cells.to_vec(),
        SubsampleRule::DomesticOnly => keep(&|c| c.domestic),
        SubsampleRule::InternationalOnly => keep(&|c| !c.domestic),
        SubsampleRule::DomesticCliClose | SubsampleRule::DomesticCliDistant => {
            let want = if rule == SubsampleRule::DomesticCliClose { CliSide::Close } else { CliSide::Distant };
            let (_, sides) = domestic_cli_sides(cells, meta, basis)?;
            keep(&|c| c.domestic && sides.get(&c.country_code) == Some(&want))
        }
        SubsampleRule::IntlWithEngCoauthor => keep(&|c| !c.domestic && c.has_eng_coauthor),
        SubsampleRule::IntlNoEngCoauthor => keep(&|c| !c.domestic && !c.has_eng_coauthor),
        SubsampleRule::HighImpactJournal | SubsampleRule::LowImpactJournal => {
            let medians = field_impact_medians(cells);
            let high = rule == SubsampleRule::HighImpactJournal;
            keep(&|c| (c.journal_if >= medians[&c.detailed_field]) == high)
        }
        SubsampleRule::ByAggregatedField(g) => keep(&|c| c.aggregated_group == g),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CountryMeta, FieldGroup};

    fn meta(scores: &[(&str, Option<f64>)]) -> CountryTable {
        CountryTable::from_rows(scores.iter().map(|(c, s)| CountryMeta {
            country_code: c.to_string(),
            is_english_core: false,
            cli_score: *s,
            cli_components: None,
            continent: None,
        }))
        .unwrap()
    }

    fn cell(id: &str, country: &str, domestic: bool, eng: bool, journal: &str, jif: f64) -> PanelCell {
        PanelCell {
            pub_id: id.into(),
            country_code: country.into(),
            detailed_field: "Physics".into(),
            aggregated_group: FieldGroup::PhysSci,
            year: 2021,
            journal_id: journal.into(),
            journal_if: jif,
            n_authors: 2,
            has_eng_coauthor: eng,
            domestic,
            flag: None,
            similarity: None,
        }
    }

    fn scores(xs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        xs.iter().map(|(c, s)| (c.to_string(), *s)).collect()
    }

    #[test]
    fn median_examples() {
        let (m, s) = median_split_cli(&scores(&[("A", 0.1), ("B", 0.2), ("C", 0.3), ("D", 0.4), ("E", 0.5)])).unwrap();
        assert_eq!(m, 0.3);
        assert_eq!(s["C"], CliSide::Close);
        assert_eq!(s["B"], CliSide::Distant);
        let (m, s) = median_split_cli(&scores(&[("A", 0.2), ("B", 0.8)])).unwrap();
        assert_eq!(m, 0.2);
        assert!(s.values().all(|v| *v == CliSide::Close));
        let (m, _) = median_split_cli(&scores(&[("A", 0.1), ("B", 0.5), ("C", 0.9)])).unwrap();
        assert_eq!(m, 0.5);
        assert!(matches!(median_split_cli(&scores(&[("A", 0.1)])), Err(Error::DegenerateSplit(_))));
        assert!(matches!(median_split_cli(&BTreeMap::new()), Err(Error::AllMissing)));
    }

    #[test]
    fn domestic_international_partition() {
        let cells = vec![
            cell("1", "CH", true, false, "J", 1.0),
            cell("2", "FR", false, true, "J", 1.0),
            cell("3", "FR", false, false, "J", 1.0),
        ];
        let m = meta(&[("CH", Some(0.2)), ("FR", Some(0.5))]);
        let d = split_subsample(&cells, SubsampleRule::DomesticOnly, &m, MedianBasis::Countries).unwrap();
        let i = split_subsample(&cells, SubsampleRule::InternationalOnly, &m, MedianBasis::Countries).unwrap();
        assert_eq!(d.len() + i.len(), cells.len());
        assert_eq!(d[0].pub_id, "1");
        let w = split_subsample(&cells, SubsampleRule::IntlWithEngCoauthor, &m, MedianBasis::Countries).unwrap();
        assert_eq!(w.iter().map(|c| c.pub_id.as_str()).collect::<Vec<_>>(), vec!["2"]);
    }

    #[test]
    fn cli_split_requires_scores() {
        let cells = vec![cell("1", "CH", true, false, "J", 1.0), cell("2", "XX", true, false, "J", 1.0)];
        let m = meta(&[("CH", Some(0.2)), ("XX", None)]);
        let r = split_subsample(&cells, SubsampleRule::DomesticCliClose, &m, MedianBasis::Countries);
        assert!(matches!(r, Err(Error::MissingCli(c)) if c == "XX"));
    }

    #[test]
    fn publication_weighted_median() {
        let mut cells: Vec<PanelCell> = (0..5).map(|i| cell(&format!("a{i}"), "AA", true, false, "J", 1.0)).collect();
        cells.push(cell("b", "BB", true, false, "J", 1.0));
        cells.push(cell("c", "CC", true, false, "J", 1.0));
        let m = meta(&[("AA", Some(0.9)), ("BB", Some(0.1)), ("CC", Some(0.5))]);
        assert_eq!(domestic_cli_sides(&cells, &m, MedianBasis::Countries).unwrap().0, 0.5);
        assert_eq!(domestic_cli_sides(&cells, &m, MedianBasis::Publications).unwrap().0, 0.9);
    }

    #[test]
    fn journal_split_is_within_field() {
        let cells = vec![
            cell("1", "FR", true, false, "J1", 1.0),
            cell("2", "FR", true, false, "J2", 2.0),
            cell("3", "FR", true, false, "J3", 3.0),
            cell("4", "FR", true, false, "J3", 3.0),
        ];
        let m = meta(&[("FR", Some(0.5))]);
        let hi = split_subsample(&cells, SubsampleRule::HighImpactJournal, &m, MedianBasis::Countries).unwrap();
        let lo = split_subsample(&cells, SubsampleRule::LowImpactJournal, &m, MedianBasis::Countries).unwrap();
        assert_eq!(hi.len(), 3);
        assert_eq!(lo.len(), 1);
    }

    #[test]
    fn rule_names_round_trip() {
        for r in SubsampleRule::standard_set() {
            assert_eq!(r.name().parse::<SubsampleRule>().unwrap(), r);
        }
    }
}
