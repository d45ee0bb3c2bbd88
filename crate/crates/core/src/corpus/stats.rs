//! Descriptive statistics of the regression panel.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::country::CountryTable;
use super::fields::FieldGroup;
use super::panel::PanelCell;
use crate::lexicon::TreatmentRule;
use crate::util::fmt_f64;
use crate::{Error, Result};

const CONTINENTS: [&str; 5] = ["Africa", "Americas", "Asia", "Europe", "Oceania"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub variable: String,
    pub mean: f64,
    /// Absent for binary indicators.
    pub sd: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveTable {
    pub n_obs: usize,
    pub rows: Vec<StatRow>,
}

impl DescriptiveTable {
    pub fn get(&self, variable: &str) -> Option<&StatRow> {
        self.rows.iter().find(|r| r.variable == variable)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("variable,mean,sd,min,max\n");
        let f = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.variable,
                fmt_f64(r.mean),
                f(r.sd),
                f(r.min),
                f(r.max)
            ));
        }
        s
    }
}

fn continuous(variable: &str, xs: impl Iterator<Item = f64>) -> StatRow {
    let xs: Vec<f64> = xs.collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let sd = if xs.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
    StatRow {
        variable: variable.to_string(),
        mean,
        sd: Some(sd),
        min: xs.iter().copied().reduce(f64::min),
        max: xs.iter().copied().reduce(f64::max),
    }
}

fn share(variable: String, hits: usize, n: usize) -> StatRow {
    StatRow {
        variable,
        mean: hits as f64 / n as f64,
        sd: None,
        min: None,
        max: None,
    }
}

/// Summarizes similarity, impact factor and author counts (mean, sample sd,
/// min, max) and reports shares for the GenAI indicator, years, continents
/// and aggregated field groups.
///
/// Every cell must carry a similarity score and a flag. Cells excluded by the
/// treatment rule (single-hit cells under the strict rule) are left out.
pub fn descriptive_stats(
    cells: &[PanelCell],
    meta: &CountryTable,
    rule: TreatmentRule,
) -> Result<DescriptiveTable> {
    let mut used: Vec<(&PanelCell, f64, bool)> = Vec::with_capacity(cells.len());
    for c in cells {
        let sim = c.similarity.ok_or_else(|| Error::MissingScore {
            pub_id: c.pub_id.clone(),
            field: c.detailed_field.clone(),
        })?;
        let flag = c.flag.ok_or_else(|| Error::MissingFlag(c.pub_id.clone()))?;
        if let Some(treated) = rule.treatment(&flag) {
            used.push((c, sim, treated));
        }
    }
    if used.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let n = used.len();
    let mut rows = vec![
        continuous("similarity", used.iter().map(|u| u.1)),
        continuous("journal_impact_factor", used.iter().map(|u| u.0.journal_if)),
        continuous("n_authors", used.iter().map(|u| u.0.n_authors as f64)),
        share("genai_share".into(), used.iter().filter(|u| u.2).count(), n),
    ];

    let mut years: BTreeMap<i32, usize> = BTreeMap::new();
    let mut continents: BTreeMap<String, usize> = CONTINENTS.iter().map(|c| (c.to_string(), 0)).collect();
    let mut groups: BTreeMap<FieldGroup, usize> = FieldGroup::INCLUDED.iter().map(|g| (*g, 0)).collect();
    for (c, _, _) in &used {
        *years.entry(c.year).or_default() += 1;
        let cont = meta
            .get(&c.country_code)
            .and_then(|m| m.continent.clone())
            .unwrap_or_else(|| "Unknown".to_string());
        *continents.entry(cont).or_default() += 1;
        *groups.entry(c.aggregated_group).or_default() += 1;
    }
    rows.extend(years.into_iter().map(|(y, k)| share(format!("year_{y}"), k, n)));
    rows.extend(continents.into_iter().map(|(c, k)| share(format!("continent_{c}"), k, n)));
    rows.extend(groups.into_iter().map(|(g, k)| share(format!("field_{g}"), k, n)));
    Ok(DescriptiveTable { n_obs: n, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::country::CliWeights;
    use crate::corpus::panel::CellFlag;

    fn cell(year: i32, sim: f64, genai: bool) -> PanelCell {
        PanelCell {
            pub_id: format!("p{year}{sim}"),
            country_code: "DE".into(),
            detailed_field: "Physics".into(),
            aggregated_group: FieldGroup::PhysSci,
            year,
            journal_id: "J".into(),
            journal_if: 2.0,
            n_authors: 3,
            has_eng_coauthor: false,
            domestic: true,
            flag: Some(CellFlag {
                distinct_hits: genai as u32,
                flagged_any_field: genai,
                flagged_strict: false,
            }),
            similarity: Some(sim),
        }
    }

    fn meta() -> CountryTable {
        CountryTable::parse(
            "country_code,is_english_core,cli_score,cnl,col,lp,continent\nDE,false,0.3,,,,Europe\n",
            CliWeights::default(),
        )
        .unwrap()
    }

    #[test]
    fn constant_similarity_has_zero_sd() {
        let cells: Vec<_> = (0..5).map(|i| cell(2021 + i % 4, 0.5, false)).collect();
        let t = descriptive_stats(&cells, &meta(), TreatmentRule::AnyField).unwrap();
        let s = t.get("similarity").unwrap();
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.sd, Some(0.0));
    }

    #[test]
    fn year_shares_count_cells() {
        let cells = vec![cell(2021, 0.1, true), cell(2021, 0.2, false), cell(2023, 0.3, false), cell(2024, 0.4, false)];
        let t = descriptive_stats(&cells, &meta(), TreatmentRule::AnyField).unwrap();
        assert_eq!(t.get("year_2021").unwrap().mean, 0.5);
        assert_eq!(t.get("year_2024").unwrap().mean, 0.25);
        assert_eq!(t.get("genai_share").unwrap().mean, 0.25);
        assert_eq!(t.get("continent_Europe").unwrap().mean, 1.0);
        assert_eq!(t.get("continent_Asia").unwrap().mean, 0.0);
        assert_eq!(t.get("field_PhysSci").unwrap().mean, 1.0);
        assert!(t.get("genai_share").unwrap().sd.is_none());
        let sim = t.get("similarity").unwrap();
        assert_eq!((sim.min, sim.max), (Some(0.1), Some(0.4)));
    }

    #[test]
    fn empty_panel_errors() {
        assert!(matches!(descriptive_stats(&[], &meta(), TreatmentRule::AnyField), Err(Error::EmptyPanel)));
        let mut c = cell(2021, 0.5, false);
        c.similarity = None;
        assert!(matches!(descriptive_stats(&[c], &meta(), TreatmentRule::AnyField), Err(Error::MissingScore { .. })));
    }
}
