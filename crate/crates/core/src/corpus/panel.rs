//! Expansion of publications into publication × country × field cells.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::country::CountryTable;
use super::fields::{FieldGroup, FieldMap};
use super::record::PublicationRecord;
use crate::{Error, Result};

/// Treatment status attached to a cell by the lexicon detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellFlag {
    pub distinct_hits: u32,
    pub flagged_any_field: bool,
    pub flagged_strict: bool,
}

/// One observation of the regression panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelCell {
    pub pub_id: String,
    pub country_code: String,
    pub detailed_field: String,
    pub aggregated_group: FieldGroup,
    pub year: i32,
    pub journal_id: String,
    pub journal_if: f64,
    pub n_authors: u32,
    pub has_eng_coauthor: bool,
    /// All known author affiliations are in a single country.
    pub domestic: bool,
    pub flag: Option<CellFlag>,
    pub similarity: Option<f64>,
}

/// Fixed-effect group keys of a cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeKeys {
    pub country: String,
    pub field: String,
    pub journal: String,
    pub year: String,
    pub journal_year: String,
}

impl PanelCell {
    pub fn fe_keys(&self) -> FeKeys {
        FeKeys {
            country: self.country_code.clone(),
            field: self.detailed_field.clone(),
            journal: self.journal_id.clone(),
            year: self.year.to_string(),
            journal_year: format!("{}|{}", self.journal_id, self.year),
        }
    }

    fn sort_key(&self) -> (&str, &str, &str) {
        (&self.pub_id, &self.country_code, &self.detailed_field)
    }
}

/// Expands one record into its panel cells.
///
/// The result is the cross product of the distinct non-English-core author
/// countries (sorted) with the non-excluded detailed fields (first-seen
/// order). Publications with only English-core affiliations yield no cells.
pub fn expand_panel(
    record: &PublicationRecord,
    meta: &CountryTable,
    field_map: &FieldMap,
) -> Result<Vec<PanelCell>> {
    let countries = record.distinct_countries();
    let mut has_eng = false;
    let mut non_english = Vec::with_capacity(countries.len());
    for code in &countries {
        let m = meta.require(code)?;
        if m.is_english_core {
            has_eng = true;
        } else {
            non_english.push(*code);
        }
    }
    let fields = field_map.map_fields(&record.scopus_fields)?;
    let domestic = countries.len() == 1;
    let mut cells = Vec::with_capacity(non_english.len() * fields.len());
    for country in &non_english {
        for (field, group) in &fields {
            cells.push(PanelCell {
                pub_id: record.id.clone(),
                country_code: (*country).to_string(),
                detailed_field: field.clone(),
                aggregated_group: *group,
                year: record.year,
                journal_id: record.journal_id.clone(),
                journal_if: record.journal_if,
                n_authors: record.n_authors() as u32,
                has_eng_coauthor: has_eng,
                domestic,
                flag: None,
                similarity: None,
            });
        }
    }
    Ok(cells)
}

/// Expands a whole corpus and returns cells in canonical
/// (pub_id, country, field) order, independent of `partitions`.
pub fn build_panel(
    records: &[PublicationRecord],
    meta: &CountryTable,
    field_map: &FieldMap,
    partitions: usize,
) -> Result<Vec<PanelCell>> {
    let chunk = records.len().div_ceil(partitions.max(1)).max(1);
    let parts: Vec<Vec<PanelCell>> = records
        .par_chunks(chunk)
        .map(|block| -> Result<Vec<PanelCell>> {
            let mut out = Vec::new();
            for r in block {
                out.extend(expand_panel(r, meta, field_map)?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut cells: Vec<PanelCell> = parts.into_iter().flatten().collect();
    cells.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(cells)
}

#[derive(Debug, Serialize, Deserialize)]
struct PanelRow {
    pub_id: String,
    country_code: String,
    detailed_field: String,
    aggregated_group: FieldGroup,
    year: i32,
    journal_id: String,
    journal_if: f64,
    n_authors: u32,
    has_eng_coauthor: bool,
    domestic: bool,
    distinct_hits: Option<u32>,
    flagged_any_field: Option<bool>,
    flagged_strict: Option<bool>,
    similarity: Option<f64>,
}

pub fn write_panel_csv(cells: &[PanelCell]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in cells {
        w.serialize(PanelRow {
            pub_id: c.pub_id.clone(),
            country_code: c.country_code.clone(),
            detailed_field: c.detailed_field.clone(),
            aggregated_group: c.aggregated_group,
            year: c.year,
            journal_id: c.journal_id.clone(),
            journal_if: c.journal_if,
            n_authors: c.n_authors,
            has_eng_coauthor: c.has_eng_coauthor,
            domestic: c.domestic,
            distinct_hits: c.flag.map(|f| f.distinct_hits),
            flagged_any_field: c.flag.map(|f| f.flagged_any_field),
            flagged_strict: c.flag.map(|f| f.flagged_strict),
            similarity: c.similarity,
        })?;
    }
    w.into_inner().map_err(|e| Error::io("<panel>", e.into_error()))
}

pub fn read_panel_csv(path: &Path) -> Result<Vec<PanelCell>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut cells = Vec::new();
    for row in rdr.deserialize::<PanelRow>() {
        let r = row?;
        let flag = match (r.distinct_hits, r.flagged_any_field, r.flagged_strict) {
            (Some(d), Some(a), Some(s)) => Some(CellFlag {
                distinct_hits: d,
                flagged_any_field: a,
                flagged_strict: s,
            }),
            _ => None,
        };
        cells.push(PanelCell {
            pub_id: r.pub_id,
            country_code: r.country_code,
            detailed_field: r.detailed_field,
            aggregated_group: r.aggregated_group,
            year: r.year,
            journal_id: r.journal_id,
            journal_if: r.journal_if,
            n_authors: r.n_authors,
            has_eng_coauthor: r.has_eng_coauthor,
            domestic: r.domestic,
            flag,
            similarity: r.similarity,
        });
    }
    Ok(cells)
}
