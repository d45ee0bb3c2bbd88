//! Generative model for the event-study panel.
//!
//! Every row is one publication × country × field cell with
//! `y = intercept + δ0·G + Σ β_τ·G·1{t=τ} + γ1·authors + γ2·eng
//!      + α_c + α_f + α_j + α_t + α_jt + ε`, `ε ~ N(0, noise_sd²)`.

use std::collections::BTreeMap;

use rand::RngExt;
use serde::{Deserialize, Serialize};

use super::rng::{std_normal, substream, PRNG_ALGORITHM};
use crate::corpus::{CellFlag, FieldGroup, FieldMap, PanelCell};
use crate::hdfe::DEFAULT_REFERENCE_YEAR;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub delta0: f64,
    /// Interaction effect per non-reference year.
    pub beta: BTreeMap<i32, f64>,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl Coefficients {
    pub fn zero(years: &[i32], reference_year: i32) -> Self {
        Coefficients {
            delta0: 0.0,
            beta: years.iter().filter(|&&y| y != reference_year).map(|&y| (y, 0.0)).collect(),
            gamma1: 0.0,
            gamma2: 0.0,
        }
    }

    /// Divergence of 0.15 and 0.4 percentage points in 2023 and 2024.
    pub fn typical() -> Self {
        Coefficients {
            delta0: 0.0,
            beta: BTreeMap::from([(2021, 0.0), (2023, 0.0015), (2024, 0.0040)]),
            gamma1: 0.0004,
            gamma2: 0.0020,
        }
    }
}

/// Standard deviations of the fixed-effect draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeScales {
    pub country: f64,
    pub field: f64,
    pub journal: f64,
    pub year: f64,
    pub journal_year: f64,
}

impl Default for FeScales {
    fn default() -> Self {
        FeScales {
            country: 0.010,
            field: 0.015,
            journal: 0.010,
            year: 0.005,
            journal_year: 0.004,
        }
    }
}

/// Adoption probability `base[year] + cli_slope · (0.5 - cli)`, clamped to [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adoption {
    pub base: BTreeMap<i32, f64>,
    pub cli_slope: f64,
}

impl Default for Adoption {
    fn default() -> Self {
        Adoption {
            base: BTreeMap::from([(2021, 0.08), (2022, 0.10), (2023, 0.20), (2024, 0.35)]),
            cli_slope: 0.10,
        }
    }
}

impl Adoption {
    pub fn probability(&self, year: i32, cli: f64) -> f64 {
        let b = self.base.get(&year).copied().unwrap_or(0.0);
        (b + self.cli_slope * (0.5 - cli)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpParams {
    pub n_rows: usize,
    pub n_journals: usize,
    pub n_countries: usize,
    pub n_fields: usize,
    pub years: Vec<i32>,
    pub reference_year: i32,
    pub intercept: f64,
    pub coefficients: Coefficients,
    pub fe_scales: FeScales,
    pub noise_sd: f64,
    pub adoption: Adoption,
    pub eng_coauthor_prob: f64,
    pub domestic_prob: f64,
    pub max_authors: u32,
    pub seed: u64,
}

impl Default for DgpParams {
    fn default() -> Self {
        DgpParams {
            n_rows: 10_000,
            n_journals: 200,
            n_countries: 20,
            n_fields: 10,
            years: vec![2021, 2022, 2023, 2024],
            reference_year: DEFAULT_REFERENCE_YEAR,
            intercept: 0.82,
            coefficients: Coefficients::typical(),
            fe_scales: FeScales::default(),
            noise_sd: 0.03,
            adoption: Adoption::default(),
            eng_coauthor_prob: 0.25,
            domestic_prob: 0.5,
            max_authors: 12,
            seed: 0,
        }
    }
}

impl DgpParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_rows == 0 || self.n_journals == 0 || self.n_countries == 0 || self.n_fields == 0 {
            return bad("row, journal, country and field counts must be positive".into());
        }
        if self.years.len() < 2 || !self.years.contains(&self.reference_year) {
            return bad("at least two years including the reference year are required".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise sd {} must be finite and non-negative", self.noise_sd));
        }
        let probs = [self.eng_coauthor_prob, self.domestic_prob];
        if probs.iter().chain(self.adoption.base.values()).any(|p| !(0.0..=1.0).contains(p)) {
            return bad("probabilities must lie in [0, 1]".into());
        }
        if self.max_authors == 0 {
            return bad("max_authors must be positive".into());
        }
        Ok(())
    }
}

/// Non-English country codes used by the generators, in a fixed order.
pub const SYNTH_COUNTRIES: [&str; 24] = [
    "FR", "DE", "CN", "JP", "BR", "IN", "CH", "KR", "IT", "ES", "NL", "SE", "PL", "TR", "MX", "RU", "IR", "EG", "NG",
    "ID", "AR", "PT", "GR", "TH",
];

pub fn country_code(i: usize) -> String {
    SYNTH_COUNTRIES.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("Z{i:03}"))
}

pub fn journal_code(i: usize) -> String {
    format!("J{i:05}")
}

/// Deterministic CLI score of a synthetic country.
pub fn synth_cli(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub prng: String,
    pub seed: u64,
    pub intercept: f64,
    pub coefficients: Coefficients,
    /// Dimension name → group key → effect.
    pub fixed_effects: BTreeMap<String, BTreeMap<String, f64>>,
    pub treated: Vec<bool>,
    pub similarity: Vec<f64>,
}

fn draws(rng: &mut super::rng::SynthRng, keys: &[String], sd: f64) -> BTreeMap<String, f64> {
    keys.iter().map(|k| (k.clone(), sd * std_normal(rng))).collect()
}

/// Generates exactly `n_rows` cells; a pure function of the parameters.
pub fn gen_panel(params: &DgpParams) -> Result<(Vec<PanelCell>, GroundTruth)> {
    params.validate()?;
    let field_map = FieldMap::default();
    let included: Vec<(String, FieldGroup)> = field_map
        .iter()
        .filter(|(_, g)| *g != FieldGroup::Excluded)
        .map(|(c, g)| (c.to_string(), g))
        .collect();
    let fields: Vec<(String, FieldGroup)> = (0..params.n_fields)
        .map(|i| match included.get(i) {
            Some(f) => f.clone(),
            None => (format!("Field{i:03}"), included[i % included.len()].1),
        })
        .collect();
    let countries: Vec<String> = (0..params.n_countries).map(country_code).collect();
    let journals: Vec<String> = (0..params.n_journals).map(journal_code).collect();
    let year_keys: Vec<String> = params.years.iter().map(|y| y.to_string()).collect();
    let jy_keys: Vec<String> = journals
        .iter()
        .flat_map(|j| params.years.iter().map(move |y| format!("{j}|{y}")))
        .collect();
    let field_keys: Vec<String> = fields.iter().map(|f| f.0.clone()).collect();

    let s = &params.fe_scales;
    let mut fe_rng = substream(params.seed, 1);
    let fixed_effects = BTreeMap::from([
        ("country".to_string(), draws(&mut fe_rng, &countries, s.country)),
        ("field".to_string(), draws(&mut fe_rng, &field_keys, s.field)),
        ("journal".to_string(), draws(&mut fe_rng, &journals, s.journal)),
        ("year".to_string(), draws(&mut fe_rng, &year_keys, s.year)),
        ("journal_x_year".to_string(), draws(&mut fe_rng, &jy_keys, s.journal_year)),
    ]);
    let journal_if: Vec<f64> = (0..params.n_journals)
        .map(|_| ((0.8 + 0.6 * std_normal(&mut fe_rng)).exp() * 1000.0).round() / 1000.0)
        .collect();

    let c = &params.coefficients;
    let mut rng = substream(params.seed, 2);
    let mut cells = Vec::with_capacity(params.n_rows);
    let mut treated = Vec::with_capacity(params.n_rows);
    let mut similarity = Vec::with_capacity(params.n_rows);
    let width = params.n_rows.to_string().len();
    for i in 0..params.n_rows {
        let j = rng.random_range(0..params.n_journals);
        let f = j % fields.len();
        let ci = rng.random_range(0..params.n_countries);
        let year = params.years[rng.random_range(0..params.years.len())];
        let cli = synth_cli(ci, params.n_countries);
        let g = rng.random::<f64>() < params.adoption.probability(year, cli);
        let eng = rng.random::<f64>() < params.eng_coauthor_prob;
        let domestic = !eng && rng.random::<f64>() < params.domestic_prob;
        let n_authors = if domestic && rng.random::<f64>() < 0.2 { 1 } else { rng.random_range(2..=params.max_authors.max(2)) };
        let distinct_hits = if g { rng.random_range(1..=3u32) } else { 0 };
        let eps = params.noise_sd * std_normal(&mut rng);

        let gi = if g { 1.0 } else { 0.0 };
        let beta_t = c.beta.get(&year).copied().unwrap_or(0.0);
        let fe = |dim: &str, key: &str| fixed_effects[dim][key];
        let jy = format!("{}|{year}", journals[j]);
        let y = params.intercept
            + c.delta0 * gi
            + beta_t * gi
            + c.gamma1 * n_authors as f64
            + c.gamma2 * if eng { 1.0 } else { 0.0 }
            + fe("country", &countries[ci])
            + fe("field", &fields[f].0)
            + fe("journal", &journals[j])
            + fe("year", &year.to_string())
            + fe("journal_x_year", &jy)
            + eps;
        cells.push(PanelCell {
            pub_id: format!("S{i:0width$}"),
            country_code: countries[ci].clone(),
            detailed_field: fields[f].0.clone(),
            aggregated_group: fields[f].1,
            year,
            journal_id: journals[j].clone(),
            journal_if: journal_if[j],
            n_authors,
            has_eng_coauthor: eng,
            domestic,
            flag: Some(CellFlag {
                distinct_hits,
                flagged_any_field: g,
                flagged_strict: distinct_hits >= 2,
            }),
            similarity: Some(y),
        });
        treated.push(g);
        similarity.push(y);
    }
    Ok((
        cells,
        GroundTruth {
            prng: PRNG_ALGORITHM.into(),
            seed: params.seed,
            intercept: params.intercept,
            coefficients: c.clone(),
            fixed_effects,
            treated,
            similarity,
        },
    ))
}
