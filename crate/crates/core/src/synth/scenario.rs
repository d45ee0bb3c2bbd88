//! Complete synthetic input sets in the formats the pipeline reads.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::RngExt;
use serde::{Deserialize, Serialize};

use super::rng::{std_normal, substream, unit_vector, PRNG_ALGORITHM};
use super::text::{gen_text_corpus, TextLabel, TextParams, TextRole};
use super::vectors::vector_with_cosine;
use crate::corpus::record::to_line;
use crate::corpus::{CliComponents, CountryMeta, CountryTable, FieldMap, PublicationRecord, ENGLISH_CORE};
use crate::embedding::{write_store, StoreManifest, VectorStore};
use crate::lexicon::Vocabulary;
use crate::util::write_atomic;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub text: TextParams,
    pub dim: usize,
    /// Mean cosine of a record's vector with its field direction.
    pub base_similarity: f64,
    pub similarity_sd: f64,
    /// Shift of the target cosine for assisted non-U.S. records, per year.
    pub assisted_shift: BTreeMap<i32, f64>,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            text: TextParams::default(),
            dim: 64,
            base_similarity: 0.82,
            similarity_sd: 0.03,
            assisted_shift: BTreeMap::from([(2023, 0.01), (2024, 0.02)]),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioTruth {
    pub prng: String,
    pub params: ScenarioParams,
    pub labels: Vec<TextLabel>,
    /// Target cosine of each record's vector with its field direction.
    pub targets: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub records: Vec<PublicationRecord>,
    pub countries: CountryTable,
    pub field_map: FieldMap,
    pub vocabulary: Vocabulary,
    pub store: VectorStore,
    pub truth: ScenarioTruth,
}

fn continent(code: &str) -> &'static str {
    match code {
        "CN" | "JP" | "IN" | "KR" | "IR" | "ID" | "TH" | "TR" => "Asia",
        "BR" | "MX" | "AR" | "US" | "CA" => "Americas",
        "EG" | "NG" => "Africa",
        "AU" | "NZ" => "Oceania",
        _ => "Europe",
    }
}

/// Country table covering every scenario country plus the English core,
/// with CLI components drawn per country.
pub fn scenario_countries(countries: &[String], seed: u64) -> Result<CountryTable> {
    let mut rng = substream(seed, 20);
    let mut rows: Vec<CountryMeta> = ENGLISH_CORE
        .iter()
        .map(|c| CountryMeta {
            country_code: c.to_string(),
            is_english_core: true,
            cli_score: Some(1.0),
            cli_components: Some(CliComponents { cnl: 1.0, col: 1.0, lp: 1.0 }),
            continent: Some(continent(c).into()),
        })
        .collect();
    for c in countries {
        let mut draw = || (rng.random::<f64>() * 1000.0).round() / 1000.0;
        let comp = CliComponents { cnl: 0.0, col: draw(), lp: draw() };
        let score = (comp.cnl + comp.col + comp.lp) / 3.0;
        rows.push(CountryMeta {
            country_code: c.clone(),
            is_english_core: false,
            cli_score: Some(score),
            cli_components: Some(comp),
            continent: Some(continent(c).into()),
        });
    }
    CountryTable::from_rows(rows)
}

pub fn gen_scenario(p: &ScenarioParams) -> Result<Scenario> {
    let vocabulary = Vocabulary::default();
    let (records, labels) = gen_text_corpus(&p.text, &vocabulary)?;
    let countries = scenario_countries(&p.text.countries, p.seed)?;

    let mut rng = substream(p.seed, 30);
    let directions: BTreeMap<&str, Vec<f64>> =
        p.text.fields.iter().map(|f| (f.as_str(), unit_vector(&mut rng, p.dim))).collect();
    let mut store = VectorStore::new(p.dim);
    let mut targets = BTreeMap::new();
    for (r, l) in records.iter().zip(&labels) {
        let shift = if l.role == TextRole::Assisted && !r.is_pure("US") {
            p.assisted_shift.get(&r.year).copied().unwrap_or(0.0)
        } else {
            0.0
        };
        let t = (p.base_similarity + shift + p.similarity_sd * std_normal(&mut rng)).clamp(-0.99, 0.99);
        let v = vector_with_cosine(&mut rng, &directions[r.scopus_fields[0].as_str()], t)?;
        store.insert(r.id.clone(), v.into_iter().map(|x| x as f32).collect())?;
        targets.insert(r.id.clone(), t);
    }
    store.manifest = Some(StoreManifest {
        extractor_version: format!("synth-{}", env!("CARGO_PKG_VERSION")),
        model_identifier: format!("synthetic-{PRNG_ALGORITHM}-seed{}", p.seed),
        truncation_length: 512,
        pooling: "none".into(),
        created: "1970-01-01T00:00:00Z".into(),
        skipped_ids: vec![],
    });
    Ok(Scenario {
        records,
        countries,
        field_map: FieldMap::default(),
        vocabulary,
        store,
        truth: ScenarioTruth {
            prng: PRNG_ALGORITHM.into(),
            params: p.clone(),
            labels,
            targets,
        },
    })
}

/// File names written by [`write_scenario`].
pub struct ScenarioPaths {
    pub corpus: PathBuf,
    pub countries: PathBuf,
    pub field_map: PathBuf,
    pub vocabulary: PathBuf,
    pub vectors: PathBuf,
    pub truth: PathBuf,
}

impl ScenarioPaths {
    pub fn in_dir(dir: &Path) -> Self {
        ScenarioPaths {
            corpus: dir.join("corpus.jsonl"),
            countries: dir.join("countries.csv"),
            field_map: dir.join("field_map.csv"),
            vocabulary: dir.join("vocabulary.txt"),
            vectors: dir.join("vectors.emb"),
            truth: dir.join("truth.json"),
        }
    }
}

pub fn write_scenario(s: &Scenario, dir: &Path) -> Result<ScenarioPaths> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let paths = ScenarioPaths::in_dir(dir);
    let mut corpus = String::new();
    for r in &s.records {
        corpus.push_str(&to_line(r));
        corpus.push('\n');
    }
    write_atomic(&paths.corpus, corpus.as_bytes())?;
    write_atomic(&paths.countries, s.countries.to_csv().as_bytes())?;
    write_atomic(&paths.field_map, s.field_map.to_csv().as_bytes())?;
    write_atomic(&paths.vocabulary, s.vocabulary.to_text().as_bytes())?;
    write_store(&s.store, &paths.vectors)?;
    write_atomic(&paths.truth, (serde_json::to_string_pretty(&s.truth)? + "\n").as_bytes())?;
    Ok(paths)
}
