//! End-to-end run: parse, detect, panel, score, attach, subsample, fit, report.
//!
//! The detection and scoring stages are cached on disk under a key derived
//! from the content of their inputs and the configuration fields they read.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::report::{file_entries, plot_rows, plot_rows_csv, plot_rows_json, OutputDir, PlotRow, RunManifest, SubsampleStatus};
use super::subsample::split_subsample;
use crate::corpus::panel::write_panel_csv;
use crate::corpus::record::Corpus;
use crate::corpus::{build_panel, descriptive_stats, read_corpus, CountryTable, FieldMap, PanelCell, ReadOptions};
use crate::embedding::{read_store, VectorStore};
use crate::hdfe::{fit_event_study, DesignConfig, EventStudyConfig, FeDim, FitResult, FixedEffectSpec};
use crate::lexicon::{
    assign_fields, compute_frequencies, filter_markers, flag_corpus, flags_to_csv, FilterConfig, GenAIFlag, TreatmentRule,
    Vocabulary,
};
use crate::similarity::{score_corpus, BenchmarkIndex, ScoreRun, ScoreTarget};
use crate::synth::PRNG_ALGORITHM;
use crate::util::{file_digest, sha256_hex, write_atomic};
use crate::{Error, Result};

pub const TOOL_NAME: &str = "convergence";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parsed inputs and their content digests.
pub struct Inputs {
    pub corpus: Corpus,
    pub countries: CountryTable,
    pub field_map: FieldMap,
    pub vocabulary: Vocabulary,
    pub digests: BTreeMap<String, String>,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let opts = ReadOptions { years: cfg.years(), strict: cfg.strict, partitions: cfg.partitions };
    let corpus = read_corpus(&cfg.corpus, &opts)?;
    let countries = CountryTable::load(&cfg.countries, cfg.weights())?;
    let field_map = match &cfg.field_map {
        Some(p) => FieldMap::load(p)?,
        None => FieldMap::default(),
    };
    let vocabulary = match &cfg.vocabulary {
        Some(p) => Vocabulary::load(p)?,
        None => Vocabulary::default(),
    };
    let mut digests = BTreeMap::new();
    digests.insert("corpus".to_string(), file_digest(&cfg.corpus)?);
    digests.insert("countries".to_string(), file_digest(&cfg.countries)?);
    digests.insert("field_map".to_string(), sha256_hex(field_map.to_csv().as_bytes()));
    digests.insert("vocabulary".to_string(), sha256_hex(vocabulary.to_text().as_bytes()));
    if cfg.vectors.is_file() {
        digests.insert("vectors".to_string(), file_digest(&cfg.vectors)?);
    }
    Ok(Inputs { corpus, countries, field_map, vocabulary, digests })
}

/// Reads a cached stage result or computes and stores it.
fn cached<T, F>(cfg: &RunConfig, stage: &str, key_material: &serde_json::Value, compute: F) -> Result<T>
where
    T: Serialize + DeserializeOwned,
    F: FnOnce() -> Result<T>,
{
    if !cfg.use_cache {
        return compute();
    }
    let key = sha256_hex(format!("{TOOL_NAME}-{VERSION}|{stage}|{key_material}").as_bytes());
    let path = cfg.resolved_cache_dir().join(format!("{stage}-{}.json", &key[..32]));
    if let Ok(text) = std::fs::read_to_string(&path) {
        match serde_json::from_str(&text) {
            Ok(v) => {
                tracing::info!("stage {stage}: cache hit {}", path.display());
                return Ok(v);
            }
            Err(e) => tracing::warn!("stage {stage}: ignoring unreadable cache {}: {e}", path.display()),
        }
    }
    let value = compute()?;
    write_atomic(&path, serde_json::to_string(&value)?.as_bytes())?;
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub markers_csv: String,
    pub flags: Vec<GenAIFlag>,
}

pub fn filter_config(cfg: &RunConfig) -> FilterConfig {
    FilterConfig {
        base_year: cfg.base_year,
        end_year: cfg.end_year,
        threshold_fold: cfg.threshold_fold,
        min_support: cfg.min_support,
        mode: cfg.frequency_mode,
    }
}

pub fn detect(cfg: &RunConfig, inputs: &Inputs) -> Result<Detection> {
    let key = serde_json::json!({
        "corpus": inputs.digests["corpus"],
        "field_map": inputs.digests["field_map"],
        "vocabulary": inputs.digests["vocabulary"],
        "filter": filter_config(cfg),
        "years": [cfg.first_year, cfg.last_year],
    });
    cached(cfg, "detect", &key, || {
        let records = &inputs.corpus.records;
        let assignments = assign_fields(records, &inputs.field_map)?;
        let table = compute_frequencies(records, &assignments, &inputs.vocabulary, cfg.partitions);
        let markers = filter_markers(&table, &filter_config(cfg))?;
        let flags = flag_corpus(records, &assignments, &markers, cfg.partitions);
        Ok(Detection { markers_csv: markers.to_csv(), flags })
    })
}

/// Panel cells with flags attached; similarity is still empty.
pub fn panel(cfg: &RunConfig, inputs: &Inputs, flags: &[GenAIFlag]) -> Result<Vec<PanelCell>> {
    let mut cells = build_panel(&inputs.corpus.records, &inputs.countries, &inputs.field_map, cfg.partitions)?;
    let by_id: BTreeMap<&str, &GenAIFlag> = flags.iter().map(|f| (f.pub_id.as_str(), f)).collect();
    for c in &mut cells {
        let f = by_id.get(c.pub_id.as_str()).ok_or_else(|| Error::MissingFlag(c.pub_id.clone()))?;
        c.flag = Some(f.cell_flag());
    }
    Ok(cells)
}

pub fn score_targets(cells: &[PanelCell]) -> Vec<ScoreTarget> {
    let set: BTreeSet<ScoreTarget> = cells
        .iter()
        .map(|c| ScoreTarget { pub_id: c.pub_id.clone(), field: c.detailed_field.clone(), year: c.year })
        .collect();
    set.into_iter().collect()
}

pub fn score(
    cfg: &RunConfig,
    inputs: &Inputs,
    flags: &[GenAIFlag],
    targets: &[ScoreTarget],
    store: impl FnOnce() -> Result<VectorStore>,
) -> Result<ScoreRun> {
    let key = serde_json::json!({
        "corpus": inputs.digests["corpus"],
        "field_map": inputs.digests["field_map"],
        "vectors": inputs.digests.get("vectors"),
        "flags": sha256_hex(flags_to_csv(flags).as_bytes()),
        "targets": sha256_hex(serde_json::to_string(targets)?.as_bytes()),
        "variant": cfg.variant,
        "min_benchmark": cfg.min_benchmark,
        "years": [cfg.first_year, cfg.last_year],
    });
    cached(cfg, "score", &key, || {
        let store = store()?;
        let assignments = assign_fields(&inputs.corpus.records, &inputs.field_map)?;
        let index = BenchmarkIndex::build(&inputs.corpus.records, &assignments, Some(flags), cfg.variant, Some(&store))?;
        if !index.missing_vectors.is_empty() {
            tracing::warn!("{} benchmark publications have no stored vector", index.missing_vectors.len());
        }
        score_corpus(targets, &store, &index, cfg.min_benchmark, cfg.partitions)
    })
}

/// Attaches scores; cells without a score are returned separately.
pub fn attach_scores(cells: Vec<PanelCell>, scores: &ScoreRun) -> (Vec<PanelCell>, usize) {
    let lookup = scores.lookup();
    let mut kept = Vec::with_capacity(cells.len());
    let mut dropped = 0;
    for mut c in cells {
        match lookup.get(&(c.pub_id.as_str(), c.detailed_field.as_str())) {
            Some(&v) => {
                c.similarity = Some(v);
                kept.push(c);
            }
            None => dropped += 1,
        }
    }
    (kept, dropped)
}

pub fn event_study_config(cfg: &RunConfig) -> Result<EventStudyConfig> {
    Ok(EventStudyConfig {
        design: DesignConfig {
            reference_year: cfg.reference_year,
            treatment: TreatmentRule::from_min_distinct(cfg.min_distinct)?,
            fe_dims: FeDim::ALL.to_vec(),
        },
        fe: FixedEffectSpec { tol: cfg.tol, max_iter: cfg.max_iter, drop_singletons: cfg.drop_singletons },
        dof: cfg.dof,
        inference: cfg.inference,
        confidence: 0.95,
    })
}

/// Fits, plot rows and statuses for every configured subsample.
pub struct Analysis {
    pub fits: Vec<(String, FitResult)>,
    pub plot: Vec<PlotRow>,
    pub statuses: Vec<SubsampleStatus>,
    pub warnings: Vec<String>,
}

/// Fits every subsample of a complete panel and writes the per-subsample
/// tables plus the plot data into `out`.
pub fn analyze(cfg: &RunConfig, cells: &[PanelCell], countries: &CountryTable, out: &mut OutputDir) -> Result<Analysis> {
    let es = event_study_config(cfg)?;
    let mut analysis = Analysis { fits: vec![], plot: vec![], statuses: vec![], warnings: vec![] };
    for rule in &cfg.subsamples {
        let name = rule.name();
        let sub = split_subsample(cells, *rule, countries, cfg.cli_median).map_err(|e| e.in_stage("subsample"))?;
        let fit = match fit_event_study(&sub, &es) {
            Err(e @ (Error::EmptyPanel | Error::SingleYearPanel)) => {
                let (status, what) = match e {
                    Error::EmptyPanel => ("empty", "is empty"),
                    _ => ("single_year", "covers a single year"),
                };
                let msg = format!("subsample {name} {what}; no table written");
                tracing::warn!("{msg}");
                analysis.warnings.push(msg);
                analysis.statuses.push(SubsampleStatus { name, status: status.into(), n_obs: sub.len() });
                continue;
            }
            Err(e) => {
                tracing::error!("subsample {name}: {e}");
                return Err(e.in_stage("fit"));
            }
            Ok(f) => f,
        };
        let file_stem = name.replace(':', "_");
        out.write(&format!("coefficients/{file_stem}.csv"), fit.coefficients_csv().as_bytes())?;
        out.write(&format!("fits/{file_stem}.json"), fit.manifest_json()?.as_bytes())?;
        let years: Vec<i32> = sub.iter().map(|c| c.year).collect::<BTreeSet<_>>().into_iter().collect();
        analysis.plot.extend(plot_rows(&name, &fit, &years, cfg.reference_year));
        analysis.warnings.extend(fit.manifest.warnings.iter().map(|w| format!("{name}: {w}")));
        analysis.statuses.push(SubsampleStatus { name: name.clone(), status: "ok".into(), n_obs: fit.manifest.n_obs });
        analysis.fits.push((name, fit));
    }
    out.write("event_study.csv", plot_rows_csv(&analysis.plot).as_bytes())?;
    out.write("event_study.json", plot_rows_json(&analysis.plot)?.as_bytes())?;
    Ok(analysis)
}

/// Configuration fields that influence results, with input paths replaced
/// by content digests. Output and cache locations and parallelism are left out.
pub fn config_fingerprint(cfg: &RunConfig, digests: &BTreeMap<String, String>) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(cfg)?;
    let obj = v.as_object_mut().expect("config serializes to an object");
    for k in ["output_dir", "cache_dir", "use_cache", "partitions", "corpus", "countries", "vectors", "field_map", "vocabulary"] {
        obj.remove(k);
    }
    obj.insert("input_digests".into(), serde_json::to_value(digests)?);
    Ok(v)
}

pub struct RunSummary {
    pub manifest: RunManifest,
    pub analysis: Analysis,
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate(true)?;
    let mut timings: BTreeMap<&str, f64> = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut BTreeMap<&str, f64>| {
        timings.insert(name, clock.elapsed().as_secs_f64());
        clock = Instant::now();
    };

    let inputs = load_inputs(cfg).map_err(|e| e.in_stage("parse"))?;
    lap("parse", &mut timings);
    let detection = detect(cfg, &inputs).map_err(|e| e.in_stage("detect"))?;
    lap("detect", &mut timings);
    let cells = panel(cfg, &inputs, &detection.flags).map_err(|e| e.in_stage("panel"))?;
    lap("panel", &mut timings);
    let targets = score_targets(&cells);
    let scores = score(cfg, &inputs, &detection.flags, &targets, || read_store(&cfg.vectors)).map_err(|e| e.in_stage("score"))?;
    lap("score", &mut timings);
    let n_cells = cells.len();
    let (cells, n_unscored) = attach_scores(cells, &scores);
    if n_unscored > 0 {
        tracing::warn!("{n_unscored} panel cells have no similarity score and are left out");
    }

    let mut out = OutputDir::create(&cfg.output_dir)?;
    out.write("markers.csv", detection.markers_csv.as_bytes())?;
    out.write("flags.csv", flags_to_csv(&detection.flags).as_bytes())?;
    out.write("scores.csv", scores.scores_csv().as_bytes())?;
    out.write("benchmarks.csv", scores.benchmarks_csv().as_bytes())?;
    out.write("panel.csv", &write_panel_csv(&cells)?)?;
    let rule = TreatmentRule::from_min_distinct(cfg.min_distinct)?;
    match descriptive_stats(&cells, &inputs.countries, rule) {
        Ok(t) => {
            out.write("descriptive_stats.csv", t.to_csv().as_bytes())?;
        }
        Err(Error::EmptyPanel) => {}
        Err(e) => return Err(e.in_stage("report")),
    }
    let analysis = analyze(cfg, &cells, &inputs.countries, &mut out)?;
    lap("fit", &mut timings);

    let mut warnings = analysis.warnings.clone();
    if n_unscored > 0 {
        warnings.push(format!("{n_unscored} panel cells without similarity score left out"));
    }
    for s in &inputs.corpus.skipped {
        warnings.push(format!("skipped line {}: {}", s.line, s.reason));
    }
    let counts = BTreeMap::from([
        ("records".to_string(), inputs.corpus.records.len() as u64),
        ("skipped_lines".to_string(), inputs.corpus.skipped.len() as u64),
        ("excluded_no_text".to_string(), inputs.corpus.excluded_no_text.len() as u64),
        ("incomplete_affiliation".to_string(), inputs.corpus.incomplete_affiliation.len() as u64),
        ("flagged_any_field".to_string(), detection.flags.iter().filter(|f| f.flagged_any_field).count() as u64),
        ("flagged_strict".to_string(), detection.flags.iter().filter(|f| f.flagged_strict).count() as u64),
        ("panel_cells".to_string(), n_cells as u64),
        ("scored_cells".to_string(), cells.len() as u64),
        ("unscored_cells".to_string(), n_unscored as u64),
    ]);
    let config = config_fingerprint(cfg, &inputs.digests)?;
    let manifest = RunManifest {
        tool: TOOL_NAME.into(),
        version: VERSION.into(),
        prng: PRNG_ALGORITHM.into(),
        config_hash: sha256_hex(serde_json::to_string(&config)?.as_bytes()),
        config,
        inputs: inputs.digests.clone(),
        counts,
        subsamples: analysis.statuses.clone(),
        warnings,
        files: file_entries(out.files()),
    };
    write_atomic(&cfg.output_dir.join("manifest.json"), manifest.to_json()?.as_bytes())?;
    lap("report", &mut timings);
    // Wall-clock times vary run to run, so they stay out of the manifest.
    write_atomic(&cfg.output_dir.join("timings.json"), (serde_json::to_string_pretty(&timings)? + "\n").as_bytes())?;
    Ok(RunSummary { manifest, analysis })
}

/// Re-runs the analysis part on a panel file that already carries flags and scores.
pub fn report_from_panel(cfg: &RunConfig, panel_path: &Path) -> Result<RunManifest> {
    let cells = crate::corpus::panel::read_panel_csv(panel_path).map_err(|e| e.in_stage("parse"))?;
    let countries = CountryTable::load(&cfg.countries, cfg.weights()).map_err(|e| e.in_stage("parse"))?;
    let mut out = OutputDir::create(&cfg.output_dir)?;
    let rule = TreatmentRule::from_min_distinct(cfg.min_distinct)?;
    match descriptive_stats(&cells, &countries, rule) {
        Ok(t) => {
            out.write("descriptive_stats.csv", t.to_csv().as_bytes())?;
        }
        Err(Error::EmptyPanel) => {}
        Err(e) => return Err(e.in_stage("report")),
    }
    let analysis = analyze(cfg, &cells, &countries, &mut out)?;
    let digests = BTreeMap::from([
        ("panel".to_string(), file_digest(panel_path)?),
        ("countries".to_string(), file_digest(&cfg.countries)?),
    ]);
    let config = config_fingerprint(cfg, &digests)?;
    let manifest = RunManifest {
        tool: TOOL_NAME.into(),
        version: VERSION.into(),
        prng: PRNG_ALGORITHM.into(),
        config_hash: sha256_hex(serde_json::to_string(&config)?.as_bytes()),
        config,
        inputs: digests,
        counts: BTreeMap::from([("panel_cells".to_string(), cells.len() as u64)]),
        subsamples: analysis.statuses.clone(),
        warnings: analysis.warnings.clone(),
        files: file_entries(out.files()),
    };
    write_atomic(&cfg.output_dir.join("manifest.json"), manifest.to_json()?.as_bytes())?;
    Ok(manifest)
}
