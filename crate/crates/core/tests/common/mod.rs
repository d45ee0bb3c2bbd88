//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use convergence::corpus::{read_corpus, FieldMap, PublicationRecord, ReadOptions};
use convergence::driver::RunConfig;
use convergence::lexicon::{assign_fields, compute_frequencies, filter_markers, flag_corpus, FilterConfig, GenAIFlag, MarkerSet, Vocabulary};
use convergence::synth::{gen_scenario, write_scenario, ScenarioParams, TextParams};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn detector_fixture() -> Vec<PublicationRecord> {
    let path = fixture_dir().join("detector").join("corpus.jsonl");
    let opts = ReadOptions { strict: true, ..ReadOptions::default() };
    read_corpus(&path, &opts).unwrap().records
}

/// Markers and flags for `records` at one threshold, base 2021 and end 2024.
pub fn detect(records: &[PublicationRecord], threshold: f64, min_support: u64) -> (MarkerSet, Vec<GenAIFlag>) {
    let assignments = assign_fields(records, &FieldMap::default()).unwrap();
    let table = compute_frequencies(records, &assignments, &Vocabulary::default(), 1);
    let cfg = FilterConfig { threshold_fold: threshold, min_support, ..FilterConfig::default() };
    let markers = filter_markers(&table, &cfg).unwrap();
    let flags = flag_corpus(records, &assignments, &markers, 1);
    (markers, flags)
}

pub fn flagged_ids(flags: &[GenAIFlag], strict: bool) -> BTreeSet<String> {
    flags
        .iter()
        .filter(|f| if strict { f.flagged_strict } else { f.flagged_any_field })
        .map(|f| f.pub_id.clone())
        .collect()
}

pub fn small_scenario(seed: u64, per_stratum: usize) -> ScenarioParams {
    ScenarioParams {
        text: TextParams { per_stratum, seed, ..TextParams::default() },
        seed,
        ..ScenarioParams::default()
    }
}

/// Writes a scenario into `dir` and returns a config that reads it and
/// writes into `dir/<out>`.
pub fn scenario_config(dir: &Path, p: &ScenarioParams, out: &str) -> RunConfig {
    let s = gen_scenario(p).unwrap();
    let paths = write_scenario(&s, dir).unwrap();
    RunConfig {
        corpus: paths.corpus,
        countries: paths.countries,
        field_map: Some(paths.field_map),
        vocabulary: Some(paths.vocabulary),
        vectors: paths.vectors,
        output_dir: dir.join(out),
        use_cache: false,
        ..RunConfig::default()
    }
}

/// Per-field kept patterns as display strings.
pub fn kept_by_field(markers: &MarkerSet) -> BTreeMap<String, BTreeSet<String>> {
    markers
        .fields
        .keys()
        .map(|f| (f.clone(), markers.kept_stems(f).into_iter().collect()))
        .collect()
}

/// Prints the verdict line for one criterion and fails the test on FAIL.
pub fn verdict(name: &str, result: Result<String, String>) {
    match result {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(why) => {
            println!("FAIL {name}: {why}");
            panic!("{name} failed: {why}");
        }
    }
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
