//! Run configuration, loadable from TOML and overridable from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::subsample::{MedianBasis, SubsampleRule};
use crate::corpus::{CliWeights, YearRange};
use crate::hdfe::{DofConvention, Inference, DEFAULT_REFERENCE_YEAR};
use crate::lexicon::FrequencyMode;
use crate::similarity::{BenchmarkVariant, DEFAULT_MIN_MEMBERS};
use crate::{Error, Result};

/// Overrides the stage cache directory.
pub const CACHE_DIR_ENV: &str = "CONVERGENCE_CACHE_DIR";

pub const ALLOWED_THRESHOLDS: [f64; 3] = [3.0, 4.0, 5.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub countries: PathBuf,
    /// Bundled mapping when absent.
    pub field_map: Option<PathBuf>,
    /// Bundled vocabulary when absent.
    pub vocabulary: Option<PathBuf>,
    pub vectors: PathBuf,
    pub output_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub use_cache: bool,

    pub first_year: i32,
    pub last_year: i32,
    pub base_year: i32,
    pub end_year: i32,
    pub threshold_fold: f64,
    pub min_support: u64,
    pub frequency_mode: FrequencyMode,
    pub min_distinct: u32,

    pub variant: BenchmarkVariant,
    pub min_benchmark: usize,

    pub reference_year: i32,
    pub subsamples: Vec<SubsampleRule>,
    pub cli_median: MedianBasis,
    pub cli_weights: [f64; 3],
    pub tol: f64,
    pub max_iter: usize,
    pub drop_singletons: bool,
    pub dof: DofConvention,
    pub inference: Inference,

    pub strict: bool,
    pub partitions: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: PathBuf::new(),
            countries: PathBuf::new(),
            field_map: None,
            vocabulary: None,
            vectors: PathBuf::new(),
            output_dir: PathBuf::from("out"),
            cache_dir: None,
            use_cache: true,
            first_year: 2021,
            last_year: 2024,
            base_year: 2021,
            end_year: 2024,
            threshold_fold: 4.0,
            min_support: 30,
            frequency_mode: FrequencyMode::Document,
            min_distinct: 1,
            variant: BenchmarkVariant::AllUs,
            min_benchmark: DEFAULT_MIN_MEMBERS,
            reference_year: DEFAULT_REFERENCE_YEAR,
            subsamples: vec![SubsampleRule::All],
            cli_median: MedianBasis::Countries,
            cli_weights: [1.0, 1.0, 1.0],
            tol: 1e-8,
            max_iter: 10_000,
            drop_singletons: false,
            dof: DofConvention::AbsorbedLevels,
            inference: Inference::Normal,
            strict: false,
            partitions: 1,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Loads a TOML file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.countries);
        fix(&mut self.vectors);
        fix(&mut self.output_dir);
        for p in [&mut self.field_map, &mut self.vocabulary, &mut self.cache_dir].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn years(&self) -> YearRange {
        YearRange { first: self.first_year, last: self.last_year }
    }

    pub fn weights(&self) -> CliWeights {
        CliWeights(self.cli_weights)
    }

    /// Cache directory: environment override, then the configured one, then
    /// `<output_dir>/.cache`.
    pub fn resolved_cache_dir(&self) -> PathBuf {
        if let Some(dir) = std::env::var_os(CACHE_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(dir);
        }
        self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join(".cache"))
    }

    /// Checks enumerations and ranges; with `check_paths`, also that every
    /// input file exists.
    pub fn validate(&self, check_paths: bool) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !ALLOWED_THRESHOLDS.contains(&self.threshold_fold) {
            return bad(format!("threshold_fold must be one of 3, 4, 5; got {}", self.threshold_fold));
        }
        if !(1..=2).contains(&self.min_distinct) {
            return bad(format!("min_distinct must be 1 or 2; got {}", self.min_distinct));
        }
        if self.first_year > self.last_year {
            return bad("first_year is after last_year".into());
        }
        let years = self.years();
        for (name, y) in [("base_year", self.base_year), ("end_year", self.end_year), ("reference_year", self.reference_year)] {
            if !years.contains(y) {
                return bad(format!("{name} {y} outside {}..={}", self.first_year, self.last_year));
            }
        }
        if self.base_year >= self.end_year {
            return bad("base_year must precede end_year".into());
        }
        if self.tol.is_nan() || self.tol <= 0.0 || self.max_iter == 0 {
            return bad("tol must be positive and max_iter nonzero".into());
        }
        if self.min_benchmark == 0 {
            return bad("min_benchmark must be at least 1".into());
        }
        if self.subsamples.is_empty() {
            return bad("at least one subsample rule is required".into());
        }
        if self.cli_weights.iter().any(|w| w.is_nan() || *w < 0.0) || self.cli_weights.iter().sum::<f64>() <= 0.0 {
            return bad("cli_weights must be non-negative with a positive sum".into());
        }
        if check_paths {
            let mut required = vec![("corpus", &self.corpus), ("countries", &self.countries), ("vectors", &self.vectors)];
            if let Some(p) = &self.field_map {
                required.push(("field_map", p));
            }
            if let Some(p) = &self.vocabulary {
                required.push(("vocabulary", p));
            }
            for (name, p) in required {
                if p.as_os_str().is_empty() {
                    return bad(format!("{name} path is not set"));
                }
                if !p.is_file() {
                    return bad(format!("{name} path {} does not exist", p.display()));
                }
            }
        }
        Ok(())
    }
}
