//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("country {0:?} is not present in the country metadata")]
    MissingCountry(String),

    #[error("invalid country metadata at row {row}: {reason}")]
    InvalidCountryMeta { row: usize, reason: String },

    #[error("unknown detailed field code {0:?}")]
    UnknownFieldCode(String),

    #[error("invalid field map: {0}")]
    InvalidFieldMap(String),

    #[error("invalid vocabulary entry at line {line}: {reason}")]
    InvalidVocabulary { line: usize, reason: String },

    #[error("field {field:?} has no publications in base year {year}")]
    MissingBaseYear { field: String, year: i32 },

    #[error("field {field:?} has no publications in end year {year}")]
    MissingEndYear { field: String, year: i32 },

    #[error("panel is empty")]
    EmptyPanel,

    #[error("bad magic bytes in vector store (expected \"EMB1\")")]
    BadMagic,

    #[error("vector {id:?} has dimension {found}, store dimension is {expected}")]
    DimMismatch {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("vector store truncated at byte offset {offset}")]
    TruncatedFile { offset: u64 },

    #[error("invalid vector store: {0}")]
    InvalidStore(String),

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("vector {0:?} contains non-finite values")]
    NonFiniteVector(String),

    #[error("no vector stored for publication {0:?}")]
    MissingVector(String),

    #[error("benchmark for field {field:?} year {year} ({variant}) has {n_members} members, minimum is {min}")]
    BenchmarkTooSmall {
        field: String,
        year: i32,
        variant: String,
        n_members: usize,
        min: usize,
    },

    #[error("no similarity score for cell ({pub_id}, {field})")]
    MissingScore { pub_id: String, field: String },

    #[error("no GenAI flag for publication {0:?}")]
    MissingFlag(String),

    #[error("panel covers a single year; an event study needs at least two")]
    SingleYearPanel,

    #[error("demeaning did not converge after {iterations} iterations (max change {max_change:e})")]
    NoConvergence { iterations: usize, max_change: f64 },

    #[error("rank deficient design: {0}")]
    RankDeficient(String),

    #[error("cluster-robust covariance needs at least 2 clusters, found {0}")]
    TooFewClusters(usize),

    #[error("degrees of freedom exhausted: {n_obs} observations, {k} parameters")]
    NoResidualDof { n_obs: usize, k: usize },

    #[error("country {0:?} has no CLI score")]
    MissingCli(String),

    #[error("no country carries a CLI score")]
    AllMissing,

    #[error("cannot split: {0}")]
    DegenerateSplit(String),

    #[error("synthetic similarity target {0} outside the open interval (-1, 1)")]
    TargetOutOfRange(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidConfig(_) => ErrorClass::Usage,
            Error::NoConvergence { .. }
            | Error::RankDeficient(_)
            | Error::TooFewClusters(_)
            | Error::NoResidualDof { .. }
            | Error::ZeroVector => ErrorClass::Numeric,
            Error::Stage { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }
}
