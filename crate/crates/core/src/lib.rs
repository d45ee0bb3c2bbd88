//! Batch analytics for measuring whether GenAI-assisted writing from
//! non-English-speaking countries converges toward a U.S. benchmark style.
//!
//! The crate is organized as a pipeline:
//!
//! - [`corpus`] parses publication records, country metadata and the field
//!   map, and expands each publication into publication × country × field
//!   panel cells.
//! - [`lexicon`] measures field-year document frequencies of marker stems,
//!   keeps the stems whose use surged, and flags publications.
//! - [`embedding`] reads and writes the `EMB1` vector interchange format.
//! - [`similarity`] builds benchmark centroids from pure-U.S. publications
//!   and scores every panel publication against its field-year benchmark.
//! - [`hdfe`] estimates the event-study regression with five absorbed fixed
//!   effects and journal-clustered standard errors.
//! - [`driver`] wires the stages together, splits subsamples and writes
//!   reports.
//! - [`synth`] generates synthetic corpora, vectors and panels with known
//!   ground truth, plus brute-force oracles used by the test suites.

pub mod corpus;
pub mod driver;
pub mod embedding;
pub mod error;
pub mod hdfe;
pub mod lexicon;
pub mod similarity;
pub mod synth;
pub mod util;

pub use error::{Error, ErrorClass, Result};
