//! Synthetic corpora, vector stores and panels with known ground truth,
//! and brute-force oracles for checking the numerical modules.
//!
//! Everything here is single-threaded and a pure function of its
//! parameters and seed.

pub mod dgp;
pub mod oracle;
pub mod rng;
pub mod scenario;
pub mod text;
pub mod vectors;

pub use dgp::{gen_panel, Adoption, Coefficients, DgpParams, FeScales, GroundTruth};
pub use oracle::{householder_ols, oracle_dummy_ols, oracle_pairwise_similarity, oracle_plain_ols, DenseFit};
pub use rng::{seeded, std_normal, substream, unit_vector, SynthRng, PRNG_ALGORITHM};
pub use scenario::{gen_scenario, scenario_countries, write_scenario, Scenario, ScenarioParams, ScenarioPaths, ScenarioTruth};
pub use text::{gen_text_corpus, AuthorMix, TextLabel, TextParams, TextRole};
pub use vectors::{gen_vectors, vector_with_cosine};
