//! Lexical GenAI detection: field-year marker frequencies, fold-change
//! filtering and any-field flagging.

pub mod flags;
pub mod frequency;
pub mod markers;
pub mod vocab;

use std::collections::BTreeMap;

pub use flags::{flag_corpus, flag_publication, flags_to_csv, FlagContext, GenAIFlag, TreatmentRule};
pub use frequency::{compute_frequencies, FrequencyMode, TermFrequencyTable};
pub use markers::{filter_markers, FilterConfig, MarkerEval, MarkerSet};
pub use vocab::{match_stems, tokenize, StemPattern, Vocabulary};

use crate::corpus::{FieldMap, PublicationRecord};
use crate::Result;

/// Detailed (non-excluded) fields of every record that has at least one.
pub fn assign_fields(
    records: &[PublicationRecord],
    field_map: &FieldMap,
) -> Result<BTreeMap<String, Vec<String>>> {
    let mut out = BTreeMap::new();
    for r in records {
        let fields: Vec<String> = field_map
            .map_fields(&r.scopus_fields)?
            .into_iter()
            .map(|(code, _)| code)
            .collect();
        if !fields.is_empty() {
            out.insert(r.id.clone(), fields);
        }
    }
    Ok(out)
}
