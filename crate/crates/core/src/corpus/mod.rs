//! Corpus model: records, country metadata, field mapping and the
//! publication × country × field panel.

pub mod country;
pub mod fields;
pub mod panel;
pub mod record;
pub mod stats;

pub use country::{CliComponents, CliWeights, CountryMeta, CountryTable, ENGLISH_CORE};
pub use fields::{FieldGroup, FieldMap};
pub use panel::{build_panel, expand_panel, CellFlag, FeKeys, PanelCell};
pub use record::{parse_record, read_corpus, Corpus, PublicationRecord, ReadOptions, YearRange};
pub use stats::{descriptive_stats, DescriptiveTable, StatRow};
