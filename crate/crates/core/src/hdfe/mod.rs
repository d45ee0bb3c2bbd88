//! High-dimensional fixed-effects estimation of the event-study regression.

pub mod demean;
pub mod design;
pub mod fit;
pub mod ols;
pub mod vcov;

pub use demean::{demean, Demeaned, FixedEffectSpec};
pub use design::{build_design, event_term, BuiltDesign, DesignConfig, DesignMatrix, Factor, FeDim, DEFAULT_REFERENCE_YEAR};
pub use fit::{fit_design, fit_event_study, CoefRow, EventStudyConfig, FitManifest, FitResult, Inference};
pub use ols::{ols, DropReason, DroppedColumn, OlsFit};
pub use vcov::{cluster_vcov, ClusterVcov, DofConvention};
