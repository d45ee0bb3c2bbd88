//! Journal-clustered sandwich covariance with the CR1 small-sample scale.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Below this many clusters the asymptotics are shaky and a warning is emitted.
pub const SMALL_CLUSTER_COUNT: usize = 50;

/// How the parameter count K in the scale factor is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DofConvention {
    /// Retained regressors plus the sum of (levels - 1) over absorbed dimensions.
    #[default]
    AbsorbedLevels,
    /// Retained regressors only.
    RegressorsOnly,
}

impl DofConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            DofConvention::AbsorbedLevels => "absorbed_levels",
            DofConvention::RegressorsOnly => "regressors_only",
        }
    }

    pub fn parameter_count(&self, n_regressors: usize, fe_levels: &[usize]) -> usize {
        match self {
            DofConvention::AbsorbedLevels => {
                n_regressors + fe_levels.iter().map(|l| l.saturating_sub(1)).sum::<usize>()
            }
            DofConvention::RegressorsOnly => n_regressors,
        }
    }
}

impl std::str::FromStr for DofConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "absorbed_levels" => Ok(DofConvention::AbsorbedLevels),
            "regressors_only" => Ok(DofConvention::RegressorsOnly),
            other => Err(Error::InvalidConfig(format!("unknown dof convention {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusterVcov {
    pub vcov: DMatrix<f64>,
    pub n_clusters: usize,
    pub n_params: usize,
    pub scale: f64,
    pub warnings: Vec<String>,
}

/// `columns` are the retained demeaned regressors, `clusters` holds one
/// cluster id per row.
pub fn cluster_vcov(
    columns: &[&[f64]],
    residuals: &[f64],
    clusters: &[u32],
    xtx_inv: &DMatrix<f64>,
    fe_levels: &[usize],
    dof: DofConvention,
) -> Result<ClusterVcov> {
    let n = residuals.len();
    let k = columns.len();
    let n_ids = clusters.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut scores = vec![vec![0.0; k]; n_ids];
    let mut present = vec![false; n_ids];
    for i in 0..n {
        let g = clusters[i] as usize;
        present[g] = true;
        let e = residuals[i];
        for (s, col) in scores[g].iter_mut().zip(columns) {
            *s += col[i] * e;
        }
    }
    let g_count = present.iter().filter(|&&p| p).count();
    if g_count < 2 {
        return Err(Error::TooFewClusters(g_count));
    }
    let n_params = dof.parameter_count(k, fe_levels);
    if n_params >= n {
        return Err(Error::NoResidualDof { n_obs: n, k: n_params });
    }

    let mut meat = DMatrix::<f64>::zeros(k, k);
    for (s, _) in scores.iter().zip(&present).filter(|(_, &p)| p) {
        let v = DVector::from_column_slice(s);
        meat += &v * v.transpose();
    }
    let g = g_count as f64;
    let scale = g / (g - 1.0) * (n as f64 - 1.0) / ((n - n_params) as f64);
    let mut vcov = xtx_inv * meat * xtx_inv * scale;
    // Symmetrize away rounding asymmetry.
    let t = vcov.transpose();
    vcov = (vcov + t) * 0.5;

    let mut warnings = Vec::new();
    if g_count < SMALL_CLUSTER_COUNT {
        let msg = format!("only {g_count} clusters; cluster-robust standard errors may be unreliable");
        tracing::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(ClusterVcov {
        vcov,
        n_clusters: g_count,
        n_params,
        scale,
        warnings,
    })
}
