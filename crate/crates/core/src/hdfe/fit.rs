//! Event-study fit: design, within transformation, least squares and
//! clustered inference.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::demean::{demean, FixedEffectSpec};
use super::design::{build_design, DesignConfig, DesignMatrix};
use super::ols::{ols, DropReason, DroppedColumn};
use super::vcov::{cluster_vcov, DofConvention};
use crate::corpus::PanelCell;
use crate::util::fmt_f64;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inference {
    #[default]
    Normal,
    /// Student t with G - 1 degrees of freedom.
    StudentT,
}

impl Inference {
    pub fn as_str(&self) -> &'static str {
        match self {
            Inference::Normal => "normal",
            Inference::StudentT => "student_t",
        }
    }
}

impl std::str::FromStr for Inference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "normal" => Ok(Inference::Normal),
            "student_t" | "t" => Ok(Inference::StudentT),
            other => Err(Error::InvalidConfig(format!("unknown inference {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStudyConfig {
    pub design: DesignConfig,
    pub fe: FixedEffectSpec,
    pub dof: DofConvention,
    pub inference: Inference,
    pub confidence: f64,
}

impl Default for EventStudyConfig {
    fn default() -> Self {
        EventStudyConfig {
            design: DesignConfig::default(),
            fe: FixedEffectSpec::default(),
            dof: DofConvention::default(),
            inference: Inference::default(),
            confidence: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefRow {
    pub term: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitManifest {
    pub n_obs: usize,
    pub n_clusters: usize,
    pub n_params: usize,
    pub iterations: usize,
    pub max_change: f64,
    pub tol: f64,
    pub dof_convention: DofConvention,
    pub inference: Inference,
    pub critical_value: f64,
    pub fe_dims: Vec<String>,
    pub fe_levels: Vec<usize>,
    pub dropped_columns: Vec<DroppedColumn>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: Vec<CoefRow>,
    /// Row-major covariance of the retained coefficients, in table order.
    pub vcov: Vec<Vec<f64>>,
    /// Residuals of the retained rows, in input row order.
    pub residuals: Vec<f64>,
    pub rows: Vec<usize>,
    pub manifest: FitManifest,
}

impl FitResult {
    pub fn coef(&self, term: &str) -> Option<&CoefRow> {
        self.coefficients.iter().find(|c| c.term == term)
    }

    pub fn coefficients_csv(&self) -> String {
        let mut out = String::from("term,estimate,se,t,p,ci_low,ci_high\n");
        for c in &self.coefficients {
            let vals = [c.estimate, c.se, c.t, c.p, c.ci_low, c.ci_high].map(fmt_f64);
            out.push_str(&format!("{},{}\n", c.term, vals.join(",")));
        }
        out
    }

    pub fn manifest_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.manifest)? + "\n")
    }
}

pub fn fit_design(design: &DesignMatrix, cfg: &EventStudyConfig) -> Result<FitResult> {
    if !(cfg.confidence > 0.0 && cfg.confidence < 1.0) {
        return Err(Error::InvalidConfig(format!("confidence {} outside (0, 1)", cfg.confidence)));
    }
    let dm = demean(design, &cfg.fe)?;
    let fit = ols(&dm.y, &dm.columns)?;
    let kept_cols: Vec<&[f64]> = fit.kept.iter().map(|&j| dm.columns[j].as_slice()).collect();
    let cv = cluster_vcov(&kept_cols, &fit.residuals, &dm.clusters, &fit.xtx_inv, &dm.levels, cfg.dof)?;

    let alpha = 1.0 - cfg.confidence;
    let (crit, p_of): (f64, Box<dyn Fn(f64) -> f64>) = match cfg.inference {
        Inference::Normal => {
            let d = Normal::standard();
            (d.inverse_cdf(1.0 - alpha / 2.0), Box::new(move |t: f64| 2.0 * d.sf(t.abs())))
        }
        Inference::StudentT => {
            let d = StudentsT::new(0.0, 1.0, (cv.n_clusters - 1) as f64)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            (d.inverse_cdf(1.0 - alpha / 2.0), Box::new(move |t: f64| 2.0 * d.sf(t.abs())))
        }
    };

    let coefficients = fit
        .kept
        .iter()
        .enumerate()
        .map(|(a, &j)| {
            let estimate = fit.beta[a];
            let se = cv.vcov[(a, a)].max(0.0).sqrt();
            let t = estimate / se;
            CoefRow {
                term: design.names[j].clone(),
                estimate,
                se,
                t,
                p: p_of(t),
                ci_low: estimate - crit * se,
                ci_high: estimate + crit * se,
            }
        })
        .collect();
    let dropped_columns = fit
        .dropped
        .iter()
        .map(|&(j, reason)| DroppedColumn { term: design.names[j].clone(), reason })
        .collect::<Vec<_>>();
    let mut warnings = cv.warnings.clone();
    for d in &dropped_columns {
        let what = match d.reason {
            DropReason::Absorbed => "absorbed by the fixed effects",
            DropReason::Collinear => "collinear with other regressors",
        };
        warnings.push(format!("{} dropped: {what}", d.term));
    }
    let m = fit.kept.len();
    Ok(FitResult {
        coefficients,
        vcov: (0..m).map(|a| (0..m).map(|b| cv.vcov[(a, b)]).collect()).collect(),
        residuals: fit.residuals,
        rows: dm.rows,
        manifest: FitManifest {
            n_obs: dm.y.len(),
            n_clusters: cv.n_clusters,
            n_params: cv.n_params,
            iterations: dm.iterations,
            max_change: dm.max_change,
            tol: cfg.fe.tol,
            dof_convention: cfg.dof,
            inference: cfg.inference,
            critical_value: crit,
            fe_dims: design.factors.iter().map(|f| f.name.clone()).collect(),
            fe_levels: dm.levels,
            dropped_columns,
            warnings,
        },
    })
}

/// Builds the design from complete panel cells and fits it.
pub fn fit_event_study(cells: &[PanelCell], cfg: &EventStudyConfig) -> Result<FitResult> {
    let built = build_design(cells, &cfg.design)?;
    fit_design(&built.design, cfg)
}
