//! Least squares on demeaned data with absorbed and collinear column screening.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mean square below which a demeaned regressor counts as absorbed.
pub const ABSORBED_VARIANCE: f64 = 1e-12;
/// Relative Cholesky pivot below which a regressor counts as collinear.
pub const COLLINEAR_PIVOT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// No variation left after the fixed effects are removed.
    Absorbed,
    /// Spanned by earlier retained regressors.
    Collinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedColumn {
    pub term: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone)]
pub struct OlsFit {
    /// Indices into the input columns, in input order.
    pub kept: Vec<usize>,
    pub dropped: Vec<(usize, DropReason)>,
    pub beta: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Inverse Gram matrix of the kept columns.
    pub xtx_inv: DMatrix<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Screens columns, then solves the normal equations by Cholesky.
pub fn ols(y: &[f64], columns: &[Vec<f64>]) -> Result<OlsFit> {
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptyPanel);
    }
    let k = columns.len();
    let mut gram = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..=i {
            let v = dot(&columns[i], &columns[j]);
            gram[i][j] = v;
            gram[j][i] = v;
        }
    }

    // Incremental Cholesky factor of the kept columns' Gram matrix.
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    let mut chol: Vec<Vec<f64>> = Vec::new();
    for (j, gj) in gram.iter().enumerate() {
        if gj[j] / (n as f64) < ABSORBED_VARIANCE {
            dropped.push((j, DropReason::Absorbed));
            continue;
        }
        let mut row = Vec::with_capacity(kept.len() + 1);
        for (a, &ka) in kept.iter().enumerate() {
            let s: f64 = (0..a).map(|b| chol[a][b] * row[b]).sum();
            row.push((gj[ka] - s) / chol[a][a]);
        }
        let pivot = gj[j] - row.iter().map(|v| v * v).sum::<f64>();
        if pivot <= COLLINEAR_PIVOT * gj[j] {
            dropped.push((j, DropReason::Collinear));
            continue;
        }
        row.push(pivot.sqrt());
        chol.push(row);
        kept.push(j);
    }
    if kept.is_empty() {
        return Err(Error::RankDeficient(
            "every regressor is absorbed by the fixed effects or collinear".into(),
        ));
    }

    let m = kept.len();
    let xtx = DMatrix::from_fn(m, m, |a, b| gram[kept[a]][kept[b]]);
    let xty = DVector::from_iterator(m, kept.iter().map(|&j| dot(&columns[j], y)));
    let factor = xtx
        .clone()
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("Gram matrix of retained regressors is not positive definite".into()))?;
    let beta = factor.solve(&xty);
    let xtx_inv = factor.inverse();

    let mut residuals = y.to_vec();
    for (a, &j) in kept.iter().enumerate() {
        let b = beta[a];
        for (r, x) in residuals.iter_mut().zip(&columns[j]) {
            *r -= b * x;
        }
    }
    Ok(OlsFit {
        kept,
        dropped,
        beta: beta.iter().copied().collect(),
        residuals,
        xtx_inv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_fit() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 - 9.5).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v).collect();
        let f = ols(&y, &[x]).unwrap();
        assert!((f.beta[0] - 2.5).abs() < 1e-10);
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn absorbed_and_collinear_are_reported() {
        let a: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).cos()).collect();
        let zero = vec![0.0; 10];
        let combo: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 2.0 * p - q).collect();
        let y: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + 3.0 * q).collect();
        let f = ols(&y, &[a, zero, b, combo]).unwrap();
        assert_eq!(f.kept, vec![0, 2]);
        assert_eq!(f.dropped, vec![(1, DropReason::Absorbed), (3, DropReason::Collinear)]);
        assert!((f.beta[0] - 1.0).abs() < 1e-12 && (f.beta[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn nothing_left_is_rank_deficient() {
        assert!(matches!(ols(&[1.0, 2.0], &[vec![0.0, 0.0]]), Err(Error::RankDeficient(_))));
    }
}
