//! Brute-force reference computations.
//!
//! These share nothing with the production kernels beyond scalar
//! arithmetic: the dummy-variable regression is solved by a hand-written
//! Householder QR on the fully expanded design, and pairwise similarity is
//! computed one cosine at a time.

use crate::hdfe::DesignMatrix;
use crate::{Error, Result};

/// Relative residual norm below which a column counts as dependent.
const DEPENDENT: f64 = 1e-9;

/// Result of a dense least-squares fit with sequential rank detection.
#[derive(Debug, Clone)]
pub struct DenseFit {
    /// Coefficient per requested column; `None` when it is not identified.
    pub coefficients: Vec<Option<f64>>,
    pub rank: usize,
}

/// Least squares on `columns` (each of length n), adding columns left to
/// right and skipping any that lies in the span of those already accepted.
pub fn householder_ols(y: &[f64], columns: &[Vec<f64>]) -> Result<DenseFit> {
    let n = y.len();
    let mut reflectors: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut accepted: Vec<usize> = Vec::new();

    let apply = |refl: &[(usize, Vec<f64>)], x: &mut [f64]| {
        for (k, v) in refl {
            let s: f64 = v.iter().zip(&x[*k..]).map(|(a, b)| a * b).sum();
            for (xi, vi) in x[*k..].iter_mut().zip(v) {
                *xi -= 2.0 * s * vi;
            }
        }
    };

    for (j, col) in columns.iter().enumerate() {
        if col.len() != n {
            return Err(Error::InvalidConfig("oracle columns differ in length".into()));
        }
        let orig = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = col.clone();
        apply(&reflectors, &mut x);
        let k = reflectors.len();
        if k >= n {
            continue;
        }
        let tail = x[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if orig == 0.0 || tail <= DEPENDENT * orig {
            continue;
        }
        let alpha = if x[k] > 0.0 { -tail } else { tail };
        let mut v: Vec<f64> = x[k..].to_vec();
        v[0] -= alpha;
        let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= vn);
        let mut r = x[..k].to_vec();
        r.push(alpha);
        r_cols.push(r);
        reflectors.push((k, v));
        accepted.push(j);
    }
    let rank = accepted.len();
    if rank == 0 {
        return Err(Error::RankDeficient("no identified column".into()));
    }
    let mut qty = y.to_vec();
    apply(&reflectors, &mut qty);
    let mut b = vec![0.0; rank];
    for i in (0..rank).rev() {
        let s: f64 = (i + 1..rank).map(|c| r_cols[c][i] * b[c]).sum();
        b[i] = (qty[i] - s) / r_cols[i][i];
    }
    let mut coefficients = vec![None; columns.len()];
    for (a, &j) in accepted.iter().enumerate() {
        coefficients[j] = Some(b[a]);
    }
    Ok(DenseFit { coefficients, rank })
}

/// Dummy-variable regression: intercept, one indicator per level of every
/// factor except its first, then the regressors. Returns one entry per
/// regressor, `None` when the regressor is not identified.
pub fn oracle_dummy_ols(design: &DesignMatrix) -> Result<Vec<Option<f64>>> {
    let n = design.n_obs();
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    for f in &design.factors {
        for level in 1..f.n_levels as u32 {
            cols.push(f.ids.iter().map(|&g| if g == level { 1.0 } else { 0.0 }).collect());
        }
    }
    let offset = cols.len();
    cols.extend(design.columns.iter().cloned());
    let fit = householder_ols(&design.y, &cols)?;
    Ok(fit.coefficients[offset..].to_vec())
}

/// Intercept plus regressors, no fixed effects. Returns the slopes.
pub fn oracle_plain_ols(y: &[f64], regressors: &[Vec<f64>]) -> Result<Vec<Option<f64>>> {
    let mut cols = vec![vec![1.0; y.len()]];
    cols.extend(regressors.iter().cloned());
    Ok(householder_ols(y, &cols)?.coefficients[1..].to_vec())
}

fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}

/// `(1/N) Σ cos(v, b_i)`, one cosine at a time.
pub fn oracle_pairwise_similarity(v: &[f64], members: &[Vec<f64>]) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::InvalidConfig("benchmark has no members".into()));
    }
    let mut s = 0.0;
    for m in members {
        s += cosine(v, m)?;
    }
    Ok(s / members.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_matches_closed_form_simple_regression() {
        let x: Vec<f64> = (0..12).map(|i| (i as f64).powf(1.3)).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 2.0 - 0.7 * v + (i % 3) as f64 * 0.1).collect();
        let b = oracle_plain_ols(&y, std::slice::from_ref(&x)).unwrap()[0].unwrap();
        let mx = x.iter().sum::<f64>() / 12.0;
        let my = y.iter().sum::<f64>() / 12.0;
        let sxy: f64 = x.iter().zip(&y).map(|(a, c)| (a - mx) * (c - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        assert!((b - sxy / sxx).abs() < 1e-12);
    }

    #[test]
    fn dependent_columns_are_unidentified() {
        let a: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let b: Vec<f64> = a.iter().map(|v| 3.0 * v).collect();
        let y: Vec<f64> = a.iter().map(|v| v * 0.5 + 1.0).collect();
        let fit = oracle_plain_ols(&y, &[a, b]).unwrap();
        assert!((fit[0].unwrap() - 0.5).abs() < 1e-12);
        assert!(fit[1].is_none());
    }

    #[test]
    fn pairwise_similarity_cases() {
        let v = vec![1.0, 2.0, 2.0];
        assert!((oracle_pairwise_similarity(&v, &[v.clone(), v.clone()]).unwrap() - 1.0).abs() < 1e-15);
        let single = oracle_pairwise_similarity(&v, &[vec![0.0, 0.0, 3.0]]).unwrap();
        assert!((single - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(oracle_pairwise_similarity(&v, &[vec![0.0; 3]]), Err(Error::ZeroVector)));
    }
}
