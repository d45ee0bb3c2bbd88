//! Within transformation by alternating projections.
//!
//! Each sweep subtracts, dimension by dimension, the group means of the
//! current residual. Sweeps repeat until the largest group mean removed in a
//! sweep falls below the tolerance. The outcome and every regressor are
//! transformed independently with the same groups.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::{DesignMatrix, Factor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedEffectSpec {
    /// Convergence bound on the largest absolute change in a sweep.
    pub tol: f64,
    pub max_iter: usize,
    /// Iteratively drop observations that are alone in some group.
    pub drop_singletons: bool,
}

impl Default for FixedEffectSpec {
    fn default() -> Self {
        FixedEffectSpec {
            tol: 1e-8,
            max_iter: 10_000,
            drop_singletons: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demeaned {
    pub y: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
    /// Original row index of every retained row.
    pub rows: Vec<usize>,
    /// Sweeps used by the slowest column.
    pub iterations: usize,
    pub max_change: f64,
    /// Level counts of each factor over the retained rows.
    pub levels: Vec<usize>,
    pub clusters: Vec<u32>,
}

impl Demeaned {
    pub fn n_obs(&self) -> usize {
        self.y.len()
    }
}

struct Group {
    ids: Vec<u32>,
    inv_count: Vec<f64>,
}

fn compact(ids: &[u32], rows: &[usize]) -> (Vec<u32>, usize) {
    let mut map: Vec<u32> = Vec::new();
    let mut seen = std::collections::BTreeMap::new();
    for &r in rows {
        seen.entry(ids[r]).or_insert(());
    }
    let index: std::collections::BTreeMap<u32, u32> =
        seen.keys().enumerate().map(|(i, &k)| (k, i as u32)).collect();
    map.extend(rows.iter().map(|&r| index[&ids[r]]));
    (map, index.len())
}

/// Rows kept after iteratively removing singleton groups.
fn non_singleton_rows(factors: &[Factor], n: usize) -> Vec<usize> {
    let mut keep = vec![true; n];
    loop {
        let mut changed = false;
        for f in factors {
            let mut counts = vec![0usize; f.n_levels];
            for (i, &g) in f.ids.iter().enumerate() {
                if keep[i] {
                    counts[g as usize] += 1;
                }
            }
            for (i, &g) in f.ids.iter().enumerate() {
                if keep[i] && counts[g as usize] == 1 {
                    keep[i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    (0..n).filter(|&i| keep[i]).collect()
}

/// Demeans one column in place; returns (sweeps, last max change).
fn demean_column(x: &mut [f64], groups: &[Group], spec: &FixedEffectSpec) -> Result<(usize, f64)> {
    let mut sums: Vec<Vec<f64>> = groups.iter().map(|g| vec![0.0; g.inv_count.len()]).collect();
    let single = groups.len() == 1;
    let mut last = f64::INFINITY;
    for sweep in 1..=spec.max_iter {
        let mut max_change = 0.0f64;
        for (g, s) in groups.iter().zip(sums.iter_mut()) {
            s.iter_mut().for_each(|v| *v = 0.0);
            for (&id, &v) in g.ids.iter().zip(x.iter()) {
                s[id as usize] += v;
            }
            for (m, &w) in s.iter_mut().zip(&g.inv_count) {
                *m *= w;
                max_change = max_change.max(m.abs());
            }
            for (&id, v) in g.ids.iter().zip(x.iter_mut()) {
                *v -= s[id as usize];
            }
        }
        last = max_change;
        // One dimension is an exact projection: a single sweep suffices.
        if single || max_change < spec.tol {
            return Ok((sweep, max_change));
        }
    }
    Err(Error::NoConvergence {
        iterations: spec.max_iter,
        max_change: last,
    })
}

pub fn demean(design: &DesignMatrix, spec: &FixedEffectSpec) -> Result<Demeaned> {
    if design.factors.is_empty() {
        return Err(Error::InvalidConfig("at least one fixed-effect dimension is required".into()));
    }
    if spec.tol.is_nan() || spec.tol <= 0.0 {
        return Err(Error::InvalidConfig(format!("tolerance {} must be positive", spec.tol)));
    }
    let n = design.n_obs();
    let rows: Vec<usize> = if spec.drop_singletons {
        non_singleton_rows(&design.factors, n)
    } else {
        (0..n).collect()
    };
    let mut levels = Vec::with_capacity(design.factors.len());
    let groups: Vec<Group> = design
        .factors
        .iter()
        .map(|f| {
            let (ids, n_levels) = compact(&f.ids, &rows);
            levels.push(n_levels);
            let mut counts = vec![0usize; n_levels];
            for &g in &ids {
                counts[g as usize] += 1;
            }
            Group {
                ids,
                inv_count: counts.into_iter().map(|c| 1.0 / c as f64).collect(),
            }
        })
        .collect();

    let mut cols: Vec<Vec<f64>> = std::iter::once(&design.y)
        .chain(design.columns.iter())
        .map(|c| rows.iter().map(|&r| c[r]).collect())
        .collect();
    let stats: Vec<Result<(usize, f64)>> = cols
        .par_iter_mut()
        .map(|c| demean_column(c, &groups, spec))
        .collect();
    let mut iterations = 0;
    let mut max_change = 0.0f64;
    for s in stats {
        let (it, mc) = s?;
        iterations = iterations.max(it);
        max_change = max_change.max(mc);
    }
    let y = cols.remove(0);
    let clusters = rows.iter().map(|&r| design.clusters.ids[r]).collect();
    Ok(Demeaned {
        y,
        columns: cols,
        rows,
        iterations,
        max_change,
        levels,
        clusters,
    })
}
