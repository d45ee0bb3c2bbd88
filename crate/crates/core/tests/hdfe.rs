//! Estimator invariants and a dense sandwich oracle for the clustered covariance.

use convergence::hdfe::{build_design, fit_design, DesignConfig, DesignMatrix, DofConvention, EventStudyConfig, FeDim, Factor, FitResult};
use convergence::synth::{gen_panel, householder_ols, seeded, DgpParams};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn small_design(seed: u64, n_rows: usize, dims: &[FeDim]) -> DesignMatrix {
    let params = DgpParams { n_rows, n_journals: 30, n_countries: 6, n_fields: 4, seed, ..DgpParams::default() };
    let (cells, _) = gen_panel(&params).unwrap();
    let cfg = DesignConfig { fe_dims: dims.to_vec(), ..DesignConfig::default() };
    build_design(&cells, &cfg).unwrap().design
}

fn reorder(d: &DesignMatrix, order: &[usize]) -> DesignMatrix {
    let pick = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let pick_f = |f: &Factor| Factor { name: f.name.clone(), ids: order.iter().map(|&i| f.ids[i]).collect(), n_levels: f.n_levels };
    DesignMatrix::new(
        pick(&d.y),
        d.names.clone(),
        d.columns.iter().map(|c| pick(c)).collect(),
        d.factors.iter().map(pick_f).collect(),
        pick_f(&d.clusters),
    )
    .unwrap()
}

fn fit(d: &DesignMatrix) -> FitResult {
    fit_design(d, &EventStudyConfig::default()).unwrap()
}

/// Inverse of a small symmetric positive definite matrix by Gauss-Jordan.
fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                for j in 0..n {
                    a[r][j] -= f * a[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    inv
}

#[test]
fn clustered_vcov_matches_dense_sandwich() {
    for seed in 0..4 {
        let d = small_design(seed, 400, &[FeDim::Journal]);
        let got = fit(&d);
        let n = d.n_obs();

        // Full design: intercept, journal dummies, regressors; keep identified columns.
        let journals = &d.factors[0];
        let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
        for level in 1..journals.n_levels as u32 {
            cols.push(journals.ids.iter().map(|&g| (g == level) as u8 as f64).collect());
        }
        let offset = cols.len();
        cols.extend(d.columns.iter().cloned());
        let dense = householder_ols(&d.y, &cols).unwrap();
        let kept: Vec<usize> = (0..cols.len()).filter(|&j| dense.coefficients[j].is_some()).collect();
        let resid: Vec<f64> = (0..n)
            .map(|i| d.y[i] - kept.iter().map(|&j| cols[j][i] * dense.coefficients[j].unwrap()).sum::<f64>())
            .collect();

        let p = kept.len();
        let xtx: Vec<Vec<f64>> = kept
            .iter()
            .map(|&a| kept.iter().map(|&b| (0..n).map(|i| cols[a][i] * cols[b][i]).sum()).collect())
            .collect();
        let bread = invert(xtx);
        let g = d.clusters.n_levels;
        let mut scores = vec![vec![0.0; p]; g];
        for i in 0..n {
            let c = d.clusters.ids[i] as usize;
            for (a, &j) in kept.iter().enumerate() {
                scores[c][a] += cols[j][i] * resid[i];
            }
        }
        let meat: Vec<Vec<f64>> = (0..p).map(|a| (0..p).map(|b| scores.iter().map(|s| s[a] * s[b]).sum()).collect()).collect();
        let k = p - 1;
        let scale = g as f64 / (g as f64 - 1.0) * (n as f64 - 1.0) / (n as f64 - k as f64);
        let regs: Vec<usize> = kept.iter().enumerate().filter(|(_, &j)| j >= offset).map(|(a, _)| a).collect();
        assert_eq!(regs.len(), got.coefficients.len());
        for (x, &a) in regs.iter().enumerate() {
            for (y, &b) in regs.iter().enumerate() {
                let mut v = 0.0;
                for r in 0..p {
                    for s in 0..p {
                        v += bread[a][r] * meat[r][s] * bread[s][b];
                    }
                }
                v *= scale;
                let tol = 1e-7 * v.abs().max(1e-12);
                assert!((got.vcov[x][y] - v).abs() <= tol, "seed {seed} ({x},{y}): {} vs {v}", got.vcov[x][y]);
            }
        }
    }
}

#[test]
fn duplicating_every_row_rescales_only_the_dof_factor() {
    let d = small_design(9, 500, &FeDim::ALL);
    let once = fit(&d);
    let order: Vec<usize> = (0..d.n_obs()).chain(0..d.n_obs()).collect();
    let twice = fit(&reorder(&d, &order));
    let (n, k) = (d.n_obs() as f64, once.manifest.n_params as f64);
    assert_eq!(twice.manifest.n_params, once.manifest.n_params);
    let ratio = (((2.0 * n - 1.0) / (2.0 * n - k)) / ((n - 1.0) / (n - k))).sqrt();
    for (a, b) in once.coefficients.iter().zip(&twice.coefficients) {
        assert!((a.estimate - b.estimate).abs() < 1e-10, "{}", a.term);
        assert!((b.se / a.se - ratio).abs() < 1e-7, "{}: {} vs {ratio}", a.term, b.se / a.se);
    }
}

#[test]
fn regressors_only_convention_gives_smaller_errors() {
    let d = small_design(4, 600, &FeDim::ALL);
    let a = fit(&d);
    let b = fit_design(&d, &EventStudyConfig { dof: DofConvention::RegressorsOnly, ..EventStudyConfig::default() }).unwrap();
    assert!(b.manifest.n_params < a.manifest.n_params);
    for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
        assert_eq!(x.estimate, y.estimate);
        assert!(y.se < x.se);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn row_order_does_not_matter(seed in 0u64..1000, shuffle in 0u64..1000) {
        let d = small_design(seed, 300, &FeDim::ALL);
        let mut order: Vec<usize> = (0..d.n_obs()).collect();
        order.shuffle(&mut seeded(shuffle));
        let (a, b) = (fit(&d), fit(&reorder(&d, &order)));
        prop_assert_eq!(a.coefficients.len(), b.coefficients.len());
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            prop_assert!((x.estimate - y.estimate).abs() < 1e-9, "{}", x.term);
            prop_assert!((x.se - y.se).abs() < 1e-9 * x.se.max(1e-6), "{}", x.term);
        }
    }

    #[test]
    fn covariance_is_symmetric_psd(seed in 0u64..1000) {
        let d = small_design(seed, 300, &FeDim::ALL);
        let r = fit(&d);
        let m = r.vcov.len();
        let scale = (0..m).map(|i| r.vcov[i][i]).fold(0.0f64, f64::max);
        for i in 0..m {
            for j in 0..m {
                prop_assert_eq!(r.vcov[i][j], r.vcov[j][i]);
            }
        }
        // Quadratic forms along random directions stay non-negative.
        let mut rng = seeded(seed + 1);
        for _ in 0..20 {
            let v: Vec<f64> = (0..m).map(|_| convergence::synth::std_normal(&mut rng)).collect();
            let q: f64 = (0..m).map(|i| (0..m).map(|j| v[i] * r.vcov[i][j] * v[j]).sum::<f64>()).sum();
            prop_assert!(q >= -1e-12 * scale, "{q}");
        }
    }
}
