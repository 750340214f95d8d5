//! Brute-force references: the full `N² × N²` prior covariance built from the
//! direct spectral sum, conditioned by dense linear algebra.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use turbogp_core::kernels::direct_kernel_sum;
use turbogp_core::{GridSpec, KernelSpec};

pub fn dense_covariance(spec: KernelSpec, grid: GridSpec) -> DMatrix<f64> {
    let n = grid.len();
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|p| {
            let (i, j) = grid.unindex(p);
            grid.point(i, j)
        })
        .collect();
    let mut c = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in p..n {
            let dx = (pts[p].0 - pts[q].0, pts[p].1 - pts[q].1);
            let v = direct_kernel_sum(spec, dx, grid.n() / 2).unwrap();
            c[(p, q)] = v;
            c[(q, p)] = v;
        }
    }
    c
}

pub struct DensePosterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Schur-complement conditioning on observed grid indices with diagonal
/// `noise` (observation variance plus any jitter).
pub fn dense_condition(
    prior: &DMatrix<f64>,
    idx: &[usize],
    y: &[f64],
    noise: f64,
) -> DensePosterior {
    let n = prior.nrows();
    let m = idx.len();
    if m == 0 {
        return DensePosterior {
            mean: DVector::zeros(n),
            cov: prior.clone(),
        };
    }
    let mut g = DMatrix::from_fn(m, m, |a, b| prior[(idx[a], idx[b])]);
    for a in 0..m {
        g[(a, a)] += noise;
    }
    let cross = DMatrix::from_fn(n, m, |p, a| prior[(p, idx[a])]);
    let g_inv = g.try_inverse().expect("invertible gram");
    let yv = DVector::from_column_slice(y);
    let mean = &cross * (&g_inv * yv);
    let cov = prior - &cross * &g_inv * cross.transpose();
    DensePosterior { mean, cov }
}

/// `¼ Σ_{p,q} K_*(p,q)² h⁴`.
pub fn dense_energy_variance(cov: &DMatrix<f64>, grid: GridSpec) -> f64 {
    let w = grid.quadrature_weight();
    0.25 * cov.iter().map(|v| v * v).sum::<f64>() * w * w
}

/// Greedy maximum-variance placement on a dense covariance, ties within
/// `tol · prior` going to the lowest linear index.
pub fn dense_greedy(
    mut cov: DMatrix<f64>,
    candidates: &[usize],
    count: usize,
    noise: f64,
    tol: f64,
    prior: f64,
) -> Vec<usize> {
    let mut pool = candidates.to_vec();
    let mut chosen = Vec::new();
    for _ in 0..count {
        let best = pool
            .iter()
            .map(|&c| cov[(c, c)])
            .fold(f64::NEG_INFINITY, f64::max);
        let pick = *pool
            .iter()
            .filter(|&&c| cov[(c, c)] >= best - tol * prior)
            .min()
            .unwrap();
        let col = cov.column(pick).clone_owned();
        let d = cov[(pick, pick)] + noise;
        cov -= &col * col.transpose() / d;
        pool.retain(|&c| c != pick);
        chosen.push(pick);
    }
    chosen
}

pub fn max_rel_err(a: &[f64], b: &[f64], scale: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / scale)
        .fold(0.0, f64::max)
}
