//! Exact Gaussian-process conditioning on pointwise vorticity observations.
//!
//! Observations sit on grid points, so every kernel evaluation is a lookup in
//! a [`KernelTable`]. With `m` observations on an `N × N` grid a fit costs
//! `O(m³ + m²N²)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernels::{
    build_kernel_table, check_locations, factorize_with_jitter, gram_matrix, KernelSpec,
    KernelTable, JITTER_START,
};
use crate::spectral_field::{GridSpec, RealField};

/// Pointwise observations `y_i = w(x_i) + ε_i`, `ε_i ~ N(0, σ²_obs)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub locations: Vec<(usize, usize)>,
    pub values: Vec<f64>,
    pub noise_variance: f64,
}

impl ObservationSet {
    pub fn new(
        locations: Vec<(usize, usize)>,
        values: Vec<f64>,
        noise_variance: f64,
    ) -> Result<Self> {
        if locations.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} locations but {} values",
                locations.len(),
                values.len()
            )));
        }
        if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be >= 0, got {noise_variance}"
            )));
        }
        Ok(Self {
            locations,
            values,
            noise_variance,
        })
    }

    pub fn empty(noise_variance: f64) -> Self {
        Self {
            locations: Vec::new(),
            values: Vec::new(),
            noise_variance,
        }
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }
}

/// Factorized `K(X,X) + (σ²_obs + jitter) I` with the solved weights.
struct Factor {
    chol: Option<Cholesky<f64, Dyn>>,
    jitter: f64,
    weights: DVector<f64>,
}

fn factor(kernel: &KernelTable, obs: &ObservationSet) -> Result<Factor> {
    check_locations(kernel.grid(), &obs.locations)?;
    if obs.is_empty() {
        return Ok(Factor {
            chol: None,
            jitter: 0.0,
            weights: DVector::zeros(0),
        });
    }
    let gram = gram_matrix(kernel, &obs.locations, 0.0)?;
    let (chol, jitter) = factorize_with_jitter(&gram, obs.noise_variance, kernel.variance())?;
    let weights = chol.solve(&DVector::from_column_slice(&obs.values));
    Ok(Factor {
        chol: Some(chol),
        jitter,
        weights,
    })
}

fn mean_from_weights(
    kernel: &KernelTable,
    locations: &[(usize, usize)],
    weights: &DVector<f64>,
) -> RealField {
    let grid = kernel.grid();
    let mut mean = RealField::zeros(grid);
    for (&loc, &w) in locations.iter().zip(weights.iter()) {
        for (idx, v) in mean.values_mut().iter_mut().enumerate() {
            *v += w * kernel.between(grid.unindex(idx), loc);
        }
    }
    mean
}

/// Fitted posterior: `m_*(x) = k(x,X) G⁻¹ y` and `K_*(x,x) = σ² − k(x,X) G⁻¹ k(X,x)`.
#[derive(Debug, Clone)]
pub struct Posterior {
    kernel: KernelTable,
    obs: ObservationSet,
    chol: Option<Cholesky<f64, Dyn>>,
    jitter: f64,
    weights: DVector<f64>,
    mean_field: RealField,
    variance_field: RealField,
    clamped: usize,
}

/// Conditions the prior `kernel` on `obs`.
pub fn fit_posterior(kernel: &KernelTable, obs: &ObservationSet) -> Result<Posterior> {
    let grid = kernel.grid();
    let Factor {
        chol,
        jitter,
        weights,
    } = factor(kernel, obs)?;
    let mean_field = mean_from_weights(kernel, &obs.locations, &weights);

    let prior = kernel.variance();
    let mut variance = vec![prior; grid.len()];
    let mut clamped = 0;
    if let Some(chol) = &chol {
        let m = obs.len();
        let mut cross = DMatrix::from_fn(m, grid.len(), |i, idx| {
            kernel.between(obs.locations[i], grid.unindex(idx))
        });
        chol.l_dirty()
            .solve_lower_triangular_unchecked_mut(&mut cross);
        for (idx, v) in variance.iter_mut().enumerate() {
            let reduced = prior - cross.column(idx).norm_squared();
            if reduced < 0.0 {
                clamped += 1;
                *v = 0.0;
            } else {
                *v = reduced;
            }
        }
    }
    let variance_field = RealField::from_values(grid, variance)?;
    Ok(Posterior {
        kernel: kernel.clone(),
        obs: obs.clone(),
        chol,
        jitter,
        weights,
        mean_field,
        variance_field,
        clamped,
    })
}

/// Posterior mean only, skipping the `O(m²N²)` variance pass.
pub fn posterior_mean(kernel: &KernelTable, obs: &ObservationSet) -> Result<RealField> {
    let f = factor(kernel, obs)?;
    Ok(mean_from_weights(kernel, &obs.locations, &f.weights))
}

impl Posterior {
    pub fn kernel(&self) -> &KernelTable {
        &self.kernel
    }

    pub fn observations(&self) -> &ObservationSet {
        &self.obs
    }

    pub fn mean_field(&self) -> &RealField {
        &self.mean_field
    }

    pub fn variance_field(&self) -> &RealField {
        &self.variance_field
    }

    /// `(K(X,X) + σ²_obs I)⁻¹ y`.
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// Lower Cholesky factor of the regularized Gram matrix; empty when `m = 0`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol
            .as_ref()
            .map_or_else(|| DMatrix::zeros(0, 0), |c| c.l())
    }

    /// Diagonal jitter that was needed on top of the observation noise.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Grid points whose variance came out negative and was clamped to zero.
    pub fn clamped_count(&self) -> usize {
        self.clamped
    }

    pub fn mean_at(&self, loc: (usize, usize)) -> f64 {
        self.mean_field.get(loc.0, loc.1)
    }

    pub fn variance_at(&self, loc: (usize, usize)) -> f64 {
        self.variance_field.get(loc.0, loc.1)
    }

    /// `G⁻¹` of the regularized Gram matrix.
    fn gram_inverse(&self) -> DMatrix<f64> {
        self.chol
            .as_ref()
            .map_or_else(|| DMatrix::zeros(0, 0), |c| c.inverse())
    }
}

/// `log p(y) = −½ yᵀG⁻¹y − Σ log L_ii − (m/2) log 2π`.
pub fn log_marginal_likelihood(kernel: &KernelTable, obs: &ObservationSet) -> Result<f64> {
    let f = factor(kernel, obs)?;
    let Some(chol) = f.chol else {
        return Ok(0.0);
    };
    let y = DVector::from_column_slice(&obs.values);
    let fit = y.dot(&f.weights);
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    Ok(-0.5 * fit - log_det_half - 0.5 * obs.len() as f64 * (2.0 * PI).ln())
}

/// Index of the table with the largest evidence; ties go to the first.
pub fn select_table(tables: &[KernelTable], obs: &ObservationSet) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    let mut last_err = None;
    for (i, t) in tables.iter().enumerate() {
        match log_marginal_likelihood(t, obs) {
            Ok(lml) => {
                if best.is_none_or(|(_, b)| lml > b) {
                    best = Some((i, lml));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::InvalidParameter("no candidate kernels".into()))
    })
}

/// The candidate maximizing the log marginal likelihood of `obs`.
pub fn select_hyperparameter(
    candidates: &[KernelSpec],
    obs: &ObservationSet,
    grid: GridSpec,
) -> Result<KernelSpec> {
    let tables = candidates
        .iter()
        .map(|&s| build_kernel_table(s, grid))
        .collect::<Result<Vec<_>>>()?;
    let (i, _) = select_table(&tables, obs)?;
    Ok(candidates[i])
}

/// Two-sided standard-normal quantile `z` with `P(|Z| ≤ z) = level`.
pub fn two_sided_z(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + 0.5 * level))
}

/// `m_*(x) ± z √K_*(x,x)` at a grid location.
pub fn credible_interval(
    post: &Posterior,
    location: (usize, usize),
    level: f64,
) -> Result<(f64, f64)> {
    check_locations(post.kernel.grid(), &[location])?;
    let z = two_sided_z(level)?;
    let m = post.mean_at(location);
    let half = z * post.variance_at(location).max(0.0).sqrt();
    Ok((m - half, m + half))
}

/// Variance of the energy functional, `¼ Tr(K_*²)`, with the trace taken under
/// grid quadrature (weight `(2π/N)²` per point).
///
/// With `V = K(·, X)` and `K_* = K − V G⁻¹ Vᵀ`,
/// `Tr(K_*²) = Tr(K²) − 2 Tr(G⁻¹ K³[X,X]) + Tr(G⁻¹ K²[X,X] G⁻¹ K²[X,X])`,
/// where `K^p` is the kernel whose density is the `p`-th power of `K`'s
/// (times the matching power of the torus area). All three terms come from
/// spectral tables, so no `N² × N²` matrix is formed.
pub fn energy_variance(post: &Posterior) -> Result<f64> {
    let kernel = &post.kernel;
    let area = kernel.grid().area();
    let prior_trace = area * area * kernel.coefficients().iter().map(|c| c * c).sum::<f64>();
    if post.obs.is_empty() {
        return Ok(0.25 * prior_trace);
    }
    let grid = kernel.grid();
    let square = kernel.density_power_table(2);
    let cube = kernel.density_power_table(3);
    let lookup = |table: &[f64], p: (usize, usize), q: (usize, usize)| {
        let n = grid.n();
        table[((p.0 + n - q.0) % n) * n + (p.1 + n - q.1) % n]
    };
    let x = &post.obs.locations;
    let m = x.len();
    let k2 = DMatrix::from_fn(m, m, |i, j| area * lookup(&square, x[i], x[j]));
    let k3 = DMatrix::from_fn(m, m, |i, j| area * area * lookup(&cube, x[i], x[j]));
    let g_inv = post.gram_inverse();
    let cross = (&g_inv * &k3).trace();
    let a = &g_inv * &k2;
    let rank_m = (&a * &a).trace();
    Ok(0.25 * (prior_trace - 2.0 * cross + rank_m).max(0.0))
}

/// Relative gap under which posterior variances count as tied.
pub const TIE_TOLERANCE: f64 = 1e-10;

fn pick_max(grid: GridSpec, pool: &[(usize, usize)], variance: &[f64], prior: f64) -> usize {
    let best = variance.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = best - TIE_TOLERANCE * prior;
    (0..pool.len())
        .filter(|&i| variance[i] >= threshold)
        .min_by_key(|&i| grid.index(pool[i].0, pool[i].1))
        .expect("nonempty pool")
}

fn check_placement(
    kernel: &KernelTable,
    candidates: &[(usize, usize)],
    count: usize,
) -> Result<()> {
    check_locations(kernel.grid(), candidates)?;
    if count == 0 {
        return Err(Error::InvalidParameter(
            "sensor count must be at least 1".into(),
        ));
    }
    if count > candidates.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot place {count} sensors among {} candidates",
            candidates.len()
        )));
    }
    Ok(())
}

/// Greedy maximum-variance placement: repeatedly takes the candidate with the
/// largest posterior variance (ties to the lowest linear grid index) and
/// conditions on it with noise `σ²_obs`. Uses rank-one updates of
/// `L⁻¹K(X, C)`, `O(count · (m + count) · |C|)` after the initial fit.
pub fn greedy_sensor_placement(
    kernel: &KernelTable,
    obs: &ObservationSet,
    candidates: &[(usize, usize)],
    count: usize,
) -> Result<Vec<(usize, usize)>> {
    check_placement(kernel, candidates, count)?;
    let prior = kernel.variance();
    let mut pool = candidates.to_vec();

    // rows of L⁻¹K(X, pool), one per conditioned point
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let diag_extra = if obs.is_empty() {
        obs.noise_variance
            + if obs.noise_variance > 0.0 {
                0.0
            } else {
                JITTER_START * prior
            }
    } else {
        check_locations(kernel.grid(), &obs.locations)?;
        let gram = gram_matrix(kernel, &obs.locations, 0.0)?;
        let (chol, jitter) = factorize_with_jitter(&gram, obs.noise_variance, prior)?;
        let mut cross = DMatrix::from_fn(obs.len(), pool.len(), |i, c| {
            kernel.between(obs.locations[i], pool[c])
        });
        chol.l_dirty()
            .solve_lower_triangular_unchecked_mut(&mut cross);
        rows.extend(cross.row_iter().map(|r| r.iter().cloned().collect()));
        obs.noise_variance + jitter
    };
    let mut variance: Vec<f64> = (0..pool.len())
        .map(|c| prior - rows.iter().map(|r| r[c] * r[c]).sum::<f64>())
        .collect();

    let mut chosen = Vec::with_capacity(count);
    for _ in 0..count {
        let pick = pick_max(kernel.grid(), &pool, &variance, prior);
        let x = pool[pick];
        let pivot = variance[pick] + diag_extra;
        if !(pivot > 0.0) {
            return Err(Error::Factorization { jitter: diag_extra });
        }
        let d = pivot.sqrt();
        let l: Vec<f64> = rows.iter().map(|r| r[pick]).collect();
        let new_row: Vec<f64> = (0..pool.len())
            .map(|c| {
                let dot: f64 = rows.iter().zip(&l).map(|(r, li)| r[c] * li).sum();
                (kernel.between(x, pool[c]) - dot) / d
            })
            .collect();
        for (v, w) in variance.iter_mut().zip(&new_row) {
            *v -= w * w;
        }
        rows.push(new_row);
        chosen.push(x);

        pool.remove(pick);
        variance.remove(pick);
        for r in rows.iter_mut() {
            r.remove(pick);
        }
    }
    Ok(chosen)
}

/// Same selection rule as [`greedy_sensor_placement`], refitting the full
/// posterior at every step. Slow; used to cross-check the update path.
pub fn greedy_sensor_placement_refit(
    kernel: &KernelTable,
    obs: &ObservationSet,
    candidates: &[(usize, usize)],
    count: usize,
) -> Result<Vec<(usize, usize)>> {
    check_placement(kernel, candidates, count)?;
    let prior = kernel.variance();
    let mut pool = candidates.to_vec();
    let mut current = obs.clone();
    let mut chosen = Vec::with_capacity(count);
    for _ in 0..count {
        let post = fit_posterior(kernel, &current)?;
        let variance: Vec<f64> = pool.iter().map(|&c| post.variance_at(c)).collect();
        let pick = pick_max(kernel.grid(), &pool, &variance, prior);
        let x = pool.remove(pick);
        current.locations.push(x);
        current.values.push(0.0);
        chosen.push(x);
    }
    Ok(chosen)
}
