//! Comparison methods for reconstruction: per-edge kernel ridge regression
//! and a two-step space-time smoother on top of it.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::complex::ChainComplexRep;
use crate::error::{Error, Result};
use crate::hodge::laplacian;
use crate::learn::{eval_grid_points, SampleSet, GRID_POINTS};
use crate::linalg::sym_eig_sorted;

/// Values on `edges x grid instants`; the grid is [`eval_grid_points`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridEstimate {
    values: DMatrix<f64>,
}

impl GridEstimate {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() != GRID_POINTS {
            return Err(Error::Mismatch(format!(
                "grid estimate needs {GRID_POINTS} columns, got {}",
                values.ncols()
            )));
        }
        Ok(GridEstimate { values })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_edges(&self) -> usize {
        self.values.nrows()
    }
}

/// RBF kernel ridge regression settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrrConfig {
    pub lengthscale: f64,
    pub ridge: f64,
}

impl Default for KrrConfig {
    fn default() -> Self {
        KrrConfig {
            lengthscale: 1.0,
            ridge: 1e-2,
        }
    }
}

impl KrrConfig {
    pub fn new(lengthscale: f64, ridge: f64) -> Result<Self> {
        if !(lengthscale > 0.0) || !lengthscale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lengthscale must be > 0, got {lengthscale}"
            )));
        }
        if !(ridge >= 0.0) || !ridge.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ridge must be >= 0, got {ridge}"
            )));
        }
        Ok(KrrConfig { lengthscale, ridge })
    }

    fn kernel(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        (-d * d / (2.0 * self.lengthscale * self.lengthscale)).exp()
    }
}

/// Fits `α = (K + λI)⁻¹ y` on one edge's samples and evaluates the
/// predictor at `points`.
pub fn krr_fit_eval(samples: &[(f64, f64)], cfg: &KrrConfig, points: &[f64]) -> Result<Vec<f64>> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "kernel ridge regression needs at least one sample".into(),
        ));
    }
    if cfg.ridge == 0.0 {
        let mut ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
        ts.sort_by(f64::total_cmp);
        if ts.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Numerical(
                "duplicate sample times make the kernel matrix singular; use ridge > 0".into(),
            ));
        }
    }
    let k = DMatrix::from_fn(n, n, |i, j| {
        cfg.kernel(samples[i].0, samples[j].0) + if i == j { cfg.ridge } else { 0.0 }
    });
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.1));
    let alpha = match k.clone().cholesky() {
        Some(ch) => ch.solve(&y),
        None => k
            .lu()
            .solve(&y)
            .ok_or_else(|| Error::Numerical("kernel matrix is singular; use ridge > 0".into()))?,
    };
    Ok(points
        .iter()
        .map(|&t| {
            samples
                .iter()
                .zip(alpha.iter())
                .map(|(s, a)| a * cfg.kernel(t, s.0))
                .sum()
        })
        .collect())
}

/// Per-edge KRR evaluated on the evaluation grid. Edges are fitted in
/// parallel.
pub fn krr_grid(samples: &SampleSet, cfg: &KrrConfig) -> Result<GridEstimate> {
    let pts = eval_grid_points();
    let rows: Vec<Vec<f64>> = samples
        .edges
        .par_iter()
        .map(|obs| krr_fit_eval(obs, cfg, &pts))
        .collect::<Result<_>>()?;
    let n = rows.len();
    GridEstimate::new(DMatrix::from_fn(n, GRID_POINTS, |r, c| rows[r][c]))
}

/// Second-difference operator on `n` points with free ends, `(n-2) x n`.
pub fn second_difference(n: usize) -> DMatrix<f64> {
    let rows = n.saturating_sub(2);
    let mut d = DMatrix::zeros(rows, n);
    for r in 0..rows {
        d[(r, r)] = 1.0;
        d[(r, r + 1)] = -2.0;
        d[(r, r + 2)] = 1.0;
    }
    d
}

/// Space-time smoothing of a grid estimate:
///
/// ```text
/// min_Z ‖Z - G‖² + alpha · tr(Zᵀ L₁ Z) + beta · tr(Z L_t Zᵀ)
/// ```
///
/// with `L₁` the edge Hodge Laplacian and `L_t = DᵀD` for the free-end
/// second difference `D`. The stationarity condition
/// `(I + alpha L₁) Z + beta Z L_t = G` is diagonalised by the eigenbases of
/// `L₁` and `L_t`, which are computed once here and reused by
/// [`ScSmoother::apply`].
#[derive(Clone, Debug)]
pub struct ScSmoother {
    alpha: f64,
    beta: f64,
    space_vals: Vec<f64>,
    space_vecs: DMatrix<f64>,
    time_vals: Vec<f64>,
    time_vecs: DMatrix<f64>,
}

impl ScSmoother {
    pub fn new(rep: &ChainComplexRep, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !(beta >= 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "alpha and beta must be finite and >= 0, got {alpha}, {beta}"
            )));
        }
        let (space_vals, space_vecs) = sym_eig_sorted(&laplacian(rep, 1)?);
        let d = second_difference(GRID_POINTS);
        let (time_vals, time_vecs) = sym_eig_sorted(&(d.transpose() * d));
        Ok(ScSmoother {
            alpha,
            beta,
            space_vals,
            space_vecs,
            time_vals,
            time_vecs,
        })
    }

    pub fn apply(&self, grid0: &GridEstimate) -> Result<GridEstimate> {
        if self.space_vals.len() != grid0.n_edges() {
            return Err(Error::Mismatch(format!(
                "grid has {} edges, complex has {}",
                grid0.n_edges(),
                self.space_vals.len()
            )));
        }
        if self.alpha == 0.0 && self.beta == 0.0 {
            return Ok(grid0.clone());
        }
        let (v, w) = (&self.space_vecs, &self.time_vecs);
        let mut z = v.transpose() * grid0.values() * w;
        for i in 0..z.nrows() {
            for j in 0..z.ncols() {
                z[(i, j)] /= 1.0 + self.alpha * self.space_vals[i] + self.beta * self.time_vals[j];
            }
        }
        GridEstimate::new(v * z * w.transpose())
    }
}

/// One-shot [`ScSmoother`].
pub fn sc_product(
    grid0: &GridEstimate,
    rep: &ChainComplexRep,
    alpha: f64,
    beta: f64,
) -> Result<GridEstimate> {
    ScSmoother::new(rep, alpha, beta)?.apply(grid0)
}

/// Value of the space-time objective minimised by [`sc_product`].
pub fn sc_objective(
    z: &GridEstimate,
    grid0: &GridEstimate,
    rep: &ChainComplexRep,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let l1 = laplacian(rep, 1)?;
    let d = second_difference(GRID_POINTS);
    let zm = z.values();
    let fit = (zm - grid0.values()).norm_squared();
    let space = (zm.transpose() * &l1 * zm).trace();
    let time = (zm * d.transpose()).norm_squared();
    Ok(fit + alpha * space + beta * time)
}
