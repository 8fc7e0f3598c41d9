//! Hodge Laplacians, spectra and the orthogonal Hodge decomposition.
//!
//! For a real (or function-valued) `k`-chain the decomposition is
//!
//! ```text
//! C_k = im B_kᵀ ⊕ ker L_k ⊕ im B_{k+1}
//! ```
//!
//! with `L_k = B_kᵀ B_k + B_{k+1} B_{k+1}ᵀ`. Function-valued chains are
//! decomposed one Fourier coefficient at a time, since the boundary maps act
//! on every coefficient identically.

use nalgebra::DMatrix;

use crate::coeff::{ChainVector, CoefficientSystem};
use crate::complex::ChainComplexRep;
use crate::error::{Error, Result};
use crate::learn::{DecompositionResult, Model};
use crate::linalg::{self, lstsq_min_norm, project, range_basis, sym_eig_sorted, zero_tol};

/// Ascending eigenvalues with aligned orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub zero_tol: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Number of eigenvalues at or below `zero_tol`.
    pub fn nullity(&self) -> usize {
        self.eigenvalues
            .iter()
            .filter(|l| **l <= self.zero_tol)
            .count()
    }
}

/// `L_k = B_kᵀ B_k + B_{k+1} B_{k+1}ᵀ`, with missing boundaries taken as zero.
pub fn laplacian(rep: &ChainComplexRep, k: usize) -> Result<DMatrix<f64>> {
    match rep.top_dim() {
        Some(top) if k <= top => {}
        _ => {
            return Err(Error::InvalidArgument(format!(
                "degree {k} outside 0..={}",
                rep.top_dim().map_or(-1, |t| t as isize)
            )))
        }
    }
    let down = rep.boundary_f64(k);
    let up = rep.boundary_f64(k + 1);
    Ok(down.transpose() * &down + &up * up.transpose())
}

/// Full symmetric eigendecomposition.
///
/// Eigenvalues ascend; each eigenvector's first entry above `1e-12` in
/// magnitude is positive. Degenerate eigenspaces come back as some
/// orthonormal basis of the block, so compare subspaces rather than vectors.
pub fn eig_sym(m: &DMatrix<f64>) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!(
            "eigendecomposition of a non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose())
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    if asym > 1e-12 * scale {
        return Err(Error::InvalidArgument(format!(
            "matrix is not symmetric (max |M - Mᵀ| = {asym:e})"
        )));
    }
    let (eigenvalues, eigenvectors) = sym_eig_sorted(m);
    let lmax = eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(Spectrum {
        zero_tol: zero_tol(m.nrows(), lmax),
        eigenvalues,
        eigenvectors,
    })
}

/// Orthonormal bases for the three Hodge summands of `C_k`.
#[derive(Clone, Debug)]
pub struct HodgeBases {
    /// Basis of `ker L_k`.
    pub harmonic: DMatrix<f64>,
    /// Eigenvectors of `B_kᵀ B_k` for its smallest nonzero eigenvalues.
    pub irrotational: DMatrix<f64>,
    pub irrotational_eigenvalues: Vec<f64>,
    /// Eigenvectors of `B_{k+1} B_{k+1}ᵀ` for its smallest nonzero eigenvalues.
    pub solenoidal: DMatrix<f64>,
    pub solenoidal_eigenvalues: Vec<f64>,
    /// Set when fewer vectors were available than requested.
    pub truncated: bool,
}

impl HodgeBases {
    /// `(N0, N1, N2)`: harmonic, irrotational and solenoidal counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        (
            self.harmonic.ncols(),
            self.irrotational.ncols(),
            self.solenoidal.ncols(),
        )
    }

    /// Keeps the first `n_irr` irrotational and `n_sol` solenoidal columns.
    pub fn truncate(&self, n_irr: usize, n_sol: usize) -> HodgeBases {
        let ni = n_irr.min(self.irrotational.ncols());
        let ns = n_sol.min(self.solenoidal.ncols());
        HodgeBases {
            harmonic: self.harmonic.clone(),
            irrotational: self.irrotational.columns(0, ni).into_owned(),
            irrotational_eigenvalues: self.irrotational_eigenvalues[..ni].to_vec(),
            solenoidal: self.solenoidal.columns(0, ns).into_owned(),
            solenoidal_eigenvalues: self.solenoidal_eigenvalues[..ns].to_vec(),
            truncated: self.truncated || ni < n_irr || ns < n_sol,
        }
    }

    pub fn dim_k(&self) -> usize {
        self.harmonic.nrows()
    }
}

fn smallest_nonzero(m: &DMatrix<f64>, count: usize) -> Result<(DMatrix<f64>, Vec<f64>, bool)> {
    let spec = eig_sym(m)?;
    let idx: Vec<usize> = (0..spec.len())
        .filter(|&i| spec.eigenvalues[i] > spec.zero_tol)
        .take(count)
        .collect();
    let vecs = DMatrix::from_fn(m.nrows(), idx.len(), |r, c| spec.eigenvectors[(r, idx[c])]);
    let vals = idx.iter().map(|&i| spec.eigenvalues[i]).collect();
    Ok((vecs, vals, idx.len() < count))
}

/// Spectral bases of the harmonic, irrotational and solenoidal subspaces.
///
/// The irrotational and solenoidal blocks skip zero eigenvalues, so the three
/// blocks span mutually orthogonal subspaces. If fewer nonzero eigenvalues
/// exist than requested the blocks are truncated and `truncated` is set.
pub fn spectral_bases(
    rep: &ChainComplexRep,
    k: usize,
    n_irr: usize,
    n_sol: usize,
) -> Result<HodgeBases> {
    let lk = laplacian(rep, k)?;
    let spec = eig_sym(&lk)?;
    let n0 = spec.nullity();
    let harmonic = spec.eigenvectors.columns(0, n0).into_owned();

    let down = rep.boundary_f64(k);
    let up = rep.boundary_f64(k + 1);
    let (irrotational, irrotational_eigenvalues, t1) =
        smallest_nonzero(&(down.transpose() * &down), n_irr)?;
    let (solenoidal, solenoidal_eigenvalues, t2) =
        smallest_nonzero(&(&up * up.transpose()), n_sol)?;
    if t1 || t2 {
        log::warn!(
            "spectral bases truncated: requested ({n_irr}, {n_sol}), available ({}, {})",
            irrotational.ncols(),
            solenoidal.ncols()
        );
    }
    Ok(HodgeBases {
        harmonic,
        irrotational,
        irrotational_eigenvalues,
        solenoidal,
        solenoidal_eigenvalues,
        truncated: t1 || t2,
    })
}

/// Orthogonal Hodge decomposition of a real or function-valued `k`-chain.
///
/// `x_neg1` is the projection onto `im B_kᵀ`, `x1` the projection onto
/// `im B_{k+1}` and `x0` the harmonic remainder. The certificates `y_neg1`,
/// `y1` are minimum-norm least-squares preimages. The reported objective is
/// `‖x0‖₂`.
pub fn hodge_decompose(rep: &ChainComplexRep, x: &ChainVector) -> Result<DecompositionResult> {
    let cols = match x.system() {
        CoefficientSystem::Real | CoefficientSystem::FourierFn { .. } => {
            x.real_columns().expect("real-linear system")
        }
        other => {
            return Err(Error::Unsupported(format!(
                "Hodge decomposition needs real or function coefficients, got {other}; \
                 use learn::solve_fundamental for general coefficient groups"
            )))
        }
    };
    let k = x.degree();
    if k < 0 || rep.dim(k) != x.len() {
        return Err(Error::Mismatch(format!(
            "degree-{k} chain of length {} does not fit the complex",
            x.len()
        )));
    }
    let ku = k as usize;
    let down_t = rep.boundary_f64(ku).transpose();
    let up = rep.boundary_f64(ku + 1);

    let x_neg1 = project(&range_basis(&down_t), &cols);
    let x1 = project(&range_basis(&up), &cols);
    let x0 = &cols - &x_neg1 - &x1;
    let y_neg1 = lstsq_min_norm(&down_t, &cols);
    let y1 = lstsq_min_norm(&up, &cols);

    let objective = x0.norm();
    Ok(DecompositionResult {
        x0: x.with_real_columns(k, x0),
        x1: x.with_real_columns(k, x1),
        x_neg1: x.with_real_columns(k, x_neg1),
        y1: x.with_real_columns(k + 1, y1),
        y_neg1: x.with_real_columns(k - 1, y_neg1),
        objective,
        residual: 0.0,
        model: Model::Hodge,
    })
}

/// Both sides of the Courant–Fischer identity for the graph Laplacian.
#[derive(Clone, Copy, Debug)]
pub struct CourantFischer {
    /// `λ_l = ⟨e_l, L₀ e_l⟩`.
    pub lhs: f64,
    /// `‖B₁ᵀB₁ y_l‖² / ‖B₁ y_l‖²` with `B₁ y_l = e_l`.
    pub rhs: f64,
    /// `|lhs - rhs| / max(|lhs|, 1e-300)`.
    pub gap: f64,
}

/// Checks `λ_l = ‖B₁ᵀB₁ y_l‖² / ‖B₁ y_l‖²` for the `l`-th (1-based)
/// eigenpair of `L₀` of a connected graph, `l >= 2`.
pub fn courant_fischer_check(rep: &ChainComplexRep, l: usize) -> Result<CourantFischer> {
    let n0 = rep.dim(0);
    if l < 2 || l > n0 {
        return Err(Error::InvalidArgument(format!(
            "eigen index l = {l} must lie in 2..={n0}"
        )));
    }
    let l0 = laplacian(rep, 0)?;
    let spec = eig_sym(&l0)?;
    if spec.nullity() != 1 {
        return Err(Error::InvalidArgument(format!(
            "graph is not connected: harmonic space has dimension {}",
            spec.nullity()
        )));
    }
    let e = spec.eigenvectors.column(l - 1).into_owned();
    let lhs = e.dot(&(&l0 * &e));
    let b1 = rep.boundary_f64(1);
    let y = lstsq_min_norm(&b1, &DMatrix::from_column_slice(n0, 1, e.as_slice()));
    let by = &b1 * &y;
    let bby = b1.transpose() * &by;
    let rhs = bby.norm_squared() / by.norm_squared();
    let gap = (lhs - rhs).abs() / lhs.abs().max(1e-300);
    Ok(CourantFischer { lhs, rhs, gap })
}

/// Real rank as decided by the shared zero tolerance.
pub fn rank(m: &DMatrix<f64>) -> usize {
    linalg::real_rank(m)
}
