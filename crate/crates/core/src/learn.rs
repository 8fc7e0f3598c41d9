//! Optimisation models on chains: the fundamental decomposition, the
//! smoothness-regularised decomposition and reconstruction of function-valued
//! edge signals from asynchronous samples, plus the signal synthesiser and
//! sampler used by the experiments.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::baselines::GridEstimate;
use crate::coeff::{check_p, fourier_basis, norm_p, ChainVector, CoefficientSystem, WeightVector};
use crate::complex::ChainComplexRep;
use crate::error::{Error, Result};
use crate::hodge::{spectral_bases, HodgeBases};
use crate::homology::{z2, Z2_EXHAUSTIVE_MAX_RANK};
use crate::linalg::{lstsq_min_norm, range_basis, solve_spd};

/// Which model produced a [`DecompositionResult`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Hodge,
    Fundamental,
    Smooth,
    Reconstruct,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Hodge => "hodge",
            Model::Fundamental => "fundamental",
            Model::Smooth => "smooth",
            Model::Reconstruct => "reconstruct",
        })
    }
}

/// A split `x' = x0 + x1 + x_neg1` with `x1 = ∂_{k+1} y1` and
/// `x_neg1 = ∂_kᵀ y_neg1`.
///
/// For the fundamental model `x' = x`. The smooth and reconstruction models
/// fit `x'` to the data and report the fit error in `residual`.
#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub x0: ChainVector,
    pub x1: ChainVector,
    pub x_neg1: ChainVector,
    pub y1: ChainVector,
    pub y_neg1: ChainVector,
    pub objective: f64,
    pub residual: f64,
    pub model: Model,
}

impl DecompositionResult {
    /// `x0 + x1 + x_neg1`.
    pub fn recombined(&self) -> Result<ChainVector> {
        self.x0.add(&self.x1)?.add(&self.x_neg1)
    }
}

fn check_chain(rep: &ChainComplexRep, x: &ChainVector, w: Option<&WeightVector>) -> Result<usize> {
    let k = x.degree();
    if k < 0 || rep.top_dim().is_none_or(|t| k as usize > t) || rep.dim(k) != x.len() {
        return Err(Error::Mismatch(format!(
            "degree-{k} chain of length {} does not fit the complex",
            x.len()
        )));
    }
    if let Some(w) = w {
        if w.len() != x.len() {
            return Err(Error::Mismatch(format!(
                "{} weights for a chain of length {}",
                w.len(),
                x.len()
            )));
        }
    }
    Ok(k as usize)
}

fn diag_rows(w: &WeightVector, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (r, wi) in w.as_slice().iter().enumerate() {
        out.row_mut(r).scale_mut(*wi);
    }
    out
}

/// Fundamental learning model: minimise `‖x0‖_{p,w}` subject to
/// `x = x0 + x1 + x_neg1`, `x0 ∈ ker ∂_k`, `x1 ∈ im ∂_{k+1}`,
/// `x_neg1 ∈ im ∂_kᵀ`.
///
/// Supported:
/// * `Real` / `FourierFn` with `p = 2`. `x_neg1` is forced to be the
///   projection onto `im ∂_kᵀ`; `x1` is the weighted least-squares fit of the
///   remainder inside `im ∂_{k+1}`. With unit weights this is exactly the
///   Hodge decomposition.
/// * `ModN(2)` with `p ∈ {1, 2}`, by exhaustive search over
///   `im ∂_{k+1} x im ∂_kᵀ` (combined rank at most 24). Ties go to the
///   lexicographically smallest `(y1, y_neg1)`.
pub fn solve_fundamental(
    rep: &ChainComplexRep,
    x: &ChainVector,
    p: u32,
    w: &WeightVector,
) -> Result<DecompositionResult> {
    check_p(p)?;
    let k = check_chain(rep, x, Some(w))?;
    match x.system() {
        CoefficientSystem::Real | CoefficientSystem::FourierFn { .. } => {
            if p != 2 {
                return Err(Error::Unsupported(format!(
                    "fundamental model over {} needs p = 2; p = 1 is supported over mod:2",
                    x.system()
                )));
            }
            fundamental_l2(rep, k, x, w)
        }
        CoefficientSystem::ModN(2) => fundamental_z2(rep, k, x, p, w),
        other => Err(Error::Unsupported(format!(
            "fundamental model over {other}; supported: real/fourier with p = 2, mod:2 with p in {{1, 2}}"
        ))),
    }
}

fn fundamental_l2(
    rep: &ChainComplexRep,
    k: usize,
    x: &ChainVector,
    w: &WeightVector,
) -> Result<DecompositionResult> {
    let cols = x.real_columns().expect("real-linear system");
    let down_t = rep.boundary_f64(k).transpose();
    let up = rep.boundary_f64(k + 1);

    let q_down = range_basis(&down_t);
    let x_neg1 = &q_down * (q_down.transpose() * &cols);
    let x_ker = &cols - &x_neg1;
    let x1 = if w.is_unit() {
        let q_up = range_basis(&up);
        &q_up * (q_up.transpose() * &x_ker)
    } else {
        let z = lstsq_min_norm(&diag_rows(w, &up), &diag_rows(w, &x_ker));
        &up * z
    };
    let x0 = &x_ker - &x1;
    let y1 = lstsq_min_norm(&up, &x1);
    let y_neg1 = lstsq_min_norm(&down_t, &x_neg1);

    let x0 = x.with_real_columns(k as isize, x0);
    let objective = norm_p(&x0, 2, w)?;
    Ok(DecompositionResult {
        x1: x.with_real_columns(k as isize, x1),
        x_neg1: x.with_real_columns(k as isize, x_neg1),
        y1: x.with_real_columns(k as isize + 1, y1),
        y_neg1: x.with_real_columns(k as isize - 1, y_neg1),
        x0,
        objective,
        residual: 0.0,
        model: Model::Fundamental,
    })
}

struct Z2Best {
    cost: f64,
    y1: z2::Bits,
    y_neg1: z2::Bits,
    x0: z2::Bits,
    x1: z2::Bits,
    x_neg1: z2::Bits,
}

fn fundamental_z2(
    rep: &ChainComplexRep,
    k: usize,
    x: &ChainVector,
    p: u32,
    w: &WeightVector,
) -> Result<DecompositionResult> {
    let down_int = rep.boundary(k);
    let bits = z2::chain_bits(x);
    let down = z2::BitMatrix::from_int(&down_int);
    let target = down.mul_vec(&bits);

    let coimage = z2::ImageBasis::new(&down_int.transpose());
    let image = z2::ImageBasis::new(&rep.boundary(k + 1));
    let total = coimage.rank() + image.rank();
    if total > Z2_EXHAUSTIVE_MAX_RANK {
        return Err(Error::Unsupported(format!(
            "exhaustive mod-2 search over rank {} + {} exceeds the limit of {}",
            coimage.rank(),
            image.rank(),
            Z2_EXHAUSTIVE_MAX_RANK
        )));
    }
    let cost = z2::Cost::new(w, p);
    let n = x.len();
    let mut best: Option<Z2Best> = None;

    let mut visit_neg = |x_neg1: &z2::Bits, mask_neg: u64| {
        if down.mul_vec(x_neg1) != target {
            return;
        }
        let y_neg1 = coimage.preimage(mask_neg);
        let v = bits.xor(x_neg1);
        let mut consider = |x1: &z2::Bits, mask: u64| {
            let x0 = v.xor(x1);
            let c = cost.of(&x0);
            let better = match &best {
                None => true,
                Some(b) => match c.total_cmp(&b.cost) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        let y1 = image.preimage(mask);
                        y1.lex_cmp(&b.y1).then(y_neg1.lex_cmp(&b.y_neg1)) == Ordering::Less
                    }
                },
            };
            if better {
                best = Some(Z2Best {
                    cost: c,
                    y1: image.preimage(mask),
                    y_neg1: y_neg1.clone(),
                    x0,
                    x1: x1.clone(),
                    x_neg1: x_neg1.clone(),
                });
            }
        };
        consider(&z2::Bits::zeros(n), 0);
        image.for_each_element(&mut consider);
    };
    visit_neg(&z2::Bits::zeros(n), 0);
    coimage.for_each_element(&mut visit_neg);

    let Some(b) = best else {
        return Err(Error::Infeasible(format!(
            "no decomposition of the degree-{k} chain exists mod 2: \
             ∂x is not in the image of ∂∂ᵀ"
        )));
    };
    let kk = k as isize;
    Ok(DecompositionResult {
        x0: z2::bits_chain(kk, &b.x0),
        x1: z2::bits_chain(kk, &b.x1),
        x_neg1: z2::bits_chain(kk, &b.x_neg1),
        y1: z2::bits_chain(kk + 1, &b.y1),
        y_neg1: z2::bits_chain(kk - 1, &b.y_neg1),
        objective: b.cost,
        residual: 0.0,
        model: Model::Fundamental,
    })
}

/// Smoothness-regularised decomposition:
///
/// ```text
/// min ‖x' - x‖²_w + (‖∂_{k+1}ᵀ x1‖² + ‖∂_k x_neg1‖²) / eta
/// x' = x0 + x1 + x_neg1,  x0 ∈ ker L_k,  x1 ∈ im ∂_{k+1},  x_neg1 ∈ im ∂_kᵀ
/// ```
///
/// The three parts are parametrised in orthonormal bases of their subspaces
/// and the normal equations are solved directly. Weights apply to the data
/// term only.
pub fn solve_smooth(
    rep: &ChainComplexRep,
    x: &ChainVector,
    eta: f64,
    w: &WeightVector,
) -> Result<DecompositionResult> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "eta must be positive and finite, got {eta}"
        )));
    }
    let k = check_chain(rep, x, Some(w))?;
    let cols = match x.system() {
        CoefficientSystem::Real | CoefficientSystem::FourierFn { .. } => {
            x.real_columns().expect("real-linear system")
        }
        other => {
            return Err(Error::Unsupported(format!(
                "smooth model over {other}; supported: real and fourier (p = 2)"
            )))
        }
    };
    let down = rep.boundary_f64(k);
    let up = rep.boundary_f64(k + 1);
    let h = spectral_bases(rep, k, 0, 0)?.harmonic;
    let q1 = range_basis(&up);
    let qn = range_basis(&down.transpose());
    let (n0, n1, nn) = (h.ncols(), q1.ncols(), qn.ncols());
    let n = x.len();

    let mut basis = DMatrix::zeros(n, n0 + n1 + nn);
    basis.columns_mut(0, n0).copy_from(&h);
    basis.columns_mut(n0, n1).copy_from(&q1);
    basis.columns_mut(n0 + n1, nn).copy_from(&qn);

    let wsq: Vec<f64> = w.as_slice().iter().map(|v| v * v).collect();
    let wb = DMatrix::from_fn(n, basis.ncols(), |r, c| wsq[r] * basis[(r, c)]);
    let mut normal = basis.transpose() * &wb;
    let pen_up = {
        let t = up.transpose() * &q1;
        t.transpose() * t / eta
    };
    let pen_down = {
        let t = &down * &qn;
        t.transpose() * t / eta
    };
    let mut sub = normal.view_mut((n0, n0), (n1, n1));
    sub += &pen_up;
    let mut sub = normal.view_mut((n0 + n1, n0 + n1), (nn, nn));
    sub += &pen_down;
    let rhs = wb.transpose() * &cols;

    let (z, jitter) = solve_spd(&normal, &rhs)
        .ok_or_else(|| Error::Numerical("smooth model: normal equations not solvable".into()))?;
    if jitter {
        log::warn!("smooth model: normal equations were singular, solved with jitter");
    }
    let x0 = &h * z.rows(0, n0);
    let x1 = &q1 * z.rows(n0, n1);
    let x_neg1 = &qn * z.rows(n0 + n1, nn);
    let fitted = &x0 + &x1 + &x_neg1;
    let diff = &fitted - &cols;
    let data: f64 = (0..n).map(|r| wsq[r] * diff.row(r).norm_squared()).sum();
    let penalty = ((up.transpose() * &x1).norm_squared() + (&down * &x_neg1).norm_squared()) / eta;
    let y1 = lstsq_min_norm(&up, &x1);
    let y_neg1 = lstsq_min_norm(&down.transpose(), &x_neg1);
    let kk = k as isize;
    Ok(DecompositionResult {
        x0: x.with_real_columns(kk, x0),
        x1: x.with_real_columns(kk, x1),
        x_neg1: x.with_real_columns(kk, x_neg1),
        y1: x.with_real_columns(kk + 1, y1),
        y_neg1: x.with_real_columns(kk - 1, y_neg1),
        objective: data + penalty,
        residual: diff.norm(),
        model: Model::Smooth,
    })
}

/// Parameters of the random function-valued edge signals.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    /// Number of irrotational basis vectors (smallest nonzero eigenvalues).
    pub n_irr: usize,
    /// Number of solenoidal basis vectors.
    pub n_sol: usize,
    /// Highest Fourier frequency; the time basis has `2 * order + 1` functions.
    pub order: usize,
    /// Variance of the harmonic coefficients.
    pub harmonic_variance: f64,
    /// Coefficient `i` (1-based) of the other blocks has variance
    /// `decay_variance / i`.
    pub decay_variance: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_irr: 20,
            n_sol: 20,
            order: 3,
            harmonic_variance: 1.0,
            decay_variance: 1.0,
            seed: 0,
        }
    }
}

/// A synthesised signal with the bases and coefficients that produced it.
#[derive(Clone, Debug)]
pub struct Synthesized {
    /// Function-valued 1-chain.
    pub signal: ChainVector,
    pub bases: HodgeBases,
    /// Coefficient matrices `(harmonic, irrotational, solenoidal)`, each
    /// `count x (2 * order + 1)`.
    pub coefficients: (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>),
}

impl Synthesized {
    /// Actual block sizes `(N0, N1, N2)` after truncation.
    pub fn counts(&self) -> (usize, usize, usize) {
        self.bases.counts()
    }
}

/// `[harmonic | irrotational | solenoidal]` as one matrix.
pub fn stacked_basis(b: &HodgeBases) -> DMatrix<f64> {
    let (n0, n1, n2) = b.counts();
    let mut u = DMatrix::zeros(b.dim_k(), n0 + n1 + n2);
    u.columns_mut(0, n0).copy_from(&b.harmonic);
    u.columns_mut(n0, n1).copy_from(&b.irrotational);
    u.columns_mut(n0 + n1, n2).copy_from(&b.solenoidal);
    u
}

fn draw_block(
    rng: &mut ChaCha8Rng,
    rows: usize,
    t: usize,
    var: impl Fn(usize) -> f64,
) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(rows, t);
    for i in 0..rows {
        let sd = var(i + 1).sqrt();
        for j in 0..t {
            let z: f64 = rng.sample(StandardNormal);
            c[(i, j)] = sd * z;
        }
    }
    c
}

/// Random function-valued edge signal in the span of the spectral bases
/// tensored with the truncated Fourier basis.
pub fn synthesize(rep: &ChainComplexRep, spec: &SynthSpec) -> Result<Synthesized> {
    if !(spec.harmonic_variance >= 0.0) || !(spec.decay_variance >= 0.0) {
        return Err(Error::InvalidArgument(
            "variances must be non-negative".into(),
        ));
    }
    let bases = spectral_bases(rep, 1, spec.n_irr, spec.n_sol)?;
    let (n0, n1, n2) = bases.counts();
    let t = 2 * spec.order + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let c0 = draw_block(&mut rng, n0, t, |_| spec.harmonic_variance);
    let c1 = draw_block(&mut rng, n1, t, |i| spec.decay_variance / i as f64);
    let c2 = draw_block(&mut rng, n2, t, |i| spec.decay_variance / i as f64);
    let coeffs = &bases.harmonic * &c0 + &bases.irrotational * &c1 + &bases.solenoidal * &c2;
    Ok(Synthesized {
        signal: ChainVector::fourier(1, coeffs)?,
        bases,
        coefficients: (c0, c1, c2),
    })
}

/// Per-edge asynchronous noisy observations `(t, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub edges: Vec<Vec<(f64, f64)>>,
    pub samples_per_edge: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl SampleSet {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
}

/// Draws `m` uniform times in `[-π, π]` per edge and observes the signal
/// there with additive `N(0, sigma²)` noise.
///
/// Each edge uses its own random stream, so for a fixed seed the samples
/// for `m` are a prefix of the samples for any larger `m`.
pub fn sample_async(f: &ChainVector, m: usize, sigma: f64, seed: u64) -> Result<SampleSet> {
    let coeffs = f.as_fourier().ok_or_else(|| {
        Error::Unsupported(format!(
            "sampling needs a function-valued chain, got {}",
            f.system()
        ))
    })?;
    if m == 0 {
        return Err(Error::InvalidArgument(
            "need at least one sample per edge".into(),
        ));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise level must be >= 0, got {sigma}"
        )));
    }
    let order = (coeffs.ncols() - 1) / 2;
    let edges = (0..coeffs.nrows())
        .map(|e| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(e as u64);
            let row: Vec<f64> = coeffs.row(e).iter().copied().collect();
            (0..m)
                .map(|_| {
                    let t = rng.random_range(-PI..=PI);
                    let z: f64 = rng.sample(StandardNormal);
                    let clean: f64 = fourier_basis(order, t)
                        .iter()
                        .zip(&row)
                        .map(|(a, b)| a * b)
                        .sum();
                    (t, clean + sigma * z)
                })
                .collect()
        })
        .collect();
    Ok(SampleSet {
        edges,
        samples_per_edge: m,
        sigma,
        seed,
    })
}

/// Output of [`reconstruct_gssc`].
#[derive(Clone, Debug)]
pub struct Reconstruction {
    /// Function-valued 1-chain `x0 + x1 + x_neg1`.
    pub estimate: ChainVector,
    pub decomposition: DecompositionResult,
    /// Whether the normal equations needed the diagonal jitter.
    pub jittered: bool,
}

/// Penalised least-squares reconstruction of a function-valued edge signal
/// from asynchronous samples.
///
/// The estimate is `Σ_blocks U_block · A_block · Ψ(t)` where the blocks are
/// the harmonic, irrotational and solenoidal columns of `bases` and `Ψ` the
/// truncated Fourier basis of the given order. The objective is the sum of
/// squared sample residuals plus
/// `(‖B₂ᵀ x1‖² + ‖B₁ x_neg1‖²) / eta`, evaluated on the Fourier coefficients.
///
/// Pass `bases.truncate(15, 15)` for the sub-basis variant.
pub fn reconstruct_gssc(
    rep: &ChainComplexRep,
    samples: &SampleSet,
    bases: &HodgeBases,
    order: usize,
    eta: f64,
) -> Result<Reconstruction> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "eta must be positive and finite, got {eta}"
        )));
    }
    let n_e = rep.dim(1);
    if bases.dim_k() != n_e || samples.n_edges() != n_e {
        return Err(Error::Mismatch(format!(
            "complex has {n_e} edges, bases have {} rows, samples cover {} edges",
            bases.dim_k(),
            samples.n_edges()
        )));
    }
    let t = 2 * order + 1;
    let u = stacked_basis(bases);
    let (n0, n1, n2) = bases.counts();
    let n = n0 + n1 + n2;
    let dim = n * t;

    let mut normal = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    for (e, obs) in samples.edges.iter().enumerate() {
        let mut gram = DMatrix::<f64>::zeros(t, t);
        let mut g = DVector::<f64>::zeros(t);
        for &(ti, yi) in obs {
            let psi = DVector::from_vec(fourier_basis(order, ti));
            gram.ger(1.0, &psi, &psi, 1.0);
            g.axpy(yi, &psi, 1.0);
        }
        let ue = u.row(e);
        for a in 0..n {
            let ua = ue[a];
            if ua == 0.0 {
                continue;
            }
            rhs.rows_mut(a * t, t).axpy(ua, &g, 1.0);
            for b in 0..n {
                let s = ua * ue[b];
                if s != 0.0 {
                    let mut blk = normal.view_mut((a * t, b * t), (t, t));
                    blk += &gram * s;
                }
            }
        }
    }
    let down = rep.boundary_f64(1);
    let up = rep.boundary_f64(2);
    let pen_irr = {
        let m = &down * &bases.irrotational;
        m.transpose() * m / eta
    };
    let pen_sol = {
        let m = up.transpose() * &bases.solenoidal;
        m.transpose() * m / eta
    };
    for (off, pen) in [(n0, &pen_irr), (n0 + n1, &pen_sol)] {
        for a in 0..pen.nrows() {
            for b in 0..pen.ncols() {
                let v = pen[(a, b)];
                if v != 0.0 {
                    for j in 0..t {
                        normal[((off + a) * t + j, (off + b) * t + j)] += v;
                    }
                }
            }
        }
    }

    let rhs_m = DMatrix::from_column_slice(dim, 1, rhs.as_slice());
    let (theta, jittered) = solve_spd(&normal, &rhs_m)
        .ok_or_else(|| Error::Numerical("reconstruction: normal equations not solvable".into()))?;
    if jittered {
        log::warn!("reconstruction: normal equations singular or ill-conditioned; solved with 1e-10 jitter");
    }
    // theta[a * t + j] -> coefficient matrix n x t
    let coef = DMatrix::from_fn(n, t, |a, j| theta[(a * t + j, 0)]);
    let x0 = &bases.harmonic * coef.rows(0, n0);
    let x_neg1 = &bases.irrotational * coef.rows(n0, n1);
    let x1 = &bases.solenoidal * coef.rows(n0 + n1, n2);
    let est = &x0 + &x1 + &x_neg1;

    let mut sse = 0.0;
    for (e, obs) in samples.edges.iter().enumerate() {
        let row: Vec<f64> = est.row(e).iter().copied().collect();
        for &(ti, yi) in obs {
            let f: f64 = fourier_basis(order, ti)
                .iter()
                .zip(&row)
                .map(|(a, b)| a * b)
                .sum();
            sse += (f - yi).powi(2);
        }
    }
    let penalty = ((up.transpose() * &x1).norm_squared() + (&down * &x_neg1).norm_squared()) / eta;
    let y1 = lstsq_min_norm(&up, &x1);
    let y_neg1 = lstsq_min_norm(&down.transpose(), &x_neg1);
    let decomposition = DecompositionResult {
        x0: ChainVector::fourier(1, x0)?,
        x1: ChainVector::fourier(1, x1)?,
        x_neg1: ChainVector::fourier(1, x_neg1)?,
        y1: ChainVector::fourier(2, y1)?,
        y_neg1: ChainVector::fourier(0, y_neg1)?,
        objective: sse + penalty,
        residual: sse.sqrt(),
        model: Model::Reconstruct,
    };
    Ok(Reconstruction {
        estimate: ChainVector::fourier(1, est)?,
        decomposition,
        jittered,
    })
}

/// Splits every edge's samples into a fit part and a held-out part of
/// `round(holdout * M)` samples (at least one, at most `M - 1`).
pub fn holdout_split(
    samples: &SampleSet,
    holdout: f64,
    seed: u64,
) -> Result<(SampleSet, SampleSet)> {
    let m = samples.samples_per_edge;
    if m < 2 {
        return Err(Error::InvalidArgument(
            "held-out selection needs at least 2 samples per edge".into(),
        ));
    }
    let h = ((holdout * m as f64).round() as usize).clamp(1, m - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fit = Vec::with_capacity(samples.n_edges());
    let mut held = Vec::with_capacity(samples.n_edges());
    for obs in &samples.edges {
        let mut idx: Vec<usize> = (0..obs.len()).collect();
        idx.shuffle(&mut rng);
        held.push(idx[..h].iter().map(|&i| obs[i]).collect());
        fit.push(idx[h..].iter().map(|&i| obs[i]).collect());
    }
    let mk = |edges: Vec<Vec<(f64, f64)>>, count| SampleSet {
        edges,
        samples_per_edge: count,
        sigma: samples.sigma,
        seed: samples.seed,
    };
    Ok((mk(fit, m - h), mk(held, h)))
}

/// Mean squared error of a function-valued chain on a sample set.
pub fn sample_mse(f: &ChainVector, samples: &SampleSet) -> Result<f64> {
    let coeffs = f
        .as_fourier()
        .ok_or_else(|| Error::Unsupported("need a function-valued chain".into()))?;
    let order = (coeffs.ncols() - 1) / 2;
    let mut total = 0.0;
    let mut count = 0usize;
    for (e, obs) in samples.edges.iter().enumerate() {
        for &(t, y) in obs {
            let v: f64 = fourier_basis(order, t)
                .iter()
                .zip(coeffs.row(e).iter())
                .map(|(a, b)| a * b)
                .sum();
            total += (v - y).powi(2);
            count += 1;
        }
    }
    Ok(total / count.max(1) as f64)
}

/// Picks `eta` from `grid` by held-out mean squared error; ties keep the
/// earlier grid entry.
pub fn select_eta(
    rep: &ChainComplexRep,
    samples: &SampleSet,
    bases: &HodgeBases,
    order: usize,
    grid: &[f64],
    holdout: f64,
    seed: u64,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty eta grid".into()));
    }
    let (fit, held) = holdout_split(samples, holdout, seed)?;
    let mut best = (f64::INFINITY, grid[0]);
    for &eta in grid {
        let r = reconstruct_gssc(rep, &fit, bases, order, eta)?;
        let err = sample_mse(&r.estimate, &held)?;
        if err < best.0 {
            best = (err, eta);
        }
    }
    Ok(best.1)
}

/// Number of points of the evaluation grid.
pub const GRID_POINTS: usize = 100;

/// 100 equispaced instants in `[-π, π]`, both ends included.
pub fn eval_grid_points() -> Vec<f64> {
    (0..GRID_POINTS)
        .map(|i| -PI + 2.0 * PI * i as f64 / (GRID_POINTS - 1) as f64)
        .collect()
}

/// Values of a function-valued chain on the evaluation grid.
pub fn eval_grid(f: &ChainVector) -> Result<GridEstimate> {
    let coeffs = f.as_fourier().ok_or_else(|| {
        Error::Unsupported(format!(
            "grid evaluation needs a function-valued chain, got {}",
            f.system()
        ))
    })?;
    let order = (coeffs.ncols() - 1) / 2;
    let pts = eval_grid_points();
    let psi = DMatrix::from_fn(coeffs.ncols(), pts.len(), |j, i| {
        fourier_basis(order, pts[i])[j]
    });
    GridEstimate::new(coeffs * psi)
}

/// `Σ (f̂ - f)² / Σ f²` over all edges and grid instants (no square root).
pub fn error_ratio(estimate: &GridEstimate, truth: &GridEstimate) -> Result<f64> {
    let (a, b) = (estimate.values(), truth.values());
    if a.shape() != b.shape() {
        return Err(Error::Mismatch(format!(
            "grid shapes differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let energy = b.norm_squared();
    if energy == 0.0 {
        return Err(Error::InvalidArgument(
            "truth has zero energy; error ratio undefined".into(),
        ));
    }
    Ok((a - b).norm_squared() / energy)
}
