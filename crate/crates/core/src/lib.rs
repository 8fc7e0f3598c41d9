//! Signal processing on simplicial and Δ-complexes with general coefficient
//! groups: chain complexes, exact integer homology, Hodge decompositions,
//! learning models for real, modular and function-valued chains, and the
//! reconstruction experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod coeff;
pub mod complex;
pub mod error;
pub mod experiment;
pub mod hodge;
pub mod homology;
pub mod io;
pub mod learn;
mod linalg;

pub use coeff::{ChainVector, CoefficientSystem, Value, WeightVector};
pub use complex::{
    canonical_complex, random_complex, validate, ChainComplexRep, IntMatrix, SimplicialComplex,
};
pub use error::{Error, Result};
pub use linalg::{kernel_basis, lstsq_min_norm, range_basis, real_rank, zero_tol};
