//! Coefficient systems and chains with values in them.
//!
//! A [`CoefficientSystem`] picks the abelian group `A` that signals take
//! values in. Integer boundary matrices act on every system through the
//! integer-multiple action `n·a = a + ... + a`, so the same boundary code
//! serves real, integer, modular and function-valued chains.
//!
//! Function values (`FourierFn`) are stored as coefficients in the orthonormal
//! basis `1/√(2π), sin(t)/√π, cos(t)/√π, ..., sin(mt)/√π, cos(mt)/√π` of
//! `L²[-π, π]`, so the `L²` norm is the Euclidean norm of the coefficients.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::complex::{ChainComplexRep, IntMatrix};
use crate::error::{Error, Result};

/// The value group `A` of a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoefficientSystem {
    Real,
    /// Arbitrary-precision integers.
    Integer,
    /// `ℤ/n` with `n >= 2`, normed by the discrete metric.
    ModN(u64),
    /// Truncated `L²[-π, π]` with `2 * order + 1` Fourier coefficients.
    FourierFn {
        order: usize,
    },
}

impl CoefficientSystem {
    pub fn mod_n(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "modulus must be >= 2, got {n}"
            )));
        }
        Ok(CoefficientSystem::ModN(n))
    }

    pub fn fourier(order: usize) -> Self {
        CoefficientSystem::FourierFn { order }
    }

    /// Parses `real`, `int`/`integer`, `mod:N`/`zN`, `fourier:M`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "real" | "r" => return Ok(CoefficientSystem::Real),
            "int" | "integer" | "z" => return Ok(CoefficientSystem::Integer),
            "fourier" => return Ok(CoefficientSystem::fourier(3)),
            _ => {}
        }
        let num = |rest: &str| {
            rest.parse::<u64>()
                .map_err(|_| Error::InvalidArgument(format!("bad coefficient system '{s}'")))
        };
        if let Some(rest) = s.strip_prefix("mod:").or_else(|| s.strip_prefix('z')) {
            return Self::mod_n(num(rest)?);
        }
        if let Some(rest) = s.strip_prefix("fourier:") {
            return Ok(CoefficientSystem::fourier(num(rest)? as usize));
        }
        Err(Error::InvalidArgument(format!(
            "unknown coefficient system '{s}'; expected real, int, mod:N or fourier:M"
        )))
    }

    /// Number of Fourier coefficients per value, 1 for scalar systems.
    pub fn width(&self) -> usize {
        match self {
            CoefficientSystem::FourierFn { order } => 2 * order + 1,
            _ => 1,
        }
    }

    pub fn zero(&self) -> Value {
        match *self {
            CoefficientSystem::Real => Value::Real(0.0),
            CoefficientSystem::Integer => Value::Integer(BigInt::zero()),
            CoefficientSystem::ModN(n) => Value::ModN {
                value: 0,
                modulus: n,
            },
            CoefficientSystem::FourierFn { order } => Value::Fourier(vec![0.0; 2 * order + 1]),
        }
    }
}

impl fmt::Display for CoefficientSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientSystem::Real => write!(f, "real"),
            CoefficientSystem::Integer => write!(f, "int"),
            CoefficientSystem::ModN(n) => write!(f, "mod:{n}"),
            CoefficientSystem::FourierFn { order } => write!(f, "fourier:{order}"),
        }
    }
}

/// A single element of some coefficient group.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Real(f64),
    Integer(BigInt),
    ModN { value: u64, modulus: u64 },
    Fourier(Vec<f64>),
}

impl Value {
    pub fn system(&self) -> CoefficientSystem {
        match self {
            Value::Real(_) => CoefficientSystem::Real,
            Value::Integer(_) => CoefficientSystem::Integer,
            Value::ModN { modulus, .. } => CoefficientSystem::ModN(*modulus),
            Value::Fourier(c) => CoefficientSystem::fourier(c.len() / 2),
        }
    }

    pub fn add(&self, other: &Value) -> Result<Value> {
        Ok(match (self, other) {
            (Value::Real(a), Value::Real(b)) => Value::Real(a + b),
            (Value::Integer(a), Value::Integer(b)) => Value::Integer(a + b),
            (
                Value::ModN {
                    value: a,
                    modulus: n,
                },
                Value::ModN {
                    value: b,
                    modulus: m,
                },
            ) if n == m => Value::ModN {
                value: add_mod(*a, *b, *n),
                modulus: *n,
            },
            (Value::Fourier(a), Value::Fourier(b)) if a.len() == b.len() => {
                Value::Fourier(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            _ => {
                return Err(Error::Mismatch(format!(
                    "cannot add values of {} and {}",
                    self.system(),
                    other.system()
                )))
            }
        })
    }

    pub fn neg(&self) -> Value {
        match self {
            Value::Real(a) => Value::Real(-a),
            Value::Integer(a) => Value::Integer(-a),
            Value::ModN { value, modulus } => Value::ModN {
                value: (modulus - value) % modulus,
                modulus: *modulus,
            },
            Value::Fourier(c) => Value::Fourier(c.iter().map(|x| -x).collect()),
        }
    }

    /// The integer-multiple action `n·a`.
    pub fn int_mul(&self, n: &BigInt) -> Value {
        match self {
            Value::Real(a) => Value::Real(n.to_f64().unwrap_or(f64::NAN) * a),
            Value::Integer(a) => Value::Integer(n * a),
            Value::ModN { value, modulus } => {
                let r = reduce_big(n, *modulus);
                Value::ModN {
                    value: mul_mod(r, *value, *modulus),
                    modulus: *modulus,
                }
            }
            Value::Fourier(c) => {
                let s = n.to_f64().unwrap_or(f64::NAN);
                Value::Fourier(c.iter().map(|x| s * x).collect())
            }
        }
    }

    /// `‖a‖_A`: absolute value for `ℝ`/`ℤ`, the discrete metric for `ℤ/n`,
    /// the `L²` norm for function values.
    pub fn norm(&self) -> f64 {
        match self {
            Value::Real(a) => a.abs(),
            Value::Integer(a) => a.abs().to_f64().unwrap_or(f64::INFINITY),
            Value::ModN { value, .. } => {
                if *value == 0 {
                    0.0
                } else {
                    1.0
                }
            }
            Value::Fourier(c) => c.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    /// Translation-invariant metric `d(a, b) = ‖a - b‖`.
    pub fn distance(&self, other: &Value) -> Result<f64> {
        Ok(self.add(&other.neg())?.norm())
    }
}

#[inline]
fn add_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 + b as u128) % n as u128) as u64
}

#[inline]
fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

fn reduce_big(v: &BigInt, n: u64) -> u64 {
    v.mod_floor(&BigInt::from(n))
        .to_u64()
        .expect("residue fits")
}

#[inline]
pub(crate) fn reduce_i64(v: i64, n: u64) -> u64 {
    (v as i128).rem_euclid(n as i128) as u64
}

/// Evaluates the ordered Fourier basis at `t`.
///
/// Outside `[-π, π]` the same trigonometric formulas are used, so the result
/// is the periodic extension.
pub fn fourier_basis(order: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * order + 1);
    out.push(1.0 / (2.0 * PI).sqrt());
    let s = 1.0 / PI.sqrt();
    for j in 1..=order {
        let (sin, cos) = (j as f64 * t).sin_cos();
        out.push(sin * s);
        out.push(cos * s);
    }
    out
}

/// Evaluates a function value given by its Fourier coefficients at `t`.
pub fn eval_fn(coeffs: &[f64], t: f64) -> f64 {
    let order = coeffs.len() / 2;
    fourier_basis(order, t)
        .iter()
        .zip(coeffs)
        .map(|(b, c)| b * c)
        .sum()
}

/// Storage for the values of a chain, one variant per coefficient system.
#[derive(Clone, Debug, PartialEq)]
pub enum ChainData {
    Real(DVector<f64>),
    Integer(Vec<BigInt>),
    ModN {
        modulus: u64,
        values: Vec<u64>,
    },
    /// One row per cell, one column per Fourier coefficient.
    Fourier(DMatrix<f64>),
}

/// An element of `C_k(X, A)`: one `A`-value per `k`-cell, in basis order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainVector {
    degree: isize,
    data: ChainData,
}

impl ChainVector {
    pub fn zeros(system: CoefficientSystem, degree: isize, len: usize) -> Self {
        let data = match system {
            CoefficientSystem::Real => ChainData::Real(DVector::zeros(len)),
            CoefficientSystem::Integer => ChainData::Integer(vec![BigInt::zero(); len]),
            CoefficientSystem::ModN(n) => ChainData::ModN {
                modulus: n,
                values: vec![0; len],
            },
            CoefficientSystem::FourierFn { order } => {
                ChainData::Fourier(DMatrix::zeros(len, 2 * order + 1))
            }
        };
        ChainVector { degree, data }
    }

    pub fn real(degree: isize, values: DVector<f64>) -> Self {
        ChainVector {
            degree,
            data: ChainData::Real(values),
        }
    }

    pub fn integer(degree: isize, values: Vec<BigInt>) -> Self {
        ChainVector {
            degree,
            data: ChainData::Integer(values),
        }
    }

    /// Values are reduced modulo `modulus`.
    pub fn modular(degree: isize, modulus: u64, values: &[i64]) -> Result<Self> {
        CoefficientSystem::mod_n(modulus)?;
        Ok(ChainVector {
            degree,
            data: ChainData::ModN {
                modulus,
                values: values.iter().map(|&v| reduce_i64(v, modulus)).collect(),
            },
        })
    }

    /// Function-valued chain; the coefficient matrix must have an odd number
    /// of columns `2m + 1`.
    pub fn fourier(degree: isize, coeffs: DMatrix<f64>) -> Result<Self> {
        if coeffs.ncols() % 2 != 1 {
            return Err(Error::Mismatch(format!(
                "Fourier coefficient width must be odd, got {}",
                coeffs.ncols()
            )));
        }
        Ok(ChainVector {
            degree,
            data: ChainData::Fourier(coeffs),
        })
    }

    /// Builds a chain from individual values, which must share one system.
    pub fn from_values(system: CoefficientSystem, degree: isize, values: &[Value]) -> Result<Self> {
        let mut out = ChainVector::zeros(system, degree, values.len());
        for (i, v) in values.iter().enumerate() {
            out.set(i, v)?;
        }
        Ok(out)
    }

    pub fn degree(&self) -> isize {
        self.degree
    }

    pub fn data(&self) -> &ChainData {
        &self.data
    }

    pub fn system(&self) -> CoefficientSystem {
        match &self.data {
            ChainData::Real(_) => CoefficientSystem::Real,
            ChainData::Integer(_) => CoefficientSystem::Integer,
            ChainData::ModN { modulus, .. } => CoefficientSystem::ModN(*modulus),
            ChainData::Fourier(m) => CoefficientSystem::fourier(m.ncols() / 2),
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ChainData::Real(v) => v.len(),
            ChainData::Integer(v) => v.len(),
            ChainData::ModN { values, .. } => values.len(),
            ChainData::Fourier(m) => m.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> Value {
        match &self.data {
            ChainData::Real(v) => Value::Real(v[i]),
            ChainData::Integer(v) => Value::Integer(v[i].clone()),
            ChainData::ModN { modulus, values } => Value::ModN {
                value: values[i],
                modulus: *modulus,
            },
            ChainData::Fourier(m) => Value::Fourier(m.row(i).iter().copied().collect()),
        }
    }

    pub fn set(&mut self, i: usize, value: &Value) -> Result<()> {
        if value.system() != self.system() {
            return Err(Error::Mismatch(format!(
                "value in {} stored into a {} chain",
                value.system(),
                self.system()
            )));
        }
        match (&mut self.data, value) {
            (ChainData::Real(v), Value::Real(a)) => v[i] = *a,
            (ChainData::Integer(v), Value::Integer(a)) => v[i] = a.clone(),
            (ChainData::ModN { values, .. }, Value::ModN { value, .. }) => values[i] = *value,
            (ChainData::Fourier(m), Value::Fourier(c)) => {
                for (j, x) in c.iter().enumerate() {
                    m[(i, j)] = *x;
                }
            }
            _ => unreachable!("system checked above"),
        }
        Ok(())
    }

    /// Real values, or `None` for other systems.
    pub fn as_real(&self) -> Option<&DVector<f64>> {
        match &self.data {
            ChainData::Real(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_fourier(&self) -> Option<&DMatrix<f64>> {
        match &self.data {
            ChainData::Fourier(m) => Some(m),
            _ => None,
        }
    }

    /// Real-linear view: an `n_k x width` matrix for `Real` and `FourierFn`
    /// chains, `None` otherwise.
    pub fn real_columns(&self) -> Option<DMatrix<f64>> {
        match &self.data {
            ChainData::Real(v) => Some(DMatrix::from_column_slice(v.len(), 1, v.as_slice())),
            ChainData::Fourier(m) => Some(m.clone()),
            _ => None,
        }
    }

    /// Inverse of [`ChainVector::real_columns`] for the system of `self`.
    pub(crate) fn with_real_columns(&self, degree: isize, cols: DMatrix<f64>) -> ChainVector {
        match &self.data {
            ChainData::Real(_) => ChainVector::real(degree, cols.column(0).into_owned()),
            _ => ChainVector {
                degree,
                data: ChainData::Fourier(cols),
            },
        }
    }

    fn check_compatible(&self, other: &ChainVector) -> Result<()> {
        if self.degree != other.degree
            || self.system() != other.system()
            || self.len() != other.len()
        {
            return Err(Error::Mismatch(format!(
                "chains differ: degree {} vs {}, system {} vs {}, length {} vs {}",
                self.degree,
                other.degree,
                self.system(),
                other.system(),
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &ChainVector) -> Result<ChainVector> {
        self.check_compatible(other)?;
        let data = match (&self.data, &other.data) {
            (ChainData::Real(a), ChainData::Real(b)) => ChainData::Real(a + b),
            (ChainData::Integer(a), ChainData::Integer(b)) => {
                ChainData::Integer(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (ChainData::ModN { modulus, values: a }, ChainData::ModN { values: b, .. }) => {
                ChainData::ModN {
                    modulus: *modulus,
                    values: a
                        .iter()
                        .zip(b)
                        .map(|(&x, &y)| add_mod(x, y, *modulus))
                        .collect(),
                }
            }
            (ChainData::Fourier(a), ChainData::Fourier(b)) => ChainData::Fourier(a + b),
            _ => unreachable!("system checked above"),
        };
        Ok(ChainVector {
            degree: self.degree,
            data,
        })
    }

    pub fn negate(&self) -> ChainVector {
        let data = match &self.data {
            ChainData::Real(a) => ChainData::Real(-a),
            ChainData::Integer(a) => ChainData::Integer(a.iter().map(|x| -x).collect()),
            ChainData::ModN { modulus, values } => ChainData::ModN {
                modulus: *modulus,
                values: values.iter().map(|&x| (modulus - x) % modulus).collect(),
            },
            ChainData::Fourier(a) => ChainData::Fourier(-a),
        };
        ChainVector {
            degree: self.degree,
            data,
        }
    }

    pub fn sub(&self, other: &ChainVector) -> Result<ChainVector> {
        self.add(&other.negate())
    }

    pub fn is_zero(&self) -> bool {
        match &self.data {
            ChainData::Real(a) => a.iter().all(|x| *x == 0.0),
            ChainData::Integer(a) => a.iter().all(Zero::is_zero),
            ChainData::ModN { values, .. } => values.iter().all(|&x| x == 0),
            ChainData::Fourier(a) => a.iter().all(|x| *x == 0.0),
        }
    }

    /// Applies an integer matrix (`rows x len`) through the integer action.
    fn apply_int(&self, m: &IntMatrix, degree: isize) -> Result<ChainVector> {
        if m.ncols() != self.len() {
            return Err(Error::Mismatch(format!(
                "matrix with {} columns applied to a chain of length {}",
                m.ncols(),
                self.len()
            )));
        }
        let rows = m.nrows();
        let data = match &self.data {
            ChainData::Real(x) => ChainData::Real(m.to_dmatrix() * x),
            ChainData::Fourier(x) => ChainData::Fourier(m.to_dmatrix() * x),
            ChainData::Integer(x) => ChainData::Integer(
                (0..rows)
                    .map(|r| {
                        m.row(r)
                            .iter()
                            .zip(x)
                            .filter(|(b, _)| **b != 0)
                            .map(|(b, v)| BigInt::from(*b) * v)
                            .sum()
                    })
                    .collect(),
            ),
            ChainData::ModN { modulus, values } => ChainData::ModN {
                modulus: *modulus,
                values: (0..rows)
                    .map(|r| {
                        m.row(r).iter().zip(values).fold(0u64, |acc, (b, v)| {
                            add_mod(
                                acc,
                                mul_mod(reduce_i64(*b, *modulus), *v, *modulus),
                                *modulus,
                            )
                        })
                    })
                    .collect(),
            },
        };
        Ok(ChainVector { degree, data })
    }

    /// `∂_k x` for a chain of degree `k`. For `k = 0` (or beyond the top
    /// dimension) the result lives in a zero module and has length 0 or is
    /// the zero chain of the right length.
    pub fn apply_boundary(&self, rep: &ChainComplexRep) -> Result<ChainVector> {
        let k = self.degree;
        self.check_len(rep, k)?;
        if k <= 0 {
            return Ok(ChainVector::zeros(self.system(), k - 1, 0));
        }
        self.apply_int(&rep.boundary(k as usize), k - 1)
    }

    /// `∂_{k+1}^* x` for a chain of degree `k`: the transpose of `B_{k+1}`.
    pub fn apply_coboundary(&self, rep: &ChainComplexRep) -> Result<ChainVector> {
        let k = self.degree;
        self.check_len(rep, k)?;
        if k < 0 {
            return Ok(ChainVector::zeros(self.system(), k + 1, rep.dim(k + 1)));
        }
        self.apply_int(&rep.boundary((k + 1) as usize).transpose(), k + 1)
    }

    fn check_len(&self, rep: &ChainComplexRep, k: isize) -> Result<()> {
        if rep.dim(k) != self.len() {
            return Err(Error::Mismatch(format!(
                "degree-{k} chain of length {} on a complex with {} cells in that degree",
                self.len(),
                rep.dim(k)
            )));
        }
        Ok(())
    }

    /// Per-cell norms `‖a_i‖_A`.
    pub fn value_norms(&self) -> Vec<f64> {
        match &self.data {
            ChainData::Real(v) => v.iter().map(|x| x.abs()).collect(),
            ChainData::Fourier(m) => m.row_iter().map(|r| r.norm()).collect(),
            _ => (0..self.len()).map(|i| self.value(i).norm()).collect(),
        }
    }
}

/// Non-negative per-cell weights of one degree.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some(bad) = w.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and >= 0, got {bad}"
            )));
        }
        Ok(WeightVector(w))
    }

    pub fn ones(n: usize) -> Self {
        WeightVector(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.0.iter().all(|&x| x == 1.0)
    }
}

/// Supported exponents for weighted chain norms and the solvers.
pub const SUPPORTED_P: &str = "{1, 2}";

pub(crate) fn check_p(p: u32) -> Result<()> {
    if p == 1 || p == 2 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "p = {p}; supported p in {SUPPORTED_P}"
        )))
    }
}

/// Weighted `p`-norm `(Σ w_i^p ‖a_i‖_A^p)^(1/p)`.
///
/// For `ℤ/n` every nonzero value has norm 1, so with unit weights this is a
/// Hamming weight (raised to `1/p`).
pub fn norm_p(x: &ChainVector, p: u32, w: &WeightVector) -> Result<f64> {
    check_p(p)?;
    if w.len() != x.len() {
        return Err(Error::Mismatch(format!(
            "{} weights for a chain of length {}",
            w.len(),
            x.len()
        )));
    }
    let pf = p as f64;
    let total: f64 = x
        .value_norms()
        .iter()
        .zip(w.as_slice())
        .map(|(a, wi)| (wi * a).powf(pf))
        .sum();
    Ok(total.powf(1.0 / pf))
}
