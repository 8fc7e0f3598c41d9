//! Homology over `ℤ`, `ℝ` and `ℤ/p`, and simplicial seminorms.
//!
//! Integer homology goes through an exact Smith normal form with
//! arbitrary-precision entries:
//!
//! ```text
//! H_k(X, ℤ) ≅ ℤ^(n_k - rank B_k - rank B_{k+1}) ⊕ ⨁ ℤ/d_i
//! ```
//!
//! where the `d_i > 1` are the invariant factors of `B_{k+1}`.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::coeff::{
    check_p, norm_p, reduce_i64, ChainData, ChainVector, CoefficientSystem, WeightVector,
};
use crate::complex::{ChainComplexRep, IntMatrix};
use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, real_rank};

/// Dense matrix of arbitrary-precision integers, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl BigMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BigMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        BigMatrix { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn mul(&self, rhs: &BigMatrix) -> BigMatrix {
        assert_eq!(self.cols, rhs.rows, "BigMatrix::mul shape mismatch");
        let mut out = BigMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    let b = &rhs[(k, c)];
                    if !b.is_zero() {
                        out[(r, c)] += a * b;
                    }
                }
            }
        }
        out
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a[(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                    Some(i) => {
                        a.swap_rows(k, i);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)]) / &prev;
                    a[(i, j)] = v;
                }
            }
            prev = a[(k, k)].clone();
        }
        sign * &a[(n - 1, n - 1)]
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + i, r * self.cols + j);
        }
    }

    /// `row[dst] -= q * row[src]`
    fn row_axpy(&mut self, dst: usize, src: usize, q: &BigInt) {
        for c in 0..self.cols {
            let v = &self[(src, c)] * q;
            if !v.is_zero() {
                self[(dst, c)] -= v;
            }
        }
    }

    /// `col[dst] -= q * col[src]`
    fn col_axpy(&mut self, dst: usize, src: usize, q: &BigInt) {
        for r in 0..self.rows {
            let v = &self[(r, src)] * q;
            if !v.is_zero() {
                self[(r, dst)] -= v;
            }
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = -&self[(r, c)];
            self[(r, c)] = v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for BigMatrix {
    type Output = BigInt;
    fn index(&self, (r, c): (usize, usize)) -> &BigInt {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for BigMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut BigInt {
        &mut self.data[r * self.cols + c]
    }
}

impl From<&IntMatrix> for BigMatrix {
    fn from(m: &IntMatrix) -> Self {
        BigMatrix::from_fn(m.nrows(), m.ncols(), |r, c| BigInt::from(m.get(r, c)))
    }
}

/// Smith normal form `S = U B V` with unimodular `U`, `V`.
#[derive(Clone, Debug)]
pub struct SnfResult {
    pub s: BigMatrix,
    pub u: BigMatrix,
    pub v: BigMatrix,
    pub rank: usize,
}

impl SnfResult {
    /// The nonzero diagonal entries `d_1 | d_2 | ... | d_rank`.
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.rank).map(|i| self.s[(i, i)].clone()).collect()
    }

    /// Invariant factors greater than one.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.diagonal()
            .into_iter()
            .filter(|d| !d.is_one())
            .collect()
    }
}

/// Exact Smith normal form with transformation certificates.
///
/// Each step moves the smallest nonzero entry (in absolute value) of the
/// remaining block to the pivot, clears its row and column by Euclidean
/// division, and folds in any row whose entries the pivot does not divide.
pub fn smith_normal_form(b: &BigMatrix) -> SnfResult {
    let (m, n) = (b.nrows(), b.ncols());
    let mut a = b.clone();
    let mut u = BigMatrix::identity(m);
    let mut v = BigMatrix::identity(n);
    let mut t = 0;
    while t < m.min(n) {
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                let e = &a[(i, j)];
                if !e.is_zero() && best.is_none_or(|(bi, bj)| e.abs() < a[(bi, bj)].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap_rows(t, pi);
        u.swap_rows(t, pi);
        a.swap_cols(t, pj);
        v.swap_cols(t, pj);

        loop {
            for i in t + 1..m {
                if !a[(i, t)].is_zero() {
                    let q = &a[(i, t)] / &a[(t, t)];
                    a.row_axpy(i, t, &q);
                    u.row_axpy(i, t, &q);
                }
            }
            if let Some(i) = min_abs_nonzero((t + 1..m).map(|i| (i, &a[(i, t)]))) {
                a.swap_rows(t, i);
                u.swap_rows(t, i);
                continue;
            }
            for j in t + 1..n {
                if !a[(t, j)].is_zero() {
                    let q = &a[(t, j)] / &a[(t, t)];
                    a.col_axpy(j, t, &q);
                    v.col_axpy(j, t, &q);
                }
            }
            if let Some(j) = min_abs_nonzero((t + 1..n).map(|j| (j, &a[(t, j)]))) {
                a.swap_cols(t, j);
                v.swap_cols(t, j);
                continue;
            }
            let pivot = a[(t, t)].clone();
            let offender =
                (t + 1..m).find(|&i| (t + 1..n).any(|j| !(&a[(i, j)] % &pivot).is_zero()));
            match offender {
                Some(i) => {
                    // row t += row i
                    let minus_one = -BigInt::one();
                    a.row_axpy(t, i, &minus_one);
                    u.row_axpy(t, i, &minus_one);
                }
                None => break,
            }
        }
        if a[(t, t)].is_negative() {
            a.negate_row(t);
            u.negate_row(t);
        }
        t += 1;
    }
    SnfResult {
        s: a,
        u,
        v,
        rank: t,
    }
}

fn min_abs_nonzero<'a>(it: impl Iterator<Item = (usize, &'a BigInt)>) -> Option<usize> {
    let mut best: Option<(usize, BigInt)> = None;
    for (i, e) in it {
        if e.is_zero() {
            continue;
        }
        let abs = e.abs();
        if best.as_ref().is_none_or(|(_, b)| abs < *b) {
            best = Some((i, abs));
        }
    }
    best.map(|(i, _)| i)
}

/// Field used by [`homology_field`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Real,
    ModP(u64),
}

/// `H_k(X, ℤ)` described by its free rank and torsion coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologySummary {
    pub k: usize,
    pub betti: usize,
    pub torsion: Vec<BigInt>,
}

impl fmt::Display for HomologySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.betti {
            0 => {}
            1 => parts.push("Z".to_string()),
            b => parts.push(format!("Z^{b}")),
        }
        parts.extend(self.torsion.iter().map(|d| format!("Z/{d}")));
        if parts.is_empty() {
            write!(f, "H_{} = 0", self.k)
        } else {
            write!(f, "H_{} = {}", self.k, parts.join(" ⊕ "))
        }
    }
}

fn check_degree(rep: &ChainComplexRep, k: usize) -> Result<()> {
    match rep.top_dim() {
        Some(top) if k <= top => Ok(()),
        _ => Err(Error::InvalidArgument(format!(
            "degree {k} outside 0..={}",
            rep.top_dim().map_or(-1, |t| t as isize)
        ))),
    }
}

fn snf_of_boundary(rep: &ChainComplexRep, k: usize) -> SnfResult {
    smith_normal_form(&BigMatrix::from(&rep.boundary(k)))
}

/// Integer homology `H_k(X, ℤ)`.
pub fn homology_z(rep: &ChainComplexRep, k: usize) -> Result<HomologySummary> {
    check_degree(rep, k)?;
    let down = snf_of_boundary(rep, k);
    let up = snf_of_boundary(rep, k + 1);
    Ok(HomologySummary {
        k,
        betti: rep.dim(k as isize) - down.rank - up.rank,
        torsion: up.torsion(),
    })
}

pub(crate) fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Rank of an integer matrix reduced modulo the prime `p`.
pub fn rank_mod_p(m: &BigMatrix, p: u64) -> Result<usize> {
    if !is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not prime")));
    }
    let pb = BigInt::from(p);
    let mut a: Vec<Vec<u64>> = (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|c| {
                    let v = ((&m[(r, c)] % &pb) + &pb) % &pb;
                    u64::try_from(v).expect("residue fits in u64")
                })
                .collect()
        })
        .collect();
    Ok(eliminate_mod_p(&mut a, p))
}

fn rank_mod_p_int(m: &IntMatrix, p: u64) -> usize {
    let mut a: Vec<Vec<u64>> = (0..m.nrows())
        .map(|r| m.row(r).iter().map(|&v| reduce_i64(v, p)).collect())
        .collect();
    eliminate_mod_p(&mut a, p)
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = ((r as u128 * b as u128) % p as u128) as u64;
        }
        b = ((b as u128 * b as u128) % p as u128) as u64;
        e >>= 1;
    }
    r
}

fn eliminate_mod_p(a: &mut [Vec<u64>], p: u64) -> usize {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| a[r][c] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        let inv = pow_mod(a[rank][c], p - 2, p);
        for r in 0..rows {
            if r != rank && a[r][c] != 0 {
                let f = ((a[r][c] as u128 * inv as u128) % p as u128) as u64;
                for j in c..cols {
                    let sub = ((f as u128 * a[rank][j] as u128) % p as u128) as u64;
                    a[r][j] = (a[r][j] + p - sub) % p;
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// `dim H_k(X, F) = dim ker ∂_k - rank ∂_{k+1}` over a field.
///
/// Real ranks use the shared singular-value tolerance; `ℤ/p` ranks are exact.
pub fn homology_field(rep: &ChainComplexRep, k: usize, field: Field) -> Result<usize> {
    check_degree(rep, k)?;
    let (down, up) = match field {
        Field::Real => (
            real_rank(&rep.boundary_f64(k)),
            real_rank(&rep.boundary_f64(k + 1)),
        ),
        Field::ModP(p) => {
            if !is_prime(p) {
                return Err(Error::InvalidArgument(format!("{p} is not prime")));
            }
            (
                rank_mod_p_int(&rep.boundary(k), p),
                rank_mod_p_int(&rep.boundary(k + 1), p),
            )
        }
    };
    Ok(rep.dim(k as isize) - down - up)
}

/// Result of a seminorm computation: the value and a representative of the
/// class attaining it.
#[derive(Clone, Debug)]
pub struct Seminorm {
    pub value: f64,
    pub representative: ChainVector,
}

/// Largest rank of `im ∂` enumerated exhaustively over `ℤ/2`.
pub const Z2_EXHAUSTIVE_MAX_RANK: usize = 24;

/// Simplicial seminorm of the homology class of `x`: the smallest weighted
/// `p`-norm over all cycles homologous to `x`.
///
/// Supported regimes:
/// * `Real`, `p = 2`: the minimiser is `x` minus its (weighted) least-squares
///   projection onto `im ∂_{k+1}`.
/// * `ModN(2)`, `p ∈ {1, 2}`: exhaustive search over the coset
///   `x + im ∂_{k+1}`, limited to rank `<= 24`.
pub fn simplicial_seminorm(
    rep: &ChainComplexRep,
    x: &ChainVector,
    p: u32,
    w: &WeightVector,
) -> Result<Seminorm> {
    check_p(p)?;
    let k = x.degree();
    if k < 0 || rep.dim(k) != x.len() || w.len() != x.len() {
        return Err(Error::Mismatch(format!(
            "degree-{k} chain of length {} (weights {}) does not fit the complex",
            x.len(),
            w.len()
        )));
    }
    let ku = k as usize;
    match x.system() {
        CoefficientSystem::Real => {
            if p != 2 {
                return Err(Error::Unsupported(
                    "real seminorm is implemented for p = 2 only".into(),
                ));
            }
            let xv = x.as_real().expect("real chain");
            let bx = rep.boundary_f64(ku) * xv;
            let scale = xv.norm().max(1.0);
            if bx.norm() > 1e-9 * scale {
                return Err(Error::InvalidArgument(format!(
                    "representative is not a cycle: ‖∂x‖ = {:e}",
                    bx.norm()
                )));
            }
            let up = rep.boundary_f64(ku + 1);
            let wd = nalgebra::DVector::from_column_slice(w.as_slice());
            let wa = DMatrix::from_fn(up.nrows(), up.ncols(), |r, c| wd[r] * up[(r, c)]);
            let wx = DMatrix::from_fn(xv.len(), 1, |r, _| wd[r] * xv[r]);
            let y = lstsq_min_norm(&wa, &wx);
            let best = xv - (&up * y).column(0);
            let representative = ChainVector::real(k, best);
            let value = norm_p(&representative, 2, w)?;
            Ok(Seminorm {
                value,
                representative,
            })
        }
        CoefficientSystem::ModN(2) => {
            let bits = z2::chain_bits(x);
            let down = z2::BitMatrix::from_int(&rep.boundary(ku));
            if !down.mul_vec(&bits).is_zero() {
                return Err(Error::InvalidArgument(
                    "representative is not a cycle mod 2".into(),
                ));
            }
            let image = z2::ImageBasis::new(&rep.boundary(ku + 1));
            if image.rank() > Z2_EXHAUSTIVE_MAX_RANK {
                return Err(Error::Unsupported(format!(
                    "im ∂_{} has rank {} mod 2; exhaustive search is limited to rank {}",
                    ku + 1,
                    image.rank(),
                    Z2_EXHAUSTIVE_MAX_RANK
                )));
            }
            let cost = z2::Cost::new(w, p);
            let mut best = (cost.of(&bits), bits.clone());
            image.for_each_element(|elem, _| {
                let cand = bits.xor(elem);
                let c = cost.of(&cand);
                if c < best.0 {
                    best = (c, cand);
                }
            });
            let representative = z2::bits_chain(k, &best.1);
            Ok(Seminorm {
                value: best.0,
                representative,
            })
        }
        other => Err(Error::Unsupported(format!(
            "simplicial seminorm over {other}; supported: real (p = 2) and mod:2"
        ))),
    }
}

/// Bit-packed linear algebra over `ℤ/2` for the exhaustive searches.
pub(crate) mod z2 {
    use super::*;

    #[derive(Clone, Debug, PartialEq, Eq)]
    pub struct Bits {
        pub len: usize,
        pub words: Vec<u64>,
    }

    impl Bits {
        pub fn zeros(len: usize) -> Self {
            Bits {
                len,
                words: vec![0; len.div_ceil(64)],
            }
        }

        pub fn get(&self, i: usize) -> bool {
            self.words[i / 64] >> (i % 64) & 1 == 1
        }

        pub fn set(&mut self, i: usize, v: bool) {
            let mask = 1u64 << (i % 64);
            if v {
                self.words[i / 64] |= mask;
            } else {
                self.words[i / 64] &= !mask;
            }
        }

        pub fn xor(&self, other: &Bits) -> Bits {
            let mut out = self.clone();
            out.xor_assign(other);
            out
        }

        pub fn xor_assign(&mut self, other: &Bits) {
            for (a, b) in self.words.iter_mut().zip(&other.words) {
                *a ^= b;
            }
        }

        pub fn is_zero(&self) -> bool {
            self.words.iter().all(|w| *w == 0)
        }

        pub fn count_ones(&self) -> u32 {
            self.words.iter().map(|w| w.count_ones()).sum()
        }

        pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
            (0..self.len).filter(|&i| self.get(i))
        }

        /// Lexicographic order of the bit sequences (index 0 first, 0 < 1).
        pub fn lex_cmp(&self, other: &Bits) -> Ordering {
            for (a, b) in self.words.iter().zip(&other.words) {
                if a != b {
                    let first = (a ^ b).trailing_zeros();
                    return if a >> first & 1 == 0 {
                        Ordering::Less
                    } else {
                        Ordering::Greater
                    };
                }
            }
            Ordering::Equal
        }
    }

    /// Column-major bit matrix.
    pub struct BitMatrix {
        pub rows: usize,
        pub cols: Vec<Bits>,
    }

    impl BitMatrix {
        pub fn from_int(m: &IntMatrix) -> Self {
            let cols = (0..m.ncols())
                .map(|c| {
                    let mut b = Bits::zeros(m.nrows());
                    for r in 0..m.nrows() {
                        if m.get(r, c).rem_euclid(2) == 1 {
                            b.set(r, true);
                        }
                    }
                    b
                })
                .collect();
            BitMatrix {
                rows: m.nrows(),
                cols,
            }
        }

        pub fn mul_vec(&self, x: &Bits) -> Bits {
            let mut out = Bits::zeros(self.rows);
            for i in x.ones() {
                out.xor_assign(&self.cols[i]);
            }
            out
        }
    }

    /// A basis of the column space mod 2 made of original columns
    /// (the pivot columns, in increasing order).
    pub struct ImageBasis {
        pub ncols: usize,
        pub pivots: Vec<usize>,
        pub vectors: Vec<Bits>,
    }

    impl ImageBasis {
        pub fn new(m: &IntMatrix) -> Self {
            let bm = BitMatrix::from_int(m);
            let mut reduced: Vec<(usize, Bits)> = Vec::new(); // (lead bit, reduced vec)
            let mut pivots = Vec::new();
            let mut vectors = Vec::new();
            for (c, col) in bm.cols.iter().enumerate() {
                let mut v = col.clone();
                for (lead, r) in &reduced {
                    if v.get(*lead) {
                        v.xor_assign(r);
                    }
                }
                let lead = v.ones().next();
                if let Some(lead) = lead {
                    for (_, r) in reduced.iter_mut() {
                        if r.get(lead) {
                            r.xor_assign(&v);
                        }
                    }
                    reduced.push((lead, v));
                    pivots.push(c);
                    vectors.push(col.clone());
                }
            }
            ImageBasis {
                ncols: m.ncols(),
                pivots,
                vectors,
            }
        }

        pub fn rank(&self) -> usize {
            self.vectors.len()
        }

        /// Visits every element of the image once, in Gray-code order,
        /// passing the element and the subset mask of basis vectors.
        /// The zero element (mask 0) is not visited.
        pub fn for_each_element(&self, mut f: impl FnMut(&Bits, u64)) {
            let r = self.rank();
            if r == 0 {
                return;
            }
            let len = self.vectors[0].len;
            let mut cur = Bits::zeros(len);
            let mut mask = 0u64;
            for i in 1u64..(1u64 << r) {
                let bit = i.trailing_zeros() as usize;
                cur.xor_assign(&self.vectors[bit]);
                mask ^= 1 << bit;
                f(&cur, mask);
            }
        }

        /// Preimage encoding: the indicator of the chosen pivot columns.
        pub fn preimage(&self, mask: u64) -> Bits {
            let mut y = Bits::zeros(self.ncols);
            for (j, &c) in self.pivots.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    y.set(c, true);
                }
            }
            y
        }
    }

    /// Weighted Hamming cost `(Σ_{i ∈ supp} w_i^p)^(1/p)`.
    pub struct Cost {
        weights: Option<Vec<f64>>,
        p: f64,
    }

    impl Cost {
        pub fn new(w: &WeightVector, p: u32) -> Self {
            let pf = p as f64;
            Cost {
                weights: (!w.is_unit()).then(|| w.as_slice().iter().map(|x| x.powf(pf)).collect()),
                p: pf,
            }
        }

        pub fn of(&self, b: &Bits) -> f64 {
            let total = match &self.weights {
                None => b.count_ones() as f64,
                Some(w) => b.ones().map(|i| w[i]).sum(),
            };
            total.powf(1.0 / self.p)
        }
    }

    pub fn chain_bits(x: &ChainVector) -> Bits {
        let mut b = Bits::zeros(x.len());
        if let ChainData::ModN { values, .. } = x.data() {
            for (i, v) in values.iter().enumerate() {
                b.set(i, *v == 1);
            }
        }
        b
    }

    pub fn bits_chain(degree: isize, b: &Bits) -> ChainVector {
        let vals: Vec<i64> = (0..b.len).map(|i| b.get(i) as i64).collect();
        ChainVector::modular(degree, 2, &vals).expect("modulus 2 is valid")
    }
}
