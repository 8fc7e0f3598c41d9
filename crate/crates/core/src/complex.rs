//! Simplicial and Δ-complexes and their integer boundary matrices.
//!
//! Every simplex is stored as a strictly increasing vertex tuple, and that
//! ordering is its positive orientation. The `k`-simplexes of a complex are
//! kept sorted lexicographically, which fixes the basis order of every chain
//! group, boundary matrix and file format in this crate.
//!
//! Δ-complexes (cells glued along arbitrary integer boundary maps, such as the
//! two-triangle real projective plane) are handled through
//! [`ChainComplexRep`], which is what the algebraic code consumes.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense integer matrix in row-major order.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds a matrix from row slices. All rows must have the same length.
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Mismatch("ragged rows in integer matrix".into()));
        }
        Ok(IntMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Builds a `rows x cols` matrix with an explicit column count, which
    /// matters when `rows == 0`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Mismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Nonzero entries of column `c` as `(row, value)` pairs.
    pub fn column_nonzeros(&self, c: usize) -> Vec<(usize, i64)> {
        (0..self.rows)
            .filter_map(|r| {
                let v = self.get(r, c);
                (v != 0).then_some((r, v))
            })
            .collect()
    }

    /// Exact product over the integers.
    pub fn mul_exact(&self, rhs: &IntMatrix) -> Result<Vec<Vec<BigInt>>> {
        if self.cols != rhs.rows {
            return Err(Error::Mismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = vec![vec![BigInt::zero(); rhs.cols]; self.rows];
        for (r, out_row) in out.iter_mut().enumerate() {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0 {
                    continue;
                }
                for (c, slot) in out_row.iter_mut().enumerate() {
                    let b = rhs.get(k, c);
                    if b != 0 {
                        *slot += BigInt::from(a) * BigInt::from(b);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c) as f64)
    }

    pub fn negate_column(&mut self, c: usize) {
        for r in 0..self.rows {
            let v = self.get(r, c);
            self.set(r, c, -v);
        }
    }

    pub fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = self.get(r, c);
            self.set(r, c, -v);
        }
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// Boundary of an oriented simplex given as an arbitrary vertex ordering.
///
/// Faces are returned in sorted (positive) orientation with the sign that
/// accounts for both the alternating face sum and the parity of the
/// permutation that sorts the input.
pub fn oriented_boundary(oriented: &[usize]) -> Vec<(Vec<usize>, i64)> {
    let mut sorted = oriented.to_vec();
    // parity by counting inversions; tuples are tiny
    let mut inversions = 0usize;
    for i in 0..oriented.len() {
        for j in i + 1..oriented.len() {
            if oriented[i] > oriented[j] {
                inversions += 1;
            }
        }
    }
    sorted.sort_unstable();
    let parity = if inversions.is_multiple_of(2) { 1 } else { -1 };
    if sorted.len() <= 1 {
        return Vec::new();
    }
    (0..sorted.len())
        .map(|j| {
            let mut face = sorted.clone();
            face.remove(j);
            let sign = if j % 2 == 0 { 1 } else { -1 };
            (face, sign * parity)
        })
        .collect()
}

/// A finite abstract simplicial complex on vertices `0..n_vertices`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplicialComplex {
    n_vertices: usize,
    /// `simplexes[k]` holds the sorted list of `k`-simplexes.
    simplexes: Vec<Vec<Vec<usize>>>,
}

impl SimplicialComplex {
    /// Builds the face closure of the given simplexes.
    ///
    /// Vertex tuples may be given in any order; duplicates are dropped. The
    /// vertex set is `0..=max index` (or `0..n_vertices` if larger), so
    /// unlisted indices become isolated vertices.
    pub fn from_simplices<I, S>(n_vertices: usize, simplices: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[usize]>,
    {
        let mut by_dim: Vec<BTreeSet<Vec<usize>>> = Vec::new();
        let mut n = n_vertices;
        for s in simplices {
            let mut v = s.as_ref().to_vec();
            if v.is_empty() {
                continue;
            }
            v.sort_unstable();
            let before = v.len();
            v.dedup();
            if v.len() != before {
                return Err(Error::InvalidArgument(format!(
                    "simplex {:?} repeats a vertex",
                    s.as_ref()
                )));
            }
            n = n.max(v[v.len() - 1] + 1);
            add_closure(&mut by_dim, &v);
        }
        if by_dim.is_empty() && n > 0 {
            by_dim.push(BTreeSet::new());
        }
        if n > 0 {
            for i in 0..n {
                by_dim[0].insert(vec![i]);
            }
        }
        Ok(SimplicialComplex {
            n_vertices: n,
            simplexes: by_dim
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect(),
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Largest `k` with at least one `k`-simplex, or `None` for the empty complex.
    pub fn dim(&self) -> Option<usize> {
        self.simplexes.len().checked_sub(1)
    }

    pub fn simplices(&self, k: usize) -> &[Vec<usize>] {
        self.simplexes.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn count(&self, k: usize) -> usize {
        self.simplices(k).len()
    }

    /// Simplexes that are not a face of any other simplex, in dimension order.
    pub fn maximal_simplices(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for k in 0..self.simplexes.len() {
            let cofaces: BTreeSet<Vec<usize>> = self
                .simplices(k + 1)
                .iter()
                .flat_map(|s| (0..s.len()).map(move |j| drop_index(s, j)))
                .collect();
            out.extend(
                self.simplices(k)
                    .iter()
                    .filter(|s| !cofaces.contains(*s))
                    .cloned(),
            );
        }
        out
    }

    /// Boundary matrix `B_k` of shape `n_{k-1} x n_k`.
    ///
    /// Outside `1..=dim` the result is an empty matrix whose one nonzero side
    /// matches the existing chain group (`0 x n_0` for `k = 0`,
    /// `n_K x 0` for `k = K + 1`).
    pub fn build_boundary(&self, k: usize) -> IntMatrix {
        let cols = self.count(k);
        if k == 0 {
            return IntMatrix::zeros(0, cols);
        }
        let rows = self.count(k - 1);
        let mut b = IntMatrix::zeros(rows, cols);
        if cols == 0 || rows == 0 {
            return b;
        }
        let index: HashMap<&[usize], usize> = self
            .simplices(k - 1)
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_slice(), i))
            .collect();
        for (c, s) in self.simplices(k).iter().enumerate() {
            for (face, sign) in oriented_boundary(s) {
                let r = index[face.as_slice()];
                b.set(r, c, sign);
            }
        }
        b
    }

    /// The chain complex of this simplicial complex, with vertex-tuple labels.
    pub fn to_rep(&self) -> ChainComplexRep {
        let top = self.simplexes.len();
        let dims = (0..top).map(|k| self.count(k)).collect();
        let boundaries = (1..top).map(|k| self.build_boundary(k)).collect();
        let labels = (0..top)
            .map(|k| {
                self.simplices(k)
                    .iter()
                    .map(|s| s.iter().map(usize::to_string).collect::<Vec<_>>().join("-"))
                    .collect()
            })
            .collect();
        ChainComplexRep {
            dims,
            boundaries,
            labels: Some(labels),
        }
    }
}

fn drop_index(s: &[usize], j: usize) -> Vec<usize> {
    let mut f = s.to_vec();
    f.remove(j);
    f
}

fn add_closure(by_dim: &mut Vec<BTreeSet<Vec<usize>>>, simplex: &[usize]) {
    let k = simplex.len() - 1;
    while by_dim.len() <= k {
        by_dim.push(BTreeSet::new());
    }
    if !by_dim[k].insert(simplex.to_vec()) {
        return;
    }
    if k == 0 {
        return;
    }
    for j in 0..simplex.len() {
        add_closure(by_dim, &drop_index(simplex, j));
    }
}

/// The algebraic skeleton of a complex: cell counts and integer boundary maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainComplexRep {
    dims: Vec<usize>,
    /// `boundaries[k - 1]` is `B_k`.
    boundaries: Vec<IntMatrix>,
    labels: Option<Vec<Vec<String>>>,
}

impl ChainComplexRep {
    /// Assembles a representation from cell counts and `B_1..B_K`.
    ///
    /// Shapes are checked; the chain identity is not (see [`validate`]).
    pub fn new(dims: Vec<usize>, boundaries: Vec<IntMatrix>) -> Result<Self> {
        if dims.is_empty() {
            if !boundaries.is_empty() {
                return Err(Error::Mismatch(
                    "boundaries given for an empty complex".into(),
                ));
            }
        } else if boundaries.len() != dims.len() - 1 {
            return Err(Error::Mismatch(format!(
                "{} cell dimensions need {} boundary matrices, got {}",
                dims.len(),
                dims.len() - 1,
                boundaries.len()
            )));
        }
        for (i, b) in boundaries.iter().enumerate() {
            let want = (dims[i], dims[i + 1]);
            if b.shape() != want {
                return Err(Error::Mismatch(format!(
                    "B{} has shape {:?}, expected {:?}",
                    i + 1,
                    b.shape(),
                    want
                )));
            }
        }
        Ok(ChainComplexRep {
            dims,
            boundaries,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Result<Self> {
        if labels.len() != self.dims.len()
            || labels.iter().zip(&self.dims).any(|(l, &n)| l.len() != n)
        {
            return Err(Error::Mismatch(
                "label counts do not match cell counts".into(),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[Vec<String>]> {
        self.labels.as_deref()
    }

    /// Top dimension `K`, or `None` for the empty complex.
    pub fn top_dim(&self) -> Option<usize> {
        self.dims.len().checked_sub(1)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of `k`-cells; zero outside `0..=K`.
    pub fn dim(&self, k: isize) -> usize {
        if k < 0 {
            return 0;
        }
        self.dims.get(k as usize).copied().unwrap_or(0)
    }

    /// `B_k` as an `n_{k-1} x n_k` matrix; an empty matrix of that shape
    /// whenever `k` is outside `1..=K`.
    pub fn boundary(&self, k: usize) -> IntMatrix {
        if k >= 1 && k <= self.boundaries.len() {
            self.boundaries[k - 1].clone()
        } else {
            IntMatrix::zeros(self.dim(k as isize - 1), self.dim(k as isize))
        }
    }

    pub fn boundary_ref(&self, k: usize) -> Option<&IntMatrix> {
        if k >= 1 {
            self.boundaries.get(k - 1)
        } else {
            None
        }
    }

    /// Real copy of `B_k`.
    pub fn boundary_f64(&self, k: usize) -> nalgebra::DMatrix<f64> {
        self.boundary(k).to_dmatrix()
    }

    /// Flips the orientation of the `k`-cells where `signs[i] == -1`.
    ///
    /// Column `i` of `B_k` and row `i` of `B_{k+1}` are negated, which keeps
    /// the chain identity intact.
    pub fn reorient(&mut self, k: usize, signs: &[i64]) -> Result<()> {
        if signs.len() != self.dim(k as isize) {
            return Err(Error::Mismatch(format!(
                "{} orientation signs for {} cells",
                signs.len(),
                self.dim(k as isize)
            )));
        }
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => {
                    if k >= 1 {
                        self.boundaries[k - 1].negate_column(i);
                    }
                    if let Some(up) = self.boundaries.get_mut(k) {
                        up.negate_row(i);
                    }
                }
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "orientation sign must be 1 or -1, got {other}"
                    )))
                }
            }
        }
        Ok(())
    }
}

/// One failing entry of `B_k * B_{k+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainViolation {
    pub k: usize,
    pub row: usize,
    pub col: usize,
    pub value: BigInt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub checked: Vec<usize>,
    pub violations: Vec<ChainViolation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `B_k B_{k+1} = 0` in exact integer arithmetic for every `k`.
pub fn validate(rep: &ChainComplexRep) -> ValidationReport {
    let mut report = ValidationReport {
        checked: Vec::new(),
        violations: Vec::new(),
    };
    let n = rep.boundaries.len();
    for k in 1..n {
        report.checked.push(k);
        let prod = rep.boundaries[k - 1]
            .mul_exact(&rep.boundaries[k])
            .expect("shapes checked at construction");
        for (row, r) in prod.into_iter().enumerate() {
            for (col, value) in r.into_iter().enumerate() {
                if !value.is_zero() {
                    report
                        .violations
                        .push(ChainViolation { k, row, col, value });
                }
            }
        }
    }
    report
}

/// Names accepted by [`canonical_complex`].
pub const CANONICAL_NAMES: &str = "rp2, cycle(n), filled_triangle, torus, path(n)";

/// Small named complexes used throughout the tests and the CLI.
///
/// * `rp2` – two-triangle Δ-complex of the real projective plane
///   (2 vertices, 3 edges, 2 faces).
/// * `cycle(n)` – hollow `n`-gon, `n >= 3`.
/// * `filled_triangle` – one 2-simplex with its faces.
/// * `torus` – 9-vertex triangulation of the 3x3 grid with wraparound.
/// * `path(n)` – `n` vertices joined in a line, `n >= 1`.
pub fn canonical_complex(name: &str) -> Result<ChainComplexRep> {
    let name = name.trim();
    if name == "rp2" {
        return Ok(rp2());
    }
    if let Some(sc) = canonical_simplicial(name)? {
        return Ok(sc.to_rep());
    }
    Err(Error::InvalidArgument(format!(
        "unknown complex '{name}'; supported: {CANONICAL_NAMES}"
    )))
}

/// The canonical names that are genuine simplicial complexes.
pub fn canonical_simplicial(name: &str) -> Result<Option<SimplicialComplex>> {
    let name = name.trim();
    let sc = match name {
        "filled_triangle" => SimplicialComplex::from_simplices(3, [[0, 1, 2]])?,
        "torus" => torus(),
        _ => {
            if let Some(n) = parse_call(name, "cycle")? {
                if n < 3 {
                    return Err(Error::InvalidArgument("cycle(n) needs n >= 3".into()));
                }
                let edges = (0..n).map(|i| vec![i, (i + 1) % n]);
                SimplicialComplex::from_simplices(n, edges)?
            } else if let Some(n) = parse_call(name, "path")? {
                if n < 1 {
                    return Err(Error::InvalidArgument("path(n) needs n >= 1".into()));
                }
                let edges: Vec<Vec<usize>> = (1..n).map(|i| vec![i - 1, i]).collect();
                SimplicialComplex::from_simplices(n, edges)?
            } else {
                return Ok(None);
            }
        }
    };
    Ok(Some(sc))
}

/// Parses `name(n)` or `name:n`.
fn parse_call(s: &str, name: &str) -> Result<Option<usize>> {
    let Some(rest) = s.strip_prefix(name) else {
        return Ok(None);
    };
    let arg = if let Some(inner) = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        inner
    } else if let Some(inner) = rest.strip_prefix(':') {
        inner
    } else {
        return Ok(None);
    };
    arg.trim()
        .parse::<usize>()
        .map(Some)
        .map_err(|_| Error::InvalidArgument(format!("bad size in '{s}'")))
}

fn torus() -> SimplicialComplex {
    let idx = |i: usize, j: usize| 3 * (i % 3) + (j % 3);
    let mut tris = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            tris.push(vec![idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            tris.push(vec![idx(i, j), idx(i, j + 1), idx(i + 1, j + 1)]);
        }
    }
    SimplicialComplex::from_simplices(9, tris).expect("torus triangles are valid")
}

/// The unit square with `(0,y) ~ (1,1-y)` and `(x,0) ~ (1-x,1)`, cut along
/// the diagonal from `(0,0)` to `(1,1)`.
///
/// Vertices: `P = (0,0) = (1,1)`, `Q = (1,0) = (0,1)`.
/// Edges: `a` (bottom, also top) and `b` (left, also right) both run `P -> Q`;
/// `c` is the diagonal loop at `P`.
/// Faces: `T1 = a - b - c` (lower right), `T2 = a - b + c` (upper left).
fn rp2() -> ChainComplexRep {
    let b1 = IntMatrix::from_rows(&[vec![-1, -1, 0], vec![1, 1, 0]]).unwrap();
    let b2 = IntMatrix::from_rows(&[vec![1, 1], vec![-1, -1], vec![-1, 1]]).unwrap();
    let labels = vec![
        vec!["P".to_string(), "Q".to_string()],
        vec!["a".to_string(), "b".to_string(), "c".to_string()],
        vec!["T1".to_string(), "T2".to_string()],
    ];
    ChainComplexRep::new(vec![2, 3, 2], vec![b1, b2])
        .and_then(|r| r.with_labels(labels))
        .unwrap()
}

/// Random clique-style 2-complex: each vertex pair becomes an edge with
/// probability `edge_prob`, then each triangle of the resulting graph is
/// filled with probability `fill_prob`. Deterministic in `seed`.
pub fn random_complex(
    n_vertices: usize,
    edge_prob: f64,
    fill_prob: f64,
    seed: u64,
) -> Result<SimplicialComplex> {
    for (name, p) in [("edge_prob", edge_prob), ("fill_prob", fill_prob)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "{name} = {p} not in [0, 1]"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = vec![vec![false; n_vertices]; n_vertices];
    let mut simplices: Vec<Vec<usize>> = Vec::new();
    for i in 0..n_vertices {
        for j in i + 1..n_vertices {
            if rng.random_bool(edge_prob) {
                adj[i][j] = true;
                simplices.push(vec![i, j]);
            }
        }
    }
    for i in 0..n_vertices {
        for j in i + 1..n_vertices {
            if !adj[i][j] {
                continue;
            }
            for l in j + 1..n_vertices {
                if adj[i][l] && adj[j][l] && rng.random_bool(fill_prob) {
                    simplices.push(vec![i, j, l]);
                }
            }
        }
    }
    SimplicialComplex::from_simplices(n_vertices, simplices)
}
