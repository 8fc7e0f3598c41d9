//! Dense real linear algebra shared by the decomposition code.
//!
//! Every rank decision goes through [`zero_tol`], so homology dimensions,
//! harmonic spaces and projections agree on what counts as zero.

use nalgebra::{DMatrix, SymmetricEigen};

/// Threshold below which an eigenvalue of an `n x n` PSD matrix with largest
/// eigenvalue `lambda_max` is treated as zero.
pub fn zero_tol(n: usize, lambda_max: f64) -> f64 {
    (n.max(1) as f64 * f64::EPSILON * lambda_max.abs()).max(1e-12)
}

pub(crate) struct Svd {
    /// Left singular vectors of the nonzero singular values.
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    /// Right singular vectors of the nonzero singular values, as rows.
    pub v_t: DMatrix<f64>,
    pub rank: usize,
}

/// Rank-revealing SVD built from the eigendecomposition of the smaller Gram
/// matrix, singular values descending. Rank is decided by [`zero_tol`]
/// applied to `σ²`.
///
/// nalgebra's bidiagonal `SVD` can return an inaccurate factorisation for
/// rank-deficient incidence matrices, so it is not used here.
pub(crate) fn svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Svd {
            u: DMatrix::zeros(m, 0),
            sigma: Vec::new(),
            v_t: DMatrix::zeros(0, n),
            rank: 0,
        };
    }
    let tall = m >= n;
    let gram = if tall {
        a.transpose() * a
    } else {
        a * a.transpose()
    };
    let (vals, vecs) = sym_eig_sorted(&gram);
    let lmax = vals.last().copied().unwrap_or(0.0);
    let tol = zero_tol(m.min(n), lmax);
    let sigma: Vec<f64> = vals.iter().rev().map(|l| l.max(0.0).sqrt()).collect();
    let rank = vals.iter().filter(|l| **l > tol).count();
    let dim = vecs.ncols();
    let top = DMatrix::from_fn(dim, rank, |r, c| vecs[(r, dim - 1 - c)]);
    let inv = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(rank, |i, _| 1.0 / sigma[i]));
    let (u, v) = if tall {
        (a * &top * &inv, top)
    } else {
        let v = a.transpose() * &top * &inv;
        (top, v)
    };
    Svd {
        u,
        sigma,
        v_t: v.transpose(),
        rank,
    }
}

pub fn real_rank(a: &DMatrix<f64>) -> usize {
    svd(a).rank
}

/// Orthonormal basis (as columns) of the column space of `a`.
pub fn range_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let s = svd(a);
    s.u.columns(0, s.rank).into_owned()
}

/// Minimum-norm least-squares solution of `a X = b`.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows(), "lstsq: row mismatch");
    let s = svd(a);
    let mut out = DMatrix::zeros(a.ncols(), b.ncols());
    if s.rank == 0 {
        return out;
    }
    let ur = s.u.columns(0, s.rank);
    let mut coeff = ur.transpose() * b;
    for i in 0..s.rank {
        let inv = 1.0 / s.sigma[i];
        coeff.row_mut(i).scale_mut(inv);
    }
    out += s.v_t.rows(0, s.rank).transpose() * coeff;
    out
}

/// Orthogonal projection of the columns of `x` onto the span of the
/// orthonormal columns of `q`.
pub fn project(q: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    if q.ncols() == 0 {
        return DMatrix::zeros(x.nrows(), x.ncols());
    }
    q * (q.transpose() * x)
}

/// Eigendecomposition of a symmetric matrix, ascending, without checks.
pub(crate) fn sym_eig_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let e = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let mut vecs = DMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, order[c])]);
    for mut col in vecs.column_iter_mut() {
        if let Some(first) = col.iter().copied().find(|v| v.abs() > 1e-12) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
    (vals, vecs)
}

/// Orthonormal basis of the kernel of `a`.
pub fn kernel_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let g = a.transpose() * a;
    let (vals, vecs) = sym_eig_sorted(&g);
    let tol = zero_tol(n, vals.last().copied().unwrap_or(0.0));
    let dim = vals.iter().filter(|v| **v <= tol).count();
    vecs.columns(0, dim).into_owned()
}

/// Solves the symmetric positive definite system `m X = b`, adding a
/// `1e-10` diagonal jitter if the plain Cholesky factorisation fails.
///
/// Returns the solution and whether the jitter was needed.
pub fn solve_spd(m: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<(DMatrix<f64>, bool)> {
    if m.nrows() == 0 {
        return Some((DMatrix::zeros(0, b.ncols()), false));
    }
    if let Some(ch) = m.clone().cholesky() {
        return Some((ch.solve(b), false));
    }
    let scale = m
        .diagonal()
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(1.0);
    let jittered = m + DMatrix::identity(m.nrows(), m.ncols()) * (1e-10 * scale);
    jittered.cholesky().map(|ch| (ch.solve(b), true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_range() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert_eq!(real_rank(&a), 1);
        let q = range_basis(&a);
        assert_eq!(q.ncols(), 1);
        let p = project(&q, &a);
        assert!((p - &a).norm() < 1e-12);
        assert_eq!(real_rank(&DMatrix::zeros(0, 4)), 0);
    }

    #[test]
    fn range_of_rank_deficient_incidence() {
        // Edge-vertex incidence of a 6-vertex graph with two independent cycles.
        #[rustfmt::skip]
        let b1 = DMatrix::from_row_slice(6, 8, &[
            -1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, -1.0, -1.0, 0.0, 0.0, 0.0,
            1.0, 0.0, 0.0, 0.0, 0.0, -1.0, -1.0, 0.0,
            0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, -1.0,
            0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0,
        ]);
        for a in [b1.clone(), b1.transpose()] {
            let q = range_basis(&a);
            assert_eq!(q.ncols(), 5);
            assert!((q.transpose() * &q - DMatrix::identity(5, 5)).norm() < 1e-12);
            assert!((&q * (q.transpose() * &a) - &a).norm() < 1e-12);
        }
    }

    #[test]
    fn min_norm_solution() {
        // x + y = 2 has min-norm solution (1, 1)
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DMatrix::from_row_slice(1, 1, &[2.0]);
        let x = lstsq_min_norm(&a, &b);
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14 && (x[(1, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_of_incidence() {
        let b = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
        assert_eq!(kernel_basis(&b).ncols(), 0);
        let k = kernel_basis(&b.transpose());
        assert_eq!(k.ncols(), 1);
        assert!((k[(0, 0)] - k[(1, 0)]).abs() < 1e-14);
    }

    #[test]
    fn spd_solve_with_jitter() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 0.0]);
        let (x, jitter) = solve_spd(&m, &b).unwrap();
        assert!(jitter);
        assert_eq!(x.norm(), 0.0);
    }
}
