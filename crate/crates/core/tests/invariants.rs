use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use proptest::prelude::*;

use gensig::baselines::{krr_fit_eval, sc_objective, sc_product, GridEstimate, KrrConfig};
use gensig::coeff::norm_p;
use gensig::hodge::{eig_sym, hodge_decompose, laplacian, spectral_bases};
use gensig::homology::{
    homology_field, rank_mod_p, simplicial_seminorm, smith_normal_form, BigMatrix, Field,
};
use gensig::learn::{
    reconstruct_gssc, sample_async, solve_fundamental, solve_smooth, synthesize, SynthSpec,
    GRID_POINTS,
};
use gensig::{
    kernel_basis, random_complex, range_basis, real_rank, ChainComplexRep, ChainVector,
    CoefficientSystem, IntMatrix, Value, WeightVector,
};

fn complex() -> impl Strategy<Value = ChainComplexRep> {
    (3usize..=10, 0.3f64..0.9, 0.0f64..1.0, any::<u64>())
        .prop_map(|(n, pe, pf, s)| random_complex(n, pe, pf, s).unwrap().to_rep())
}

fn real_value() -> impl Strategy<Value = Value> {
    (-1e3f64..1e3).prop_map(Value::Real)
}

fn int_value() -> impl Strategy<Value = Value> {
    any::<i64>().prop_map(|v| Value::Integer(BigInt::from(v) * BigInt::from(v)))
}

fn mod_value(n: u64) -> impl Strategy<Value = Value> {
    (0..n).prop_map(move |v| Value::ModN {
        value: v,
        modulus: n,
    })
}

fn fourier_value() -> impl Strategy<Value = Value> {
    prop::collection::vec(-10f64..10.0, 7).prop_map(Value::Fourier)
}

fn any_value_triple() -> impl Strategy<Value = (Value, Value, Value, bool)> {
    let exact =
        |s: BoxedStrategy<Value>| (s.clone(), s.clone(), s).prop_map(|(a, b, c)| (a, b, c, true));
    let approx =
        |s: BoxedStrategy<Value>| (s.clone(), s.clone(), s).prop_map(|(a, b, c)| (a, b, c, false));
    prop_oneof![
        approx(real_value().boxed()),
        exact(int_value().boxed()),
        exact(mod_value(2).boxed()),
        exact(mod_value(7).boxed()),
        approx(fourier_value().boxed()),
    ]
}

fn close(a: &Value, b: &Value, exact: bool) -> bool {
    if exact {
        a == b
    } else {
        a.distance(b).unwrap() <= 1e-12 * (1.0 + a.norm().max(b.norm()))
    }
}

fn real_chain(k: usize, v: Vec<f64>) -> ChainVector {
    ChainVector::real(k as isize, DVector::from_vec(v))
}

/// Random vector of length `n` drawn from a seed; keeps strategies independent of sizes.
fn vec_from_seed(n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_axioms((a, b, c, exact) in any_value_triple()) {
        let zero = a.system().zero();
        prop_assert!(close(&a.add(&b).unwrap().add(&c).unwrap(), &a.add(&b.add(&c).unwrap()).unwrap(), exact));
        prop_assert!(close(&a.add(&b).unwrap(), &b.add(&a).unwrap(), exact));
        prop_assert!(close(&a.add(&zero).unwrap(), &a, exact));
        prop_assert!(close(&a.add(&a.neg()).unwrap(), &zero, exact));
    }

    #[test]
    fn metric_is_translation_invariant((a, a2, b, _) in any_value_triple()) {
        let lhs = a.add(&b).unwrap().distance(&a2.add(&b).unwrap()).unwrap();
        let rhs = a.distance(&a2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs));
    }

    #[test]
    fn norm_is_scaling_invariant(a in prop_oneof![real_value(), fourier_value(), mod_value(2)], n in -20i64..20) {
        let scaled = a.int_mul(&BigInt::from(n)).norm();
        let factor = match a {
            Value::ModN { .. } => (n.rem_euclid(2)) as f64,
            _ => n.unsigned_abs() as f64,
        };
        prop_assert!((scaled - factor * a.norm()).abs() <= 1e-9 * (1.0 + scaled));
    }

    #[test]
    fn chain_norm_triangle_inequality(
        xs in prop::collection::vec((-5f64..5.0, -5f64..5.0, 0.0f64..3.0), 1..12),
        p in 1u32..=2,
        modular in any::<bool>(),
    ) {
        let w = WeightVector::new(xs.iter().map(|t| t.2).collect()).unwrap();
        let (x, y) = if modular {
            let a: Vec<i64> = xs.iter().map(|t| (t.0 > 0.0) as i64).collect();
            let b: Vec<i64> = xs.iter().map(|t| (t.1 > 0.0) as i64).collect();
            (ChainVector::modular(1, 2, &a).unwrap(), ChainVector::modular(1, 2, &b).unwrap())
        } else {
            (real_chain(1, xs.iter().map(|t| t.0).collect()), real_chain(1, xs.iter().map(|t| t.1).collect()))
        };
        let s = norm_p(&x.add(&y).unwrap(), p, &w).unwrap();
        prop_assert!(s <= norm_p(&x, p, &w).unwrap() + norm_p(&y, p, &w).unwrap() + 1e-12);
    }

    #[test]
    fn boundary_is_additive_exactly(rep in complex(), seed in any::<u64>(), modulus in 2u64..6) {
        let n1 = rep.dim(1);
        let a: Vec<i64> = vec_from_seed(n1, seed).iter().map(|v| (v * 50.0) as i64).collect();
        let b: Vec<i64> = vec_from_seed(n1, seed ^ 1).iter().map(|v| (v * 50.0) as i64).collect();
        let zi = |v: &[i64]| ChainVector::integer(1, v.iter().map(|&x| BigInt::from(x)).collect());
        let zm = |v: &[i64]| ChainVector::modular(1, modulus, v).unwrap();
        for (x, y) in [(zi(&a), zi(&b)), (zm(&a), zm(&b))] {
            let lhs = x.add(&y).unwrap().apply_boundary(&rep).unwrap();
            let rhs = x.apply_boundary(&rep).unwrap().add(&y.apply_boundary(&rep).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn boundary_squared_is_zero_exactly(rep in complex()) {
        for k in 1..rep.dims().len().saturating_sub(1) {
            let prod = rep.boundary(k).mul_exact(&rep.boundary(k + 1)).unwrap();
            prop_assert!(prod.iter().flatten().all(|v| *v == BigInt::from(0)));
        }
    }

    #[test]
    fn simplicial_boundary_columns_alternate(n in 3usize..=9, pe in 0.3f64..1.0, seed in any::<u64>()) {
        let sc = random_complex(n, pe, 0.8, seed).unwrap();
        for k in 1..=sc.dim().unwrap_or(0) {
            let b = sc.build_boundary(k);
            for c in 0..b.ncols() {
                let nz = b.column_nonzeros(c);
                prop_assert_eq!(nz.len(), k + 1);
                for (i, (_, v)) in nz.iter().enumerate() {
                    prop_assert_eq!(*v, if i % 2 == 0 { 1 } else { -1 } * if k % 2 == 0 { 1 } else { -1 });
                }
            }
        }
    }

    #[test]
    fn reorienting_a_cell_negates_its_column(rep in complex(), pick in any::<prop::sample::Index>()) {
        prop_assume!(rep.dim(1) > 0);
        let c = pick.index(rep.dim(1));
        let mut signs = vec![1i64; rep.dim(1)];
        signs[c] = -1;
        let mut flipped = rep.clone();
        flipped.reorient(1, &signs).unwrap();
        let (b, f) = (rep.boundary(1), flipped.boundary(1));
        for r in 0..b.nrows() {
            for j in 0..b.ncols() {
                prop_assert_eq!(f.get(r, j), if j == c { -b.get(r, j) } else { b.get(r, j) });
            }
        }
        prop_assert!(gensig::validate(&flipped).passed());
    }

    #[test]
    fn snf_certificate(rows in 1usize..=7, cols in 1usize..=7, entries in prop::collection::vec(-9i64..=9, 49)) {
        let b = BigMatrix::from_fn(rows, cols, |r, c| BigInt::from(entries[r * 7 + c]));
        let snf = smith_normal_form(&b);
        prop_assert_eq!(snf.u.mul(&b).mul(&snf.v), snf.s.clone());
        prop_assert!(snf.u.determinant().magnitude() == &BigInt::from(1).magnitude().clone());
        prop_assert!(snf.v.determinant().magnitude() == &BigInt::from(1).magnitude().clone());
        let d = snf.diagonal();
        for w in d.windows(2) {
            prop_assert_eq!(&w[1] % &w[0], BigInt::from(0));
        }
        for r in 0..rows {
            for c in 0..cols {
                if r != c || r >= snf.rank {
                    prop_assert_eq!(snf.s[(r, c)].clone(), BigInt::from(0));
                }
            }
        }
    }

    #[test]
    fn exact_betti_matches_laplacian_kernel(rep in complex()) {
        for k in 0..rep.dims().len() {
            let exact = homology_field(&rep, k, Field::Real).unwrap();
            let numeric = eig_sym(&laplacian(&rep, k).unwrap()).unwrap().nullity();
            prop_assert_eq!(exact, numeric, "k = {}", k);
        }
    }

    #[test]
    fn appendix_observations(rep in complex(), seed in any::<u64>()) {
        let top = rep.dims().len() - 1;
        for k in 0..=top {
            let n = rep.dim(k as isize);
            if n == 0 {
                continue;
            }
            let down = rep.boundary_f64(k);
            let up = rep.boundary_f64(k + 1);
            let lk = laplacian(&rep, k).unwrap();
            let scale = |m: &DMatrix<f64>| 1e-10 * (1.0 + m.norm());
            // (a), (b)
            let z = DMatrix::from_vec(up.ncols(), 1, vec_from_seed(up.ncols(), seed));
            prop_assert!((&down * (&up * &z)).norm() <= scale(&z) * 10.0);
            let y = DMatrix::from_vec(down.nrows(), 1, vec_from_seed(down.nrows(), seed ^ 2));
            prop_assert!((up.transpose() * (down.transpose() * &y)).norm() <= scale(&y) * 10.0);
            // (c)
            let a = &up * &z;
            let b = down.transpose() * &y;
            prop_assert!(a.dot(&b).abs() <= 1e-10 * (1.0 + a.norm() * b.norm()));
            // (d)
            let ker = kernel_basis(&down);
            prop_assert!((down.clone() * &ker).norm() <= 1e-9 * (1.0 + down.norm()));
            prop_assert!((ker.transpose() * down.transpose()).norm() <= 1e-9 * (1.0 + down.norm()));
            // (e), (f)
            let harm = kernel_basis(&lk);
            prop_assert!((&down * &harm).norm() <= 1e-9 * (1.0 + lk.norm()));
            prop_assert!((up.transpose() * &harm).norm() <= 1e-9 * (1.0 + lk.norm()));
            prop_assert_eq!(harm.ncols() + real_rank(&down) + real_rank(&up), n);
            // (g)
            if ker.ncols() > 0 {
                let coeffs = DMatrix::from_vec(ker.ncols(), 1, vec_from_seed(ker.ncols(), seed ^ 3));
                let v = &ker * coeffs;
                let q1 = range_basis(&up);
                let rebuilt = &q1 * (q1.transpose() * &v) + &harm * (harm.transpose() * &v);
                prop_assert!((rebuilt - &v).norm() <= 1e-10 * (1.0 + v.norm()));
            }
            // Pythagoras and recombination
            let x = real_chain(k, vec_from_seed(n, seed ^ 4));
            let d = hodge_decompose(&rep, &x).unwrap();
            let nx = x.as_real().unwrap().norm_squared();
            let parts: f64 = [&d.x0, &d.x1, &d.x_neg1].iter().map(|c| c.as_real().unwrap().norm_squared()).sum();
            prop_assert!((nx - parts).abs() <= 1e-8 * nx.max(1e-300));
            prop_assert!((d.recombined().unwrap().as_real().unwrap() - x.as_real().unwrap()).norm() <= 1e-10 * (1.0 + nx.sqrt()));
        }
    }

    #[test]
    fn fundamental_matches_hodge(rep in complex(), seed in any::<u64>()) {
        let n = rep.dim(1);
        prop_assume!(n > 0);
        let x = real_chain(1, vec_from_seed(n, seed));
        let f = solve_fundamental(&rep, &x, 2, &WeightVector::ones(n)).unwrap();
        let h = hodge_decompose(&rep, &x).unwrap();
        let scale = x.as_real().unwrap().norm();
        for (a, b) in [(&f.x0, &h.x0), (&f.x1, &h.x1), (&f.x_neg1, &h.x_neg1)] {
            prop_assert!((a.as_real().unwrap() - b.as_real().unwrap()).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn real_seminorm_is_a_seminorm(rep in complex(), seed in any::<u64>(), m in -4i64..=4) {
        let n = rep.dim(1);
        prop_assume!(n > 0);
        let ker = kernel_basis(&rep.boundary_f64(1));
        prop_assume!(ker.ncols() > 0);
        let cycle = |s: u64| {
            let c = DMatrix::from_vec(ker.ncols(), 1, vec_from_seed(ker.ncols(), s));
            real_chain(1, (&ker * c).column(0).iter().copied().collect())
        };
        let (x, y) = (cycle(seed), cycle(seed ^ 9));
        let w = WeightVector::ones(n);
        let sx = simplicial_seminorm(&rep, &x, 2, &w).unwrap();
        let sy = simplicial_seminorm(&rep, &y, 2, &w).unwrap().value;
        let sxy = simplicial_seminorm(&rep, &x.add(&y).unwrap(), 2, &w).unwrap().value;
        prop_assert!(sxy <= sx.value + sy + 1e-10);
        let scaled = real_chain(1, x.as_real().unwrap().iter().map(|v| v * m as f64).collect());
        let sm = simplicial_seminorm(&rep, &scaled, 2, &w).unwrap().value;
        prop_assert!((sm - m.unsigned_abs() as f64 * sx.value).abs() <= 1e-9 * (1.0 + sm));
        let up = rep.boundary_f64(2);
        let r = sx.representative.as_real().unwrap();
        prop_assert!((up.transpose() * r).norm() <= 1e-10 * (1.0 + r.norm()) * (1.0 + up.norm()));
    }

    #[test]
    fn smooth_objective_non_increasing_in_eta(rep in complex(), seed in any::<u64>()) {
        let n = rep.dim(1);
        prop_assume!(n > 0);
        let x = real_chain(1, vec_from_seed(n, seed));
        let w = WeightVector::ones(n);
        let mut last = f64::INFINITY;
        for eta in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let o = solve_smooth(&rep, &x, eta, &w).unwrap().objective;
            prop_assert!(o <= last * (1.0 + 1e-9) + 1e-12, "eta {}: {} > {}", eta, o, last);
            last = o;
        }
    }

    #[test]
    fn krr_training_residual_shrinks_with_ridge(pts in prop::collection::vec((-3.0f64..3.0, -2.0f64..2.0), 2..15)) {
        let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let mut last = f64::INFINITY;
        for ridge in [1.0, 1e-1, 1e-2, 1e-3] {
            let cfg = KrrConfig::new(1.0, ridge).unwrap();
            let fit = krr_fit_eval(&pts, &cfg, &ts).unwrap();
            let r: f64 = fit.iter().zip(&pts).map(|(f, p)| (f - p.1).powi(2)).sum::<f64>().sqrt();
            prop_assert!(r <= last * (1.0 + 1e-6) + 1e-9);
            last = r;
        }
    }

    #[test]
    fn sc_output_does_not_increase_objective(rep in complex(), seed in any::<u64>(), alpha in 0.0f64..2.0, beta in 0.0f64..2.0) {
        let n = rep.dim(1);
        prop_assume!(n > 0);
        let v = vec_from_seed(n * GRID_POINTS, seed);
        let g = GridEstimate::new(DMatrix::from_vec(n, GRID_POINTS, v)).unwrap();
        let z = sc_product(&g, &rep, alpha, beta).unwrap();
        let f0 = sc_objective(&g, &g, &rep, alpha, beta).unwrap();
        let f1 = sc_objective(&z, &g, &rep, alpha, beta).unwrap();
        prop_assert!(f1 <= f0 * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn snf_rank_matches_modular_rank(rows in 1usize..=12, cols in 1usize..=12, entries in prop::collection::vec(-9i64..=9, 144)) {
        let b = BigMatrix::from_fn(rows, cols, |r, c| BigInt::from(entries[r * 12 + c]));
        let snf = smith_normal_form(&b);
        // A prime larger than every invariant factor keeps the rank.
        let biggest = snf.diagonal().iter().map(|d| d.magnitude().clone()).max();
        let p: u64 = 1_000_000_007;
        if biggest.is_none_or(|d| d < num_bigint::BigUint::from(p)) {
            prop_assert_eq!(rank_mod_p(&b, p).unwrap(), snf.rank);
        }
        prop_assert!(rank_mod_p(&b, 2).unwrap() <= snf.rank);
    }

    #[test]
    fn gssc_full_basis_objective_not_above_sub_basis(seed in 0u64..1000, m in 3usize..10) {
        let rep = random_complex(8, 0.7, 0.7, seed).unwrap().to_rep();
        prop_assume!(rep.dim(1) > 0);
        let bases = spectral_bases(&rep, 1, 6, 6).unwrap();
        let syn = synthesize(&rep, &SynthSpec { n_irr: 6, n_sol: 6, order: 1, seed, ..SynthSpec::default() }).unwrap();
        let s = sample_async(&syn.signal, m, 0.1, seed).unwrap();
        let full = reconstruct_gssc(&rep, &s, &bases, 1, 1.0).unwrap().decomposition.objective;
        let sub = reconstruct_gssc(&rep, &s, &bases.truncate(2, 2), 1, 1.0).unwrap().decomposition.objective;
        prop_assert!(full <= sub * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn stochastic_operations_are_seed_deterministic(seed in any::<u64>()) {
        let rep = random_complex(7, 0.7, 0.6, seed).unwrap().to_rep();
        let spec = SynthSpec { n_irr: 3, n_sol: 3, order: 2, seed, ..SynthSpec::default() };
        let a = synthesize(&rep, &spec).unwrap();
        let b = synthesize(&rep, &spec).unwrap();
        prop_assert_eq!(&a.signal, &b.signal);
        prop_assert_eq!(sample_async(&a.signal, 5, 0.1, seed).unwrap(), sample_async(&b.signal, 5, 0.1, seed).unwrap());
    }
}

#[test]
fn int_matrix_and_coefficient_parsing_sanity() {
    let b = IntMatrix::from_rows(&[vec![1, 2], vec![3, 4]]).unwrap();
    assert_eq!(b.transpose().get(0, 1), 3);
    assert_eq!(
        CoefficientSystem::parse("mod:2").unwrap(),
        CoefficientSystem::ModN(2)
    );
}
