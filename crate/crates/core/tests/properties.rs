use proptest::prelude::*;

use qsimul_core::correlation::{commute_in_state, cyclic_subspace, perfectly_correlated};
use qsimul_core::linalg::{
    c, eigh, max_abs, orthonormalize, partial_trace_probe, projection_meet, tensor, CVector, Projection,
};
use qsimul_core::measproc::{extract_povm, output_distribution, von_neumann_model};
use qsimul_core::observables::{born_distribution, std_dev, Observable};
use qsimul_core::quasiprob::{strong_jqpd, weak_jqpd, weak_value_of};
use qsimul_core::random::{self, instance_rng, InstanceRng};
use qsimul_core::simul::{construct_commuting_measurement, verify_simultaneous};
use rand::Rng;

fn rng(seed: u64) -> InstanceRng {
    instance_rng(seed, 0)
}

/// Projection onto the span of `shared` plus `extra` random vectors.
fn projection_with(rng: &mut InstanceRng, dim: usize, shared: &[CVector], extra: usize) -> Projection {
    let mut vectors = shared.to_vec();
    vectors.extend((0..extra).map(|_| random::gaussian_vector(rng, dim)));
    if vectors.is_empty() {
        return Projection::zero(dim);
    }
    Projection::from_subspace(&orthonormalize(&vectors, 1e-9))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), dim in 1usize..=16) {
        let m = random::hermitian(&mut rng(seed), dim);
        let e = eigh(&m).unwrap();
        prop_assert!(max_abs(&(e.reconstruct() - &m)) <= 1e-10 * max_abs(&m).max(1.0));
    }

    #[test]
    fn meet_is_symmetric_and_below_both(seed in any::<u64>(), dim in 2usize..=6, shared in 0usize..=2) {
        let mut r = rng(seed);
        let shared = shared.min(dim - 1);
        let common: Vec<CVector> = (0..shared).map(|_| random::gaussian_vector(&mut r, dim)).collect();
        let room = dim - shared;
        let (kp, kq) = (r.random_range(0..=room), r.random_range(0..=room));
        let p = projection_with(&mut r, dim, &common, kp);
        let q = projection_with(&mut r, dim, &common, kq);
        let pq = projection_meet(&p, &q).unwrap();
        let qp = projection_meet(&q, &p).unwrap();
        prop_assert!(max_abs(&(pq.matrix() - qp.matrix())) <= 1e-9);
        prop_assert!(max_abs(&(p.matrix() * pq.matrix() - pq.matrix())) <= 1e-9);
        prop_assert!(max_abs(&(q.matrix() * pq.matrix() - pq.matrix())) <= 1e-9);
        prop_assert!(pq.rank() >= shared);
    }

    #[test]
    fn meet_of_commuting_projections_is_product(seed in any::<u64>(), dim in 2usize..=8) {
        let mut r = rng(seed);
        let u = random::unitary(&mut r, dim);
        let mask = |r: &mut InstanceRng| -> Vec<f64> { (0..dim).map(|_| if r.random_bool(0.5) { 1.0 } else { 0.0 }).collect() };
        let (mp, mq) = (mask(&mut r), mask(&mut r));
        let build = |m: &[f64]| Projection::new(&u * qsimul_core::linalg::diag(m) * u.adjoint()).unwrap();
        let (p, q) = (build(&mp), build(&mq));
        let meet = projection_meet(&p, &q).unwrap();
        prop_assert!(max_abs(&(meet.matrix() - p.matrix() * q.matrix())) <= 1e-8);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), dh in 1usize..=4, dk in 1usize..=4) {
        let mut r = rng(seed);
        let a = random::gaussian_matrix(&mut r, dh, dh);
        let b = random::gaussian_matrix(&mut r, dk, dk);
        let reduced = partial_trace_probe(&tensor(&a, &b), dh, dk).unwrap();
        prop_assert!(max_abs(&(reduced - &a * b.trace())) <= 1e-10 * max_abs(&a).max(1.0) * (dk as f64));
    }

    #[test]
    fn spectral_resolution_and_born_rule(seed in any::<u64>(), dim in 2usize..=16) {
        let mut r = rng(seed);
        let a = Observable::new(&random::hermitian(&mut r, dim)).unwrap();
        let (completeness, orthogonality, reconstruction) = a.resolution_defects();
        prop_assert!(completeness <= 1e-9 && orthogonality <= 1e-9 && reconstruction <= 1e-9 * max_abs(a.matrix()).max(1.0));
        let psi = random::state(&mut r, dim);
        let born = born_distribution(&a, &psi).unwrap();
        prop_assert!((born.total() - 1.0).abs() <= 1e-9);
        prop_assert!(born.entries.iter().all(|e| (-1e-10..=1.0 + 1e-10).contains(&e.probability)));
    }

    #[test]
    fn zero_spread_iff_eigenvector(seed in any::<u64>(), dim in 2usize..=6, eigen in any::<bool>()) {
        let mut r = rng(seed);
        let degenerate = r.random_bool(0.5);
        let a = random::observable(&mut r, dim, degenerate);
        let psi = if eigen { random::eigenvector(&mut r, &a).1 } else { random::state(&mut r, dim) };
        let mean = a.expectation(&psi).unwrap();
        let residual = (a.matrix() * psi.vector() - psi.vector() * c(mean, 0.0)).norm();
        let sigma = std_dev(&a, &psi).unwrap();
        prop_assert_eq!(sigma <= 1e-8, residual <= 1e-7);
        if eigen {
            prop_assert!(sigma <= 1e-8);
        }
    }

    #[test]
    fn weak_marginals_are_born(seed in any::<u64>(), dim in 2usize..=8) {
        let mut r = rng(seed);
        let (da, db) = (r.random_bool(0.5), r.random_bool(0.5));
        let a = random::observable(&mut r, dim, da);
        let b = random::observable(&mut r, dim, db);
        let psi = random::state(&mut r, dim);
        let w = weak_jqpd(&a, &b, &psi).unwrap();
        let born_a = born_distribution(&a, &psi).unwrap();
        let born_b = born_distribution(&b, &psi).unwrap();
        for (x, p) in w.marginal_a() {
            prop_assert!((p - c(born_a.get(x), 0.0)).norm() <= 1e-9);
        }
        for (y, p) in w.marginal_b() {
            prop_assert!((p - c(born_b.get(y), 0.0)).norm() <= 1e-9);
        }
    }

    #[test]
    fn strong_total_is_one_iff_commuting(seed in any::<u64>(), dim in 2usize..=6, constructed in any::<bool>()) {
        let mut r = rng(seed);
        let (a, b, psi) = if constructed {
            let block = r.random_range(1..=dim);
            random::block_commuting(&mut r, dim, block)
        } else {
            let a = random::observable(&mut r, dim, true);
            let b = random::observable(&mut r, dim, true);
            (a, b, random::state(&mut r, dim))
        };
        let total = strong_jqpd(&a, &b, &psi).unwrap().total();
        let commute = commute_in_state(&a, &b, &psi).unwrap().holds();
        prop_assert_eq!((total.re - 1.0).abs() <= 1e-9, commute);
        if constructed {
            prop_assert!(commute);
        }
    }

    #[test]
    fn weak_value_is_linear(seed in any::<u64>(), dim in 2usize..=6, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut r = rng(seed);
        let a = random::hermitian(&mut r, dim);
        let b = random::hermitian(&mut r, dim);
        let pre = random::state(&mut r, dim);
        let post = random::state(&mut r, dim);
        prop_assume!(post.inner(&pre).norm() > 0.05);
        let combined = &a * c(alpha, 0.0) + &b * c(beta, 0.0);
        let lhs = weak_value_of(&combined, &pre, &post).unwrap();
        let rhs = weak_value_of(&a, &pre, &post).unwrap() * alpha + weak_value_of(&b, &pre, &post).unwrap() * beta;
        prop_assert!((lhs - rhs).norm() <= 1e-9 * rhs.norm().max(1.0));
    }

    #[test]
    fn perfect_correlation_symmetric_reflexive_and_commuting(seed in any::<u64>(), dim in 2usize..=6, positive in any::<bool>()) {
        let mut r = rng(seed);
        let (a, b, psi) = if positive {
            let block = r.random_range(1..=dim);
            random::perfectly_correlated(&mut r, dim, block)
        } else {
            random::not_correlated(&mut r, dim)
        };
        let ab = perfectly_correlated(&a, &b, &psi).unwrap();
        let ba = perfectly_correlated(&b, &a, &psi).unwrap();
        prop_assert_eq!(ab.consensus, ba.consensus);
        prop_assert!(perfectly_correlated(&a, &a, &psi).unwrap().holds());
        if ab.holds() {
            prop_assert!(commute_in_state(&a, &b, &psi).unwrap().holds());
        }
    }

    #[test]
    fn cyclic_subspaces_are_monotone(seed in any::<u64>(), dim in 2usize..=8) {
        let mut r = rng(seed);
        let (da, db) = (r.random_bool(0.5), r.random_bool(0.5));
        let a = random::observable(&mut r, dim, da);
        let b = random::observable(&mut r, dim, db);
        let psi = random::state(&mut r, dim);
        let small = cyclic_subspace(&[&a], &psi).unwrap();
        let large = cyclic_subspace(&[&a, &b], &psi).unwrap();
        prop_assert!(large.contains(&small, 1e-8));
        for v in large.basis() {
            prop_assert!(large.residual(&(a.matrix() * v)) <= 1e-8);
            prop_assert!(large.residual(&(b.matrix() * v)) <= 1e-8);
        }
    }

    #[test]
    fn extracted_povms_are_complete_and_consistent(seed in any::<u64>(), dim in 2usize..=4, probe in 2usize..=4) {
        let mut r = rng(seed);
        let sp = random::simultaneous_process(&mut r, dim, probe);
        let povm = extract_povm(sp.base());
        let (positivity, completeness) = povm.defects();
        prop_assert!(positivity <= 1e-8 && completeness <= 1e-8);
        let psi = random::state(&mut r, dim);
        prop_assert!(output_distribution(sp.base(), &psi).unwrap().cross_residual <= 1e-9);
    }

    #[test]
    fn von_neumann_model_reproduces_born_rule(seed in any::<u64>(), dim in 2usize..=5) {
        let mut r = rng(seed);
        let degenerate = r.random_bool(0.5);
        let b = random::observable(&mut r, dim, degenerate);
        let psi = random::state(&mut r, dim);
        let out = output_distribution(&von_neumann_model(&b), &psi).unwrap().distribution;
        prop_assert!(out.max_difference(&born_distribution(&b, &psi).unwrap()) <= 1e-9);
    }

    #[test]
    fn commuting_case_witness_verifies(seed in any::<u64>(), dim in 2usize..=5) {
        let mut r = rng(seed);
        let block = r.random_range(1..=dim);
        let (a, b, psi) = random::block_commuting(&mut r, dim, block);
        let sp = construct_commuting_measurement(&a, &b, &psi).unwrap();
        let report = verify_simultaneous(&sp, &a, &b, &psi).unwrap();
        prop_assert!(report.is_simultaneous && report.consequences_hold);
        prop_assert!(report.eps_a <= 1e-8 && report.eps_b <= 1e-8);
    }
}

#[test]
fn meet_of_disjoint_lines_is_zero() {
    let e0 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    let e1 = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
    let p = Projection::from_subspace(&orthonormalize(&[e0], 1e-9));
    let q = Projection::from_subspace(&orthonormalize(&[e1], 1e-9));
    assert!(projection_meet(&p, &q).unwrap().is_zero());
}
