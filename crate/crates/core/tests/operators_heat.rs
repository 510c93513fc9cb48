//! Operator and semigroup invariants on random weighted graphs.

mod common;

use kato_core::graph::{build_exhaustion, generators};
use kato_core::heat::{kernel_from_semigroup, minimal_kernel, semigroup};
use kato_core::linalg::weighted_norm;
use kato_core::operators::{
    assemble_covariant, assemble_laplacian, covariant_form, dirichlet_restriction, form_bound,
    quadratic_form,
};
use kato_core::random;
use kato_core::{HermitianBundle, Section, Tolerances, UnitaryConnection};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex_values(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<Complex64> {
    random::complex_vector(rng, n).iter().copied().collect()
}

#[test]
fn sup_increments_decay_along_a_path() {
    let g = generators::path(20, 1.0, 1.0);
    let ex = build_exhaustion(&g, 0, &[2, 5, 10, 19]).unwrap();
    let mk = minimal_kernel(&g, &ex, &[0.1, 1.0, 10.0], &Tolerances::default()).unwrap();
    assert!(mk.report.pass());
    for t in [0.1, 1.0, 10.0] {
        let diag: Vec<f64> = mk.levels.iter().map(|k| k.at(t).unwrap()[(0, 0)]).collect();
        assert!(
            diag.windows(2).all(|w| w[0] <= w[1] + 1e-12),
            "t={t}: {diag:?}"
        );
    }
    let inc = mk.report.sup_increments(0.1);
    assert_eq!(inc.len(), 3);
    assert!(inc[2] < inc[0], "{inc:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn operator_form_matches_graph_form(seed in any::<u64>(), n in 2usize..30) {
        let mut rng = common::rng(seed);
        let g = common::graph(&mut rng, n);
        let h = assemble_laplacian(&g).unwrap();
        let f = complex_values(&mut rng, n);
        let (lhs, rhs) = (h.form(&f, &f), quadratic_form(&g, &f, &f).unwrap());
        prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1e-300));
        prop_assert!(lhs.im.abs() <= 1e-10 * lhs.re.abs().max(1.0));
    }

    #[test]
    fn covariant_form_matches_operator(seed in any::<u64>(), n in 2usize..15, rank in 1usize..4) {
        let mut rng = common::rng(seed);
        let g = common::graph(&mut rng, n);
        let bundle = HermitianBundle::identity(n, rank).unwrap();
        let conn = UnitaryConnection::random(&g, &bundle, &mut rng).unwrap();
        let h = assemble_covariant(&g, &bundle, &conn).unwrap();
        let f = Section::random(&mut rng, n, rank);
        let (lhs, rhs) = (h.form(&f.to_flat(), &f.to_flat()), covariant_form(&g, &conn, &f, &f).unwrap());
        prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1e-300));
    }

    #[test]
    fn norm_is_at_most_twice_the_form_bound(seed in any::<u64>(), n in 2usize..30) {
        let mut rng = common::rng(seed);
        let g = common::graph(&mut rng, n);
        let h = assemble_laplacian(&g).unwrap();
        prop_assert!(h.norm() <= 2.0 * form_bound(&g) * (1.0 + 1e-12));
    }

    #[test]
    fn trivial_connection_gives_the_laplacian(seed in any::<u64>(), n in 2usize..20) {
        let mut rng = common::rng(seed);
        let g = common::graph(&mut rng, n);
        let bundle = HermitianBundle::identity(n, 1).unwrap();
        let h = assemble_covariant(&g, &bundle, &UnitaryConnection::trivial(1)).unwrap();
        let laplacian = assemble_laplacian(&g).unwrap();
        prop_assert_eq!(h.matrix(), laplacian.matrix());
    }

    #[test]
    fn gauge_transforms_preserve_the_spectrum(seed in any::<u64>(), n in 2usize..15, rank in 1usize..4) {
        let mut rng = common::rng(seed);
        let g = common::graph(&mut rng, n);
        let bundle = HermitianBundle::identity(n, rank).unwrap();
        let conn = UnitaryConnection::random(&g, &bundle, &mut rng).unwrap();
        let u: Vec<_> = (0..n).map(|_| random::unitary(&mut rng, rank)).collect();
        let a = assemble_covariant(&g, &bundle, &conn).unwrap();
        let b = assemble_covariant(&g, &bundle, &conn.gauge_transform(&g, &u)).unwrap();
        for (x, y) in a.eigenvalues().unwrap().iter().zip(b.eigenvalues().unwrap()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn dirichlet_restriction_is_monotone(seed in any::<u64>(), n in 3usize..30) {
        let mut rng = common::rng(seed);
        let g = common::graph(&mut rng, n);
        let h = assemble_laplacian(&g).unwrap();
        let dist: Vec<usize> = g.hop_distances(0).into_iter().map(Option::unwrap).collect();
        let ball = |r: usize| -> Vec<usize> { (0..n).filter(|&x| dist[x] <= r).collect() };
        let mut previous = f64::INFINITY;
        for r in 0..=*dist.iter().max().unwrap() {
            let lmin = dirichlet_restriction(&h, &ball(r)).unwrap().min_eigenvalue().unwrap();
            prop_assert!(lmin <= previous + 1e-10);
            previous = lmin;
        }
    }

    #[test]
    fn semigroup_law(seed in any::<u64>(), n in 2usize..25, t in 0.0f64..5.0, s in 0.0f64..5.0) {
        let mut rng = common::rng(seed);
        let h = assemble_laplacian(&common::graph(&mut rng, n)).unwrap();
        let lhs = semigroup(&h, t + s).unwrap();
        let rhs = semigroup(&h, t).unwrap() * semigroup(&h, s).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-9);
    }

    #[test]
    fn semigroup_is_a_contraction(seed in any::<u64>(), n in 2usize..25, t in 0.0f64..10.0) {
        let mut rng = common::rng(seed);
        let g = common::graph(&mut rng, n);
        let h = assemble_laplacian(&g).unwrap();
        let f = complex_values(&mut rng, n);
        let v = nalgebra::DVector::from_column_slice(&f);
        let out: Vec<Complex64> = (semigroup(&h, t).unwrap() * v).iter().copied().collect();
        prop_assert!(weighted_norm(&out, g.rho()) <= weighted_norm(&f, g.rho()) * (1.0 + 1e-12));
    }

    #[test]
    fn semigroup_preserves_positivity(seed in any::<u64>(), n in 2usize..25, t in 0.0f64..10.0) {
        let mut rng = common::rng(seed);
        let h = assemble_laplacian(&common::graph(&mut rng, n)).unwrap();
        let f: Vec<f64> = random::real_vector(&mut rng, n).iter().map(|v| v.abs()).collect();
        let p = semigroup(&h, t).unwrap();
        for x in 0..n {
            let value: f64 = (0..n).map(|y| p[(x, y)].re * f[y]).sum();
            prop_assert!(value >= -1e-12);
        }
    }

    #[test]
    fn weighted_diagonal_sums_to_the_trace(seed in any::<u64>(), n in 2usize..25, t in 0.01f64..10.0) {
        let mut rng = common::rng(seed);
        let g = common::graph(&mut rng, n);
        let h = assemble_laplacian(&g).unwrap();
        let k = kernel_from_semigroup(&h, &[t]).unwrap();
        let p = k.at(t).unwrap();
        let lhs: f64 = (0..n).map(|x| p[(x, x)] * g.rho()[x]).sum();
        let trace: f64 = h.eigenvalues().unwrap().iter().map(|l| (-t * l).exp()).sum();
        prop_assert!((lhs - trace).abs() <= 1e-9 * trace);
    }
}
