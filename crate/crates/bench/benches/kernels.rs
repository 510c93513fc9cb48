//! Timings of the dense building blocks: kernels, exhaustions, resolvent
//! singular values, domination sweeps and the full lattice certificate.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kato_core::compactness::{check_domination, resolvent, resolvent_laplace, resolvent_product};
use kato_core::demo::{self, DemoConfig};
use kato_core::graph::{build_exhaustion, generators};
use kato_core::heat::{kernel_from_semigroup, minimal_kernel, DEFAULT_TIMES};
use kato_core::linalg::CMat;
use kato_core::operators::{assemble_covariant, assemble_laplacian, weighted_singular_values};
use kato_core::{random, EndomorphismField, HermitianBundle, Tolerances, UnitaryConnection};

fn random_graph(n: usize, seed: u64) -> kato_core::WeightedGraph {
    let spec = generators::RandomGraphSpec {
        n,
        p: 4.0 / n as f64,
        b_range: (0.1, 2.0),
        rho_range: (0.1, 10.0),
    };
    generators::erdos_renyi(spec, &mut random::rng(seed))
}

fn heat_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("heat_kernel");
    for n in [50, 100, 200, 400] {
        let h = assemble_laplacian(&random_graph(n, 1)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| {
            b.iter(|| kernel_from_semigroup(black_box(h), &DEFAULT_TIMES).unwrap())
        });
    }
    group.finish();
}

fn exhaustion(c: &mut Criterion) {
    let g = generators::path(400, 1.0, 1.0);
    let ex = build_exhaustion(&g, 0, &[50, 100, 200, 399]).unwrap();
    let tol = Tolerances::default();
    c.bench_function("minimal_kernel/path400", |b| {
        b.iter(|| minimal_kernel(black_box(&g), &ex, &DEFAULT_TIMES, &tol).unwrap())
    });
}

fn resolvents(c: &mut Criterion) {
    let mut group = c.benchmark_group("resolvent");
    let g = random_graph(100, 2);
    let bundle = HermitianBundle::identity(g.len(), 2).unwrap();
    let conn = UnitaryConnection::random(&g, &bundle, &mut random::rng(3)).unwrap();
    let h = assemble_covariant(&g, &bundle, &conn).unwrap();
    let w = EndomorphismField::new(2, vec![CMat::identity(2, 2); g.len()]).unwrap();
    group.bench_function("direct/rank2_n100", |b| {
        b.iter(|| resolvent(black_box(&h), 1.0).unwrap())
    });
    // The quadrature oracle evaluates up to 600 semigroups; keep it small.
    let small = assemble_laplacian(&random_graph(30, 7)).unwrap();
    group.bench_function("laplace/scalar_n30", |b| {
        b.iter(|| resolvent_laplace(black_box(&small), 1.0).unwrap())
    });
    group.bench_function("singular_values/rank2_n100", |b| {
        b.iter(|| {
            let k = resolvent_product(&w, black_box(&h), 1.0).unwrap();
            weighted_singular_values(&k, &h.dof_weights())
        })
    });
    group.finish();
}

fn domination(c: &mut Criterion) {
    let g = random_graph(30, 4);
    let bundle = HermitianBundle::identity(g.len(), 2).unwrap();
    let conn = UnitaryConnection::random(&g, &bundle, &mut random::rng(5)).unwrap();
    let t_op = assemble_covariant(&g, &bundle, &conn).unwrap();
    let s_op = assemble_laplacian(&g).unwrap();
    let tol = Tolerances::default();
    c.bench_function("domination/rank2_n30", |b| {
        b.iter(|| {
            let mut rng = random::rng(6);
            check_domination(
                &t_op,
                &s_op,
                &[0.1, 1.0, 10.0],
                &[0.5, 2.0],
                10,
                &mut rng,
                &tol,
            )
            .unwrap()
        })
    });
}

fn lattice_demo(c: &mut Criterion) {
    let mut group = c.benchmark_group("coulomb_lattice");
    group.sample_size(10);
    let config = DemoConfig {
        n: 100,
        trials: 10,
        ..DemoConfig::default()
    };
    group.bench_function("path100", |b| {
        b.iter(|| demo::run(black_box(&config)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    heat_kernel,
    exhaustion,
    resolvents,
    domination,
    lattice_demo
);
criterion_main!(benches);
