use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DVector;
use proxaccel::{damping_solve, pg_step, run_daarem, run_nidaarem, DaaremConfig, RestartCriterion, StepConfig};
use proxaccel_bench::{box_qp, lasso, window};
use std::hint::black_box;

fn damping(c: &mut Criterion) {
    let mut group = c.benchmark_group("damping_solve");
    for p in [100, 1000] {
        let (f_mat, f) = window(p, 10, 1);
        group.bench_with_input(BenchmarkId::from_parameter(p), &p, |b, _| {
            b.iter(|| damping_solve(black_box(&f_mat), black_box(&f), 0.3).unwrap())
        });
    }
    group.finish();
}

fn pg(c: &mut Criterion) {
    let prob = lasso(100, 1000, 0.5, 0.1, 0);
    let t = StepConfig::for_problem(&prob).t;
    let x = DVector::from_element(1000, 0.01);
    c.bench_function("pg_step/lasso_100x1000", |b| b.iter(|| pg_step(&prob, black_box(&x), t).unwrap()));
}

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let prob = lasso(100, 400, 0.5, 0.1, 2);
    let cfg = StepConfig::for_problem(&prob).with_eps_stop(1e-6);
    let x0 = DVector::zeros(400);
    let dcfg = DaaremConfig::default();
    group.bench_function("daarem/lasso_100x400", |b| b.iter(|| run_daarem(&prob, &x0, cfg, &dcfg).unwrap()));
    group.bench_function("nidaarem/lasso_100x400", |b| {
        b.iter(|| run_nidaarem(&prob, &x0, cfg, &dcfg, RestartCriterion::Gradient, 1000).unwrap())
    });

    let qp = box_qp(100, 1e3, 3);
    let cfg = StepConfig::for_problem(&qp).with_eps_stop(1e-6);
    let x0 = DVector::zeros(100);
    group.bench_function("daarem/box_qp_100", |b| b.iter(|| run_daarem(&qp, &x0, cfg, &dcfg).unwrap()));
    group.finish();
}

criterion_group!(benches, damping, pg, solvers);
criterion_main!(benches);
