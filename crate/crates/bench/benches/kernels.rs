use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vhj_bench::{diffusion_spec, hopf_cole_spec};
use vhj_core::diagnostics::{estimate_monitors, regime_classify, ClassifyOptions};
use vhj_core::solver::{
    default_schedule_ratio, geometric_schedule, hopf_cole_exact, solve, SchemeConfig,
};
use vhj_core::vss::find_vss;

fn solver(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_to_t1");
    g.sample_size(10);
    for h in [0.1, 0.05] {
        let spec = diffusion_spec(h, 1.0);
        g.bench_with_input(BenchmarkId::new("explicit", h), &spec, |b, s| {
            b.iter(|| solve(black_box(s), &SchemeConfig::explicit(), &[1.0]).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("imex", h), &spec, |b, s| {
            b.iter(|| solve(black_box(s), &SchemeConfig::imex(h / 2.0), &[1.0]).unwrap())
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let spec = hopf_cole_spec(1.0 / 64.0);
    let u0 = spec.initial_field().unwrap();
    c.bench_function("hopf_cole_exact", |b| {
        b.iter(|| hopf_cole_exact(black_box(&u0), 2.0, 1.0).unwrap())
    });
}

fn profile(c: &mut Criterion) {
    let mut g = c.benchmark_group("find_vss");
    g.sample_size(10);
    for q in [1.2, 1.3, 1.45] {
        g.bench_with_input(BenchmarkId::from_parameter(q), &q, |b, q| {
            b.iter(|| find_vss(black_box(*q), 1, 1e-10).unwrap())
        });
    }
    g.finish();
}

fn diagnostics(c: &mut Criterion) {
    let spec = diffusion_spec(0.1, 100.0);
    let times = geometric_schedule(0.1, default_schedule_ratio(), 100.0).unwrap();
    let traj = solve(&spec, &SchemeConfig::imex(0.05), &times).unwrap();
    let opts = ClassifyOptions::default();
    c.bench_function("regime_classify", |b| {
        b.iter(|| regime_classify(&spec, black_box(&traj), &opts).unwrap())
    });
    c.bench_function("estimate_monitors", |b| {
        b.iter(|| estimate_monitors(black_box(&traj)).unwrap())
    });
}

criterion_group!(benches, solver, oracle, profile, diagnostics);
criterion_main!(benches);
