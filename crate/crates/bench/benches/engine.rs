use std::hint::black_box;

use airykdv_bench::weights;
use airykdv_core::painleve2::{f_tw, solve_hm, HM_DOMAIN, HM_GRID};
use airykdv_core::residuals::{run_suite, STANDARD_Z};
use airykdv_core::specfun::airy_ai;
use airykdv_core::{observe, CheckKind, DiscretizedOperator, FdScheme, Resolution};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn airy(c: &mut Criterion) {
    c.bench_function("airy_ai/sweep", |b| {
        b.iter(|| (-200..=200).map(|k| airy_ai(black_box(k as f64 * 0.05)).unwrap()).sum::<f64>())
    });
}

fn determinant(c: &mut Criterion) {
    let res = Resolution::default();
    let mut g = c.benchmark_group("log_det");
    for s in weights() {
        g.bench_with_input(BenchmarkId::from_parameter(s.label().to_string()), &s, |b, s| {
            b.iter(|| DiscretizedOperator::build(s, black_box(0.0), 0.5, &res).unwrap().log_det())
        });
    }
    g.finish();
}

fn observables(c: &mut Criterion) {
    let s = airykdv_core::SigmaWeight::kpz();
    c.bench_function("observe/kpz", |b| {
        b.iter(|| observe(&s, black_box(0.3), 0.2, &FdScheme::default_for(0.2)).unwrap())
    });
}

fn residuals(c: &mut Criterion) {
    let s = airykdv_core::SigmaWeight::step(1.0).unwrap();
    let res = Resolution::default();
    c.bench_function("check_all/one_point", |b| {
        b.iter(|| run_suite(&s, &[(0.0, 0.5)], &STANDARD_Z, &CheckKind::ALL, FdScheme::default_for, &res).unwrap())
    });
}

fn painleve(c: &mut Criterion) {
    c.bench_function("f_tw/s=-2", |b| b.iter(|| f_tw(black_box(-2.0), 1.0).unwrap()));
    let mut g = c.benchmark_group("hastings_mcleod");
    g.sample_size(10);
    g.bench_function("bvp", |b| b.iter(|| solve_hm(HM_DOMAIN, HM_GRID).unwrap()));
    g.finish();
}

criterion_group!(benches, airy, determinant, observables, residuals, painleve);
criterion_main!(benches);
