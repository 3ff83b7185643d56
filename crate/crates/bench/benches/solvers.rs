use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use sticky_seq_core::*;

fn gauss(lo: f64, hi: f64) -> FamilySpec {
    FamilySpec::gaussian(1.0, lo, hi).unwrap()
}

fn unit_box(k: usize) -> ModelBox {
    ModelBox::new(vec![0.0; k], vec![1.0; k]).unwrap()
}

fn best_responses(c: &mut Criterion) {
    let bai = Problem::best_arm(gauss(0.0, 1.0), unit_box(4)).unwrap();
    let mu = [0.8, 0.6, 0.5, 0.2];
    let w = [0.4, 0.3, 0.2, 0.1];
    c.bench_function("best_response/bai4", |b| {
        b.iter(|| best_response(&bai, black_box(&mu), black_box(&w), &[vec![1.0]]).unwrap())
    });
    let reg = Problem::max_regression(gauss(0.0, 1.0), unit_box(3), 0.1).unwrap();
    let x = reg.reference_answer(&mu[..3]);
    c.bench_function("best_response/max_regression3", |b| {
        b.iter(|| best_response(&reg, black_box(&mu[..3]), &w[..3], std::slice::from_ref(&x)).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let bai = Problem::best_arm(gauss(0.0, 1.0), unit_box(3)).unwrap();
    let mu = [0.8, 0.6, 0.2];
    c.bench_function("oracle_weights/bai3", |b| {
        b.iter(|| oracle_weights(&bai, black_box(&mu), &[1.0]).unwrap())
    });
    let good = Problem::eps_good(gauss(0.0, 1.0), unit_box(5), 0.1).unwrap();
    let mu5 = [0.9, 0.85, 0.6, 0.4, 0.1];
    c.bench_function("oracle_weights/eps_good5", |b| {
        b.iter(|| oracle_weights(&good, black_box(&mu5), &[1.0]).unwrap())
    });
}

fn value(c: &mut Criterion) {
    let reg = Problem::identity_regression(gauss(0.0, 1.0), unit_box(1), 0.1).unwrap();
    c.bench_function("problem_value/identity1", |b| {
        b.iter(|| problem_value(&reg, black_box(&[0.48]), 0.01, 1e-3).unwrap())
    });
    let max2 = Problem::max_regression(gauss(0.0, 1.0), unit_box(2), 0.1).unwrap();
    c.bench_function("problem_value/max_regression2", |b| {
        b.iter(|| problem_value(&max2, black_box(&[0.7, 0.3]), 0.02, 1e-3).unwrap())
    });
}

fn trial(c: &mut Criterion) {
    let p = Arc::new(Problem::best_arm(gauss(-1.0, 2.0), ModelBox::new(vec![-1.0; 2], vec![2.0; 2]).unwrap()).unwrap());
    let mut cfg = TrialConfig::new(p, vec![1.0, 0.0], 0.1, RuleKind::Tas);
    let mut group = c.benchmark_group("trial");
    group.sample_size(20);
    group.bench_function("bai2_tas", |b| {
        b.iter(|| {
            cfg.seed = cfg.seed.wrapping_add(1);
            run_trial(&cfg).unwrap().tau
        })
    });
    group.finish();
}

criterion_group!(benches, best_responses, oracle, value, trial);
criterion_main!(benches);
