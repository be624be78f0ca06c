use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use polyclone::compat::{check_compat_sampled, check_compat_symmetric};
use polyclone::structures::{gen_s, SpecA};
use polyclone::trace::{certify_lowerbound_a, fuzz_certificate};
use polyclone::witness::Witness;
use polyclone::{Exec, FamilySpec};

const STRATEGIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn exact_multisets(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_multisets");
    group.sample_size(10);
    for (n, m, i) in [(0, 4, 0), (1, 3, 0), (1, 3, 1)] {
        let w = Witness::f_a(n, m).unwrap();
        let r = gen_s(SpecA::new(n, m).unwrap(), i).unwrap();
        for (label, exec) in STRATEGIES {
            group.bench_with_input(BenchmarkId::new(label, format!("A({n},{m})/S{i}")), &exec, |b, &exec| {
                b.iter(|| check_compat_symmetric(black_box(&w), &r, u64::MAX, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn sampled_multisets(c: &mut Criterion) {
    let mut group = c.benchmark_group("sampled_multisets");
    group.sample_size(10);
    let w = Witness::f_a(2, 2).unwrap();
    let r = gen_s(SpecA::new(2, 2).unwrap(), 2).unwrap();
    for (label, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::new(label, "A(2,2)/S2 x 10^4"), |b| {
            b.iter(|| check_compat_sampled(black_box(&w), &r, 10_000, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn certificate_fuzz(c: &mut Criterion) {
    let mut group = c.benchmark_group("certificate_fuzz");
    group.sample_size(10);
    let cert = certify_lowerbound_a(4, 3).unwrap();
    let s = FamilySpec::A { n: 4, m: 3 }.structure().unwrap();
    for (label, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::new(label, "A(4,3) x 200"), |b| {
            b.iter(|| fuzz_certificate(black_box(&cert), &s, 200, 1, exec))
        });
    }
    group.finish();
}

criterion_group!(benches, exact_multisets, sampled_multisets, certificate_fuzz);
criterion_main!(benches);
