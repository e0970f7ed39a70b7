use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qclab_bench::{full_tree, maj_instance};
use qclab_core::simulate::{exact_q, run_aprime, success_chain, Simulator};

fn simulate(c: &mut Criterion) {
    let inst = maj_instance(3);
    let tree = full_tree(&inst);
    let mut group = c.benchmark_group("aprime");
    group.bench_function("run", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            run_aprime(black_box(&inst), &tree, 0b101, seed).unwrap()
        })
    });
    let sim = Simulator::new(&inst, &tree, 0b101).unwrap();
    group.sample_size(10);
    group.bench_function("leaf_counts_10k", |b| b.iter(|| sim.leaf_counts(black_box(7), 10_000).unwrap()));
    group.bench_function("exact_q", |b| b.iter(|| exact_q(black_box(&inst), &tree, 0b101).unwrap()));
    group.bench_function("success_chain", |b| b.iter(|| success_chain(black_box(&inst), &tree).unwrap()));
    group.finish();
}

criterion_group!(benches, simulate);
criterion_main!(benches);
