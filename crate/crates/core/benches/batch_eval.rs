// SPDX-License-Identifier: Apache-2.0
//! Certain answers for a batch of random instances, on the thread pool
//! and on the calling thread.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nrpq::eval::{certain_answers_with, EvalOptions, Parallelism};
use nrpq::kb::KnowledgeBase;
use nrpq::query::Cn2rpq;
use nrpq::random::{random_cn2rpq, random_consistent_kb, Signature};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn batch(n: usize, individuals: usize) -> Vec<(KnowledgeBase, Cn2rpq)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sig = Signature::small(4, 3, 0);
    sig.individuals = (0..individuals).map(|k| format!("i{k}")).collect();
    (0..n)
        .map(|_| (random_consistent_kb(&mut rng, &sig, 10, individuals * 3), random_cn2rpq(&mut rng, &sig, 3, 5, 2)))
        .collect()
}

fn run(instances: &[(KnowledgeBase, Cn2rpq)], parallelism: Parallelism) -> usize {
    let opts = EvalOptions { parallelism, ..EvalOptions::default() };
    let one = |(kb, q): &(KnowledgeBase, Cn2rpq)| certain_answers_with(q, kb, &opts).map_or(0, |a| a.len());
    match parallelism {
        Parallelism::Parallel => nrpq::par::map(instances.iter().collect(), one).into_iter().sum(),
        Parallelism::Sequential => instances.iter().map(one).sum(),
    }
}

fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch_eval");
    group.sample_size(10);
    for individuals in [20, 80] {
        let instances = batch(32, individuals);
        for (name, p) in [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, individuals), &instances, |b, inst| b.iter(|| run(inst, p)));
        }
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
