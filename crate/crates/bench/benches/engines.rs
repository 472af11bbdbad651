use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use mtm_bench::round_robin_seeding;
use mtm_core::amtm::{run_async, ConstantMax, DelayBounds};
use mtm_core::analysis::check_trace_invariants;
use mtm_core::graph::gen_ring;
use mtm_core::sync::{run_until_complete, UniformAccept};
use mtm_core::RandomDiffusion;

fn sync_engine(c: &mut Criterion) {
    let g = gen_ring(64).unwrap();
    let initial = round_robin_seeding(64, 8);
    c.bench_function("sync_ring64_k8", |b| {
        b.iter(|| {
            run_until_complete(
                black_box(&g),
                &initial,
                &RandomDiffusion,
                &UniformAccept,
                3,
                10_000,
            )
            .unwrap()
        })
    });
    let trace =
        run_until_complete(&g, &initial, &RandomDiffusion, &UniformAccept, 3, 10_000).unwrap();
    c.bench_function("invariant_check_ring64_k8", |b| {
        b.iter(|| check_trace_invariants(black_box(&trace)))
    });
}

fn async_engine(c: &mut Criterion) {
    let g = gen_ring(16).unwrap();
    let initial = round_robin_seeding(16, 4);
    let bounds = DelayBounds {
        delta_update: 1000,
        delta_conn: 600,
        rate_bits: 4,
        token_bits: 1200,
    };
    c.bench_function("async_ring16_k4_constant_max", |b| {
        b.iter(|| {
            run_async(
                black_box(&g),
                &initial,
                &RandomDiffusion,
                bounds,
                &mut ConstantMax,
                3,
                100_000_000,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, sync_engine, async_engine);
criterion_main!(benches);
