use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use doubleduty::arch::{ArchSpec, ArchVariant};
use doubleduty::lutmap::map_to_luts;
use doubleduty::pack::{pack, PackOptions};
use doubleduty::ppgen::generate_unrolled;
use doubleduty::reduce::{best_placement, Algorithm, PlacementCache};
use doubleduty::{analyze, harness};
use doubleduty_bench::{multiplier, stress, CONSTANT_16};

fn placement(c: &mut Criterion) {
    let mut g = c.benchmark_group("best_placement");
    for bits in [8u32, 12, 16] {
        let rows = generate_unrolled(bits, CONSTANT_16 & ((1 << bits) - 1)).unwrap().matrix.rows;
        g.bench_with_input(BenchmarkId::from_parameter(rows.len()), &rows, |b, rows| {
            b.iter(|| best_placement(black_box(rows), &mut PlacementCache::new(None)).unwrap())
        });
    }
    g.finish();
}

fn reduction(c: &mut Criterion) {
    let mut g = c.benchmark_group("reduce16");
    for alg in Algorithm::ALL {
        g.bench_function(alg.as_str(), |b| b.iter(|| multiplier(black_box(16), alg)));
    }
    g.finish();
}

fn mapping(c: &mut Criterion) {
    let n = multiplier(16, Algorithm::Wallace);
    c.bench_function("map_wallace16", |b| b.iter(|| map_to_luts(black_box(&n), 6).unwrap()));
}

fn packing(c: &mut Criterion) {
    let mapped = map_to_luts(&stress(400), 6).unwrap();
    let mut g = c.benchmark_group("pack_stress400");
    for v in ArchVariant::ALL {
        let spec = ArchSpec::defaults(v);
        g.bench_function(v.to_string(), |b| b.iter(|| pack(black_box(&mapped), &spec, &PackOptions::default()).unwrap()));
    }
    g.finish();
}

fn full_flow(c: &mut Criterion) {
    let n = multiplier(12, Algorithm::Dadda);
    let spec = ArchSpec::defaults(ArchVariant::Dd5);
    c.bench_function("flow_dadda12_dd5", |b| {
        b.iter(|| {
            let m = map_to_luts(black_box(&n), 6).unwrap();
            let p = pack(&m, &spec, &PackOptions::default()).unwrap();
            analyze(&p, &m, &spec).unwrap()
        })
    });
    let sweep = harness::SweepSpec { widths: vec![8], random_constants: 2, seeds: vec![1], ..Default::default() };
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    g.bench_function("w8x2", |b| b.iter(|| harness::run_sweep(black_box(&sweep)).unwrap()));
    g.finish();
}

criterion_group!(benches, placement, reduction, mapping, packing, full_flow);
criterion_main!(benches);
