use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng as _;
use regionmark::gnn::{forward_all, GcnModel};
use regionmark::place::{hpwl, legalize, RegionConstraintSet};
use regionmark::rng::rng;
use regionmark::watermark::search;
use regionmark_bench::placed;

fn benches(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    for cells in [1000, 4000] {
        let f = placed(cells, 7).unwrap();
        let model = GcnModel::new(7, 64, 0).unwrap();
        let cons = RegionConstraintSet::from_fences(&f.netlist);
        // Jitter every placeable cell by up to two sites so legalization has work to do.
        let mut r = rng(3);
        let mut jittered = f.placement.clone();
        for cell in f.netlist.placeable_cells().filter(|c| f.netlist.fence_of[c.id].is_none()) {
            let (x, y) = jittered.get(cell.id);
            jittered.set(cell.id, x + r.random_range(-2.0..2.0), y);
        }

        g.bench_with_input(BenchmarkId::new("hpwl", cells), &f, |b, f| b.iter(|| hpwl(&f.netlist, black_box(&f.placement)).unwrap()));
        g.bench_with_input(BenchmarkId::new("forward", cells), &f, |b, f| b.iter(|| forward_all(&model, black_box(&f.graph)).unwrap()));
        g.bench_with_input(BenchmarkId::new("legalize", cells), &f, |b, f| {
            b.iter(|| legalize(&f.netlist, black_box(&jittered), &cons).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("search", cells), &f, |b, f| b.iter(|| search(&model, black_box(&f.graph), 0.2, 2).unwrap()));
    }
    g.finish();
}

criterion_group!(pipeline, benches);
criterion_main!(pipeline);
