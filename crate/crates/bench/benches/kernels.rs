use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use dpd_bench::gas;
use dpd_core::engine::Engine;
use dpd_core::fastmath::{fastcos2pi, fastlog, fastpow};
use dpd_core::forces::compute_pair_forces;
use dpd_core::neighbor::{build_coarse_stencil, build_neighbor_table, expand_fine_stencil};
use dpd_core::rng::{gaussian, pair_uniforms, CounterStream, PairRandomState};
use dpd_core::sort::{radix_sort, reorder_particles};
use dpd_core::system::{BondTopology, PairParams, RunConfig};

fn math(c: &mut Criterion) {
    let mut rng = CounterStream::new(3, 3);
    let words: Vec<u32> = (0..4096).map(|_| rng.next_u32() | 1).collect();
    let reals: Vec<(f64, f64)> = (0..4096).map(|_| (1e-6 + 2.0 * rng.uniform(), 0.25 + 2.75 * rng.uniform())).collect();
    let mut g = c.benchmark_group("fastmath");
    g.throughput(Throughput::Elements(4096));
    g.bench_function("fastlog", |b| b.iter(|| words.iter().map(|&v| fastlog(black_box(v))).sum::<f64>()));
    g.bench_function("fastcos2pi", |b| b.iter(|| words.iter().map(|&v| fastcos2pi(black_box(v))).sum::<f64>()));
    g.bench_function("fastpow", |b| b.iter(|| reals.iter().map(|&(x, y)| fastpow(black_box(x), y)).sum::<f64>()));
    g.bench_function("std_powf", |b| b.iter(|| reals.iter().map(|&(x, y)| black_box(x).powf(y)).sum::<f64>()));
    let st = PairRandomState::new(1, 2);
    g.bench_function("pair_gaussian", |b| {
        b.iter(|| {
            words
                .windows(2)
                .enumerate()
                .map(|(k, w)| {
                    let (u, v) = pair_uniforms(w[0], w[1], k as u32, k as u32 + 1, &st);
                    gaussian(u, v)
                })
                .sum::<f64>()
        })
    });
    g.finish();
}

fn sorting(c: &mut Criterion) {
    let mut rng = CounterStream::new(5, 5);
    let keys: Vec<u32> = (0..100_000).map(|_| rng.next_u32()).collect();
    let vals: Vec<u32> = (0..100_000).collect();
    let mut g = c.benchmark_group("sort");
    g.throughput(Throughput::Elements(keys.len() as u64));
    g.bench_function("radix_1e5", |b| b.iter(|| radix_sort(black_box(&keys), &vals, 32)));
    g.bench_function("std_stable_1e5", |b| {
        b.iter_batched(
            || keys.iter().copied().zip(vals.iter().copied()).collect::<Vec<_>>(),
            |mut v| v.sort_by_key(|p| p.0),
            BatchSize::LargeInput,
        )
    });
    let (_, grid, store, _) = gas(16.0, 3.0);
    g.throughput(Throughput::Elements(store.len() as u64));
    g.bench_function("reorder_16cube", |b| b.iter(|| reorder_particles(black_box(&store), &grid).unwrap()));
    g.finish();
}

fn pairs(c: &mut Criterion) {
    let (bx, grid, mut store, table) = gas(16.0, 3.0);
    let fine = expand_fine_stencil(&build_coarse_stencil(&grid), &grid);
    let params = PairParams::uniform(25.0, 4.5, 1.0, 1.0, 1.0, 0.01).unwrap();
    let st = PairRandomState::new(1, 7);
    let mut g = c.benchmark_group("pairs");
    g.throughput(Throughput::Elements(store.len() as u64));
    g.bench_function("neighbor_table_16cube", |b| {
        b.iter(|| build_neighbor_table(black_box(&store), &grid, &fine, 1.0, 0.3, 128).unwrap())
    });
    g.bench_function("pair_forces_16cube", |b| {
        b.iter(|| compute_pair_forces(&mut store, &table, &params, Some(&bx), &st).unwrap())
    });
    g.finish();
}

fn steps(c: &mut Criterion) {
    let mut g = c.benchmark_group("engine");
    g.sample_size(10);
    for domains in [[1, 1, 1], [2, 1, 1]] {
        let (bx, _, store, _) = gas(16.0, 3.0);
        let params = PairParams::uniform(25.0, 4.5, 1.0, 1.0, 1.0, 0.01).unwrap();
        let cfg = RunConfig {
            domains,
            ..RunConfig::default()
        };
        let mut e = Engine::new(bx, params, cfg, store, &BondTopology::default()).unwrap();
        g.throughput(Throughput::Elements(10 * e.n_particles() as u64));
        g.bench_function(format!("10_steps_16cube_{}x{}x{}", domains[0], domains[1], domains[2]), |b| {
            b.iter(|| e.run(10).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, math, sorting, pairs, steps);
criterion_main!(benches);
