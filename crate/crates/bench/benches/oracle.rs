use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use musobench::corpus::{gen_subsetsum, gen_timetabling, SubsetSumParams, TimeTablingParams};
use musobench::oracle::{brute_force_subsetsum, brute_force_timetabling, solve_subsetsum, solve_timetabling};
use musobench::selftest::{worked_subsetsum, worked_timetabling};

fn worked(c: &mut Criterion) {
    let ss = worked_subsetsum();
    let tt = worked_timetabling();
    c.bench_function("subsetsum/worked", |b| {
        b.iter(|| solve_subsetsum(black_box(&ss)).unwrap())
    });
    c.bench_function("timetabling/worked", |b| {
        b.iter(|| solve_timetabling(black_box(&tt)).unwrap())
    });
}

fn seeded(c: &mut Criterion) {
    let ss: Vec<_> = (0..32)
        .map(|s| gen_subsetsum(&SubsetSumParams::default(), s).unwrap())
        .collect();
    let tt: Vec<_> = (0..32)
        .map(|s| gen_timetabling(&TimeTablingParams::default(), s).unwrap())
        .collect();
    let mut group = c.benchmark_group("seeded-32");
    group.bench_function(BenchmarkId::new("subsetsum", "backtrack"), |b| {
        b.iter(|| ss.iter().map(|i| solve_subsetsum(i).unwrap().len()).sum::<usize>())
    });
    group.bench_function(BenchmarkId::new("subsetsum", "exhaustive"), |b| {
        b.iter(|| {
            ss.iter()
                .map(|i| brute_force_subsetsum(i).unwrap().len())
                .sum::<usize>()
        })
    });
    group.bench_function(BenchmarkId::new("timetabling", "backtrack"), |b| {
        b.iter(|| tt.iter().map(|i| solve_timetabling(i).unwrap().len()).sum::<usize>())
    });
    group.bench_function(BenchmarkId::new("timetabling", "exhaustive"), |b| {
        b.iter(|| {
            tt.iter()
                .map(|i| brute_force_timetabling(i).unwrap().len())
                .sum::<usize>()
        })
    });
    group.finish();
}

criterion_group!(benches, worked, seeded);
criterion_main!(benches);
