use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use freebound::analysis::{unit_grid, weiss_profile_with};
use freebound::par::Strategy;
use freebound::solver::{exact_small_oracle_with, solve, verify_uniqueness_with};
use freebound::{BoundaryData, DomainSpec, Grid, Method, SolveOptions, SourceTerm};

const STRATEGIES: [(&str, Strategy); 2] = [("auto", Strategy::Auto), ("sequential", Strategy::Sequential)];

fn uniqueness(c: &mut Criterion) {
    let grid = Arc::new(Grid::new(DomainSpec::square(-1.0, 1.0), 33).unwrap());
    let f = SourceTerm::constant(-4.0, 2);
    let g = BoundaryData::Constant(0.5);
    let opts = SolveOptions {
        method: Method::ProjectedSor { omega: 1.8 },
        ..SolveOptions::default()
    };
    let mut group = c.benchmark_group("verify_uniqueness");
    group.sample_size(10);
    for (name, s) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| verify_uniqueness_with(&grid, &f, &g, &opts, 8, s).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let grid = Arc::new(Grid::new(DomainSpec::interval(0.0, 1.0), 16).unwrap());
    let f = SourceTerm::constant(-3.0, 1);
    let g = BoundaryData::Function(Arc::new(|x| 0.2 + 0.3 * x[0]));
    let mut group = c.benchmark_group("exact_small_oracle");
    group.sample_size(10);
    for (name, s) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exact_small_oracle_with(&grid, &f, &g, s).unwrap())
        });
    }
    group.finish();
}

fn weiss(c: &mut Criterion) {
    let grid = Arc::new(Grid::new(DomainSpec::interval(-1.0, 1.0), 513).unwrap());
    let f = SourceTerm::constant(-2.0, 1);
    let omega = 2.0 / (1.0 + (std::f64::consts::PI * grid.h() / 2.0).sin());
    let opts = SolveOptions {
        method: Method::ProjectedSor { omega },
        ..SolveOptions::default()
    };
    let u = solve(&grid, &f, &BoundaryData::Constant(0.25), &opts).unwrap().u;
    let unit = unit_grid(1, 257).unwrap();
    let radii = [0.03, 0.06, 0.12, 0.18, 0.25, 0.37];
    let mut group = c.benchmark_group("weiss_profile");
    for (name, s) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| weiss_profile_with(s, &u, &f, [0.5, 0.0], &radii, &unit, 10.0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, uniqueness, oracle, weiss);
criterion_main!(benches);
