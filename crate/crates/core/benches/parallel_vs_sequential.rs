use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use logwave_core::par;
use logwave_core::pde::{InitialData, SimilarityRunConfig, SimilaritySolver};
use logwave_core::verify::{check_identity_multiplier, check_identity_pohozaev, random_fields};
use logwave_core::ModelParams;

fn identity_corpus(c: &mut Criterion) {
    let jobs: Vec<_> = random_fields(1, 50)
        .into_iter()
        .flat_map(|f| [0.1, 0.5, 0.9].map(|e| (f.clone(), e)))
        .collect();
    let work = |(f, eta): &(logwave_core::quad::TestField, f64)| {
        check_identity_pohozaev(f, *eta).unwrap().residual + check_identity_multiplier(f, *eta).unwrap().residual
    };
    let mut g = c.benchmark_group("identity_corpus");
    g.bench_function("parallel", |b| b.iter(|| black_box(par::map(&jobs, work))));
    g.bench_function("sequential", |b| b.iter(|| black_box(par::map_seq(&jobs, work))));
    g.finish();
}

fn level_probes(c: &mut Criterion) {
    let p = ModelParams::new(3, -1.0).unwrap();
    let mut cfg = SimilarityRunConfig::starting_at(p, 20.0, 21.0);
    cfg.grid_size = 16;
    let solver = SimilaritySolver::new(cfg).unwrap();
    let levels: Vec<f64> = (0..16).map(|k| -0.2 + 0.025 * k as f64).collect();
    let work = |c: &f64| {
        let st = solver.initial_state(&InitialData::Kappa, *c).unwrap();
        solver.probe(&st, 21.0, 0.0).unwrap()
    };
    let mut g = c.benchmark_group("level_probes");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| black_box(par::map(&levels, work))));
    g.bench_function("sequential", |b| b.iter(|| black_box(par::map_seq(&levels, work))));
    g.finish();
}

criterion_group!(benches, identity_corpus, level_probes);
criterion_main!(benches);
