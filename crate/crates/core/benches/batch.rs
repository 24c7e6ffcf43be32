//! Sequential vs. rayon paths on the batch hot spots.

use std::collections::{BTreeMap, HashMap};

use coursetime::eval::{bootstrap_ci, BootstrapConfig};
use coursetime::numerics::{FusionModel, ModelDims, WeightBundle};
use coursetime::retrieval::FlatIndex;
use coursetime::tensor::Matrix;
use coursetime::vectors::VectorBlock;
use coursetime::Exec;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f32>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

fn search_batch(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (n, d) = (20_000, 256);
    let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let index = FlatIndex::build(&VectorBlock::from_rows(ids, &random_rows(&mut rng, n, d)).unwrap()).unwrap();
    let queries: Vec<(String, Vec<f32>)> =
        random_rows(&mut rng, 64, d).into_iter().enumerate().map(|(i, q)| (format!("q{i}"), q)).collect();
    let mut g = c.benchmark_group("search_batch");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| index.search_batch(black_box(&queries), 10, exec).unwrap())
        });
    }
    g.finish();
}

fn fuse_batch(c: &mut Criterion) {
    let dims = ModelDims { model: 128, vision: 96, ff_hidden: 64, fusion_layers: 2, rerank_layers: 1 };
    let model = FusionModel::load(&WeightBundle::random(2, dims)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mat = |rows, cols| {
        let data = random_rows(&mut rng, rows, cols).concat();
        Matrix::from_vec(rows, cols, data).unwrap()
    };
    let inputs: Vec<(String, Matrix, Matrix)> = (0..256).map(|i| (format!("s{i}"), mat(48, 128), mat(4, 96))).collect();
    let mut g = c.benchmark_group("fuse_batch");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| model.fuse_batch(black_box(&inputs), exec).unwrap()));
    }
    g.finish();
}

fn bootstrap(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scores: BTreeMap<String, f64> = (0..902).map(|i| (format!("q{i}"), rng.gen_range(0.0..1.0))).collect();
    let courses: HashMap<String, String> = (0..902).map(|i| (format!("q{i}"), format!("c{}", i % 6))).collect();
    let cfg = BootstrapConfig { replicates: 10_000, level: 0.95, seed: 0 };
    let mut g = c.benchmark_group("bootstrap");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| bootstrap_ci(black_box(&scores), &courses, &cfg, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, search_batch, fuse_batch, bootstrap);
criterion_main!(benches);
