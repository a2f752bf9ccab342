//! Sequential versus rayon execution of the batch kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use msax::codebook::{build_lut_with, kmeans_geodesic, KMeansConfig};
use msax::discover::{find_motifs_with, MotifQuery};
use msax::encode::{encode, encode_batch};
use msax::harness::kmeans_codebook;
use msax::matching::{knn, SequenceDatabase};
use msax::synth::gen_synthetic;
use msax::{Execution, Manifold};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn kernels(c: &mut Criterion) {
    let sphere = Manifold::Hypersphere { ambient: 30 };
    let data = gen_synthetic(sphere, &"classes:c=5,per=8,len=60,style=0.3".parse().unwrap(), 1).unwrap();
    let frames = data.pooled_points();
    let cb = kmeans_codebook(&frames, 40, 20, 1, Execution::default()).unwrap();
    let enc = encode_batch(&data.sequences, &cb, 1, Execution::default()).unwrap();
    let db = SequenceDatabase::from_entries(cb.id(), enc.clone()).unwrap();

    let concat = gen_synthetic(sphere, &"concat:classes=5,reps=6,len=40".parse().unwrap(), 2).unwrap();
    let long = encode(&concat.sequences[0], &cb, 2).unwrap();
    let motif_query = MotifQuery::new(8, 2.0, 8, 5);

    let mut group = c.benchmark_group("parallel");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("knn", name), &exec, |b, &exec| {
            b.iter(|| knn(black_box(&enc[0]), &db, &cb, 5, exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("kmeans_k40", name), &exec, |b, &exec| {
            let mut cfg = KMeansConfig::new(40, 1);
            cfg.max_iters = 5;
            cfg.exec = exec;
            b.iter(|| kmeans_geodesic(black_box(&frames), &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("lut_k40", name), &exec, |b, &exec| {
            b.iter(|| build_lut_with(black_box(cb.symbols()), exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("encode_batch_w3", name), &exec, |b, &exec| {
            b.iter(|| encode_batch(black_box(&data.sequences), &cb, 3, exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("discover", name), &exec, |b, &exec| {
            b.iter(|| find_motifs_with(black_box(&long), &motif_query, &cb, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
