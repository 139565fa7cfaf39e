use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use cedir_core::eval::{evaluate_with, ImagePair, DEFAULT_TAUS};
use cedir_core::field::encode_direction_field_with;
use cedir_core::filter::gaussian_blur;
use cedir_core::localize::{handcrafted_response_with, localize, ChannelAxes, LocalizerConfig};
use cedir_core::synth::{generate_scenes, SynthConfig};
use cedir_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench_encode(c: &mut Criterion) {
    let scene = &generate_scenes(&SynthConfig::default(), 7, 1, Exec::Sequential).unwrap()[0];
    let mut group = c.benchmark_group("encode_512");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| encode_direction_field_with(black_box(&scene.points), exec).unwrap())
        });
    }
    group.finish();
}

fn bench_response(c: &mut Criterion) {
    let scene = &generate_scenes(&SynthConfig::default(), 7, 1, Exec::Sequential).unwrap()[0];
    let cfg = LocalizerConfig::default();
    let mut group = c.benchmark_group("handcrafted_response_512");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| handcrafted_response_with(black_box(&scene.clean_field), &cfg, ChannelAxes::Standard, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_blur(c: &mut Criterion) {
    let scene = &generate_scenes(&SynthConfig::default(), 7, 1, Exec::Sequential).unwrap()[0];
    let mut group = c.benchmark_group("gaussian_blur_512_sigma5");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| gaussian_blur(black_box(scene.clean_field.sin()), 5.0, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_synth(c: &mut Criterion) {
    let config = SynthConfig {
        height: 256,
        width: 256,
        ..SynthConfig::default()
    };
    let mut group = c.benchmark_group("generate_8_scenes_256");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| generate_scenes(&config, black_box(3), 8, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_evaluate(c: &mut Criterion) {
    let config = SynthConfig {
        height: 256,
        width: 256,
        ..SynthConfig::default()
    };
    let scenes = generate_scenes(&config, 11, 16, Exec::default()).unwrap();
    let cfg = LocalizerConfig::default();
    let images: Vec<ImagePair> = scenes
        .iter()
        .map(|s| ImagePair {
            preds: localize(&s.corrupted_field, &cfg).unwrap().points(),
            gts: s.points.points().to_vec(),
        })
        .collect();
    let mut group = c.benchmark_group("evaluate_16_images");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| evaluate_with(black_box(&images), &DEFAULT_TAUS, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_encode, bench_response, bench_blur, bench_synth, bench_evaluate);
criterion_main!(benches);
