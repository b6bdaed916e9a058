use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rnerf_core::autodiff::Regressor;
use rnerf_core::encoding::{positional_encode, EncodingConfig};
use rnerf_core::evaluation::MriBaseline;
use rnerf_core::geometry::{build_ray_bundle, Point3, RayTracingConfig};
use rnerf_core::network::{ModelConfig, NetworkShape, RNerfModel};
use rnerf_core::radiometry::{render_stage, PhasorSignal, VoxelField};
use rnerf_core::scene::{generate_dataset, OracleConfig, Placement, SceneLayout, SceneSample};
use rnerf_core::InputEncoding;

fn scene(count: usize) -> Vec<SceneSample> {
    generate_dataset(&SceneLayout::default(), count, &OracleConfig::default(), 0).unwrap()
}

fn model(rays: usize, samples: usize, width: usize) -> RNerfModel {
    let bounds = SceneLayout::default().bounds().unwrap();
    let cfg = ModelConfig::new(
        RayTracingConfig::new(rays, samples, 0.0, 0.5).unwrap(),
        InputEncoding::default(),
        NetworkShape::uniform(8, width),
        bounds,
    );
    RNerfModel::new(cfg, 0).unwrap()
}

fn primitives(c: &mut Criterion) {
    let cfg = RayTracingConfig::new(36, 16, 0.0, 5.0).unwrap();
    c.bench_function("ray_bundle_36x16", |b| {
        b.iter(|| build_ray_bundle(black_box(Point3::new(0.1, 0.0, 0.2)), &cfg).unwrap())
    });

    let n = 36 * 16;
    let sig: Vec<PhasorSignal> = (0..n)
        .map(|i| PhasorSignal::new(1.0 + i as f64 * 1e-3, i as f64 * 0.1).unwrap())
        .collect();
    let field = VoxelField::new(36, 16, sig.clone(), sig).unwrap();
    c.bench_function("render_stage_36x16", |b| {
        b.iter(|| render_stage(black_box(&field)).unwrap())
    });

    let enc = EncodingConfig::new(10, true).unwrap();
    c.bench_function("positional_encode_l10", |b| {
        b.iter(|| positional_encode(black_box(&[0.3, -0.4, 0.9]), &enc))
    });

    c.bench_function("oracle_dataset_1000", |b| b.iter(|| scene(black_box(1000))));
}

fn network(c: &mut Criterion) {
    let data = scene(128);
    let placements: Vec<Placement> = data.iter().map(SceneSample::placement).collect();

    let small = model(16, 4, 32);
    c.bench_function("predict_128_m16n4_w32", |b| {
        b.iter(|| small.predict(black_box(&placements)).unwrap())
    });
    c.bench_function("loss_and_gradient_128_m16n4_w32", |b| {
        b.iter(|| small.loss_and_gradient(black_box(&data), 0).unwrap())
    });

    let full = model(36, 16, 256);
    let one = &placements[..1];
    let mut group = c.benchmark_group("default_network");
    group.sample_size(10);
    group.bench_function("predict_1_m36n16_w256", |b| {
        b.iter(|| full.predict(black_box(one)).unwrap())
    });
    group.finish();
}

fn baselines(c: &mut Criterion) {
    let data = scene(4000);
    let (train, test) = data.split_at(3200);
    let queries: Vec<Placement> = test.iter().map(SceneSample::placement).collect();
    c.bench_function("mri_fit_3200", |b| {
        b.iter(|| MriBaseline::fit(black_box(train)).unwrap())
    });
    c.bench_function("mri_predict_800", |b| {
        b.iter_batched(
            || MriBaseline::fit(train).unwrap(),
            |m| m.predict_all(black_box(&queries)),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, primitives, network, baselines);
criterion_main!(benches);
