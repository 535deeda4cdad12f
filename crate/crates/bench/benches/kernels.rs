use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use xferkit_bench::{features, forest, patches, scene, uniform};
use xferkit_core::indices::{
    erode_square, generate_pseudo_labels, otsu_threshold, reconstruct_by_dilation, HeightInput, HeightKind,
    PseudoLabelConfig,
};
use xferkit_core::raster::merge_probability_patches;
use xferkit_core::rf::{glcm_features, rf_predict, GlcmParams};

fn otsu(c: &mut Criterion) {
    let values = uniform(1 << 20, 1);
    c.bench_function("otsu_1m", |b| b.iter(|| otsu_threshold(black_box(&values), 256).unwrap()));
}

fn morphology(c: &mut Criterion) {
    let s = scene(512, 2);
    let h: Vec<f64> = s.agl.band_f32(0).iter().map(|&v| v as f64).collect();
    c.bench_function("erode_512_se63", |b| b.iter(|| erode_square(black_box(&h), 512, 512, 63)));
    let marker = erode_square(&h, 512, 512, 63);
    c.bench_function("reconstruct_512", |b| b.iter(|| reconstruct_by_dilation(black_box(&marker), &h, 512, 512)));
}

fn pseudo_labels(c: &mut Criterion) {
    let s = scene(512, 3);
    let cfg = PseudoLabelConfig::default();
    c.bench_function("pseudo_labels_512", |b| {
        b.iter(|| {
            let height = HeightInput { raster: &s.agl, kind: HeightKind::Agl };
            generate_pseudo_labels(black_box(&s.rgbn), Some(height), &cfg).unwrap()
        })
    });
}

fn glcm(c: &mut Criterion) {
    let s = scene(256, 4);
    let params = GlcmParams::default();
    c.bench_function("glcm_256", |b| b.iter(|| glcm_features(black_box(&s.rgbn), &params).unwrap()));
}

fn merge(c: &mut Criterion) {
    let p = patches(512, 128, 0.5, 5);
    c.bench_function("merge_512_p128", |b| b.iter(|| merge_probability_patches(512, 512, black_box(&p)).unwrap()));
}

fn predict(c: &mut Criterion) {
    let f = forest(20, 6);
    let x = features(&scene(256, 7));
    c.bench_function("rf_predict_256_20trees", |b| b.iter(|| rf_predict(&f, black_box(&x)).unwrap()));
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = otsu, morphology, pseudo_labels, glcm, merge, predict
}
criterion_main!(kernels);
