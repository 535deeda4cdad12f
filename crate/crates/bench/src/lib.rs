//! Fixtures shared by the kernel benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xferkit_core::raster::{plan_tiles, ProbabilityPatch};
use xferkit_core::rf::{build_features, rf_train, sample_pixels, Forest, GlcmParams, RfHyperparams};
use xferkit_core::synth::{generate_scene, DomainSpec, SyntheticScene};
use xferkit_core::MultibandRaster;

pub fn scene(size: usize, seed: u64) -> SyntheticScene {
    let spec = DomainSpec { width: size, height: size, seed, ..DomainSpec::default() };
    generate_scene(&spec, 0).expect("valid spec")
}

/// Uniform values in [0, 1).
pub fn uniform(n: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f32>()).collect()
}

/// Random normalized probability patches tiling a `size x size` raster.
pub fn patches(size: usize, patch: usize, overlap: f64, seed: u64) -> Vec<ProbabilityPatch> {
    let plan = plan_tiles(size, size, patch, overlap).expect("valid plan");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    plan.windows
        .iter()
        .map(|w| {
            let n = w.pixels();
            let mut probs = vec![0f32; 4 * n];
            for p in 0..n {
                let raw: [f32; 4] = std::array::from_fn(|_| rng.random::<f32>() + 0.01);
                let sum: f32 = raw.iter().sum();
                for c in 0..4 {
                    probs[c * n + p] = raw[c] / sum;
                }
            }
            ProbabilityPatch { window: *w, probs }
        })
        .collect()
}

pub fn features(scene: &SyntheticScene) -> MultibandRaster {
    build_features(&scene.rgbn, None, &GlcmParams::default()).expect("features")
}

/// A small forest trained on one synthetic scene.
pub fn forest(n_trees: usize, seed: u64) -> Forest {
    let s = scene(128, seed);
    let f = features(&s);
    let data = sample_pixels(&[(&f, &s.labels)], 5000, seed, true).expect("samples");
    let hp = RfHyperparams {
        n_trees,
        max_depth: 12,
        min_samples_leaf: 5,
        min_samples_split: 10,
        n_samples: 5000,
        seed,
        ..RfHyperparams::default()
    };
    rf_train(&data, &hp).expect("forest")
}
