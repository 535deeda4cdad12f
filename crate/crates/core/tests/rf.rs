use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use xferkit_core::parallel::build_pool;
use xferkit_core::rf::{
    build_features, decode_forest, encode_forest, glcm_features, quantize_luminance, rf_predict, rf_train,
    sample_pixels, window_stats, Forest, GlcmParams, GlcmStats, Node, PixelDataset, RfHyperparams, Tree,
};
use xferkit_core::{BandRole, LabelMap, MultibandRaster, RasterData, N_CLASSES};

fn xor_blobs(n: usize, seed: u64) -> PixelDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.12).unwrap();
    let mut features = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (cx, cy) = [(0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)][i % 4];
        features.push((cx + noise.sample(&mut rng)) as f32);
        features.push((cy + noise.sample(&mut rng)) as f32);
        labels.push(if i % 4 < 2 { 0 } else { 1 });
    }
    PixelDataset::new(2, features, labels).unwrap()
}

fn xor_hp(seed: u64) -> RfHyperparams {
    RfHyperparams {
        n_trees: 50,
        max_depth: 8,
        min_samples_leaf: 5,
        min_samples_split: 10,
        n_samples: 4000,
        features_per_split: None,
        seed,
    }
}

fn accuracy(forest: &Forest, data: &PixelDataset) -> f64 {
    let right = (0..data.len()).filter(|&i| forest.predict_class(data.row(i)) == data.labels[i]).count();
    right as f64 / data.len() as f64
}

#[test]
fn xor_is_learned() {
    let train = xor_blobs(4000, 1);
    let forest = rf_train(&train, &xor_hp(3)).unwrap();
    assert!(accuracy(&forest, &train) >= 0.95);
    assert!(accuracy(&forest, &xor_blobs(2000, 2)) >= 0.9);
    for t in &forest.trees {
        assert!(t.depth() <= 8);
        for node in &t.nodes {
            match node {
                Node::Split { feature, .. } => assert!((*feature as usize) < forest.d),
                Node::Leaf { counts } => assert!(counts.iter().sum::<u32>() > 0),
            }
        }
    }
}

#[test]
fn single_class_gives_single_leaves() {
    let data = PixelDataset::new(1, vec![0.1, 0.5, 0.9, 0.3], vec![2; 4]).unwrap();
    let hp = RfHyperparams { n_trees: 3, min_samples_leaf: 1, min_samples_split: 2, ..RfHyperparams::default() };
    let forest = rf_train(&data, &hp).unwrap();
    assert!(forest.trees.iter().all(|t| t.nodes.len() == 1));
    assert_eq!(forest.predict_proba(&[0.4]), [0.0, 0.0, 1.0, 0.0]);
}

#[test]
fn two_pure_trees_tie_to_class_zero() {
    let leaf = |c: usize| {
        let mut counts = [0; N_CLASSES];
        counts[c] = 5;
        Tree { nodes: vec![Node::Leaf { counts }] }
    };
    let forest = Forest { d: 1, trees: vec![leaf(0), leaf(1)] };
    let features = MultibandRaster::from_planes(2, 1, vec![(BandRole::Other, vec![0.0, 1.0])]).unwrap();
    let probs = rf_predict(&forest, &features).unwrap();
    assert_eq!((probs.prob(0, 0), probs.prob(1, 0)), (0.5, 0.5));
    assert_eq!(probs.to_label_map().codes(), &[0, 0]);
    let wrong =
        MultibandRaster::from_planes(2, 1, vec![(BandRole::Other, vec![0.0; 2]), (BandRole::Other, vec![0.0; 2])])
            .unwrap();
    assert!(rf_predict(&forest, &wrong).is_err());
}

#[test]
fn training_is_deterministic_and_thread_independent() {
    let data = xor_blobs(1000, 4);
    let hp = RfHyperparams { n_trees: 8, ..xor_hp(9) };
    let one = build_pool(Some(1)).unwrap().install(|| rf_train(&data, &hp).unwrap());
    let four = build_pool(Some(4)).unwrap().install(|| rf_train(&data, &hp).unwrap());
    assert_eq!(encode_forest(&one), encode_forest(&four));
}

#[test]
fn smaller_forest_is_a_prefix() {
    let data = xor_blobs(800, 5);
    let big = rf_train(&data, &RfHyperparams { n_trees: 6, ..xor_hp(11) }).unwrap();
    let small = rf_train(&data, &RfHyperparams { n_trees: 3, ..xor_hp(11) }).unwrap();
    assert_eq!(small.trees[..], big.trees[..3]);
}

#[test]
fn codec_roundtrip_and_rejects_garbage() {
    let forest = rf_train(&xor_blobs(400, 6), &RfHyperparams { n_trees: 4, ..xor_hp(1) }).unwrap();
    let bytes = encode_forest(&forest);
    assert_eq!(&bytes[..4], b"XRFC");
    assert_eq!(decode_forest(&bytes).unwrap(), forest);
    assert!(decode_forest(&bytes[..bytes.len() - 3]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'Y';
    assert!(decode_forest(&bad).is_err());
    let json = serde_json::to_string(&forest).unwrap();
    assert_eq!(serde_json::from_str::<Forest>(&json).unwrap(), forest);
}

#[test]
fn predicted_rows_sum_to_one() {
    let forest = rf_train(&xor_blobs(400, 7), &RfHyperparams { n_trees: 7, ..xor_hp(2) }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (a, b): (Vec<f32>, Vec<f32>) =
        (0..64).map(|_| (rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5))).unzip();
    let probs = rf_predict(
        &forest,
        &MultibandRaster::from_planes(8, 8, vec![(BandRole::Other, a), (BandRole::Other, b)]).unwrap(),
    )
    .unwrap();
    for p in 0..64 {
        let s: f32 = (0..N_CLASSES).map(|c| probs.prob(c, p)).sum();
        assert!((s - 1.0).abs() < 1e-6);
    }
}

fn rgb(w: usize, h: usize, seed: u64) -> MultibandRaster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plane = || (0..w * h).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<f32>>();
    let planes =
        vec![(BandRole::Red, plane()), (BandRole::Green, plane()), (BandRole::Blue, plane()), (BandRole::Nir, plane())];
    MultibandRaster::from_planes(w, h, planes).unwrap().with_normalized(true)
}

#[test]
fn sliding_glcm_matches_fresh_windows() {
    let params = GlcmParams { window: 5, levels: 8, ..GlcmParams::default() };
    let (w, h) = (23, 17);
    let raster = rgb(w, h, 3);
    let features = glcm_features(&raster, &params).unwrap();
    let q: Vec<u16> = quantize_luminance(&raster, params.levels).unwrap().into_iter().map(Option::unwrap).collect();
    for y in 0..h {
        for x in 0..w {
            let x0 = x.saturating_sub(2).min(w - 5);
            let y0 = y.saturating_sub(2).min(h - 5);
            let GlcmStats(want) = window_stats(&q, w, x0, y0, &params);
            for (k, v) in want.iter().enumerate() {
                let got = features.sample(k, y * w + x);
                assert!((got - *v as f32 as f64).abs() < 1e-5, "({x},{y}) stat {k}: {got} vs {v}");
            }
        }
    }
}

#[test]
fn checkerboard_contrast_is_one() {
    let params = GlcmParams { window: 5, levels: 2, offsets: vec![(1, 0)] };
    let q: Vec<u16> = (0..25).map(|i| ((i % 5 + i / 5) % 2) as u16).collect();
    let GlcmStats(s) = window_stats(&q, 5, 0, 0, &params);
    assert_eq!(s[0], 1.0);
}

#[test]
fn glcm_statistics_stay_in_range() {
    let params = GlcmParams::default();
    let f = glcm_features(&rgb(40, 30, 4), &params).unwrap();
    for p in 0..f.pixels() {
        let (homog, energy, entropy) = (f.sample(2, p), f.sample(3, p), f.sample(4, p));
        assert!(energy > 0.0 && energy <= 1.0);
        assert!(homog > 0.0 && homog <= 1.0);
        assert!(entropy >= 0.0);
    }
    assert!(glcm_features(&rgb(10, 10, 1), &params).is_err());
}

#[test]
fn feature_stack_dimensions() {
    let r = rgb(16, 16, 5);
    let g = GlcmParams { window: 5, ..GlcmParams::default() };
    assert_eq!(build_features(&r, None, &g).unwrap().bands(), 10);
    let agl = MultibandRaster::new(16, 16, vec![BandRole::Agl], RasterData::F32(vec![0.5; 256])).unwrap();
    assert_eq!(build_features(&r, Some(&agl), &g).unwrap().bands(), 11);
}

fn labelled_scene(n: usize, seed: u64) -> (MultibandRaster, LabelMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codes: Vec<u8> = (0..n).map(|_| [0, 0, 0, 1, 1, 2, 3, 255][rng.random_range(0..8)]).collect();
    let f = MultibandRaster::from_planes(n, 1, vec![(BandRole::Other, (0..n).map(|i| i as f32).collect())]).unwrap();
    (f, LabelMap::new(n, 1, codes).unwrap())
}

#[test]
fn sampling_is_exhaustive_and_deterministic() {
    let (f, l) = labelled_scene(1000, 1);
    let non_void = l.codes().iter().filter(|&&c| c != 255).count();
    let all = sample_pixels(&[(&f, &l)], non_void, 3, false).unwrap();
    assert_eq!(all.len(), non_void);
    let mut seen: Vec<u32> = all.features.iter().map(|&v| v as u32).collect();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), non_void);
    assert_eq!(sample_pixels(&[(&f, &l)], 100, 3, false).unwrap(), sample_pixels(&[(&f, &l)], 100, 3, false).unwrap());
    assert_eq!(sample_pixels(&[(&f, &l)], 5000, 3, false).unwrap().len(), non_void);
}

#[test]
fn uniform_sampling_keeps_class_proportions() {
    let (f, l) = labelled_scene(100_000, 2);
    let population = l.class_counts();
    let total: usize = population.iter().sum();
    let data = sample_pixels(&[(&f, &l)], 10_000, 9, false).unwrap();
    let got = data.class_counts();
    for c in 0..N_CLASSES {
        let want = population[c] as f64 / total as f64;
        assert!((got[c] as f64 / 10_000.0 - want).abs() <= 0.02);
    }
}
