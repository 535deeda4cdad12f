//! Synthetic three-domain transferability study shared by the acceptance
//! suite.

use xferkit_core::indices::{HeightKind, PseudoLabelConfig};
use xferkit_core::raster::{compute_truncation_bounds, normalize_truncate, BandBounds};
use xferkit_core::rf::{build_features, rf_predict, rf_train, sample_pixels, Forest, GlcmParams, RfHyperparams};
use xferkit_core::synth::{generate_domain, DomainSpec, SyntheticScene};
use xferkit_core::transfer::{assess, AssessOptions, SceneInput, TransferReport};
use xferkit_core::{BandRole, MultibandRaster};

pub const SCENES: usize = 3;
/// Column of the height feature in the stack built by `build_features`.
pub const HEIGHT_FEATURE: usize = 4;

pub struct Domain {
    pub id: &'static str,
    pub scenes: Vec<SyntheticScene>,
    pub features: Vec<MultibandRaster>,
}

pub fn domain(id: &'static str, spec: &DomainSpec) -> Domain {
    domain_from_scenes(id, generate_domain(spec, SCENES).unwrap())
}

/// Features use AGL rescaled to [0, 1] with bounds pooled over the domain.
pub fn domain_from_scenes(id: &'static str, scenes: Vec<SyntheticScene>) -> Domain {
    let agl: Vec<&MultibandRaster> = scenes.iter().map(|s| &s.agl).collect();
    let mut bounds = BandBounds::new();
    bounds.insert(BandRole::Agl, compute_truncation_bounds(&agl, BandRole::Agl, 2.0, 2.0).unwrap());
    let features = scenes
        .iter()
        .map(|s| {
            let h = normalize_truncate(&s.agl, &bounds, &[BandRole::Agl]).unwrap();
            build_features(&s.rgbn, Some(&h), &GlcmParams::default()).unwrap()
        })
        .collect();
    Domain { id, scenes, features }
}

pub fn full_hyperparams(seed: u64) -> RfHyperparams {
    RfHyperparams {
        n_trees: 50,
        max_depth: 12,
        min_samples_leaf: 20,
        min_samples_split: 40,
        n_samples: 50_000,
        features_per_split: None,
        seed,
    }
}

pub fn train(d: &Domain, hp: &RfHyperparams, drop: Option<usize>) -> Forest {
    let pairs: Vec<_> = d.features.iter().zip(&d.scenes).map(|(f, s)| (f, &s.labels)).collect();
    let mut data = sample_pixels(&pairs, hp.n_samples, hp.seed, true).unwrap();
    if let Some(f) = drop {
        data.drop_feature(f);
    }
    rf_train(&data, hp).unwrap()
}

pub fn evaluate(model_id: &str, forest: &Forest, d: &Domain) -> TransferReport {
    let probs: Vec<_> = d.features.iter().map(|f| rf_predict(forest, f).unwrap()).collect();
    let preds: Vec<_> = probs.iter().map(|p| p.to_label_map()).collect();
    let inputs: Vec<SceneInput<'_>> = d
        .scenes
        .iter()
        .enumerate()
        .map(|(i, s)| SceneInput {
            raster: &s.rgbn,
            height: Some(&s.agl),
            prediction: &preds[i],
            probs: Some(&probs[i]),
            gt: Some(&s.labels),
        })
        .collect();
    let opts = AssessOptions { pseudo: PseudoLabelConfig::default(), height_kind: HeightKind::Agl };
    assess(model_id, d.id, &inputs, &opts).unwrap()
}

/// Four models evaluated on three domains: twelve reports with ground truth.
pub fn run() -> Vec<TransferReport> {
    let domains = [
        domain("A", &DomainSpec { seed: 101, ..DomainSpec::default() }),
        domain("B", &DomainSpec::mild_shift(202)),
        domain("C", &DomainSpec::strong_shift(303)),
    ];
    let full = full_hyperparams(7);
    let small = RfHyperparams { n_trees: 3, max_depth: 6, n_samples: 3_000, ..full_hyperparams(8) };
    let models = [
        ("rfh_A", train(&domains[0], &full, None)),
        ("rfh_C", train(&domains[2], &full, None)),
        ("rf_small_A", train(&domains[0], &small, None)),
        ("rf_noheight_A", train(&domains[0], &full, Some(HEIGHT_FEATURE))),
    ];
    let mut reports = Vec::new();
    for (id, forest) in &models {
        for d in &domains {
            reports.push(evaluate(id, forest, d));
        }
    }
    reports
}
