use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use log::{info, warn};
use serde::Serialize;

use xferkit_core::indices::{generate_pseudo_labels, HeightInput, HeightKind, MorphParams, PseudoLabelConfig};
use xferkit_core::io::{
    read_json, read_label_map, read_probability_map, read_xras, to_canonical_json, write_csv, write_report, write_xras,
};
use xferkit_core::raster::{
    compute_truncation_bounds, merge_probability_patches, normalize_truncate, plan_tiles, BandBounds, ProbabilityPatch,
};
use xferkit_core::rf::Forest;
use xferkit_core::rf::{
    build_features, decode_forest, encode_forest, rf_predict, rf_train, sample_pixels, GlcmParams, RfHyperparams,
};
use xferkit_core::synth::{generate_domain, DomainSpec};
use xferkit_core::transfer::PredictorCorrelation;
use xferkit_core::transfer::{assess, correlate_predictors, evaluate_gt, rank_models, AssessOptions, SceneInput};
use xferkit_core::{
    BandRole, LabelMap, ModelRanking, MultibandRaster, ProbabilityMap, ScoreKind, ThresholdSet, TilingPlan,
    TransferReport, N_CLASSES,
};

use crate::*;

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Normalize(a) => normalize(a),
        Command::Pseudolabel(a) => pseudolabel(a),
        Command::Assess(a) => assess_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Rank(a) => rank(a),
        Command::Correlate(a) => correlate(a),
        Command::Tile(a) => tile(a),
        Command::Merge(a) => merge(a),
        Command::Rf(RfCommand::Train(a)) => rf_train_cmd(a),
        Command::Rf(RfCommand::Predict(a)) => rf_predict_cmd(a),
        Command::Rf(RfCommand::Dump(a)) => rf_dump(a),
        Command::Synth(SynthCommand::Generate(a)) => synth(a),
    }
}

fn read_raster(path: &Path) -> Result<MultibandRaster> {
    read_xras(path).with_context(|| format!("reading {}", path.display()))
}

fn write_raster(path: &Path, raster: &MultibandRaster) -> Result<()> {
    write_xras(path, raster).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn file_name(path: &Path) -> Result<&std::ffi::OsStr> {
    path.file_name().with_context(|| format!("{} has no file name", path.display()))
}

fn normalize(a: NormalizeArgs) -> Result<()> {
    let rasters = a.input.iter().map(|p| read_raster(p)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&MultibandRaster> = rasters.iter().collect();
    let mut bounds = BandBounds::new();
    for role in &a.bands {
        let b = compute_truncation_bounds(&refs, *role, a.lower, a.upper)?;
        if b.degenerate {
            warn!("band {role} is constant after truncation; it normalizes to 0");
        }
        bounds.insert(*role, b);
    }
    create_dir(&a.out_dir)?;
    for (path, raster) in a.input.iter().zip(&rasters) {
        let out = normalize_truncate(raster, &bounds, &a.bands)?;
        write_raster(&a.out_dir.join(file_name(path)?), &out)?;
    }
    write_report(&bounds, a.out_dir.join("bounds.json"))?;
    info!("normalized {} rasters", rasters.len());
    Ok(())
}

fn pseudo_config(a: &IndexArgs) -> Result<PseudoLabelConfig> {
    Ok(PseudoLabelConfig {
        morph: MorphParams::new(a.se_size)?,
        mbih_threshold: a.mbih_threshold,
        otsu_bins: a.otsu_bins,
        manual: a.ndvi_threshold.zip(a.ndwi_threshold),
    })
}

/// Explicit kind if given, else taken from the height band's role.
fn height_kind(arg: Option<HeightKindArg>, raster: Option<&MultibandRaster>) -> HeightKind {
    match (arg, raster.and_then(|r| r.height_band())) {
        (Some(HeightKindArg::Dsm), _) => HeightKind::Dsm,
        (Some(HeightKindArg::Agl), _) => HeightKind::Agl,
        (None, Some((_, BandRole::Agl))) => HeightKind::Agl,
        _ => HeightKind::Dsm,
    }
}

#[derive(Serialize)]
struct PseudolabelSummary {
    thresholds: ThresholdSet,
    class_counts: [usize; N_CLASSES],
    void_pixels: usize,
    height_kind: Option<HeightKind>,
}

fn pseudolabel(a: PseudolabelArgs) -> Result<()> {
    let raster = read_raster(&a.raster)?;
    let height = a.height.as_deref().map(read_raster).transpose()?;
    let kind = height_kind(a.index.height_kind, height.as_ref());
    let cfg = pseudo_config(&a.index)?;
    let input = height.as_ref().map(|raster| HeightInput { raster, kind });
    let pl = generate_pseudo_labels(&raster, input, &cfg)?;
    write_raster(&a.out, &pl.labels.to_raster())?;
    if let Some(path) = &a.report {
        let class_counts = pl.labels.class_counts();
        let summary = PseudolabelSummary {
            thresholds: pl.thresholds,
            class_counts,
            void_pixels: raster.pixels() - class_counts.iter().sum::<usize>(),
            height_kind: height.is_some().then_some(kind),
        };
        write_report(&summary, path)?;
    }
    Ok(())
}

/// A prediction file holds either labels (1 band) or class probabilities (4 bands).
fn read_prediction(path: &Path) -> Result<(LabelMap, Option<ProbabilityMap>)> {
    let raster = read_raster(path)?;
    if raster.bands() == 1 {
        Ok((LabelMap::from_raster(&raster)?, None))
    } else {
        let probs = ProbabilityMap::from_raster(&raster)
            .with_context(|| format!("{} is neither a label nor a probability raster", path.display()))?;
        Ok((probs.to_label_map(), Some(probs)))
    }
}

fn matching<T>(what: &str, items: Vec<T>, n: usize) -> Result<Vec<Option<T>>> {
    match items.len() {
        0 => Ok((0..n).map(|_| None).collect()),
        m if m == n => Ok(items.into_iter().map(Some).collect()),
        m => bail!("{m} {what} given for {n} scenes"),
    }
}

fn source_date_epoch() -> Result<Option<u64>> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) if !v.trim().is_empty() => {
            Ok(Some(v.trim().parse().with_context(|| format!("SOURCE_DATE_EPOCH is not an integer: {v:?}"))?))
        }
        _ => Ok(None),
    }
}

fn assess_cmd(a: AssessArgs) -> Result<()> {
    let n = a.raster.len();
    ensure!(a.pred.len() == n, "{} predictions given for {n} scenes", a.pred.len());
    let rasters = a.raster.iter().map(|p| read_raster(p)).collect::<Result<Vec<_>>>()?;
    let heights = matching("height rasters", a.height.iter().map(|p| read_raster(p)).collect::<Result<Vec<_>>>()?, n)?;
    let preds = a.pred.iter().map(|p| read_prediction(p)).collect::<Result<Vec<_>>>()?;
    let probs = matching(
        "probability rasters",
        a.probs.iter().map(|p| Ok(read_probability_map(p)?)).collect::<Result<Vec<_>>>()?,
        n,
    )?;
    let gts =
        matching("ground-truth rasters", a.gt.iter().map(|p| Ok(read_label_map(p)?)).collect::<Result<Vec<_>>>()?, n)?;

    let opts = AssessOptions {
        pseudo: pseudo_config(&a.index)?,
        height_kind: height_kind(a.index.height_kind, heights[0].as_ref()),
    };
    let scenes: Vec<SceneInput<'_>> = (0..n)
        .map(|i| SceneInput {
            raster: &rasters[i],
            height: heights[i].as_ref(),
            prediction: &preds[i].0,
            probs: probs[i].as_ref().or(preds[i].1.as_ref()),
            gt: gts[i].as_ref(),
        })
        .collect();
    let mut report = assess(&a.model_id, &a.domain_id, &scenes, &opts)?;
    report.timestamp = source_date_epoch()?;
    write_report(&report, &a.out)?;
    info!("{} on {}: index mIoU {:.4}", a.model_id, a.domain_id, report.index_miou);
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let (pred, _) = read_prediction(&a.pred)?;
    let gt = read_label_map(&a.gt).with_context(|| format!("reading {}", a.gt.display()))?;
    write_report(&evaluate_gt(&pred, &gt)?, &a.out)?;
    Ok(())
}

fn read_reports(paths: &[PathBuf]) -> Result<Vec<TransferReport>> {
    paths.iter().map(|p| read_json(p).with_context(|| format!("reading report {}", p.display()))).collect()
}

fn rank(a: RankArgs) -> Result<()> {
    let by = match a.by {
        ScoreArg::IndexMiou => ScoreKind::IndexMiou,
        ScoreArg::Confidence => ScoreKind::Confidence,
    };
    let ranking = rank_models(&read_reports(&a.reports)?, by)?;
    write_csv(&a.out, &ModelRanking::CSV_HEADER, &ranking.csv_rows()?)?;
    Ok(())
}

fn correlate(a: CorrelateArgs) -> Result<()> {
    let stats = correlate_predictors(&read_reports(&a.reports)?)?;
    if stats.low_n {
        warn!("only {} reports; correlation is low-n", stats.n);
    }
    write_csv(&a.out, &PredictorCorrelation::CSV_HEADER, &stats.csv_rows()?)?;
    if let Some(path) = &a.json {
        write_report(&stats, path)?;
    }
    Ok(())
}

pub const PLAN_FILE: &str = "tiles.json";

pub fn tile_name(x: usize, y: usize) -> String {
    format!("tile_x{x}_y{y}.xras")
}

fn tile(a: TileArgs) -> Result<()> {
    let raster = read_raster(&a.input)?;
    let plan = plan_tiles(raster.width(), raster.height(), a.patch, a.overlap)?;
    if plan.undersized {
        warn!("raster is smaller than the patch size; writing one undersized tile");
    }
    create_dir(&a.out_dir)?;
    for w in &plan.windows {
        write_raster(&a.out_dir.join(tile_name(w.x, w.y)), &raster.crop(w)?)?;
    }
    write_report(&plan, a.out_dir.join(PLAN_FILE))?;
    info!("wrote {} tiles", plan.windows.len());
    Ok(())
}

fn merge(a: MergeArgs) -> Result<()> {
    let plan_path = a.plan.clone().unwrap_or_else(|| a.patches.join(PLAN_FILE));
    let plan: TilingPlan = read_json(&plan_path).with_context(|| format!("reading plan {}", plan_path.display()))?;
    let patches = plan
        .windows
        .iter()
        .map(|w| {
            let path = a.patches.join(tile_name(w.x, w.y));
            let probs = read_probability_map(&path).with_context(|| format!("reading patch {}", path.display()))?;
            ensure!(probs.dims() == (w.width, w.height), "patch {} does not match its window", path.display());
            Ok(ProbabilityPatch { window: *w, probs: probs.probs().to_vec() })
        })
        .collect::<Result<Vec<_>>>()?;
    let merged = merge_probability_patches(plan.width, plan.height, &patches)?;
    if merged.uncovered > 0 {
        warn!("{} pixels not covered by any patch", merged.uncovered);
    }
    write_raster(&a.out, &merged.labels.to_raster())?;
    if let Some(path) = &a.probs_out {
        write_raster(path, &merged.probs.to_raster())?;
    }
    Ok(())
}

fn glcm_params(a: &GlcmArgs) -> Result<GlcmParams> {
    let p = GlcmParams { window: a.glcm_window, levels: a.glcm_levels, ..GlcmParams::default() };
    p.validate()?;
    Ok(p)
}

fn rf_train_cmd(a: RfTrainArgs) -> Result<()> {
    let n = a.raster.len();
    ensure!(a.labels.len() == n, "{} label rasters given for {n} rasters", a.labels.len());
    let heights = matching("height rasters", a.height.clone(), n)?;
    let glcm = glcm_params(&a.glcm)?;
    let hp = RfHyperparams {
        n_trees: a.n_trees,
        max_depth: a.max_depth,
        min_samples_leaf: a.min_samples_leaf,
        min_samples_split: a.min_samples_split,
        n_samples: a.n_samples,
        features_per_split: a.features_per_split,
        seed: a.seed,
    };
    hp.validate()?;

    let mut scenes = Vec::with_capacity(n);
    for i in 0..n {
        let raster = read_raster(&a.raster[i])?;
        let height = heights[i].as_deref().map(read_raster).transpose()?;
        let labels = read_label_map(&a.labels[i]).with_context(|| format!("reading {}", a.labels[i].display()))?;
        scenes.push((build_features(&raster, height.as_ref(), &glcm)?, labels));
    }
    let pairs: Vec<(&MultibandRaster, &LabelMap)> = scenes.iter().map(|(f, l)| (f, l)).collect();
    let data = sample_pixels(&pairs, hp.n_samples, hp.seed, a.stratified)?;
    info!("training {} trees on {} samples with {} features", hp.n_trees, data.len(), data.d);
    let forest = rf_train(&data, &hp)?;
    fs::write(&a.out, encode_forest(&forest)).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(path) = &a.json {
        fs::write(path, serde_json::to_vec_pretty(&forest)?)?;
    }
    Ok(())
}

fn rf_predict_cmd(a: RfPredictArgs) -> Result<()> {
    let forest = read_forest(&a.forest)?;
    let raster = read_raster(&a.raster)?;
    let height = a.height.as_deref().map(read_raster).transpose()?;
    let features = build_features(&raster, height.as_ref(), &glcm_params(&a.glcm)?)?;
    let probs = rf_predict(&forest, &features)?;
    write_raster(&a.out, &probs.to_raster())?;
    if let Some(path) = &a.labels_out {
        write_raster(path, &probs.to_label_map().to_raster())?;
    }
    Ok(())
}

fn read_forest(path: &Path) -> Result<Forest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_forest(&bytes).with_context(|| format!("decoding forest {}", path.display()))
}

fn rf_dump(a: RfDumpArgs) -> Result<()> {
    let forest = read_forest(&a.forest)?;
    fs::write(&a.out, serde_json::to_vec_pretty(&forest)?)?;
    Ok(())
}

#[derive(Serialize)]
struct SceneFiles {
    rgbn: String,
    agl: String,
    labels: String,
}

#[derive(Serialize)]
struct Manifest {
    spec: DomainSpec,
    scenes: Vec<SceneFiles>,
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec: DomainSpec = match &a.spec {
        Some(path) => read_json(path).with_context(|| format!("reading spec {}", path.display()))?,
        None => match a.preset {
            PresetArg::Default => DomainSpec { seed: a.seed, ..DomainSpec::default() },
            PresetArg::Mild => DomainSpec::mild_shift(a.seed),
            PresetArg::Strong => DomainSpec::strong_shift(a.seed),
        },
    };
    let scenes = generate_domain(&spec, a.scenes)?;
    create_dir(&a.out_dir)?;
    let mut files = Vec::with_capacity(scenes.len());
    for (i, s) in scenes.iter().enumerate() {
        let f = SceneFiles {
            rgbn: format!("scene_{i:03}_rgbn.xras"),
            agl: format!("scene_{i:03}_agl.xras"),
            labels: format!("scene_{i:03}_labels.xras"),
        };
        write_raster(&a.out_dir.join(&f.rgbn), &s.rgbn)?;
        write_raster(&a.out_dir.join(&f.agl), &s.agl)?;
        write_raster(&a.out_dir.join(&f.labels), &s.labels.to_raster())?;
        files.push(f);
    }
    let manifest = Manifest { spec, scenes: files };
    fs::write(a.out_dir.join("manifest.json"), to_canonical_json(&manifest)?)?;
    Ok(())
}
