//! Label-free transferability assessment: score a model's predictions on a
//! target domain against index pseudo-labels, alongside the posterior
//! confidence baseline and, when available, ground truth.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::indices::{generate_pseudo_labels, HeightInput, HeightKind, PseudoLabelConfig, PseudoLabels, ThresholdSet};
use crate::io::{format_float, to_canonical_json};
use crate::metrics::{confusion, miou, pearson, ConfusionMatrix, CorrelationStats, EvalResult};
use crate::raster::{LabelMap, MultibandRaster, ProbabilityMap, N_CLASSES};
use crate::{Error, Result};

/// Below this many points a correlation is reported but flagged.
pub const LOW_N: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssessOptions {
    pub pseudo: PseudoLabelConfig,
    pub height_kind: HeightKind,
}

impl Default for AssessOptions {
    fn default() -> Self {
        Self { pseudo: PseudoLabelConfig::default(), height_kind: HeightKind::Agl }
    }
}

impl AssessOptions {
    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> Result<String> {
        let digest = Sha256::digest(to_canonical_json(self)?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// One target scene with a model's prediction on it.
#[derive(Debug, Clone, Copy)]
pub struct SceneInput<'a> {
    pub raster: &'a MultibandRaster,
    pub height: Option<&'a MultibandRaster>,
    pub prediction: &'a LabelMap,
    pub probs: Option<&'a ProbabilityMap>,
    pub gt: Option<&'a LabelMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneScore {
    pub scene: usize,
    pub index_miou: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_miou: Option<f64>,
    pub valid_pixels: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub model_id: String,
    pub domain_id: String,
    pub index_miou: f64,
    /// Mean over all four classes, absent classes counted as 0.
    pub index_miou_strict: f64,
    pub index_per_class_iou: [Option<f64>; N_CLASSES],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_miou: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_miou_strict: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_per_class_iou: Option<[Option<f64>; N_CLASSES]>,
    /// Thresholds used on each scene, in scene order.
    pub thresholds: Vec<ThresholdSet>,
    pub valid_pixels: u64,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub scenes: Vec<SceneScore>,
}

impl TransferReport {
    pub fn score(&self, kind: ScoreKind) -> Option<f64> {
        match kind {
            ScoreKind::IndexMiou => Some(self.index_miou),
            ScoreKind::Confidence => self.mean_confidence,
        }
    }
}

struct SceneOutcome {
    index: ConfusionMatrix,
    gt: Option<ConfusionMatrix>,
    confidence: Option<(f64, u64)>,
    thresholds: ThresholdSet,
}

fn assess_one(scene: &SceneInput<'_>, opts: &AssessOptions) -> Result<SceneOutcome> {
    if scene.prediction.dims() != scene.raster.dims() {
        return Err(Error::dims(scene.raster.dims(), scene.prediction.dims()));
    }
    let height = scene.height.map(|raster| HeightInput { raster, kind: opts.height_kind });
    let PseudoLabels { labels, thresholds, .. } = generate_pseudo_labels(scene.raster, height, &opts.pseudo)?;
    let index = confusion(scene.prediction, &labels)?;
    let gt = scene.gt.map(|gt| confusion(scene.prediction, gt)).transpose()?;
    let confidence = match scene.probs {
        Some(p) => {
            if p.dims() != scene.raster.dims() {
                return Err(Error::dims(scene.raster.dims(), p.dims()));
            }
            Some(confidence_sum(p))
        }
        None => None,
    };
    Ok(SceneOutcome { index, gt, confidence, thresholds })
}

fn confidence_sum(probs: &ProbabilityMap) -> (f64, u64) {
    (0..probs.pixels())
        .filter(|&p| probs.is_valid(p))
        .map(|p| (0..N_CLASSES).map(|c| probs.prob(c, p)).fold(0f32, f32::max) as f64)
        .fold((0.0, 0), |(s, n), v| (s + v, n + 1))
}

/// Scores one model over all scenes of a target domain. Confusion matrices
/// are pooled across scenes before computing mIoU; per-scene scores are kept
/// in `scenes`. Probability maps and ground truth must be supplied for every
/// scene or for none.
pub fn assess(
    model_id: &str,
    domain_id: &str,
    scenes: &[SceneInput<'_>],
    opts: &AssessOptions,
) -> Result<TransferReport> {
    if scenes.is_empty() {
        return Err(Error::param("no scenes to assess"));
    }
    for (what, count) in [
        ("probability maps", scenes.iter().filter(|s| s.probs.is_some()).count()),
        ("ground-truth maps", scenes.iter().filter(|s| s.gt.is_some()).count()),
    ] {
        if count != 0 && count != scenes.len() {
            return Err(Error::param(format!("{what} given for {count} of {} scenes", scenes.len())));
        }
    }
    let outcomes = scenes.par_iter().map(|s| assess_one(s, opts)).collect::<Result<Vec<_>>>()?;

    let mut index = ConfusionMatrix::default();
    let mut gt: Option<ConfusionMatrix> = None;
    let mut conf_sum = 0.0;
    let mut conf_n = 0u64;
    let mut per_scene = Vec::with_capacity(outcomes.len());
    for (i, o) in outcomes.iter().enumerate() {
        index.add(&o.index);
        if let Some(g) = &o.gt {
            gt.get_or_insert_with(ConfusionMatrix::default).add(g);
        }
        if let Some((s, n)) = o.confidence {
            conf_sum += s;
            conf_n += n;
        }
        per_scene.push(SceneScore {
            scene: i,
            index_miou: miou(&o.index)?.miou,
            gt_miou: o.gt.as_ref().map(|g| miou(g).map(|e| e.miou)).transpose()?,
            valid_pixels: o.index.valid_pixels,
        });
    }
    let index_eval = miou(&index)?;
    let gt_eval = gt.as_ref().map(miou).transpose()?;
    let mean_confidence = match (scenes[0].probs.is_some(), conf_n) {
        (false, _) => None,
        (true, 0) => return Err(Error::NoValidSamples),
        (true, n) => Some(conf_sum / n as f64),
    };
    Ok(TransferReport {
        model_id: model_id.to_string(),
        domain_id: domain_id.to_string(),
        index_miou: index_eval.miou,
        index_miou_strict: index_eval.miou_strict,
        index_per_class_iou: index_eval.per_class_iou,
        mean_confidence,
        gt_miou: gt_eval.as_ref().map(|e| e.miou),
        gt_miou_strict: gt_eval.as_ref().map(|e| e.miou_strict),
        gt_per_class_iou: gt_eval.map(|e| e.per_class_iou),
        thresholds: outcomes.iter().map(|o| o.thresholds).collect(),
        valid_pixels: index_eval.valid_pixels,
        config_digest: opts.digest()?,
        timestamp: None,
        scenes: per_scene,
    })
}

/// Ground-truth mIoU of a prediction.
pub fn evaluate_gt(prediction: &LabelMap, gt: &LabelMap) -> Result<EvalResult> {
    miou(&confusion(prediction, gt)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    IndexMiou,
    Confidence,
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "index_miou" => Ok(Self::IndexMiou),
            "confidence" => Ok(Self::Confidence),
            other => Err(Error::param(format!("unknown score kind '{other}'"))),
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IndexMiou => "index_miou",
            Self::Confidence => "confidence",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: usize,
    pub model_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRanking {
    pub score_kind: ScoreKind,
    pub entries: Vec<RankEntry>,
}

impl ModelRanking {
    pub const CSV_HEADER: [&'static str; 3] = ["rank", "model_id", "score"];

    pub fn csv_rows(&self) -> Result<Vec<Vec<String>>> {
        self.entries.iter().map(|e| Ok(vec![e.rank.to_string(), e.model_id.clone(), format_float(e.score)?])).collect()
    }
}

/// Sorts models by descending score. Equal scores share the best rank
/// among them and are listed by model id.
pub fn rank_models(reports: &[TransferReport], by: ScoreKind) -> Result<ModelRanking> {
    let first = reports.first().ok_or_else(|| Error::param("no reports to rank"))?;
    if let Some(r) = reports.iter().find(|r| r.domain_id != first.domain_id) {
        return Err(Error::param(format!(
            "reports span several domains ('{}' and '{}')",
            first.domain_id, r.domain_id
        )));
    }
    let mut entries = reports
        .iter()
        .map(|r| {
            let score = r
                .score(by)
                .filter(|s| s.is_finite())
                .ok_or_else(|| Error::param(format!("report for '{}' has no {by} score", r.model_id)))?;
            Ok(RankEntry { rank: 0, model_id: r.model_id.clone(), score })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.model_id.cmp(&b.model_id)));
    for i in 0..entries.len() {
        entries[i].rank = if i > 0 && entries[i].score == entries[i - 1].score { entries[i - 1].rank } else { i + 1 };
    }
    Ok(ModelRanking { score_kind: by, entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorCorrelation {
    pub index: CorrelationStats,
    /// Absent when any report lacks a confidence score.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<CorrelationStats>,
    pub n: usize,
    pub low_n: bool,
}

impl PredictorCorrelation {
    pub const CSV_HEADER: [&'static str; 7] = ["predictor", "n", "r", "r2", "slope", "intercept", "low_n"];

    pub fn csv_rows(&self) -> Result<Vec<Vec<String>>> {
        let mut rows = Vec::new();
        for (name, s) in [("index_miou", Some(&self.index)), ("confidence", self.confidence.as_ref())] {
            if let Some(s) = s {
                rows.push(vec![
                    name.to_string(),
                    s.n.to_string(),
                    format_float(s.r)?,
                    format_float(s.r2)?,
                    format_float(s.slope)?,
                    format_float(s.intercept)?,
                    self.low_n.to_string(),
                ]);
            }
        }
        Ok(rows)
    }
}

/// Pearson statistics of each label-free predictor against ground-truth
/// mIoU, one point per report.
pub fn correlate_predictors(reports: &[TransferReport]) -> Result<PredictorCorrelation> {
    let gt = reports
        .iter()
        .map(|r| {
            r.gt_miou.ok_or_else(|| {
                Error::param(format!("report for '{}' on '{}' has no ground truth", r.model_id, r.domain_id))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let index: Vec<f64> = reports.iter().map(|r| r.index_miou).collect();
    let index = pearson(&index, &gt)?;
    let confidence: Option<Vec<f64>> = reports.iter().map(|r| r.mean_confidence).collect();
    let confidence = confidence.map(|c| pearson(&c, &gt)).transpose()?;
    Ok(PredictorCorrelation { index, confidence, n: reports.len(), low_n: reports.len() < LOW_N })
}
