//! Confusion matrices, mean IoU, the posterior-confidence baseline, the
//! agreement probability of two independent predictors, and Pearson
//! correlation between predictors and ground-truth scores.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::raster::{LabelMap, ProbabilityMap, N_CLASSES};
use crate::{Error, Result};

/// `counts[r][p]`: pixels of reference class `r` predicted as `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N_CLASSES]; N_CLASSES],
    pub valid_pixels: u64,
}

impl ConfusionMatrix {
    pub fn add(&mut self, other: &ConfusionMatrix) {
        for r in 0..N_CLASSES {
            for p in 0..N_CLASSES {
                self.counts[r][p] += other.counts[r][p];
            }
        }
        self.valid_pixels += other.valid_pixels;
    }

    pub fn transpose(&self) -> ConfusionMatrix {
        let mut t = *self;
        for r in 0..N_CLASSES {
            for p in 0..N_CLASSES {
                t.counts[r][p] = self.counts[p][r];
            }
        }
        t
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn col_sum(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }
}

/// Tallies pixels where both maps carry a class code; void in either map is skipped.
pub fn confusion(pred: &LabelMap, reference: &LabelMap) -> Result<ConfusionMatrix> {
    if pred.dims() != reference.dims() {
        return Err(Error::dims(reference.dims(), pred.dims()));
    }
    const CHUNK: usize = 1 << 16;
    let tally = |(p, r): (&[u8], &[u8])| {
        let mut m = ConfusionMatrix::default();
        for (&pc, &rc) in p.iter().zip(r) {
            if (pc as usize) < N_CLASSES && (rc as usize) < N_CLASSES {
                m.counts[rc as usize][pc as usize] += 1;
                m.valid_pixels += 1;
            }
        }
        m
    };
    Ok(pred.codes().par_chunks(CHUNK).zip(reference.codes().par_chunks(CHUNK)).map(tally).reduce(
        ConfusionMatrix::default,
        |mut a, b| {
            a.add(&b);
            a
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// `None` for classes absent from both maps.
    pub per_class_iou: [Option<f64>; N_CLASSES],
    /// Mean over defined classes.
    pub miou: f64,
    /// Sum of defined IoUs divided by the full class count.
    pub miou_strict: f64,
    pub n_classes_scored: usize,
    pub valid_pixels: u64,
}

/// Mean intersection over union from a confusion matrix.
pub fn miou(conf: &ConfusionMatrix) -> Result<EvalResult> {
    let mut per_class = [None; N_CLASSES];
    for (c, slot) in per_class.iter_mut().enumerate() {
        let inter = conf.counts[c][c];
        let union = conf.row_sum(c) + conf.col_sum(c) - inter;
        if union > 0 {
            *slot = Some(inter as f64 / union as f64);
        }
    }
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::NoScoreableClasses);
    }
    let sum: f64 = defined.iter().sum();
    Ok(EvalResult {
        per_class_iou: per_class,
        miou: sum / defined.len() as f64,
        miou_strict: sum / N_CLASSES as f64,
        n_classes_scored: defined.len(),
        valid_pixels: conf.valid_pixels,
    })
}

/// Mean over covered pixels of the largest class probability.
pub fn mean_posterior_confidence(probs: &ProbabilityMap) -> Result<f64> {
    let (sum, n) = (0..probs.pixels())
        .filter(|&p| probs.is_valid(p))
        .map(|p| (0..N_CLASSES).map(|c| probs.prob(c, p)).fold(0f32, f32::max) as f64)
        .fold((0f64, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        return Err(Error::NoValidSamples);
    }
    Ok(sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementInputs {
    pub p_sup: f64,
    pub p_index: f64,
}

/// Probability that two independent predictors, correct with probabilities
/// `p_sup` and `p_index`, are both right or both wrong.
pub fn agreement_probability(a: AgreementInputs) -> Result<f64> {
    for (name, p) in [("p_sup", a.p_sup), ("p_index", a.p_index)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!("{name} = {p} is not a probability")));
        }
    }
    Ok(a.p_sup * a.p_index + (1.0 - a.p_sup) * (1.0 - a.p_index))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationStats {
    pub r: f64,
    pub r2: f64,
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
}

/// Pearson correlation plus the least-squares line of `ys` on `xs`.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<CorrelationStats> {
    if xs.len() != ys.len() {
        return Err(Error::CorrelationUndefined(format!("length mismatch {} vs {}", xs.len(), ys.len())));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::CorrelationUndefined(format!("need at least 2 points, got {n}")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::CorrelationUndefined("zero variance".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let slope = sxy / sxx;
    Ok(CorrelationStats { r, r2: r * r, slope, intercept: my - slope * mx, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::VOID;

    #[test]
    fn identical_maps_give_diagonal_and_unit_miou() {
        let m = LabelMap::new(4, 1, vec![0, 1, 2, 2]).unwrap();
        let c = confusion(&m, &m).unwrap();
        assert_eq!(c.counts[2][2], 2);
        assert_eq!(c.valid_pixels, 4);
        let e = miou(&c).unwrap();
        assert_eq!(e.miou, 1.0);
        assert_eq!(e.n_classes_scored, 3);
        assert_eq!(e.per_class_iou[3], None);
        assert_eq!(e.miou_strict, 0.75);
    }

    #[test]
    fn hand_tally_two_pixels() {
        let reference = LabelMap::new(2, 1, vec![0, 1]).unwrap();
        let pred = LabelMap::new(2, 1, vec![1, 1]).unwrap();
        let c = confusion(&pred, &reference).unwrap();
        assert_eq!(c.counts[0][1], 1);
        assert_eq!(c.counts[1][1], 1);
        assert_eq!(c.valid_pixels, 2);
    }

    #[test]
    fn void_reference_gives_empty_matrix() {
        let reference = LabelMap::filled(3, 1, VOID).unwrap();
        let pred = LabelMap::new(3, 1, vec![0, 1, 2]).unwrap();
        let c = confusion(&pred, &reference).unwrap();
        assert_eq!(c, ConfusionMatrix::default());
        assert!(matches!(miou(&c), Err(Error::NoScoreableClasses)));
    }

    #[test]
    fn two_class_matrix_miou() {
        let mut c = ConfusionMatrix::default();
        c.counts[0] = [3, 1, 0, 0];
        c.counts[1] = [1, 3, 0, 0];
        c.valid_pixels = 8;
        let e = miou(&c).unwrap();
        assert!((e.per_class_iou[0].unwrap() - 0.6).abs() < 1e-15);
        assert!((e.miou - 0.6).abs() < 1e-15);
        assert_eq!(e.n_classes_scored, 2);
    }

    #[test]
    fn single_populated_class() {
        let mut c = ConfusionMatrix::default();
        c.counts[0][0] = 10;
        c.valid_pixels = 10;
        let e = miou(&c).unwrap();
        assert_eq!((e.miou, e.n_classes_scored), (1.0, 1));
    }

    #[test]
    fn dims_must_match() {
        let a = LabelMap::filled(2, 1, 0).unwrap();
        let b = LabelMap::filled(1, 2, 0).unwrap();
        assert!(confusion(&a, &b).is_err());
    }

    #[test]
    fn confidence_cases() {
        let one_hot = ProbabilityMap::new(1, 1, vec![0.0, 1.0, 0.0, 0.0], vec![1]).unwrap();
        assert_eq!(mean_posterior_confidence(&one_hot).unwrap(), 1.0);
        let uniform = ProbabilityMap::new(1, 1, vec![0.25; 4], vec![1]).unwrap();
        assert_eq!(mean_posterior_confidence(&uniform).unwrap(), 0.25);
        let two = ProbabilityMap::new(2, 1, vec![0.9, 0.5, 0.1, 0.5, 0.0, 0.0, 0.0, 0.0], vec![1, 1]).unwrap();
        assert!((mean_posterior_confidence(&two).unwrap() - 0.7).abs() < 1e-7);
        let empty = ProbabilityMap::new(1, 1, vec![0.0; 4], vec![0]).unwrap();
        assert!(mean_posterior_confidence(&empty).is_err());
    }

    #[test]
    fn agreement_cases() {
        let ap = |p_sup, p_index| agreement_probability(AgreementInputs { p_sup, p_index }).unwrap();
        assert_eq!(ap(1.0, 1.0), 1.0);
        for q in [0.0, 0.3, 0.77, 1.0] {
            assert!((ap(0.5, q) - 0.5).abs() < 1e-15);
        }
        assert!((ap(0.8, 0.9) - 0.74).abs() < 1e-12);
        assert!(agreement_probability(AgreementInputs { p_sup: 1.2, p_index: 0.5 }).is_err());
    }

    #[test]
    fn pearson_cases() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let s = pearson(&xs, &xs).unwrap();
        assert!((s.r - 1.0).abs() < 1e-15 && (s.slope - 1.0).abs() < 1e-15 && s.intercept.abs() < 1e-15);
        let neg: Vec<f64> = xs.iter().map(|x| 3.0 - x).collect();
        assert!((pearson(&xs, &neg).unwrap().r + 1.0).abs() < 1e-15);
        let s = pearson(&[1.0, 2.0, 3.0], &[2.0, 2.0, 4.0]).unwrap();
        assert!((s.r - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((s.r2 - s.r * s.r).abs() < 1e-12);
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }
}
