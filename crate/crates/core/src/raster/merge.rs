//! Overlap voting: per-pixel mean of class probabilities over all patches.

use rayon::prelude::*;

use super::{LabelMap, ProbabilityMap, Window, N_CLASSES, VOID};
use crate::{Error, Result};

/// Class probabilities for one window, class-major within the window.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityPatch {
    pub window: Window,
    pub probs: Vec<f32>,
}

impl ProbabilityPatch {
    #[inline]
    fn prob(&self, class: usize, local: usize) -> f32 {
        self.probs[class * self.window.pixels() + local]
    }
}

#[derive(Debug, Clone)]
pub struct MergeOutput {
    pub probs: ProbabilityMap,
    pub labels: LabelMap,
    /// Pixels no patch covered; they are void in `labels`.
    pub uncovered: usize,
}

const SUM_TOLERANCE: f64 = 1e-3;

/// Averages overlapping patch probabilities and takes the per-pixel argmax.
///
/// Contributions are summed in a canonical patch order (by window, then by
/// payload bits), so the output is bit-identical for any submission order
/// and any worker count.
pub fn merge_probability_patches(width: usize, height: usize, patches: &[ProbabilityPatch]) -> Result<MergeOutput> {
    for (i, p) in patches.iter().enumerate() {
        validate_patch(i, p, width, height)?;
    }

    let mut order: Vec<&ProbabilityPatch> = patches.iter().collect();
    order.sort_by(|a, b| {
        a.window
            .cmp(&b.window)
            .then_with(|| a.probs.iter().map(|v| v.to_bits()).cmp(b.probs.iter().map(|v| v.to_bits())))
    });

    let rows: Vec<(Vec<[f32; N_CLASSES]>, Vec<u32>)> = (0..height)
        .into_par_iter()
        .map(|y| {
            let mut sums = vec![[0f64; N_CLASSES]; width];
            let mut counts = vec![0u32; width];
            for p in order.iter().filter(|p| y >= p.window.y && y < p.window.y + p.window.height) {
                let w = p.window;
                let local_row = (y - w.y) * w.width;
                for lx in 0..w.width {
                    let x = w.x + lx;
                    for (c, s) in sums[x].iter_mut().enumerate() {
                        *s += p.prob(c, local_row + lx) as f64;
                    }
                    counts[x] += 1;
                }
            }
            let means = sums
                .iter()
                .zip(&counts)
                .map(|(s, &n)| if n == 0 { [0.0; N_CLASSES] } else { s.map(|v| (v / n as f64) as f32) })
                .collect();
            (means, counts)
        })
        .collect();

    let n = width * height;
    let mut probs = vec![0f32; n * N_CLASSES];
    let mut weight = Vec::with_capacity(n);
    for (y, (means, counts)) in rows.into_iter().enumerate() {
        for (x, m) in means.iter().enumerate() {
            for (c, v) in m.iter().enumerate() {
                probs[c * n + y * width + x] = *v;
            }
        }
        weight.extend(counts);
    }
    let uncovered = weight.iter().filter(|&&w| w == 0).count();
    if uncovered > 0 {
        log::warn!("{uncovered} pixels are not covered by any patch; marking them void");
    }
    let probs = ProbabilityMap::new(width, height, probs, weight)?;
    let labels = probs.to_label_map();
    debug_assert_eq!(labels.codes().iter().filter(|&&c| c == VOID).count(), uncovered);
    Ok(MergeOutput { probs, labels, uncovered })
}

fn validate_patch(index: usize, p: &ProbabilityPatch, width: usize, height: usize) -> Result<()> {
    let w = p.window;
    if w.width == 0 || w.height == 0 || w.x + w.width > width || w.y + w.height > height {
        return Err(Error::param(format!("patch {index} window {w:?} is outside the {width}x{height} raster")));
    }
    if p.probs.len() != w.pixels() * N_CLASSES {
        return Err(Error::dims((w.width, w.height), (p.probs.len() / N_CLASSES, 1)));
    }
    for local in 0..w.pixels() {
        let mut total = 0f64;
        for c in 0..N_CLASSES {
            let v = p.prob(c, local);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("patch {index} has probability {v} outside [0,1]")));
            }
            total += v as f64;
        }
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::param(format!("patch {index} probabilities sum to {total} at local pixel {local}")));
        }
    }
    Ok(())
}
