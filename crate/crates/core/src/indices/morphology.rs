//! Grayscale erosion and reconstruction by dilation, and the DSM top-hat
//! built from them.

use std::collections::VecDeque;

use super::{IndexKind, IndexRaster, MorphParams};
use crate::raster::{BandRole, MultibandRaster};
use crate::{Error, Result};

/// Erosion by a `size x size` square; the window is cut at the image edge.
pub fn erode_square(values: &[f64], width: usize, height: usize, size: usize) -> Vec<f64> {
    let r = size / 2;
    let mut rows = vec![0f64; values.len()];
    for y in 0..height {
        let line = &values[y * width..(y + 1) * width];
        for x in 0..width {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(width - 1);
            rows[y * width + x] = line[lo..=hi].iter().copied().fold(f64::INFINITY, f64::min);
        }
    }
    let mut out = vec![0f64; values.len()];
    for y in 0..height {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(height - 1);
        for x in 0..width {
            out[y * width + x] = (lo..=hi).map(|yy| rows[yy * width + x]).fold(f64::INFINITY, f64::min);
        }
    }
    out
}

/// Morphological reconstruction by dilation of `marker` under `mask`,
/// 8-connected. `marker` must not exceed `mask` anywhere.
///
/// Two sequential scans followed by FIFO propagation (Vincent's hybrid
/// algorithm); the result is the fixpoint of iterated geodesic dilation.
pub fn reconstruct_by_dilation(marker: &[f64], mask: &[f64], width: usize, height: usize) -> Vec<f64> {
    assert_eq!(marker.len(), width * height);
    assert_eq!(mask.len(), width * height);
    let mut j: Vec<f64> = marker.iter().zip(mask).map(|(m, i)| m.min(*i)).collect();
    let idx = |x: usize, y: usize| y * width + x;

    // Forward scan: neighbours already visited in raster order.
    for y in 0..height {
        for x in 0..width {
            let mut v = j[idx(x, y)];
            for (dx, dy) in [(-1i64, 0i64), (-1, -1), (0, -1), (1, -1)] {
                if let Some(q) = neighbour(x, y, dx, dy, width, height) {
                    v = v.max(j[q]);
                }
            }
            let p = idx(x, y);
            j[p] = v.min(mask[p]);
        }
    }

    // Backward scan, seeding the queue where further growth is possible.
    let mut queue = VecDeque::new();
    for y in (0..height).rev() {
        for x in (0..width).rev() {
            let backward = [(1i64, 0i64), (1, 1), (0, 1), (-1, 1)];
            let mut v = j[idx(x, y)];
            for (dx, dy) in backward {
                if let Some(q) = neighbour(x, y, dx, dy, width, height) {
                    v = v.max(j[q]);
                }
            }
            let p = idx(x, y);
            j[p] = v.min(mask[p]);
            let grows = backward
                .iter()
                .any(|&(dx, dy)| neighbour(x, y, dx, dy, width, height).is_some_and(|q| j[q] < j[p] && j[q] < mask[q]));
            if grows {
                queue.push_back((x, y));
            }
        }
    }

    while let Some((x, y)) = queue.pop_front() {
        let p = idx(x, y);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                if let Some(q) = neighbour(x, y, dx, dy, width, height) {
                    if j[q] < j[p] && mask[q] != j[q] {
                        j[q] = j[p].min(mask[q]);
                        queue.push_back((q % width, q / width));
                    }
                }
            }
        }
    }
    j
}

#[inline]
fn neighbour(x: usize, y: usize, dx: i64, dy: i64, width: usize, height: usize) -> Option<usize> {
    let nx = x as i64 + dx;
    let ny = y as i64 + dy;
    (nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height).then(|| ny as usize * width + nx as usize)
}

/// Top-hat by reconstruction of a height band, in meters.
///
/// With `height_is_agl` the AGL band already isolates above-ground
/// structures and is returned unchanged. Otherwise the DSM is eroded by the
/// square element, reconstructed under itself, and the reconstruction is
/// subtracted. Nodata pixels are filled with the scene minimum while
/// processing and flagged invalid in the output.
pub fn mbi_h(height: &MultibandRaster, params: MorphParams, height_is_agl: bool) -> Result<IndexRaster> {
    if height.is_normalized() {
        return Err(Error::NormalizedHeight);
    }
    MorphParams::new(params.se_size)?;
    let band = match height.height_band() {
        Some((b, _)) => b,
        None if height.bands() == 1 && height.band_roles()[0] == BandRole::Other => 0,
        None => return Err(Error::MissingBand("dsm/agl".into())),
    };
    let (w, h) = height.dims();
    let valid = height.valid_mask(&[band]);
    let raw: Vec<f64> = (0..height.pixels()).map(|p| height.sample(band, p)).collect();

    if height_is_agl {
        let values = raw.iter().zip(&valid).map(|(v, ok)| if *ok { *v as f32 } else { 0.0 }).collect();
        return IndexRaster::new(w, h, IndexKind::Mbih, values, valid);
    }

    let floor = raw.iter().zip(&valid).filter(|(_, ok)| **ok).map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return Err(Error::NoValidSamples);
    }
    let dsm: Vec<f64> = raw.iter().zip(&valid).map(|(v, ok)| if *ok { *v } else { floor }).collect();
    let marker = erode_square(&dsm, w, h, params.se_size);
    let recon = reconstruct_by_dilation(&marker, &dsm, w, h);
    let values =
        dsm.iter().zip(&recon).zip(&valid).map(|((d, r), ok)| if *ok { (d - r) as f32 } else { 0.0 }).collect();
    IndexRaster::new(w, h, IndexKind::Mbih, values, valid)
}
