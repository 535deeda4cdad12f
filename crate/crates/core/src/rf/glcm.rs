//! Per-pixel GLCM texture statistics over a sliding window.
//!
//! Every statistic is a function of a handful of running sums over the
//! co-occurrence entries (level moments, a distance histogram, the sum of
//! squared cell counts and the sum of `c ln c`), so moving the window one
//! column only touches the pairs entering and leaving it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::raster::{BandRole, MultibandRaster, RasterData, F32_NODATA};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlcmStat {
    Contrast,
    Dissimilarity,
    Homogeneity,
    Energy,
    Entropy,
    Correlation,
}

pub const GLCM_STATS: [GlcmStat; 6] = [
    GlcmStat::Contrast,
    GlcmStat::Dissimilarity,
    GlcmStat::Homogeneity,
    GlcmStat::Energy,
    GlcmStat::Entropy,
    GlcmStat::Correlation,
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlcmParams {
    /// Odd window side in pixels.
    pub window: usize,
    pub levels: usize,
    /// Displacements `(dx, dy)`; each pair is counted in both orders.
    pub offsets: Vec<(i32, i32)>,
}

impl Default for GlcmParams {
    fn default() -> Self {
        Self { window: 13, levels: 32, offsets: vec![(1, 0), (0, 1), (1, 1), (1, -1)] }
    }
}

impl GlcmParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::param(format!("GLCM window must be odd and >= 3, got {}", self.window)));
        }
        if !(2..=u16::MAX as usize).contains(&self.levels) {
            return Err(Error::param(format!("GLCM levels must be >= 2, got {}", self.levels)));
        }
        if self.offsets.is_empty() || self.offsets.iter().any(|&(dx, dy)| dx == 0 && dy == 0) {
            return Err(Error::param("GLCM offsets must be non-empty and non-zero"));
        }
        if self
            .offsets
            .iter()
            .any(|&(dx, dy)| dx.unsigned_abs() as usize >= self.window || dy.unsigned_abs() as usize >= self.window)
        {
            return Err(Error::param("GLCM offsets must be shorter than the window"));
        }
        Ok(())
    }
}

/// The six statistics in [`GLCM_STATS`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlcmStats(pub [f64; 6]);

/// Symmetric co-occurrence counts with running moments.
#[derive(Debug, Clone)]
pub struct CoOccurrence {
    levels: usize,
    counts: Vec<u32>,
    total: u64,
    sum_i: u64,
    sum_ii: u64,
    sum_ij: u64,
    sum_d: u64,
    sum_dd: u64,
    dist: Vec<u64>,
    sum_sq: u64,
    sum_clnc: f64,
    clnc: Vec<f64>,
}

impl CoOccurrence {
    pub fn new(levels: usize, max_entries: usize) -> Self {
        Self {
            levels,
            counts: vec![0; levels * levels],
            total: 0,
            sum_i: 0,
            sum_ii: 0,
            sum_ij: 0,
            sum_d: 0,
            sum_dd: 0,
            dist: vec![0; levels],
            sum_sq: 0,
            sum_clnc: 0.0,
            clnc: (0..=max_entries).map(|c| if c < 2 { 0.0 } else { c as f64 * (c as f64).ln() }).collect(),
        }
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.dist.iter_mut().for_each(|c| *c = 0);
        self.total = 0;
        self.sum_i = 0;
        self.sum_ii = 0;
        self.sum_ij = 0;
        self.sum_d = 0;
        self.sum_dd = 0;
        self.sum_sq = 0;
        self.sum_clnc = 0.0;
    }

    #[inline]
    fn entry(&mut self, i: usize, j: usize, add: bool) {
        let cell = &mut self.counts[i * self.levels + j];
        let c = *cell as u64;
        let d = i.abs_diff(j) as u64;
        let (i, j) = (i as u64, j as u64);
        if add {
            self.sum_sq += 2 * c + 1;
            self.sum_clnc += self.clnc[c as usize + 1] - self.clnc[c as usize];
            *cell += 1;
            self.total += 1;
            self.sum_i += i;
            self.sum_ii += i * i;
            self.sum_ij += i * j;
            self.sum_d += d;
            self.sum_dd += d * d;
            self.dist[d as usize] += 1;
        } else {
            debug_assert!(c > 0);
            self.sum_sq -= 2 * c - 1;
            self.sum_clnc -= self.clnc[c as usize] - self.clnc[c as usize - 1];
            *cell -= 1;
            self.total -= 1;
            self.sum_i -= i;
            self.sum_ii -= i * i;
            self.sum_ij -= i * j;
            self.sum_d -= d;
            self.sum_dd -= d * d;
            self.dist[d as usize] -= 1;
        }
    }

    /// Counts the pair in both orders.
    #[inline]
    pub fn add_pair(&mut self, a: u16, b: u16) {
        self.entry(a as usize, b as usize, true);
        self.entry(b as usize, a as usize, true);
    }

    #[inline]
    pub fn remove_pair(&mut self, a: u16, b: u16) {
        self.entry(a as usize, b as usize, false);
        self.entry(b as usize, a as usize, false);
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Normalized matrix, row-major.
    pub fn normalized(&self) -> Vec<f64> {
        let t = self.total.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    pub fn stats(&self) -> GlcmStats {
        if self.total == 0 {
            return GlcmStats([0.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
        }
        let t = self.total as f64;
        let contrast = self.sum_dd as f64 / t;
        let dissimilarity = self.sum_d as f64 / t;
        let homogeneity =
            self.dist.iter().enumerate().map(|(d, &n)| n as f64 / (1.0 + (d * d) as f64)).sum::<f64>() / t;
        let energy = self.sum_sq as f64 / (t * t);
        let entropy = if self.sum_sq == self.total * self.total { 0.0 } else { (t.ln() - self.sum_clnc / t).max(0.0) };
        let tt = self.total as i128;
        let var_num = tt * self.sum_ii as i128 - (self.sum_i as i128).pow(2);
        let cov_num = tt * self.sum_ij as i128 - (self.sum_i as i128).pow(2);
        let correlation = if var_num == 0 { 1.0 } else { cov_num as f64 / var_num as f64 };
        GlcmStats([contrast, dissimilarity, homogeneity, energy, entropy, correlation])
    }
}

/// Luminance `0.299 R + 0.587 G + 0.114 B` quantized to `levels` bins.
/// Pixels with nodata in any of R, G, B are returned as `None`.
pub fn quantize_luminance(raster: &MultibandRaster, levels: usize) -> Result<Vec<Option<u16>>> {
    let r = raster.require_band(BandRole::Red)?;
    let g = raster.require_band(BandRole::Green)?;
    let b = raster.require_band(BandRole::Blue)?;
    let valid = raster.valid_mask(&[r, g, b]);
    Ok((0..raster.pixels())
        .map(|p| {
            valid[p].then(|| {
                let lum = 0.299 * raster.sample(r, p) + 0.587 * raster.sample(g, p) + 0.114 * raster.sample(b, p);
                quantize(lum, levels)
            })
        })
        .collect())
}

#[inline]
pub fn quantize(v: f64, levels: usize) -> u16 {
    ((v.clamp(0.0, 1.0) * levels as f64).floor() as usize).min(levels - 1) as u16
}

/// Statistics of a single `win x win` window with top-left corner `(x0, y0)`.
pub fn window_stats(q: &[u16], width: usize, x0: usize, y0: usize, params: &GlcmParams) -> GlcmStats {
    let mut acc = CoOccurrence::new(params.levels, max_entries(params));
    fill_window(&mut acc, q, width, x0, y0, params);
    acc.stats()
}

fn max_entries(params: &GlcmParams) -> usize {
    2 * params.offsets.len() * params.window * params.window
}

fn fill_window(acc: &mut CoOccurrence, q: &[u16], width: usize, x0: usize, y0: usize, params: &GlcmParams) {
    let win = params.window as i64;
    for &(dx, dy) in &params.offsets {
        let (dx, dy) = (dx as i64, dy as i64);
        for ly in 0..win {
            for lx in 0..win {
                let (qx, qy) = (lx + dx, ly + dy);
                if qx < 0 || qy < 0 || qx >= win || qy >= win {
                    continue;
                }
                let a = q[(y0 + ly as usize) * width + x0 + lx as usize];
                let b = q[(y0 + qy as usize) * width + x0 + qx as usize];
                acc.add_pair(a, b);
            }
        }
    }
}

/// Adds or removes every in-window pair touching column `col` of the window
/// whose left edge is `x0`.
fn column_pairs(
    acc: &mut CoOccurrence,
    q: &[u16],
    width: usize,
    x0: usize,
    y0: usize,
    col: usize,
    params: &GlcmParams,
    add: bool,
) {
    let win = params.window as i64;
    let lc = (col - x0) as i64;
    let at = |lx: i64, ly: i64| q[(y0 + ly as usize) * width + x0 + lx as usize];
    let inside = |lx: i64, ly: i64| lx >= 0 && ly >= 0 && lx < win && ly < win;
    for &(dx, dy) in &params.offsets {
        let (dx, dy) = (dx as i64, dy as i64);
        for ly in 0..win {
            // pairs whose first endpoint is in the column
            if inside(lc + dx, ly + dy) {
                let (a, b) = (at(lc, ly), at(lc + dx, ly + dy));
                if add {
                    acc.add_pair(a, b)
                } else {
                    acc.remove_pair(a, b)
                }
            }
            // pairs whose second endpoint is in the column and first is not
            let (px, py) = (lc - dx, ly - dy);
            if px != lc && inside(px, py) {
                let (a, b) = (at(px, py), at(lc, ly));
                if add {
                    acc.add_pair(a, b)
                } else {
                    acc.remove_pair(a, b)
                }
            }
        }
    }
}

/// Six-band texture raster. Each pixel's window is shifted inward at the
/// borders so it always lies inside the raster; pixels with nodata in R, G
/// or B get [`F32_NODATA`] in every band.
pub fn glcm_features(raster: &MultibandRaster, params: &GlcmParams) -> Result<MultibandRaster> {
    params.validate()?;
    let (w, h) = raster.dims();
    if params.window > w || params.window > h {
        return Err(Error::param(format!("GLCM window {} does not fit a {w}x{h} raster", params.window)));
    }
    let quant = quantize_luminance(raster, params.levels)?;
    let any_invalid = quant.iter().any(Option::is_none);
    let q: Vec<u16> = quant.iter().map(|v| v.unwrap_or(0)).collect();
    let r = params.window / 2;
    let win = params.window;

    let rows: Vec<Vec<[f32; 6]>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let y0 = y.saturating_sub(r).min(h - win);
            let mut acc = CoOccurrence::new(params.levels, max_entries(params));
            let mut x0 = 0;
            fill_window(&mut acc, &q, w, x0, y0, params);
            let mut row = Vec::with_capacity(w);
            for x in 0..w {
                let want = x.saturating_sub(r).min(w - win);
                while x0 < want {
                    column_pairs(&mut acc, &q, w, x0, y0, x0, params, false);
                    x0 += 1;
                    column_pairs(&mut acc, &q, w, x0, y0, x0 + win - 1, params, true);
                }
                let s = acc.stats().0;
                row.push(s.map(|v| v as f32));
            }
            row
        })
        .collect();

    let n = w * h;
    let mut data = vec![0f32; n * 6];
    for (y, row) in rows.iter().enumerate() {
        for (x, s) in row.iter().enumerate() {
            let p = y * w + x;
            for (k, v) in s.iter().enumerate() {
                data[k * n + p] = if quant[p].is_some() { *v } else { F32_NODATA as f32 };
            }
        }
    }
    Ok(MultibandRaster::new(w, h, vec![BandRole::Other; 6], RasterData::F32(data))?
        .with_nodata(any_invalid.then_some(F32_NODATA))
        .with_gsd(raster.gsd()))
}
