//! Dataset-level histogram truncation and rescaling to [0, 1].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BandRole, Dtype, MultibandRaster, RasterData, F32_NODATA};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationBounds {
    pub lo: f64,
    pub hi: f64,
    /// Set when `lo == hi`; every valid sample then normalizes to 0.
    pub degenerate: bool,
}

/// Truncation bounds keyed by band role.
pub type BandBounds = BTreeMap<BandRole, TruncationBounds>;

/// Cut points of the pooled distribution of one band across all `rasters`.
///
/// The lowest `floor(lower_pct% * N)` and highest `floor(upper_pct% * N)`
/// samples are cut; `lo` and `hi` are the smallest and largest surviving
/// samples. Integer rasters go through an exact 65536-bin histogram; F32
/// rasters are resolved by exact selection.
pub fn compute_truncation_bounds(
    rasters: &[&MultibandRaster],
    role: BandRole,
    lower_pct: f64,
    upper_pct: f64,
) -> Result<TruncationBounds> {
    if !(lower_pct >= 0.0 && upper_pct >= 0.0 && lower_pct + upper_pct < 100.0) {
        return Err(Error::param(format!(
            "truncation percentages must be non-negative and sum below 100 (got {lower_pct}, {upper_pct})"
        )));
    }
    let with_band: Vec<(&MultibandRaster, usize)> =
        rasters.iter().filter_map(|r| r.band_index(role).map(|b| (*r, b))).collect();
    if with_band.is_empty() {
        return Err(Error::MissingBand(role.to_string()));
    }

    let (lo, hi) = if with_band.iter().all(|(r, _)| r.dtype() != Dtype::F32) {
        integer_bounds(&with_band, lower_pct, upper_pct)?
    } else {
        float_bounds(&with_band, lower_pct, upper_pct)?
    };
    Ok(TruncationBounds { lo, hi, degenerate: lo == hi })
}

fn cut_ranks(n: usize, lower_pct: f64, upper_pct: f64) -> (usize, usize) {
    let k_lo = (lower_pct * n as f64 / 100.0).floor() as usize;
    let k_hi = (upper_pct * n as f64 / 100.0).floor() as usize;
    (k_lo, n - 1 - k_hi)
}

fn integer_bounds(rasters: &[(&MultibandRaster, usize)], lower_pct: f64, upper_pct: f64) -> Result<(f64, f64)> {
    let mut hist = vec![0u64; 1 << 16];
    let mut n = 0usize;
    for (r, b) in rasters {
        let px = r.pixels();
        let off = b * px;
        match r.data() {
            RasterData::U8(v) => {
                for &s in &v[off..off + px] {
                    if !r.is_nodata_value(s as f64) {
                        hist[s as usize] += 1;
                        n += 1;
                    }
                }
            }
            RasterData::U16(v) => {
                for &s in &v[off..off + px] {
                    if !r.is_nodata_value(s as f64) {
                        hist[s as usize] += 1;
                        n += 1;
                    }
                }
            }
            RasterData::F32(_) => unreachable!("integer path only sees integer rasters"),
        }
    }
    if n == 0 {
        return Err(Error::NoValidSamples);
    }
    let (r_lo, r_hi) = cut_ranks(n, lower_pct, upper_pct);
    let value_at = |rank: usize| -> f64 {
        let mut seen = 0u64;
        for (v, &c) in hist.iter().enumerate() {
            seen += c;
            if seen > rank as u64 {
                return v as f64;
            }
        }
        unreachable!("rank is below the sample count")
    };
    Ok((value_at(r_lo), value_at(r_hi)))
}

fn float_bounds(rasters: &[(&MultibandRaster, usize)], lower_pct: f64, upper_pct: f64) -> Result<(f64, f64)> {
    let mut values: Vec<f64> = Vec::new();
    for (r, b) in rasters {
        values.extend((0..r.pixels()).map(|p| r.sample(*b, p)).filter(|v| !r.is_nodata_value(*v) && v.is_finite()));
    }
    if values.is_empty() {
        return Err(Error::NoValidSamples);
    }
    let (r_lo, r_hi) = cut_ranks(values.len(), lower_pct, upper_pct);
    let lo = *values.select_nth_unstable_by(r_lo, f64::total_cmp).1;
    let hi = *values.select_nth_unstable_by(r_hi, f64::total_cmp).1;
    Ok((lo, hi))
}

/// Rescales the bands named in `roles` with `clamp((v - lo) / (hi - lo), 0, 1)`.
///
/// Bands not listed are carried through unchanged (converted to F32), which
/// is how height bands stay in meters. Nodata becomes [`F32_NODATA`].
pub fn normalize_truncate(
    raster: &MultibandRaster,
    bounds: &BandBounds,
    roles: &[BandRole],
) -> Result<MultibandRaster> {
    let mut targets = Vec::with_capacity(roles.len());
    for role in roles {
        let band = raster.require_band(*role)?;
        let b = bounds.get(role).ok_or_else(|| Error::param(format!("no truncation bounds for band {role}")))?;
        targets.push((band, *b));
    }

    let n = raster.pixels();
    let mut out = Vec::with_capacity(n * raster.bands());
    for band in 0..raster.bands() {
        let tb = targets.iter().find(|(b, _)| *b == band).map(|(_, tb)| *tb);
        out.extend((0..n).map(|p| {
            let v = raster.sample(band, p);
            if raster.is_nodata_value(v) {
                return F32_NODATA as f32;
            }
            match tb {
                Some(tb) => rescale(v, tb) as f32,
                None => v as f32,
            }
        }));
    }
    Ok(MultibandRaster::new(raster.width(), raster.height(), raster.band_roles().to_vec(), RasterData::F32(out))?
        .with_nodata(raster.nodata().map(|_| F32_NODATA))
        .with_gsd(raster.gsd())
        .with_normalized(true))
}

#[inline]
fn rescale(v: f64, b: TruncationBounds) -> f64 {
    if b.hi <= b.lo {
        return 0.0;
    }
    ((v - b.lo) / (b.hi - b.lo)).clamp(0.0, 1.0)
}
