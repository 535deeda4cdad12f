//! Otsu's threshold on a fixed-bin histogram over [0, 1].
//!
//! The between-class variance of a split at bin `k` is proportional to
//! `(N*S0 - n0*S)^2 / (n0*n1)` where `n0`/`S0` are the count and level-sum
//! below `k` and `N`/`S` the totals. All of these are integers, so
//! candidates are compared exactly by cross-multiplication.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtsuResult {
    /// Bin edge `split_bin / bins`; samples at or above it form the upper class.
    pub threshold: f64,
    pub split_bin: usize,
    /// All samples fell in a single bin; `threshold` is that bin's upper edge.
    pub degenerate: bool,
}

#[inline]
pub(crate) fn bin_of(v: f32, bins: usize) -> usize {
    ((v.max(0.0) as f64 * bins as f64).floor() as usize).min(bins - 1)
}

/// Otsu's threshold of `values` (expected in [0, 1]) over `bins` equal-width bins.
///
/// Ties in between-class variance resolve to the lowest threshold.
pub fn otsu_threshold(values: &[f32], bins: usize) -> Result<OtsuResult> {
    if bins < 2 {
        return Err(Error::param(format!("otsu needs at least 2 bins, got {bins}")));
    }
    if values.is_empty() {
        return Err(Error::NoValidSamples);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::param("otsu input contains NaN"));
    }
    let n = values.len() as u128;
    // (N^2 * (bins-1))^2 must fit the 128-bit numerator.
    if n * n * (bins as u128 - 1) >= 1u128 << 64 {
        return Err(Error::param(format!("too many samples ({n}) for an exact otsu scan")));
    }

    let mut hist = vec![0u64; bins];
    for &v in values {
        hist[bin_of(v, bins)] += 1;
    }

    let occupied: Vec<usize> = (0..bins).filter(|&b| hist[b] > 0).collect();
    if occupied.len() == 1 {
        let b = occupied[0];
        return Ok(OtsuResult { threshold: (b + 1) as f64 / bins as f64, split_bin: b + 1, degenerate: true });
    }

    let total_sum: u128 = hist.iter().enumerate().map(|(i, &c)| i as u128 * c as u128).sum();
    let mut n0: u128 = 0;
    let mut s0: u128 = 0;
    let mut best: Option<(usize, u128, u128)> = None;
    for k in 1..bins {
        n0 += hist[k - 1] as u128;
        s0 += (k as u128 - 1) * hist[k - 1] as u128;
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let x = (n * s0).abs_diff(n0 * total_sum);
        let num = x * x;
        let den = n0 * n1;
        let better = match best {
            None => true,
            Some((_, bnum, bden)) => cmp_fractions(num, den, bnum, bden) == Ordering::Greater,
        };
        if better {
            best = Some((k, num, den));
        }
    }
    let (k, _, _) = best.expect("two occupied bins admit a split");
    Ok(OtsuResult { threshold: k as f64 / bins as f64, split_bin: k, degenerate: false })
}

/// Compares `a/b` with `c/d` exactly.
fn cmp_fractions(a: u128, b: u128, c: u128, d: u128) -> Ordering {
    mul_wide(a, d).cmp(&mul_wide(c, b))
}

/// Full 256-bit product as `(high, low)`.
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a_hi, a_lo) = (a >> 64, a & MASK);
    let (b_hi, b_lo) = (b >> 64, b & MASK);
    let ll = a_lo * b_lo;
    let lh = a_lo * b_hi;
    let hl = a_hi * b_lo;
    let hh = a_hi * b_hi;
    let mid = (ll >> 64) + (lh & MASK) + (hl & MASK);
    let lo = (ll & MASK) | (mid << 64);
    let hi = hh + (lh >> 64) + (hl >> 64) + (mid >> 64);
    (hi, lo)
}
