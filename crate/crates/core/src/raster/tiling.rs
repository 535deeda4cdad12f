use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Window {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Window {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

/// Overlapping patch layout over a raster. Windows are listed row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilingPlan {
    pub width: usize,
    pub height: usize,
    pub patch_size: usize,
    pub stride: usize,
    pub windows: Vec<Window>,
    /// Set when the raster is smaller than `patch_size` along some axis.
    pub undersized: bool,
}

/// Lays out `patch_size` windows at `stride = floor(patch_size * (1 - overlap))`.
///
/// The last window on each axis is pulled inward to end at the raster edge,
/// so every window is fully in bounds and no padding is needed.
pub fn plan_tiles(width: usize, height: usize, patch_size: usize, overlap: f64) -> Result<TilingPlan> {
    if width == 0 || height == 0 {
        return Err(Error::param(format!("cannot tile an empty {width}x{height} raster")));
    }
    if patch_size == 0 {
        return Err(Error::param("patch size must be at least 1"));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::param(format!("overlap must be in [0, 1), got {overlap}")));
    }
    let stride = ((patch_size as f64 * (1.0 - overlap)).floor() as usize).max(1);
    let (xs, w) = axis_origins(width, patch_size, stride);
    let (ys, h) = axis_origins(height, patch_size, stride);
    let windows = ys.iter().flat_map(|&y| xs.iter().map(move |&x| Window { x, y, width: w, height: h })).collect();
    Ok(TilingPlan { width, height, patch_size, stride, windows, undersized: width < patch_size || height < patch_size })
}

fn axis_origins(dim: usize, patch: usize, stride: usize) -> (Vec<usize>, usize) {
    if dim <= patch {
        return (vec![0], dim);
    }
    let mut origins: Vec<usize> = (0..).map(|k| k * stride).take_while(|o| o + patch <= dim).collect();
    let last = *origins.last().expect("dim > patch leaves room for origin 0");
    if last + patch < dim {
        origins.push(dim - patch);
    }
    (origins, patch)
}
