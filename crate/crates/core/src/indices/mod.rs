//! Index-based pseudo-labels: NDVI, NDWI, the DSM top-hat (MBI-H), Otsu
//! thresholds and the priority fusion that turns them into a label map.

mod fuse;
mod morphology;
mod otsu;
mod spectral;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use fuse::{fuse_pseudo_labels, generate_pseudo_labels, HeightInput, HeightKind, PseudoLabelConfig, PseudoLabels};
pub use morphology::{erode_square, mbi_h, reconstruct_by_dilation};
pub use otsu::{otsu_threshold, OtsuResult};
pub use spectral::{clip_negative, ndvi, ndwi};

/// Default building threshold on MBI-H / AGL, meters.
pub const DEFAULT_MBIH_THRESHOLD: f64 = 2.0;
pub const DEFAULT_OTSU_BINS: usize = 256;
/// Square structuring element side, pixels (about 19.5 m at 0.31 m GSD).
pub const DEFAULT_SE_SIZE: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Ndvi,
    Ndwi,
    Mbih,
}

/// One index value per pixel plus a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexRaster {
    pub width: usize,
    pub height: usize,
    pub kind: IndexKind,
    pub values: Vec<f32>,
    pub valid: Vec<bool>,
}

impl IndexRaster {
    pub fn new(width: usize, height: usize, kind: IndexKind, values: Vec<f32>, valid: Vec<bool>) -> Result<Self> {
        if values.len() != width * height || valid.len() != width * height {
            return Err(Error::InvalidRaster(format!("index buffers do not match {width}x{height}")));
        }
        Ok(Self { width, height, kind, values, valid })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Values at valid pixels.
    pub fn valid_values(&self) -> Vec<f32> {
        self.values.iter().zip(&self.valid).filter(|(_, ok)| **ok).map(|(v, _)| *v).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdSource {
    Otsu,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub t_ndvi: f64,
    pub t_ndwi: f64,
    pub t_mbih: f64,
    pub source: ThresholdSource,
}

impl ThresholdSet {
    pub fn manual(t_ndvi: f64, t_ndwi: f64, t_mbih: f64) -> Result<Self> {
        let t = Self { t_ndvi, t_ndwi, t_mbih, source: ThresholdSource::Manual };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.t_ndvi) || !(0.0..=1.0).contains(&self.t_ndwi) {
            return Err(Error::param(format!(
                "NDVI/NDWI thresholds must lie in [0,1] (got {}, {})",
                self.t_ndvi, self.t_ndwi
            )));
        }
        if self.t_mbih.is_nan() || self.t_mbih <= 0.0 {
            return Err(Error::param(format!("height threshold must be positive, got {}", self.t_mbih)));
        }
        Ok(())
    }
}

/// Square structuring element for the DSM top-hat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphParams {
    pub se_size: usize,
}

impl MorphParams {
    pub fn new(se_size: usize) -> Result<Self> {
        if se_size < 3 || se_size % 2 == 0 {
            return Err(Error::param(format!("structuring element size must be odd and >= 3, got {se_size}")));
        }
        Ok(Self { se_size })
    }
}

impl Default for MorphParams {
    fn default() -> Self {
        Self { se_size: DEFAULT_SE_SIZE }
    }
}
