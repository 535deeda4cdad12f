//! Core raster representations and the dataset-level preprocessing steps.

mod labels;
mod merge;
mod normalize;
mod tiling;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use labels::{jax_codes, land_cover_codes, remap_labels, ClassLookup};
pub use merge::{merge_probability_patches, MergeOutput, ProbabilityPatch};
pub use normalize::{compute_truncation_bounds, normalize_truncate, BandBounds, TruncationBounds};
pub use tiling::{plan_tiles, TilingPlan, Window};

/// Number of land-cover classes scored (ground, tree, building, water).
pub const N_CLASSES: usize = 4;
/// Label code for pixels excluded from training and evaluation.
pub const VOID: u8 = 255;

pub const GROUND: u8 = 0;
pub const TREE: u8 = 1;
pub const BUILDING: u8 = 2;
pub const WATER: u8 = 3;

/// Value written into F32 outputs for pixels that carry no data.
pub const F32_NODATA: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Dtype {
    U8 = 0,
    U16 = 1,
    F32 = 2,
}

impl Dtype {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Dtype::U8),
            1 => Some(Dtype::U16),
            2 => Some(Dtype::F32),
            _ => None,
        }
    }

    /// Bytes per sample.
    pub fn size(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::U16 => 2,
            Dtype::F32 => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum BandRole {
    Other = 0,
    Red = 1,
    Green = 2,
    Blue = 3,
    Nir = 4,
    Dsm = 5,
    Agl = 6,
}

impl BandRole {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => BandRole::Other,
            1 => BandRole::Red,
            2 => BandRole::Green,
            3 => BandRole::Blue,
            4 => BandRole::Nir,
            5 => BandRole::Dsm,
            6 => BandRole::Agl,
            _ => return None,
        })
    }

    pub fn is_height(self) -> bool {
        matches!(self, BandRole::Dsm | BandRole::Agl)
    }

    pub fn name(self) -> &'static str {
        match self {
            BandRole::Other => "other",
            BandRole::Red => "red",
            BandRole::Green => "green",
            BandRole::Blue => "blue",
            BandRole::Nir => "nir",
            BandRole::Dsm => "dsm",
            BandRole::Agl => "agl",
        }
    }
}

impl std::fmt::Display for BandRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BandRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "r" | "red" => BandRole::Red,
            "g" | "green" => BandRole::Green,
            "b" | "blue" => BandRole::Blue,
            "nir" | "n" => BandRole::Nir,
            "dsm" => BandRole::Dsm,
            "agl" => BandRole::Agl,
            "other" => BandRole::Other,
            other => return Err(Error::param(format!("unknown band role {other:?}"))),
        })
    }
}

/// Band-sequential, row-major sample storage.
#[derive(Debug, Clone, PartialEq)]
pub enum RasterData {
    U8(Vec<u8>),
    U16(Vec<u16>),
    F32(Vec<f32>),
}

impl RasterData {
    pub fn len(&self) -> usize {
        match self {
            RasterData::U8(v) => v.len(),
            RasterData::U16(v) => v.len(),
            RasterData::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            RasterData::U8(_) => Dtype::U8,
            RasterData::U16(_) => Dtype::U16,
            RasterData::F32(_) => Dtype::F32,
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        match self {
            RasterData::U8(v) => v[i] as f64,
            RasterData::U16(v) => v[i] as f64,
            RasterData::F32(v) => v[i] as f64,
        }
    }
}

/// A multiband image with per-band roles and optional nodata.
#[derive(Debug, Clone, PartialEq)]
pub struct MultibandRaster {
    width: usize,
    height: usize,
    band_roles: Vec<BandRole>,
    nodata: Option<f64>,
    gsd: Option<f64>,
    normalized: bool,
    data: RasterData,
}

impl MultibandRaster {
    pub fn new(width: usize, height: usize, band_roles: Vec<BandRole>, data: RasterData) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!("empty extent {width}x{height}")));
        }
        if band_roles.is_empty() {
            return Err(Error::InvalidRaster("raster needs at least one band".into()));
        }
        let expected = width * height * band_roles.len();
        if data.len() != expected {
            return Err(Error::InvalidRaster(format!(
                "sample count {} does not match {width}x{height}x{}",
                data.len(),
                band_roles.len()
            )));
        }
        for (i, role) in band_roles.iter().enumerate() {
            if *role != BandRole::Other && band_roles[..i].contains(role) {
                return Err(Error::InvalidRaster(format!("duplicate band role {role}")));
            }
        }
        Ok(Self { width, height, band_roles, nodata: None, gsd: None, normalized: false, data })
    }

    pub fn with_nodata(mut self, nodata: Option<f64>) -> Self {
        self.nodata = nodata;
        self
    }

    pub fn with_gsd(mut self, gsd: Option<f64>) -> Self {
        self.gsd = gsd;
        self
    }

    pub fn with_normalized(mut self, normalized: bool) -> Self {
        self.normalized = normalized;
        self
    }

    /// Builds an F32 raster from one plane per band.
    pub fn from_planes(width: usize, height: usize, planes: Vec<(BandRole, Vec<f32>)>) -> Result<Self> {
        let mut roles = Vec::with_capacity(planes.len());
        let mut data = Vec::with_capacity(width * height * planes.len());
        for (role, plane) in planes {
            if plane.len() != width * height {
                return Err(Error::InvalidRaster(format!(
                    "band {role} has {} samples, expected {}",
                    plane.len(),
                    width * height
                )));
            }
            roles.push(role);
            data.extend_from_slice(&plane);
        }
        Self::new(width, height, roles, RasterData::F32(data))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn bands(&self) -> usize {
        self.band_roles.len()
    }

    pub fn band_roles(&self) -> &[BandRole] {
        &self.band_roles
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn nodata(&self) -> Option<f64> {
        self.nodata
    }

    pub fn gsd(&self) -> Option<f64> {
        self.gsd
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn data(&self) -> &RasterData {
        &self.data
    }

    pub fn band_index(&self, role: BandRole) -> Option<usize> {
        self.band_roles.iter().position(|r| *r == role)
    }

    pub fn require_band(&self, role: BandRole) -> Result<usize> {
        self.band_index(role).ok_or_else(|| Error::MissingBand(role.to_string()))
    }

    /// First DSM or AGL band, if any.
    pub fn height_band(&self) -> Option<(usize, BandRole)> {
        self.band_roles.iter().enumerate().find(|(_, r)| r.is_height()).map(|(i, r)| (i, *r))
    }

    #[inline]
    pub fn sample(&self, band: usize, pixel: usize) -> f64 {
        self.data.get(band * self.pixels() + pixel)
    }

    #[inline]
    pub fn is_nodata_value(&self, v: f64) -> bool {
        self.nodata.is_some_and(|nd| v == nd)
    }

    #[inline]
    pub fn is_valid(&self, band: usize, pixel: usize) -> bool {
        !self.is_nodata_value(self.sample(band, pixel))
    }

    /// Copy of one band as `f32`, nodata samples included verbatim.
    pub fn band_f32(&self, band: usize) -> Vec<f32> {
        let n = self.pixels();
        let off = band * n;
        match &self.data {
            RasterData::U8(v) => v[off..off + n].iter().map(|&x| x as f32).collect(),
            RasterData::U16(v) => v[off..off + n].iter().map(|&x| x as f32).collect(),
            RasterData::F32(v) => v[off..off + n].to_vec(),
        }
    }

    /// Per-pixel validity across all listed bands.
    pub fn valid_mask(&self, bands: &[usize]) -> Vec<bool> {
        (0..self.pixels()).map(|p| bands.iter().all(|&b| self.is_valid(b, p))).collect()
    }

    /// The sub-raster under `window`, keeping roles, nodata, gsd and flags.
    pub fn crop(&self, window: &Window) -> Result<Self> {
        if window.width == 0
            || window.height == 0
            || window.x + window.width > self.width
            || window.y + window.height > self.height
        {
            return Err(Error::param(format!("window {window:?} exceeds a {}x{} raster", self.width, self.height)));
        }
        fn pick<T: Copy>(v: &[T], r: &MultibandRaster, w: &Window) -> Vec<T> {
            let mut out = Vec::with_capacity(w.pixels() * r.bands());
            for b in 0..r.bands() {
                let base = b * r.pixels();
                for y in w.y..w.y + w.height {
                    let row = base + y * r.width;
                    out.extend_from_slice(&v[row + w.x..row + w.x + w.width]);
                }
            }
            out
        }
        let data = match &self.data {
            RasterData::U8(v) => RasterData::U8(pick(v, self, window)),
            RasterData::U16(v) => RasterData::U16(pick(v, self, window)),
            RasterData::F32(v) => RasterData::F32(pick(v, self, window)),
        };
        Ok(Self { width: window.width, height: window.height, band_roles: self.band_roles.clone(), data, ..*self })
    }
}

/// A 4-class land-cover map; every code is 0..=3 or [`VOID`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    codes: Vec<u8>,
}

#[inline]
pub fn is_schema_code(code: u32) -> bool {
    code < N_CLASSES as u32 || code == VOID as u32
}

impl LabelMap {
    pub fn new(width: usize, height: usize, codes: Vec<u8>) -> Result<Self> {
        if codes.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "label map has {} codes, expected {}",
                codes.len(),
                width * height
            )));
        }
        if let Some(bad) = codes.iter().find(|&&c| !is_schema_code(c as u32)) {
            return Err(Error::InvalidLabel(*bad as u32));
        }
        Ok(Self { width, height, codes })
    }

    pub fn filled(width: usize, height: usize, code: u8) -> Result<Self> {
        Self::new(width, height, vec![code; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn into_codes(self) -> Vec<u8> {
        self.codes
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.codes[y * self.width + x]
    }

    /// Reads a label map from a single-band integer raster.
    pub fn from_raster(raster: &MultibandRaster) -> Result<Self> {
        if raster.bands() != 1 {
            return Err(Error::InvalidRaster(format!("label raster must have 1 band, found {}", raster.bands())));
        }
        let codes = match raster.data() {
            RasterData::U8(v) => v.clone(),
            RasterData::U16(v) => {
                v.iter().map(|&c| u8::try_from(c).map_err(|_| Error::InvalidLabel(c as u32))).collect::<Result<_>>()?
            }
            RasterData::F32(_) => return Err(Error::InvalidRaster("label raster must be an integer type".into())),
        };
        Self::new(raster.width(), raster.height(), codes)
    }

    pub fn to_raster(&self) -> MultibandRaster {
        MultibandRaster::new(self.width, self.height, vec![BandRole::Other], RasterData::U8(self.codes.clone()))
            .expect("label map dimensions are valid")
    }

    /// Pixel count per class (void excluded).
    pub fn class_counts(&self) -> [usize; N_CLASSES] {
        let mut counts = [0; N_CLASSES];
        for &c in &self.codes {
            if (c as usize) < N_CLASSES {
                counts[c as usize] += 1;
            }
        }
        counts
    }
}

/// Per-pixel class probabilities stored class-major, plus how many patches
/// contributed to each pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    width: usize,
    height: usize,
    probs: Vec<f32>,
    weight: Vec<u32>,
}

impl ProbabilityMap {
    /// `probs` is class-major: `probs[c * width * height + pixel]`.
    pub fn new(width: usize, height: usize, probs: Vec<f32>, weight: Vec<u32>) -> Result<Self> {
        let n = width * height;
        if probs.len() != n * N_CLASSES || weight.len() != n {
            return Err(Error::InvalidRaster(format!(
                "probability map buffers do not match {width}x{height}x{N_CLASSES}"
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidRaster(format!("non-finite probability {p}")));
        }
        Ok(Self { width, height, probs, weight })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn prob(&self, class: usize, pixel: usize) -> f32 {
        self.probs[class * self.pixels() + pixel]
    }

    pub fn probs(&self) -> &[f32] {
        &self.probs
    }

    pub fn weight(&self) -> &[u32] {
        &self.weight
    }

    #[inline]
    pub fn is_valid(&self, pixel: usize) -> bool {
        self.weight[pixel] > 0
    }

    /// Argmax class of one pixel; ties go to the lowest class code.
    #[inline]
    pub fn argmax(&self, pixel: usize) -> u8 {
        let mut best = 0;
        let mut best_p = self.prob(0, pixel);
        for c in 1..N_CLASSES {
            let p = self.prob(c, pixel);
            if p > best_p {
                best = c;
                best_p = p;
            }
        }
        best as u8
    }

    /// Argmax label map; pixels without weight become void.
    pub fn to_label_map(&self) -> LabelMap {
        let codes = (0..self.pixels()).map(|p| if self.is_valid(p) { self.argmax(p) } else { VOID }).collect();
        LabelMap::new(self.width, self.height, codes).expect("argmax codes are in schema")
    }

    /// Four-band F32 raster; uncovered pixels carry [`F32_NODATA`].
    pub fn to_raster(&self) -> MultibandRaster {
        let n = self.pixels();
        let mut data = self.probs.clone();
        let mut any_missing = false;
        for p in 0..n {
            if !self.is_valid(p) {
                any_missing = true;
                for c in 0..N_CLASSES {
                    data[c * n + p] = F32_NODATA as f32;
                }
            }
        }
        MultibandRaster::new(self.width, self.height, vec![BandRole::Other; N_CLASSES], RasterData::F32(data))
            .expect("probability map dimensions are valid")
            .with_nodata(any_missing.then_some(F32_NODATA))
            .with_normalized(true)
    }

    pub fn from_raster(raster: &MultibandRaster) -> Result<Self> {
        let RasterData::F32(data) = raster.data() else {
            return Err(Error::InvalidRaster("probability raster must be F32".into()));
        };
        if raster.bands() != N_CLASSES {
            return Err(Error::InvalidRaster(format!(
                "probability raster must have {N_CLASSES} bands, found {}",
                raster.bands()
            )));
        }
        let n = raster.pixels();
        let mut probs = data.clone();
        let mut weight = vec![1u32; n];
        for p in 0..n {
            if (0..N_CLASSES).any(|c| !raster.is_valid(c, p)) {
                weight[p] = 0;
                for c in 0..N_CLASSES {
                    probs[c * n + p] = 0.0;
                }
            } else if (0..N_CLASSES).any(|c| !(0.0..=1.0).contains(&probs[c * n + p])) {
                return Err(Error::InvalidRaster(format!("probability outside [0,1] at pixel {p}")));
            }
        }
        Self::new(raster.width(), raster.height(), probs, weight)
    }
}
