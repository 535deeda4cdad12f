use serde::{Deserialize, Serialize};

use super::{
    clip_negative, mbi_h, ndvi, ndwi, otsu_threshold, IndexRaster, MorphParams, ThresholdSet, ThresholdSource,
    DEFAULT_MBIH_THRESHOLD, DEFAULT_OTSU_BINS,
};
use crate::raster::{LabelMap, MultibandRaster, BUILDING, GROUND, TREE, VOID, WATER};
use crate::{Error, Result};

/// Per-pixel rule cascade, first match wins: NDVI -> tree, height ->
/// building, NDWI -> water, else ground. Invalid pixels are void.
pub fn fuse_pseudo_labels(
    ndvi: &IndexRaster,
    ndwi: &IndexRaster,
    mbih: Option<&IndexRaster>,
    thresholds: &ThresholdSet,
) -> Result<LabelMap> {
    let dims = ndvi.dims();
    for other in [Some(ndwi), mbih].into_iter().flatten() {
        if other.dims() != dims {
            return Err(Error::dims(dims, other.dims()));
        }
    }
    let codes = (0..dims.0 * dims.1)
        .map(|p| {
            let valid = ndvi.valid[p] && ndwi.valid[p] && mbih.is_none_or(|m| m.valid[p]);
            if !valid {
                VOID
            } else if ndvi.values[p] as f64 > thresholds.t_ndvi {
                TREE
            } else if mbih.is_some_and(|m| m.values[p] as f64 > thresholds.t_mbih) {
                BUILDING
            } else if ndwi.values[p] as f64 > thresholds.t_ndwi {
                WATER
            } else {
                GROUND
            }
        })
        .collect();
    LabelMap::new(dims.0, dims.1, codes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeightKind {
    Dsm,
    Agl,
}

impl std::str::FromStr for HeightKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dsm" => Ok(HeightKind::Dsm),
            "agl" => Ok(HeightKind::Agl),
            other => Err(Error::param(format!("height kind must be dsm or agl, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HeightInput<'a> {
    pub raster: &'a MultibandRaster,
    pub kind: HeightKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelConfig {
    pub morph: MorphParams,
    pub mbih_threshold: f64,
    pub otsu_bins: usize,
    /// Fixed NDVI/NDWI thresholds instead of per-scene Otsu.
    pub manual: Option<(f64, f64)>,
}

impl Default for PseudoLabelConfig {
    fn default() -> Self {
        Self {
            morph: MorphParams::default(),
            mbih_threshold: DEFAULT_MBIH_THRESHOLD,
            otsu_bins: DEFAULT_OTSU_BINS,
            manual: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PseudoLabels {
    pub labels: LabelMap,
    pub thresholds: ThresholdSet,
    pub ndvi: IndexRaster,
    pub ndwi: IndexRaster,
    pub mbih: Option<IndexRaster>,
}

/// Full index pipeline for one scene: indices, negative clipping, per-scene
/// Otsu on NDVI and NDWI, optional height top-hat, then fusion.
pub fn generate_pseudo_labels(
    raster: &MultibandRaster,
    height: Option<HeightInput<'_>>,
    cfg: &PseudoLabelConfig,
) -> Result<PseudoLabels> {
    let mut vi = ndvi(raster)?;
    let mut wi = ndwi(raster)?;
    clip_negative(&mut vi);
    clip_negative(&mut wi);

    let mbih = match height {
        Some(h) => {
            if h.raster.dims() != raster.dims() {
                return Err(Error::dims(raster.dims(), h.raster.dims()));
            }
            Some(mbi_h(h.raster, cfg.morph, h.kind == HeightKind::Agl)?)
        }
        None => None,
    };

    let thresholds = match cfg.manual {
        Some((t_ndvi, t_ndwi)) => ThresholdSet::manual(t_ndvi, t_ndwi, cfg.mbih_threshold)?,
        None => {
            let t = ThresholdSet {
                t_ndvi: otsu_threshold(&vi.valid_values(), cfg.otsu_bins)?.threshold,
                t_ndwi: otsu_threshold(&wi.valid_values(), cfg.otsu_bins)?.threshold,
                t_mbih: cfg.mbih_threshold,
                source: ThresholdSource::Otsu,
            };
            t.validate()?;
            t
        }
    };

    let labels = fuse_pseudo_labels(&vi, &wi, mbih.as_ref(), &thresholds)?;
    Ok(PseudoLabels { labels, thresholds, ndvi: vi, ndwi: wi, mbih })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indices::IndexKind;

    fn single(kind: IndexKind, v: f32) -> IndexRaster {
        IndexRaster::new(1, 1, kind, vec![v], vec![true]).unwrap()
    }

    fn fuse1(ndvi: f32, mbih: Option<f32>, ndwi: f32, t: &ThresholdSet) -> u8 {
        let m = mbih.map(|v| single(IndexKind::Mbih, v));
        fuse_pseudo_labels(&single(IndexKind::Ndvi, ndvi), &single(IndexKind::Ndwi, ndwi), m.as_ref(), t)
            .unwrap()
            .codes()[0]
    }

    #[test]
    fn priority_cascade() {
        let t = ThresholdSet::manual(0.3, 0.4, 2.0).unwrap();
        assert_eq!(fuse1(0.8, Some(10.0), 0.9, &t), TREE);
        assert_eq!(fuse1(0.1, Some(5.0), 0.6, &t), BUILDING);
        assert_eq!(fuse1(0.1, Some(1.0), 0.6, &t), WATER);
        assert_eq!(fuse1(0.0, Some(0.0), 0.0, &t), GROUND);
        assert_eq!(fuse1(0.1, None, 0.6, &t), WATER);
    }

    #[test]
    fn thresholds_are_strict() {
        let t = ThresholdSet::manual(0.3, 0.4, 2.0).unwrap();
        assert_eq!(fuse1(0.0, Some(2.0), 0.0, &t), GROUND);
    }

    #[test]
    fn invalid_pixels_become_void() {
        let t = ThresholdSet::manual(0.3, 0.4, 2.0).unwrap();
        let mut v = single(IndexKind::Ndvi, 0.9);
        v.valid[0] = false;
        let out = fuse_pseudo_labels(&v, &single(IndexKind::Ndwi, 0.0), None, &t).unwrap();
        assert_eq!(out.codes(), &[VOID]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let t = ThresholdSet::manual(0.3, 0.4, 2.0).unwrap();
        let wide = IndexRaster::new(2, 1, IndexKind::Ndwi, vec![0.0; 2], vec![true; 2]).unwrap();
        assert!(fuse_pseudo_labels(&single(IndexKind::Ndvi, 0.0), &wide, None, &t).is_err());
    }
}
