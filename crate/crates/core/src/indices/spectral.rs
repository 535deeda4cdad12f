use super::{IndexKind, IndexRaster};
use crate::raster::{BandRole, MultibandRaster};
use crate::Result;

/// `(NIR - RED) / (NIR + RED)`; a zero denominator yields 0.
pub fn ndvi(raster: &MultibandRaster) -> Result<IndexRaster> {
    normalized_difference(raster, BandRole::Nir, BandRole::Red, IndexKind::Ndvi)
}

/// `(GREEN - NIR) / (GREEN + NIR)`; a zero denominator yields 0.
pub fn ndwi(raster: &MultibandRaster) -> Result<IndexRaster> {
    normalized_difference(raster, BandRole::Green, BandRole::Nir, IndexKind::Ndwi)
}

fn normalized_difference(raster: &MultibandRaster, a: BandRole, b: BandRole, kind: IndexKind) -> Result<IndexRaster> {
    let ia = raster.require_band(a)?;
    let ib = raster.require_band(b)?;
    let valid = raster.valid_mask(&[ia, ib]);
    let values = (0..raster.pixels())
        .map(|p| {
            if !valid[p] {
                return 0.0;
            }
            let (va, vb) = (raster.sample(ia, p), raster.sample(ib, p));
            let den = va + vb;
            if den == 0.0 {
                0.0
            } else {
                ((va - vb) / den) as f32
            }
        })
        .collect();
    IndexRaster::new(raster.width(), raster.height(), kind, values, valid)
}

/// Sets negative index values to 0.
pub fn clip_negative(index: &mut IndexRaster) {
    for v in &mut index.values {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::RasterData;

    fn rgbn(r: f32, g: f32, b: f32, n: f32) -> MultibandRaster {
        MultibandRaster::from_planes(
            1,
            1,
            vec![
                (BandRole::Red, vec![r]),
                (BandRole::Green, vec![g]),
                (BandRole::Blue, vec![b]),
                (BandRole::Nir, vec![n]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn ndvi_formula_cases() {
        assert!((ndvi(&rgbn(0.2, 0.0, 0.0, 0.6)).unwrap().values[0] - 0.5).abs() < 1e-7);
        assert_eq!(ndvi(&rgbn(0.3, 0.0, 0.0, 0.3)).unwrap().values[0], 0.0);
        assert_eq!(ndvi(&rgbn(0.0, 0.0, 0.0, 0.0)).unwrap().values[0], 0.0);
    }

    #[test]
    fn ndwi_formula_cases_and_clip() {
        assert!((ndwi(&rgbn(0.0, 0.4, 0.0, 0.1)).unwrap().values[0] - 0.6).abs() < 1e-7);
        assert_eq!(ndwi(&rgbn(0.0, 0.25, 0.0, 0.25)).unwrap().values[0], 0.0);
        let mut w = ndwi(&rgbn(0.0, 0.0, 0.0, 0.5)).unwrap();
        assert_eq!(w.values[0], -1.0);
        clip_negative(&mut w);
        assert_eq!(w.values[0], 0.0);
    }

    #[test]
    fn missing_band_is_an_error() {
        let r = MultibandRaster::new(1, 1, vec![BandRole::Red], RasterData::F32(vec![0.1])).unwrap();
        assert!(ndvi(&r).is_err());
        assert!(ndwi(&r).is_err());
    }

    #[test]
    fn nodata_pixels_are_invalid() {
        let r =
            MultibandRaster::from_planes(2, 1, vec![(BandRole::Red, vec![0.2, -1.0]), (BandRole::Nir, vec![0.6, 0.5])])
                .unwrap()
                .with_nodata(Some(-1.0));
        let v = ndvi(&r).unwrap();
        assert_eq!(v.valid, vec![true, false]);
    }
}
