//! XRAS: a minimal little-endian raster container.
//!
//! ```text
//! offset size  field
//!      0    4  magic "XRAS"
//!      4    2  version (u16) = 1
//!      6    4  width (u32)
//!     10    4  height (u32)
//!     14    2  bands (u16)
//!     16    1  dtype (0 = U8, 1 = U16, 2 = F32)
//!     17    1  flags (bit 0: nodata present, bit 1: normalized)
//!     18    8  nodata (f64, 0 when absent)
//!     26    8  gsd in meters (f64, 0 when unknown)
//!     34    b  band roles, one u8 per band
//!   34+b    .  band-sequential, row-major samples
//! ```

use std::fs;
use std::path::Path;

use crate::raster::{BandRole, Dtype, LabelMap, MultibandRaster, ProbabilityMap, RasterData};
use crate::{Error, Result};

pub const XRAS_MAGIC: &[u8; 4] = b"XRAS";
pub const XRAS_VERSION: u16 = 1;
/// Header bytes before the per-band role table.
pub const XRAS_FIXED_HEADER_LEN: usize = 34;

const FLAG_NODATA: u8 = 1;
const FLAG_NORMALIZED: u8 = 2;

pub fn encode_xras(raster: &MultibandRaster) -> Result<Vec<u8>> {
    if let RasterData::F32(v) = raster.data() {
        if v.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidRaster("NaN samples cannot be written; use nodata".into()));
        }
    }
    if raster.nodata().is_some_and(f64::is_nan) {
        return Err(Error::InvalidRaster("NaN nodata cannot be written".into()));
    }
    let (w, h, b) = (raster.width(), raster.height(), raster.bands());
    let w32 = u32::try_from(w).map_err(|_| Error::InvalidRaster("width exceeds u32".into()))?;
    let h32 = u32::try_from(h).map_err(|_| Error::InvalidRaster("height exceeds u32".into()))?;
    let b16 = u16::try_from(b).map_err(|_| Error::InvalidRaster("band count exceeds u16".into()))?;

    let mut out = Vec::with_capacity(XRAS_FIXED_HEADER_LEN + b + raster.data().len() * raster.dtype().size());
    out.extend_from_slice(XRAS_MAGIC);
    out.extend_from_slice(&XRAS_VERSION.to_le_bytes());
    out.extend_from_slice(&w32.to_le_bytes());
    out.extend_from_slice(&h32.to_le_bytes());
    out.extend_from_slice(&b16.to_le_bytes());
    out.push(raster.dtype().code());
    let mut flags = 0;
    if raster.nodata().is_some() {
        flags |= FLAG_NODATA;
    }
    if raster.is_normalized() {
        flags |= FLAG_NORMALIZED;
    }
    out.push(flags);
    out.extend_from_slice(&raster.nodata().unwrap_or(0.0).to_le_bytes());
    out.extend_from_slice(&raster.gsd().unwrap_or(0.0).to_le_bytes());
    out.extend(raster.band_roles().iter().map(|r| r.code()));
    match raster.data() {
        RasterData::U8(v) => out.extend_from_slice(v),
        RasterData::U16(v) => v.iter().for_each(|s| out.extend_from_slice(&s.to_le_bytes())),
        RasterData::F32(v) => v.iter().for_each(|s| out.extend_from_slice(&s.to_le_bytes())),
    }
    Ok(out)
}

pub fn decode_xras(bytes: &[u8]) -> Result<MultibandRaster> {
    if bytes.len() < 6 || &bytes[..4] != XRAS_MAGIC {
        return Err(Error::UnsupportedFormat("missing XRAS magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != XRAS_VERSION {
        return Err(Error::UnsupportedFormat(format!("XRAS version {version}")));
    }
    if bytes.len() < XRAS_FIXED_HEADER_LEN {
        return Err(Error::Corrupt("header is truncated".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let width = u32_at(6);
    let height = u32_at(10);
    let bands = u16::from_le_bytes([bytes[14], bytes[15]]) as usize;
    let dtype = Dtype::from_code(bytes[16]).ok_or_else(|| Error::Corrupt(format!("unknown dtype {}", bytes[16])))?;
    let flags = bytes[17];
    let nodata = (flags & FLAG_NODATA != 0).then(|| f64_at(18));
    let gsd = Some(f64_at(26)).filter(|g| *g != 0.0);

    let roles_end = XRAS_FIXED_HEADER_LEN + bands;
    if bytes.len() < roles_end {
        return Err(Error::Corrupt("band role table is truncated".into()));
    }
    let roles = bytes[XRAS_FIXED_HEADER_LEN..roles_end]
        .iter()
        .map(|&c| BandRole::from_code(c).ok_or_else(|| Error::Corrupt(format!("unknown band role {c}"))))
        .collect::<Result<Vec<_>>>()?;

    let samples = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(bands))
        .ok_or_else(|| Error::Corrupt("extent overflows".into()))?;
    let payload = &bytes[roles_end..];
    let expected = samples * dtype.size();
    if payload.len() < expected {
        return Err(Error::Corrupt(format!("payload has {} bytes, expected {expected}", payload.len())));
    }
    if payload.len() > expected {
        return Err(Error::Corrupt(format!("{} trailing bytes after payload", payload.len() - expected)));
    }
    let data = match dtype {
        Dtype::U8 => RasterData::U8(payload.to_vec()),
        Dtype::U16 => RasterData::U16(payload.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect()),
        Dtype::F32 => {
            RasterData::F32(payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
        }
    };
    Ok(MultibandRaster::new(width, height, roles, data)
        .map_err(|e| Error::Corrupt(e.to_string()))?
        .with_nodata(nodata)
        .with_gsd(gsd)
        .with_normalized(flags & FLAG_NORMALIZED != 0))
}

pub fn read_xras(path: impl AsRef<Path>) -> Result<MultibandRaster> {
    decode_xras(&fs::read(path)?)
}

pub fn write_xras(path: impl AsRef<Path>, raster: &MultibandRaster) -> Result<()> {
    fs::write(path, encode_xras(raster)?)?;
    Ok(())
}

pub fn read_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    LabelMap::from_raster(&read_xras(path)?)
}

pub fn read_probability_map(path: impl AsRef<Path>) -> Result<ProbabilityMap> {
    ProbabilityMap::from_raster(&read_xras(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Hand-assembled 2x1, one-band U8 raster with pixels (7, 255).
    fn golden() -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(b"XRAS");
        b.extend_from_slice(&[1, 0]); // version
        b.extend_from_slice(&[2, 0, 0, 0]); // width
        b.extend_from_slice(&[1, 0, 0, 0]); // height
        b.extend_from_slice(&[1, 0]); // bands
        b.push(0); // dtype U8
        b.push(0); // flags
        b.extend_from_slice(&[0; 8]); // nodata
        b.extend_from_slice(&[0; 8]); // gsd
        b.push(0); // role OTHER
        b.extend_from_slice(&[7, 255]);
        b
    }

    #[test]
    fn golden_file_decodes_and_reencodes() {
        let bytes = golden();
        assert_eq!(bytes.len(), XRAS_FIXED_HEADER_LEN + 1 + 2);
        let r = decode_xras(&bytes).unwrap();
        assert_eq!(r.dims(), (2, 1));
        assert_eq!(r.data(), &RasterData::U8(vec![7, 255]));
        assert_eq!(encode_xras(&r).unwrap(), bytes);
    }

    #[test]
    fn bad_magic_and_version_are_unsupported() {
        let mut bytes = golden();
        bytes[3] = b'Z';
        assert!(matches!(decode_xras(&bytes), Err(Error::UnsupportedFormat(_))));
        let mut bytes = golden();
        bytes[4] = 2;
        assert!(matches!(decode_xras(&bytes), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn truncated_payload_is_corrupt() {
        let bytes = golden();
        assert!(matches!(decode_xras(&bytes[..bytes.len() - 1]), Err(Error::Corrupt(_))));
        assert!(matches!(decode_xras(&bytes[..20]), Err(Error::Corrupt(_))));
    }

    #[test]
    fn golden_label_value_7_is_rejected_as_label_map() {
        let r = decode_xras(&golden()).unwrap();
        assert!(matches!(LabelMap::from_raster(&r), Err(Error::InvalidLabel(7))));
    }

    #[test]
    fn nan_is_rejected_on_write() {
        let r = MultibandRaster::from_planes(1, 1, vec![(BandRole::Red, vec![f32::NAN])]).unwrap();
        assert!(encode_xras(&r).is_err());
    }

    #[test]
    fn metadata_survives_roundtrip() {
        let r = MultibandRaster::new(2, 2, vec![BandRole::Dsm], RasterData::U16(vec![1, 2, 65535, 0]))
            .unwrap()
            .with_nodata(Some(65535.0))
            .with_gsd(Some(0.31))
            .with_normalized(true);
        let back = decode_xras(&encode_xras(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
