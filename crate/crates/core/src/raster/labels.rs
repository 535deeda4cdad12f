//! Per-dataset class lookup tables onto the ground/tree/building/water schema.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{is_schema_code, LabelMap, MultibandRaster, RasterData, BUILDING, GROUND, TREE, VOID, WATER};
use crate::{Error, Result};

/// Source class code -> target code in `{0, 1, 2, 3, 255}`.
///
/// JSON form: `{"map": {"<src-code>": <dst-code>, ...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassLookup {
    map: BTreeMap<u32, u8>,
}

/// Source codes of the five-class airborne-lidar style annotation
/// (ground, tree, roof, water, elevated road) used by the JAX/OMA scenes.
pub mod jax_codes {
    pub const GROUND: u32 = 2;
    pub const TREE: u32 = 5;
    pub const ROOF: u32 = 6;
    pub const WATER: u32 = 9;
    pub const ELEVATED_ROAD: u32 = 17;
    pub const UNLABELED: u32 = 65;
}

/// Source codes of the fine-grained land-cover annotation used by the
/// Haiti/London scenes.
pub mod land_cover_codes {
    pub const GROUND: u32 = 1;
    pub const TREE: u32 = 2;
    pub const BUILDING: u32 = 3;
    pub const WATER: u32 = 4;
    pub const ROAD: u32 = 5;
    pub const IMPERVIOUS: u32 = 6;
    pub const AGRICULTURE: u32 = 7;
    pub const GRASSLAND: u32 = 8;
    pub const BARREN: u32 = 9;
    pub const SHRUBLAND: u32 = 10;
}

impl ClassLookup {
    pub fn new(entries: impl IntoIterator<Item = (u32, u8)>) -> Result<Self> {
        let map: BTreeMap<u32, u8> = entries.into_iter().collect();
        Self::validated(map)
    }

    fn validated(map: BTreeMap<u32, u8>) -> Result<Self> {
        if let Some((src, dst)) = map.iter().find(|(src, dst)| **src > u16::MAX as u32 || !is_schema_code(**dst as u32))
        {
            return Err(Error::param(format!("lookup entry {src} -> {dst} is outside the schema")));
        }
        Ok(Self { map })
    }

    /// Identity over the target schema.
    pub fn identity() -> Self {
        Self::new([GROUND, TREE, BUILDING, WATER, VOID].map(|c| (c as u32, c))).expect("schema codes")
    }

    /// Elevated road and unlabeled go to void; the rest map one-to-one.
    pub fn jax_oma() -> Self {
        use jax_codes::*;
        Self::new([
            (GROUND, super::GROUND),
            (TREE, super::TREE),
            (ROOF, BUILDING),
            (WATER, super::WATER),
            (ELEVATED_ROAD, VOID),
            (UNLABELED, VOID),
        ])
        .expect("preset is in schema")
    }

    /// Road, impervious, agriculture, grassland and barren merge into
    /// ground; shrubland goes to void.
    pub fn haiti_london() -> Self {
        use land_cover_codes::*;
        Self::new([
            (GROUND, super::GROUND),
            (TREE, super::TREE),
            (BUILDING, super::BUILDING),
            (WATER, super::WATER),
            (ROAD, super::GROUND),
            (IMPERVIOUS, super::GROUND),
            (AGRICULTURE, super::GROUND),
            (GRASSLAND, super::GROUND),
            (BARREN, super::GROUND),
            (SHRUBLAND, VOID),
        ])
        .expect("preset is in schema")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            map: BTreeMap<u32, u8>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        Self::validated(doc.map)
    }

    pub fn get(&self, src: u32) -> Option<u8> {
        self.map.get(&src).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, u8)> + '_ {
        self.map.iter().map(|(k, v)| (*k, *v))
    }
}

/// Applies `lookup` to a single-band integer label raster.
pub fn remap_labels(labels: &MultibandRaster, lookup: &ClassLookup) -> Result<LabelMap> {
    if labels.bands() != 1 {
        return Err(Error::InvalidRaster(format!("label raster must have 1 band, found {}", labels.bands())));
    }
    let codes: Vec<u32> = match labels.data() {
        RasterData::U8(v) => v.iter().map(|&c| c as u32).collect(),
        RasterData::U16(v) => v.iter().map(|&c| c as u32).collect(),
        RasterData::F32(_) => return Err(Error::InvalidRaster("label raster must be an integer type".into())),
    };

    let mut unmapped = BTreeSet::new();
    let out: Vec<u8> = codes
        .iter()
        .map(|&c| {
            lookup.get(c).unwrap_or_else(|| {
                unmapped.insert(c);
                VOID
            })
        })
        .collect();
    if !unmapped.is_empty() {
        return Err(Error::UnmappedCodes(unmapped.into_iter().collect()));
    }
    LabelMap::new(labels.width(), labels.height(), out)
}
