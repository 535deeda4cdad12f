//! Deterministic synthetic scenes: paired RGBN reflectance, AGL and exact
//! ground truth, with a controllable spectral shift between domains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::raster::{BandRole, LabelMap, MultibandRaster, RasterData, BUILDING, GROUND, TREE, WATER};
use crate::seed::derive_seed;
use crate::{Error, Result};

/// Mean reflectance (R, G, B, NIR), Gaussian noise sigma and the amplitude
/// of a per-class checker texture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSpectrum {
    pub mean: [f64; 4],
    pub sigma: f64,
    pub texture: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub building_fraction: f64,
    pub tree_fraction: f64,
    pub water_fraction: f64,
    /// Building rectangle side range, pixels.
    pub building_size: (usize, usize),
    /// Building height range, meters.
    pub building_height: (f64, f64),
    pub tree_radius: (usize, usize),
    pub water_radius: (usize, usize),
    /// Canopy height written to AGL inside tree blobs, meters.
    pub tree_height: f64,
}

/// Per-band `v * gain + bias`, applied after noise, then clamped to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralShift {
    pub gain: [f64; 4],
    pub bias: [f64; 4],
}

impl SpectralShift {
    pub fn identity() -> Self {
        Self { gain: [1.0; 4], bias: [0.0; 4] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub gsd: f64,
    /// Indexed by class code: ground, tree, building, water.
    pub class_spectra: [ClassSpectrum; 4],
    pub layout: Layout,
    pub shift: SpectralShift,
}

impl Default for DomainSpec {
    /// Spectra where each index separates its own class: NDVI is high only
    /// on trees and NDWI only on water; buildings stand at least 5 m tall.
    fn default() -> Self {
        Self {
            width: 512,
            height: 512,
            seed: 1,
            gsd: 0.31,
            class_spectra: [
                ClassSpectrum { mean: [0.34, 0.32, 0.28, 0.38], sigma: 0.06, texture: 0.01 },
                ClassSpectrum { mean: [0.07, 0.12, 0.06, 0.52], sigma: 0.06, texture: 0.04 },
                ClassSpectrum { mean: [0.46, 0.44, 0.45, 0.44], sigma: 0.06, texture: 0.02 },
                ClassSpectrum { mean: [0.05, 0.14, 0.18, 0.03], sigma: 0.03, texture: 0.0 },
            ],
            layout: Layout {
                building_fraction: 0.15,
                tree_fraction: 0.2,
                water_fraction: 0.1,
                building_size: (12, 40),
                building_height: (5.0, 20.0),
                tree_radius: (6, 16),
                water_radius: (25, 60),
                tree_height: 1.0,
            },
            shift: SpectralShift::identity(),
        }
    }
}

impl DomainSpec {
    /// A nearby domain: slight illumination change and different layout.
    pub fn mild_shift(seed: u64) -> Self {
        let mut s = Self { seed, ..Self::default() };
        s.shift = SpectralShift { gain: [1.08, 1.05, 1.1, 0.95], bias: [0.02, 0.015, 0.02, -0.01] };
        s.class_spectra[GROUND as usize].mean = [0.37, 0.33, 0.29, 0.39];
        s.layout.building_fraction = 0.18;
        s.layout.tree_fraction = 0.17;
        s
    }

    /// A distant domain: different sensor response, arid ground, darker roofs
    /// and tall tree canopy.
    pub fn strong_shift(seed: u64) -> Self {
        let mut s = Self { seed, ..Self::default() };
        s.shift = SpectralShift { gain: [1.35, 1.2, 1.3, 0.8], bias: [0.06, 0.04, 0.07, -0.02] };
        s.class_spectra[GROUND as usize].mean = [0.45, 0.36, 0.26, 0.42];
        s.class_spectra[GROUND as usize].texture = 0.04;
        s.class_spectra[BUILDING as usize].mean = [0.22, 0.22, 0.25, 0.23];
        s.class_spectra[TREE as usize].mean = [0.1, 0.14, 0.08, 0.48];
        s.layout.building_fraction = 0.22;
        s.layout.tree_fraction = 0.12;
        s.layout.water_fraction = 0.08;
        s.layout.tree_height = 6.0;
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::param("domain extent must be non-empty"));
        }
        let l = &self.layout;
        let fractions = [l.building_fraction, l.tree_fraction, l.water_fraction];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || fractions.iter().sum::<f64>() > 1.0 {
            return Err(Error::param(format!("class fractions {fractions:?} must lie in [0,1] and sum to at most 1")));
        }
        for (name, (lo, hi)) in
            [("building_size", l.building_size), ("tree_radius", l.tree_radius), ("water_radius", l.water_radius)]
        {
            if lo == 0 || lo > hi {
                return Err(Error::param(format!("{name} range ({lo}, {hi}) is invalid")));
            }
        }
        if !(l.building_height.0 > 0.0 && l.building_height.0 <= l.building_height.1) || l.tree_height < 0.0 {
            return Err(Error::param("height ranges must be positive and ordered"));
        }
        if self.class_spectra.iter().any(|c| c.sigma < 0.0 || c.texture < 0.0) {
            return Err(Error::param("noise and texture amplitudes must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    /// Normalized R, G, B, NIR reflectance.
    pub rgbn: MultibandRaster,
    /// Above-ground height in meters.
    pub agl: MultibandRaster,
    pub labels: LabelMap,
}

pub fn generate_domain(spec: &DomainSpec, n_scenes: usize) -> Result<Vec<SyntheticScene>> {
    spec.validate()?;
    (0..n_scenes).map(|i| generate_scene(spec, i)).collect()
}

/// Scene `index` of the domain; depends only on `(spec, index)`.
pub fn generate_scene(spec: &DomainSpec, index: usize) -> Result<SyntheticScene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, index as u64));
    let (w, h) = (spec.width, spec.height);
    let n = w * h;
    let mut classes = vec![GROUND; n];
    let mut agl = vec![0f32; n];
    let l = &spec.layout;

    let target = |f: f64| (f * n as f64).round() as usize;
    paint_discs(&mut rng, &mut classes, w, h, WATER, target(l.water_fraction), l.water_radius, |_| {});
    let mut painted = 0;
    let mut attempts = 0;
    while painted < target(l.building_fraction) && attempts < MAX_SHAPES {
        attempts += 1;
        let bw = rng.random_range(l.building_size.0..=l.building_size.1).min(w);
        let bh = rng.random_range(l.building_size.0..=l.building_size.1).min(h);
        let x0 = rng.random_range(0..=w - bw);
        let y0 = rng.random_range(0..=h - bh);
        let height = rng.random_range(l.building_height.0..=l.building_height.1) as f32;
        'rect: for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                let p = y * w + x;
                if classes[p] == GROUND {
                    classes[p] = BUILDING;
                    agl[p] = height;
                    painted += 1;
                    if painted >= target(l.building_fraction) {
                        break 'rect;
                    }
                }
            }
        }
    }
    let tree_height = l.tree_height as f32;
    paint_discs(&mut rng, &mut classes, w, h, TREE, target(l.tree_fraction), l.tree_radius, |p| agl[p] = tree_height);

    let mut planes = vec![vec![0f32; n]; 4];
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let spectrum = &spec.class_spectra[classes[p] as usize];
            let checker = if (x + y) % 2 == 0 { 1.0 } else { -1.0 };
            for (b, plane) in planes.iter_mut().enumerate() {
                let noise: f64 = if spectrum.sigma > 0.0 { StandardNormal.sample(&mut rng) } else { 0.0 };
                let v = spectrum.mean[b] + spectrum.sigma * noise + spectrum.texture * checker;
                plane[p] = (v * spec.shift.gain[b] + spec.shift.bias[b]).clamp(0.0, 1.0) as f32;
            }
        }
    }
    let roles = [BandRole::Red, BandRole::Green, BandRole::Blue, BandRole::Nir];
    let rgbn = MultibandRaster::from_planes(w, h, roles.into_iter().zip(planes).collect())?
        .with_normalized(true)
        .with_gsd(Some(spec.gsd));
    let agl = MultibandRaster::new(w, h, vec![BandRole::Agl], RasterData::F32(agl))?.with_gsd(Some(spec.gsd));
    Ok(SyntheticScene { rgbn, agl, labels: LabelMap::new(w, h, classes)? })
}

const MAX_SHAPES: usize = 100_000;

/// Paints discs of `class` over ground pixels until `target` pixels carry it.
#[allow(clippy::too_many_arguments)]
fn paint_discs(
    rng: &mut ChaCha8Rng,
    classes: &mut [u8],
    w: usize,
    h: usize,
    class: u8,
    target: usize,
    radius: (usize, usize),
    mut on_paint: impl FnMut(usize),
) {
    let mut painted = 0;
    let mut attempts = 0;
    while painted < target && attempts < MAX_SHAPES {
        attempts += 1;
        let r = rng.random_range(radius.0..=radius.1) as i64;
        let cx = rng.random_range(0..w) as i64;
        let cy = rng.random_range(0..h) as i64;
        for y in (cy - r).max(0)..=(cy + r).min(h as i64 - 1) {
            for x in (cx - r).max(0)..=(cx + r).min(w as i64 - 1) {
                if (x - cx).pow(2) + (y - cy).pow(2) > r * r {
                    continue;
                }
                let p = y as usize * w + x as usize;
                if classes[p] == GROUND {
                    classes[p] = class;
                    on_paint(p);
                    painted += 1;
                    if painted >= target {
                        return;
                    }
                }
            }
        }
    }
}
