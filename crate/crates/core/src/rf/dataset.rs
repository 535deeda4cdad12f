//! Per-pixel feature stacks and training-sample selection.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::glcm::{glcm_features, GlcmParams};
use crate::raster::{BandRole, LabelMap, MultibandRaster, RasterData, F32_NODATA, N_CLASSES};
use crate::{Error, Result};

/// Stacks R, G, B, NIR, the optional normalized height band, and the six
/// GLCM statistics: 10 features without height, 11 with.
pub fn build_features(
    raster: &MultibandRaster,
    height: Option<&MultibandRaster>,
    glcm: &GlcmParams,
) -> Result<MultibandRaster> {
    let (w, h) = raster.dims();
    let mut planes: Vec<(BandRole, Vec<f32>)> = Vec::with_capacity(11);
    let mut invalid = vec![false; w * h];
    let mut take = |src: &MultibandRaster, band: usize, role: BandRole, planes: &mut Vec<(BandRole, Vec<f32>)>| {
        let mut plane = src.band_f32(band);
        for (p, v) in plane.iter_mut().enumerate() {
            if src.is_nodata_value(*v as f64) {
                invalid[p] = true;
                *v = F32_NODATA as f32;
            }
        }
        planes.push((role, plane));
    };
    for role in [BandRole::Red, BandRole::Green, BandRole::Blue, BandRole::Nir] {
        let b = raster.require_band(role)?;
        take(raster, b, role, &mut planes);
    }
    if let Some(hr) = height {
        if hr.dims() != raster.dims() {
            return Err(Error::dims(raster.dims(), hr.dims()));
        }
        let (b, _) = hr.height_band().ok_or_else(|| Error::MissingBand("dsm/agl".into()))?;
        take(hr, b, BandRole::Agl, &mut planes);
    }
    let texture = glcm_features(raster, glcm)?;
    for k in 0..texture.bands() {
        take(&texture, k, BandRole::Other, &mut planes);
    }

    let n = w * h;
    let roles: Vec<BandRole> = planes.iter().map(|(r, _)| *r).collect();
    let mut data = Vec::with_capacity(n * roles.len());
    for (_, mut plane) in planes {
        for (p, v) in plane.iter_mut().enumerate() {
            if invalid[p] {
                *v = F32_NODATA as f32;
            }
        }
        data.extend(plane);
    }
    let any_invalid = invalid.iter().any(|&b| b);
    Ok(MultibandRaster::new(w, h, roles, RasterData::F32(data))?
        .with_nodata(any_invalid.then_some(F32_NODATA))
        .with_normalized(true))
}

/// Row-major `n x d` feature matrix with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelDataset {
    pub d: usize,
    pub features: Vec<f32>,
    pub labels: Vec<u8>,
}

impl PixelDataset {
    pub fn new(d: usize, features: Vec<f32>, labels: Vec<u8>) -> Result<Self> {
        if d == 0 || features.len() != labels.len() * d {
            return Err(Error::param(format!(
                "feature matrix of {} values does not match {} rows x {d}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&c| c as usize >= N_CLASSES) {
            return Err(Error::InvalidLabel(*bad as u32));
        }
        Ok(Self { d, features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn class_counts(&self) -> [usize; N_CLASSES] {
        let mut c = [0; N_CLASSES];
        for &l in &self.labels {
            c[l as usize] += 1;
        }
        c
    }

    /// Replaces one feature column with zeros.
    pub fn drop_feature(&mut self, feature: usize) {
        for i in 0..self.len() {
            self.features[i * self.d + feature] = 0.0;
        }
    }
}

/// Draws up to `n_samples` labelled pixels without replacement.
///
/// Candidates are the non-void pixels whose features are all valid, pooled
/// over every scene. With `stratified` the draw is split evenly across the
/// classes present (capped by availability, remainder redistributed in
/// class order); otherwise it is uniform over the pool.
pub fn sample_pixels(
    scenes: &[(&MultibandRaster, &LabelMap)],
    n_samples: usize,
    seed: u64,
    stratified: bool,
) -> Result<PixelDataset> {
    let d = scenes.first().map(|(f, _)| f.bands()).ok_or_else(|| Error::param("no scenes to sample from"))?;
    let mut pool: Vec<(u32, u32)> = Vec::new();
    for (s, (feat, labels)) in scenes.iter().enumerate() {
        if feat.bands() != d {
            return Err(Error::param(format!("scene {s} has {} features, expected {d}", feat.bands())));
        }
        if feat.dims() != labels.dims() {
            return Err(Error::dims(labels.dims(), feat.dims()));
        }
        let bands: Vec<usize> = (0..d).collect();
        let valid = feat.valid_mask(&bands);
        pool.extend(
            labels
                .codes()
                .iter()
                .enumerate()
                .filter(|(p, &c)| (c as usize) < N_CLASSES && valid[*p])
                .map(|(p, _)| (s as u32, p as u32)),
        );
    }
    if pool.len() < n_samples {
        log::warn!("only {} labelled pixels available, fewer than the {n_samples} requested; using all", pool.len());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked: Vec<(u32, u32)> = if stratified {
        let mut by_class: [Vec<(u32, u32)>; N_CLASSES] = Default::default();
        for &(s, p) in &pool {
            by_class[scenes[s as usize].1.codes()[p as usize] as usize].push((s, p));
        }
        let quotas = stratified_quotas(by_class.each_ref().map(Vec::len), n_samples.min(pool.len()));
        let mut out = Vec::new();
        for (members, quota) in by_class.iter().zip(quotas) {
            out.extend(index::sample(&mut rng, members.len(), quota).into_iter().map(|i| members[i]));
        }
        out
    } else {
        let k = n_samples.min(pool.len());
        index::sample(&mut rng, pool.len(), k).into_iter().map(|i| pool[i]).collect()
    };

    let mut features = Vec::with_capacity(picked.len() * d);
    let mut labels = Vec::with_capacity(picked.len());
    for (s, p) in picked {
        let (feat, lab) = scenes[s as usize];
        features.extend((0..d).map(|b| feat.sample(b, p as usize) as f32));
        labels.push(lab.codes()[p as usize]);
    }
    PixelDataset::new(d, features, labels)
}

fn stratified_quotas(available: [usize; N_CLASSES], total: usize) -> [usize; N_CLASSES] {
    let mut quota = [0; N_CLASSES];
    let mut remaining = total;
    loop {
        let open: Vec<usize> = (0..N_CLASSES).filter(|&c| quota[c] < available[c]).collect();
        if remaining == 0 || open.is_empty() {
            return quota;
        }
        let share = (remaining / open.len()).max(1);
        for c in open {
            let add = share.min(available[c] - quota[c]).min(remaining);
            quota[c] += add;
            remaining -= add;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(n: usize, labels: Vec<u8>) -> (MultibandRaster, LabelMap) {
        let f = MultibandRaster::from_planes(
            n,
            1,
            vec![(BandRole::Other, (0..n).map(|i| i as f32).collect()), (BandRole::Other, vec![1.0; n])],
        )
        .unwrap();
        (f, LabelMap::new(n, 1, labels).unwrap())
    }

    #[test]
    fn exhaustive_draw_returns_every_labelled_pixel() {
        let (f, l) = scene(6, vec![0, 1, 255, 2, 3, 0]);
        let ds = sample_pixels(&[(&f, &l)], 5, 7, false).unwrap();
        assert_eq!(ds.len(), 5);
        let mut firsts: Vec<f32> = (0..5).map(|i| ds.row(i)[0]).collect();
        firsts.sort_by(f32::total_cmp);
        assert_eq!(firsts, vec![0.0, 1.0, 3.0, 4.0, 5.0]);
        assert!(!ds.labels.contains(&255));
    }

    #[test]
    fn oversized_request_samples_all() {
        let (f, l) = scene(4, vec![0, 1, 2, 255]);
        assert_eq!(sample_pixels(&[(&f, &l)], 100, 1, false).unwrap().len(), 3);
    }

    #[test]
    fn same_seed_same_dataset() {
        let labels: Vec<u8> = (0..500).map(|i| (i % 4) as u8).collect();
        let (f, l) = scene(500, labels);
        let a = sample_pixels(&[(&f, &l)], 100, 42, false).unwrap();
        let b = sample_pixels(&[(&f, &l)], 100, 42, false).unwrap();
        let c = sample_pixels(&[(&f, &l)], 100, 43, false).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn stratified_balances_classes() {
        let labels: Vec<u8> = (0..1000).map(|i| if i < 900 { 0 } else { 1 + (i % 3) as u8 }).collect();
        let (f, l) = scene(1000, labels);
        let ds = sample_pixels(&[(&f, &l)], 200, 3, true).unwrap();
        // minority classes are exhausted, the remainder goes to class 0
        assert_eq!(ds.class_counts(), [100, 34, 33, 33]);
        let ds = sample_pixels(&[(&f, &l)], 400, 3, true).unwrap();
        assert_eq!(ds.len(), 400);
        assert_eq!(ds.class_counts()[1], 34);
    }

    #[test]
    fn quotas_redistribute_shortfall() {
        assert_eq!(stratified_quotas([100, 5, 0, 100], 90), [43, 5, 0, 42]);
    }
}
