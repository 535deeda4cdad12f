use proptest::prelude::*;

use xferkit_core::raster::{
    compute_truncation_bounds, merge_probability_patches, normalize_truncate, plan_tiles, BandBounds, ProbabilityPatch,
    F32_NODATA,
};
use xferkit_core::{BandRole, LabelMap, MultibandRaster, ProbabilityMap, RasterData, Window, N_CLASSES, VOID};

fn red_band(values: Vec<u16>) -> MultibandRaster {
    MultibandRaster::new(values.len(), 1, vec![BandRole::Red], RasterData::U16(values)).unwrap()
}

#[test]
fn ramp_bounds_cut_two_percent_each_side() {
    let r = red_band((0..100).collect());
    let b = compute_truncation_bounds(&[&r], BandRole::Red, 2.0, 2.0).unwrap();
    assert_eq!((b.lo, b.hi), (2.0, 97.0));
}

#[test]
fn bounds_pool_every_raster() {
    let a = red_band((0..50).collect());
    let b = red_band((50..100).collect());
    let pooled = compute_truncation_bounds(&[&a, &b], BandRole::Red, 2.0, 2.0).unwrap();
    assert_eq!((pooled.lo, pooled.hi), (2.0, 97.0));
}

#[test]
fn nodata_is_excluded_and_marked() {
    let r = red_band(vec![0, 10, 20, 30]).with_nodata(Some(0.0));
    let b = compute_truncation_bounds(&[&r], BandRole::Red, 0.0, 0.0).unwrap();
    assert_eq!((b.lo, b.hi), (10.0, 30.0));
    let mut bounds = BandBounds::new();
    bounds.insert(BandRole::Red, b);
    let out = normalize_truncate(&r, &bounds, &[BandRole::Red]).unwrap();
    assert_eq!(out.data(), &RasterData::F32(vec![F32_NODATA as f32, 0.0, 0.5, 1.0]));
}

#[test]
fn height_band_passes_through_in_meters() {
    let r = MultibandRaster::from_planes(2, 1, vec![(BandRole::Red, vec![0.0, 4.0]), (BandRole::Agl, vec![3.5, 12.0])])
        .unwrap();
    let mut bounds = BandBounds::new();
    bounds.insert(BandRole::Red, compute_truncation_bounds(&[&r], BandRole::Red, 0.0, 0.0).unwrap());
    let out = normalize_truncate(&r, &bounds, &[BandRole::Red]).unwrap();
    assert_eq!(out.band_f32(1), vec![3.5, 12.0]);
    assert_eq!(out.band_f32(0), vec![0.0, 1.0]);
}

#[test]
fn crop_keeps_metadata() {
    let r = MultibandRaster::new(3, 2, vec![BandRole::Red, BandRole::Nir], RasterData::U8((0..12).collect()))
        .unwrap()
        .with_nodata(Some(0.0))
        .with_gsd(Some(2.0));
    let c = r.crop(&Window { x: 1, y: 0, width: 2, height: 2 }).unwrap();
    assert_eq!(c.data(), &RasterData::U8(vec![1, 2, 4, 5, 7, 8, 10, 11]));
    assert_eq!((c.nodata(), c.gsd(), c.band_roles()), (Some(0.0), Some(2.0), r.band_roles()));
    assert!(r.crop(&Window { x: 2, y: 0, width: 2, height: 1 }).is_err());
}

proptest! {
    #[test]
    fn normalization_is_monotone_and_bounded(values in prop::collection::vec(0u16..5000, 2..300), lo in 0.0f64..10.0, hi in 0.0f64..10.0) {
        let r = red_band(values.clone());
        let b = compute_truncation_bounds(&[&r], BandRole::Red, lo, hi).unwrap();
        prop_assert!(b.lo <= b.hi);
        let mut bounds = BandBounds::new();
        bounds.insert(BandRole::Red, b);
        let out = normalize_truncate(&r, &bounds, &[BandRole::Red]).unwrap().band_f32(0);
        for i in 0..values.len() {
            prop_assert!((0.0..=1.0).contains(&out[i]));
            for j in 0..values.len() {
                if values[i] <= values[j] {
                    prop_assert!(out[i] <= out[j]);
                }
            }
        }
    }

    #[test]
    fn integer_and_float_bounds_agree(values in prop::collection::vec(0u16..1000, 1..400), lo in 0.0f64..20.0, hi in 0.0f64..20.0) {
        let ints = red_band(values.clone());
        let floats = MultibandRaster::from_planes(values.len(), 1, vec![(BandRole::Red, values.iter().map(|&v| v as f32).collect())]).unwrap();
        let a = compute_truncation_bounds(&[&ints], BandRole::Red, lo, hi).unwrap();
        let b = compute_truncation_bounds(&[&floats], BandRole::Red, lo, hi).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn tiles_cover_every_pixel(w in 1usize..1500, h in 1usize..1500, patch in 1usize..600, overlap in 0.0f64..0.95) {
        let plan = plan_tiles(w, h, patch, overlap).unwrap();
        let xs: Vec<(usize, usize)> = plan.windows.iter().filter(|win| win.y == 0).map(|win| (win.x, win.width)).collect();
        let ys: Vec<(usize, usize)> = plan.windows.iter().filter(|win| win.x == 0).map(|win| (win.y, win.height)).collect();
        prop_assert_eq!(plan.windows.len(), xs.len() * ys.len());
        for win in &plan.windows {
            prop_assert!(win.x + win.width <= w && win.y + win.height <= h);
            prop_assert_eq!(win.width, patch.min(w));
            prop_assert_eq!(win.height, patch.min(h));
        }
        for axis in [(&xs, w), (&ys, h)] {
            let (spans, dim) = axis;
            let mut reach = 0;
            for &(o, len) in spans.iter() {
                prop_assert!(o <= reach);
                reach = reach.max(o + len);
            }
            prop_assert_eq!(reach, dim);
        }
        prop_assert_eq!(plan.undersized, w < patch || h < patch);
    }

    #[test]
    fn merge_ignores_patch_order(seed in any::<u64>(), w in 4usize..40, h in 4usize..40, patch in 2usize..20) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let plan = plan_tiles(w, h, patch, 0.5).unwrap();
        let mut patches: Vec<ProbabilityPatch> = plan.windows.iter().map(|win| {
            let n = win.pixels();
            let mut probs = vec![0f32; n * N_CLASSES];
            for p in 0..n {
                let raw: Vec<f32> = (0..N_CLASSES).map(|_| rng.random_range(0.0..1.0)).collect();
                let s: f32 = raw.iter().sum();
                for c in 0..N_CLASSES {
                    probs[c * n + p] = raw[c] / s;
                }
            }
            ProbabilityPatch { window: *win, probs }
        }).collect();
        let a = merge_probability_patches(w, h, &patches).unwrap();
        patches.reverse();
        let b = merge_probability_patches(w, h, &patches).unwrap();
        prop_assert_eq!(a.uncovered, 0);
        prop_assert!(a.probs.probs().iter().zip(b.probs.probs()).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert_eq!(a.labels, b.labels);
    }
}

#[test]
fn uncovered_pixels_are_void() {
    let patch =
        ProbabilityPatch { window: Window { x: 0, y: 0, width: 1, height: 1 }, probs: vec![0.1, 0.6, 0.2, 0.1] };
    let out = merge_probability_patches(2, 1, &[patch]).unwrap();
    assert_eq!(out.uncovered, 1);
    assert_eq!(out.labels.codes(), &[1, VOID]);
}

#[test]
fn merge_rejects_unnormalized_patches() {
    let patch =
        ProbabilityPatch { window: Window { x: 0, y: 0, width: 1, height: 1 }, probs: vec![0.5, 0.6, 0.0, 0.0] };
    assert!(merge_probability_patches(1, 1, &[patch]).is_err());
}

#[test]
fn overlap_votes_average() {
    let a = ProbabilityPatch { window: Window { x: 0, y: 0, width: 1, height: 1 }, probs: vec![0.6, 0.4, 0.0, 0.0] };
    let b = ProbabilityPatch { window: Window { x: 0, y: 0, width: 1, height: 1 }, probs: vec![0.0, 0.4, 0.6, 0.0] };
    let out = merge_probability_patches(1, 1, &[a, b]).unwrap();
    assert_eq!(out.labels.codes(), &[1]);
    assert!((out.probs.prob(1, 0) - 0.4).abs() < 1e-7);
}

#[test]
fn probability_map_roundtrips_through_raster() {
    let pm = ProbabilityMap::new(2, 1, vec![0.7, 0.0, 0.1, 0.0, 0.1, 0.0, 0.1, 0.0], vec![1, 0]).unwrap();
    let back = ProbabilityMap::from_raster(&pm.to_raster()).unwrap();
    assert_eq!(back.to_label_map(), pm.to_label_map());
    assert_eq!(pm.to_label_map().codes(), &[0, VOID]);
}

#[test]
fn label_map_rejects_out_of_schema_codes() {
    assert!(LabelMap::new(2, 1, vec![0, 7]).is_err());
    assert!(LabelMap::new(2, 1, vec![3, VOID]).is_ok());
}
