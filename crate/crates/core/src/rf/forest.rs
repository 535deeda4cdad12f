//! CART random forest with Gini splits, bootstrap resampling and per-node
//! feature subsampling.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::PixelDataset;
use crate::raster::{MultibandRaster, ProbabilityMap, N_CLASSES};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfHyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    /// Pixels drawn for training; used by callers that sample the dataset.
    pub n_samples: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for RfHyperparams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            max_depth: 20,
            min_samples_leaf: 1000,
            min_samples_split: 4000,
            n_samples: 4_000_000,
            features_per_split: None,
            seed: 0,
        }
    }
}

impl RfHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::param("a forest needs at least one tree"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::param("min_samples_leaf must be at least 1"));
        }
        if self.min_samples_split < 2 * self.min_samples_leaf {
            return Err(Error::param(format!(
                "min_samples_split ({}) must be at least twice min_samples_leaf ({})",
                self.min_samples_split, self.min_samples_leaf
            )));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::param("features_per_split must be at least 1"));
        }
        Ok(())
    }

    fn mtry(&self, d: usize) -> usize {
        self.features_per_split.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).clamp(1, d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
    Leaf { counts: [u32; N_CLASSES] },
}

/// Nodes in preorder; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    #[inline]
    pub fn leaf_counts(&self, x: &[f32]) -> &[u32; N_CLASSES] {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if (x[*feature as usize] as f64) <= *threshold { *left } else { *right } as usize;
                }
                Node::Leaf { counts } => return counts,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub d: usize,
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Mean of the leaf class frequencies over all trees, summed in tree order.
    pub fn predict_proba(&self, x: &[f32]) -> [f64; N_CLASSES] {
        let mut acc = [0f64; N_CLASSES];
        for t in &self.trees {
            let counts = t.leaf_counts(x);
            let total: u32 = counts.iter().sum();
            for c in 0..N_CLASSES {
                acc[c] += counts[c] as f64 / total as f64;
            }
        }
        acc.map(|v| v / self.trees.len() as f64)
    }

    /// Argmax with ties to the lowest class.
    pub fn predict_class(&self, x: &[f32]) -> u8 {
        let p = self.predict_proba(x);
        let mut best = 0;
        for c in 1..N_CLASSES {
            if p[c] > p[best] {
                best = c;
            }
        }
        best as u8
    }
}

/// Seed of tree `index`; independent of the forest size, so a forest's
/// first `k` trees do not depend on how many trees follow.
pub fn tree_seed(master: u64, index: u64) -> u64 {
    crate::seed::derive_seed(master, index)
}

pub fn rf_train(data: &PixelDataset, hp: &RfHyperparams) -> Result<Forest> {
    hp.validate()?;
    if data.is_empty() {
        return Err(Error::NoValidSamples);
    }
    if data.len() < hp.min_samples_split {
        log::warn!(
            "{} samples is below min_samples_split ({}); every tree will be a single leaf",
            data.len(),
            hp.min_samples_split
        );
    }
    let trees = (0..hp.n_trees).into_par_iter().map(|i| grow_tree(data, hp, tree_seed(hp.seed, i as u64))).collect();
    Ok(Forest { d: data.d, trees })
}

struct Grower<'a> {
    data: &'a PixelDataset,
    hp: &'a RfHyperparams,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    scratch: Vec<(f32, u8)>,
}

fn grow_tree(data: &PixelDataset, hp: &RfHyperparams, seed: u64) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = data.len();
    let mut sample: Vec<u32> = (0..n).map(|_| rng.random_range(0..n as u32)).collect();
    let mut g = Grower { data, hp, mtry: hp.mtry(data.d), rng, nodes: Vec::new(), scratch: Vec::new() };
    g.build(&mut sample, 0);
    Tree { nodes: g.nodes }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Grower<'_> {
    fn build(&mut self, idx: &mut [u32], depth: usize) -> u32 {
        let mut counts = [0u32; N_CLASSES];
        for &i in idx.iter() {
            counts[self.data.labels[i as usize] as usize] += 1;
        }
        let id = self.nodes.len() as u32;
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.hp.max_depth || idx.len() < self.hp.min_samples_split {
            self.nodes.push(Node::Leaf { counts });
            return id;
        }
        let Some(split) = self.best_split(idx) else {
            self.nodes.push(Node::Leaf { counts });
            return id;
        };

        self.nodes.push(Node::Split { feature: split.feature as u32, threshold: split.threshold, left: 0, right: 0 });
        let d = self.data.d;
        let feats = &self.data.features;
        let mid = partition(idx, |i| (feats[i as usize * d + split.feature] as f64) <= split.threshold);
        let (l, r) = idx.split_at_mut(mid);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        if let Node::Split { left: ls, right: rs, .. } = &mut self.nodes[id as usize] {
            *ls = left;
            *rs = right;
        }
        id
    }

    /// Lowest weighted Gini over the sampled features; ties keep the lower
    /// feature index, then the lower threshold.
    fn best_split(&mut self, idx: &[u32]) -> Option<SplitChoice> {
        let d = self.data.d;
        let mut features: Vec<usize> = index::sample(&mut self.rng, d, self.mtry).into_vec();
        features.sort_unstable();
        let n = idx.len();
        let leaf = self.hp.min_samples_leaf;
        let mut total = [0u64; N_CLASSES];
        for &i in idx {
            total[self.data.labels[i as usize] as usize] += 1;
        }

        let mut best: Option<SplitChoice> = None;
        for f in features {
            self.scratch.clear();
            self.scratch
                .extend(idx.iter().map(|&i| (self.data.features[i as usize * d + f], self.data.labels[i as usize])));
            self.scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0u64; N_CLASSES];
            for k in 0..n - 1 {
                left[self.scratch[k].1 as usize] += 1;
                let (v, next) = (self.scratch[k].0, self.scratch[k + 1].0);
                let n_left = k + 1;
                if v == next || n_left < leaf || n - n_left < leaf {
                    continue;
                }
                let impurity = weighted_gini(&left, &total, n_left as u64, n as u64);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(SplitChoice { feature: f, threshold: (v as f64 + next as f64) / 2.0, impurity });
                }
            }
        }
        best
    }
}

/// `sum over children of n_c * gini_c`, i.e. `n_c - sum_k k^2 / n_c`.
#[inline]
fn weighted_gini(left: &[u64; N_CLASSES], total: &[u64; N_CLASSES], n_left: u64, n: u64) -> f64 {
    let n_right = n - n_left;
    let mut sl = 0u64;
    let mut sr = 0u64;
    for c in 0..N_CLASSES {
        sl += left[c] * left[c];
        let r = total[c] - left[c];
        sr += r * r;
    }
    (n_left as f64 - sl as f64 / n_left as f64) + (n_right as f64 - sr as f64 / n_right as f64)
}

/// In-place partition; returns the count of elements satisfying `pred`.
fn partition(v: &mut [u32], pred: impl Fn(u32) -> bool) -> usize {
    let mut k = 0;
    for i in 0..v.len() {
        if pred(v[i]) {
            v.swap(i, k);
            k += 1;
        }
    }
    k
}

/// Per-pixel class probabilities for a feature raster. Pixels with nodata
/// in any feature get zero weight.
pub fn rf_predict(forest: &Forest, features: &MultibandRaster) -> Result<ProbabilityMap> {
    if features.bands() != forest.d {
        return Err(Error::DimensionMismatch {
            expected: format!("{} features", forest.d),
            actual: format!("{} bands", features.bands()),
        });
    }
    let (w, h) = features.dims();
    let n = w * h;
    let d = forest.d;
    let rows: Vec<(Vec<[f32; N_CLASSES]>, Vec<u32>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut x_buf = vec![0f32; d];
            let mut probs = Vec::with_capacity(w);
            let mut weight = Vec::with_capacity(w);
            for x in 0..w {
                let p = y * w + x;
                let mut ok = true;
                for (b, slot) in x_buf.iter_mut().enumerate() {
                    let v = features.sample(b, p);
                    ok &= !features.is_nodata_value(v);
                    *slot = v as f32;
                }
                if ok {
                    probs.push(forest.predict_proba(&x_buf).map(|v| v as f32));
                    weight.push(1);
                } else {
                    probs.push([0.0; N_CLASSES]);
                    weight.push(0);
                }
            }
            (probs, weight)
        })
        .collect();

    let mut probs = vec![0f32; n * N_CLASSES];
    let mut weight = Vec::with_capacity(n);
    for (y, (row, wrow)) in rows.into_iter().enumerate() {
        for (x, pr) in row.iter().enumerate() {
            for c in 0..N_CLASSES {
                probs[c * n + y * w + x] = pr[c];
            }
        }
        weight.extend(wrow);
    }
    ProbabilityMap::new(w, h, probs, weight)
}
