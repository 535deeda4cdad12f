//! GLCM texture features and a random-forest pixel classifier: the
//! traditional baseline whose transferability the toolkit assesses.

mod codec;
mod dataset;
mod forest;
mod glcm;

pub use codec::{decode_forest, encode_forest, FOREST_MAGIC, FOREST_VERSION};
pub use dataset::{build_features, sample_pixels, PixelDataset};
pub use forest::{rf_predict, rf_train, tree_seed, Forest, Node, RfHyperparams, Tree};
pub use glcm::{
    glcm_features, quantize, quantize_luminance, window_stats, CoOccurrence, GlcmParams, GlcmStat, GlcmStats,
    GLCM_STATS,
};
