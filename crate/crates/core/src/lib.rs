//! Label-free transferability assessment for land-cover segmentation models.
//!
//! A model's prediction on an unlabeled target scene is scored against
//! pseudo-labels derived from spectral and height indices (NDVI, NDWI and a
//! DSM top-hat), giving an "index-based mIoU" that tracks the model's real
//! accuracy on that domain. Around that core sit the raster substrate
//! (normalization, label remapping, tiling and overlap voting), evaluation
//! metrics, a GLCM + random-forest reference classifier, a synthetic domain
//! generator and the XRAS raster container.

pub mod error;
pub mod indices;
pub mod io;
pub mod metrics;
pub mod parallel;
pub mod raster;
pub mod rf;
pub mod seed;
pub mod synth;
pub mod transfer;

pub use error::{Error, Result};
pub use indices::{IndexKind, IndexRaster, MorphParams, ThresholdSet, ThresholdSource};
pub use metrics::{ConfusionMatrix, CorrelationStats, EvalResult};
pub use raster::{
    BandRole, ClassLookup, Dtype, LabelMap, MultibandRaster, ProbabilityMap, RasterData, TilingPlan, Window, N_CLASSES,
    VOID,
};
pub use transfer::{ModelRanking, ScoreKind, TransferReport};
