//! File formats: the XRAS raster container and canonical JSON / CSV reports.

mod report;
mod xras;

pub use report::{format_float, read_json, to_canonical_json, write_csv, write_report};
pub use xras::{
    decode_xras, encode_xras, read_label_map, read_probability_map, read_xras, write_xras, XRAS_FIXED_HEADER_LEN,
    XRAS_MAGIC, XRAS_VERSION,
};
