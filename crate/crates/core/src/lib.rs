//! Region-level layout annotations from semantically marked-up editions,
//! and the metrics used to evaluate layout-analysis models against them.
//!
//! The pipeline runs in stages that communicate through documented files:
//! [`tei`] extracts per-page region transcripts, [`ocr`] ingests baseline OCR,
//! [`align`] force-aligns the two, [`annotate`] turns aligned lines into
//! region geometry, and [`metrics`] / [`selftrain`] evaluate predictions.

pub mod align;
pub mod annotate;
pub mod cli;
pub mod config;
pub mod error;
pub mod geom;
pub mod metrics;
pub mod ocr;
pub mod region;
pub mod selftrain;
pub mod tei;
mod xml;

pub use error::{Error, Result};
pub use geom::{BBox, Point, Polygon};
pub use region::RegionType;
