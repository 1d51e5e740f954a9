//! Evaluation: pixel confusion metrics, word- and region-level retrieval,
//! detection AP and metric correlation.

mod ap;
mod correlation;
mod pixel;
mod raster;
mod retrieval;

pub use ap::{detection_ap, detections_from, gt_boxes, iou_thresholds, ApResult, ClassAp, Detection, GtBox};
pub use correlation::{least_squares, pearson, scatter_csv, scatter_svg, Correlation, ScatterPoint};
pub use pixel::{class_name, pixel_metrics, ClassPixelMetrics, ConfusionTally, PixelMetrics};
pub use raster::{rasterize, LabelGrid};
pub use retrieval::{
    merge_per_type, page_presence, pair_pages, region_level_retrieval, word_level_retrieval, PageRetrieval,
    PerType, RegionGate, RegionLevel, RetrievalCounts, WORD_INSIDE_FRACTION,
};

use crate::annotate::PageAnnotation;
use crate::error::Result;
use crate::region::NUM_LABELS;

/// Confusion tally of one reference/prediction page pair.
pub fn tally_page(reference: &PageAnnotation, predicted: &PageAnnotation, scale: u32) -> Result<ConfusionTally> {
    let (r, p) = (rasterize(reference, scale)?, rasterize(predicted, scale)?);
    let mut t = ConfusionTally::new(NUM_LABELS);
    t.add_grids(&r, &p)?;
    Ok(t)
}
