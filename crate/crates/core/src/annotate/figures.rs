use serde::{Deserialize, Serialize};

use crate::geom::BBox;

/// One box from an external figure detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionCandidate {
    pub bbox: BBox,
    pub score: f64,
    #[serde(rename = "class")]
    pub class_label: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FigureSelection {
    /// Accepted candidates in acceptance order.
    pub selected: Vec<DetectionCandidate>,
    /// Fewer than `k` non-overlapping candidates were available.
    pub under_detected: bool,
}

/// Take up to `k` candidates by descending score, skipping any that overlap
/// an already accepted box. Overlap is positive intersection area, or IoU
/// above `iou_threshold` when one is given. Equal scores go to the larger
/// box, then the one nearer the top, then the left.
pub fn greedy_figure_select(candidates: &[DetectionCandidate], k: usize, iou_threshold: Option<f64>) -> FigureSelection {
    let mut order: Vec<&DetectionCandidate> = candidates.iter().collect();
    order.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(b.bbox.area().total_cmp(&a.bbox.area()))
            .then(a.bbox.y0.total_cmp(&b.bbox.y0))
            .then(a.bbox.x0.total_cmp(&b.bbox.x0))
    });
    let overlaps = |a: &BBox, b: &BBox| match iou_threshold {
        Some(t) => a.iou(b) > t,
        None => a.intersection_area(b) > 0.0,
    };
    let mut selected: Vec<DetectionCandidate> = Vec::new();
    for c in order {
        if selected.len() == k {
            break;
        }
        if selected.iter().all(|s| !overlaps(&s.bbox, &c.bbox)) {
            selected.push(c.clone());
        }
    }
    FigureSelection {
        under_detected: selected.len() < k,
        selected,
    }
}
