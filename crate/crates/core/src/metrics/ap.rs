use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::annotate::PageAnnotation;
use crate::geom::BBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtBox {
    pub page: String,
    pub class: String,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub page: String,
    pub class: String,
    pub bbox: BBox,
    pub score: f64,
}

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn iou_thresholds() -> Vec<f64> {
    (0..10).map(|k| (50 + 5 * k) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub gt_count: usize,
    pub detections: usize,
    /// AP at each IoU threshold.
    pub ap_at: Vec<f64>,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApResult {
    /// Classes with at least one ground-truth box.
    pub per_class: BTreeMap<String, ClassAp>,
    /// Mean AP over `per_class`; `None` when no class has ground truth.
    pub map: Option<f64>,
    /// Classes that only appear among detections.
    pub without_ground_truth: Vec<String>,
}

/// 101-point interpolated AP from detections already sorted by score.
fn interpolated_ap(hits: &[bool], gt_count: usize) -> f64 {
    let mut tp = 0usize;
    let mut curve = Vec::with_capacity(hits.len());
    for (k, &h) in hits.iter().enumerate() {
        tp += usize::from(h);
        curve.push((tp as f64 / gt_count as f64, tp as f64 / (k + 1) as f64));
    }
    // Precision envelope: best precision at any recall >= r.
    for k in (0..curve.len().saturating_sub(1)).rev() {
        curve[k].1 = curve[k].1.max(curve[k + 1].1);
    }
    let mut sum = 0.0;
    let mut idx = 0;
    for step in 0..=100 {
        let r = step as f64 / 100.0;
        while idx < curve.len() && curve[idx].0 < r - 1e-12 {
            idx += 1;
        }
        if idx < curve.len() {
            sum += curve[idx].1;
        }
    }
    sum / 101.0
}

/// Whether each detection (in the given order) matches a ground-truth box.
fn match_hits(gts: &[&GtBox], dets: &[&Detection], tau: f64) -> Vec<bool> {
    let mut by_page: BTreeMap<&str, Vec<(&BBox, bool)>> = BTreeMap::new();
    for g in gts {
        by_page.entry(g.page.as_str()).or_default().push((&g.bbox, false));
    }
    dets.iter()
        .map(|d| {
            let Some(cands) = by_page.get_mut(d.page.as_str()) else {
                return false;
            };
            let best = cands
                .iter()
                .enumerate()
                .filter(|(_, (_, used))| !used)
                .map(|(i, (b, _))| (i, b.iou(&d.bbox)))
                .filter(|(_, iou)| *iou >= tau)
                .fold(None::<(usize, f64)>, |acc, x| match acc {
                    Some(a) if a.1 >= x.1 => Some(a),
                    _ => Some(x),
                });
            match best {
                Some((i, _)) => {
                    cands[i].1 = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

/// Detection AP averaged over IoU thresholds 0.50:0.95, per class and overall.
/// Detections are matched in descending score order (ties keep input order)
/// to the unmatched ground-truth box of highest IoU.
pub fn detection_ap(gt: &[GtBox], detections: &[Detection]) -> ApResult {
    let gt_classes: BTreeSet<&str> = gt.iter().map(|g| g.class.as_str()).collect();
    let det_classes: BTreeSet<&str> = detections.iter().map(|d| d.class.as_str()).collect();
    let taus = iou_thresholds();
    let mut per_class = BTreeMap::new();
    for class in &gt_classes {
        let gts: Vec<&GtBox> = gt.iter().filter(|g| g.class == *class).collect();
        let mut dets: Vec<&Detection> = detections.iter().filter(|d| d.class == *class).collect();
        dets.sort_by(|a, b| b.score.total_cmp(&a.score));
        let ap_at: Vec<f64> = taus
            .iter()
            .map(|&t| interpolated_ap(&match_hits(&gts, &dets, t), gts.len())).collect();
        let ap = ap_at.iter().sum::<f64>() / ap_at.len() as f64;
        per_class.insert(
            class.to_string(),
            ClassAp {
                gt_count: gts.len(),
                detections: dets.len(),
                ap_at,
                ap,
            },
        );
    }
    let map = (!per_class.is_empty())
        .then(|| per_class.values().map(|c: &ClassAp| c.ap).sum::<f64>() / per_class.len() as f64);
    ApResult {
        per_class,
        map,
        without_ground_truth: det_classes.difference(&gt_classes).map(|s| s.to_string()).collect(),
    }
}

/// Ground-truth boxes (polygon hulls) of annotation pages.
pub fn gt_boxes(pages: &[PageAnnotation]) -> Vec<GtBox> {
    pages
        .iter()
        .flat_map(|p| {
            p.regions.iter().map(|r| GtBox {
                page: p.image.clone(),
                class: r.region_type.to_string(),
                bbox: r.bbox(),
            })
        })
        .collect()
}

/// Scored prediction regions as detections; unscored regions get 1.0.
pub fn detections_from(pages: &[PageAnnotation]) -> Vec<Detection> {
    pages
        .iter()
        .flat_map(|p| {
            p.regions.iter().map(|r| Detection {
                page: p.image.clone(),
                class: r.region_type.to_string(),
                bbox: r.bbox(),
                score: r.score.unwrap_or(1.0),
            })
        })
        .collect()
}
