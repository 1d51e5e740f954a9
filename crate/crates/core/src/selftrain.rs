//! Picking predicted pages that are good enough to train on.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::{PageAnnotation, RegionGeometry};
use crate::error::{Error, Result};
use crate::geom::polygon_iou;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct SelectionPolicy {
    /// Inclusive: a pair at exactly this IoU matches.
    pub iou_threshold: f64,
    pub require_no_extra_predictions: bool,
    pub per_layout_cap: Option<usize>,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        SelectionPolicy {
            iou_threshold: 0.5,
            require_no_extra_predictions: true,
            per_layout_cap: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    NoPredictions,
    EmptyGroundTruth,
    UnmatchedGroundTruth,
    ExtraPredictions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedPage {
    pub page: String,
    pub signature: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SelectionReport {
    pub pages_seen: usize,
    pub selected: Vec<SelectedPage>,
    /// Selected pages per layout signature.
    pub layouts: BTreeMap<String, usize>,
    pub rejections: BTreeMap<RejectReason, usize>,
}

impl SelectionReport {
    fn recount(&mut self) {
        self.layouts.clear();
        for s in &self.selected {
            *self.layouts.entry(s.signature.clone()).or_default() += 1;
        }
    }
}

/// Sorted multiset of region types, e.g. `body+body+pageNum`.
pub fn layout_signature(page: &PageAnnotation) -> String {
    let mut types: Vec<&str> = page.regions.iter().map(|r| r.region_type.as_str()).collect();
    types.sort_unstable();
    types.join("+")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegionMatching {
    /// (gt index, prediction index, IoU)
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

/// One-to-one greedy matching of same-type regions by descending polygon IoU.
pub fn match_regions(gt: &[RegionGeometry], pred: &[RegionGeometry], threshold: f64) -> RegionMatching {
    let mut cands: Vec<(usize, usize, f64)> = Vec::new();
    for (i, g) in gt.iter().enumerate() {
        for (j, p) in pred.iter().enumerate() {
            if g.region_type == p.region_type {
                let iou = polygon_iou(&g.polygon, &p.polygon);
                if iou >= threshold {
                    cands.push((i, j, iou));
                }
            }
        }
    }
    cands.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let (mut gt_used, mut pred_used) = (vec![false; gt.len()], vec![false; pred.len()]);
    let mut pairs = Vec::new();
    for (i, j, iou) in cands {
        if !gt_used[i] && !pred_used[j] {
            gt_used[i] = true;
            pred_used[j] = true;
            pairs.push((i, j, iou));
        }
    }
    RegionMatching {
        pairs,
        unmatched_gt: (0..gt.len()).filter(|&i| !gt_used[i]).collect(),
        unmatched_pred: (0..pred.len()).filter(|&j| !pred_used[j]).collect(),
    }
}

/// Verdict for one page; `Ok(())` means selected.
pub fn judge_page(
    gt: &PageAnnotation,
    pred: Option<&PageAnnotation>,
    policy: &SelectionPolicy,
) -> std::result::Result<(), RejectReason> {
    let pred = pred.ok_or(RejectReason::NoPredictions)?;
    if gt.regions.is_empty() {
        return Err(RejectReason::EmptyGroundTruth);
    }
    let m = match_regions(&gt.regions, &pred.regions, policy.iou_threshold);
    if !m.unmatched_gt.is_empty() {
        return Err(RejectReason::UnmatchedGroundTruth);
    }
    if policy.require_no_extra_predictions && !m.unmatched_pred.is_empty() {
        return Err(RejectReason::ExtraPredictions);
    }
    Ok(())
}

/// Judge every ground-truth page against its prediction (paired by image id)
/// and apply the per-layout cap when the policy sets one.
pub fn select_pages(
    gt: &[PageAnnotation],
    pred: &[PageAnnotation],
    policy: &SelectionPolicy,
    seed: u64,
) -> Result<SelectionReport> {
    if !(0.0..=1.0).contains(&policy.iou_threshold) {
        return Err(Error::Config("iou-threshold must lie in [0, 1]".into()));
    }
    let by_id: BTreeMap<&str, &PageAnnotation> = pred.iter().map(|p| (p.image.as_str(), p)).collect();
    let verdicts: Vec<_> = gt
        .par_iter()
        .map(|g| judge_page(g, by_id.get(g.image.as_str()).copied(), policy))
        .collect();
    let mut report = SelectionReport {
        pages_seen: gt.len(),
        ..Default::default()
    };
    for (g, v) in gt.iter().zip(verdicts) {
        match v {
            Ok(()) => report.selected.push(SelectedPage {
                page: g.image.clone(),
                signature: layout_signature(by_id[g.image.as_str()]),
            }),
            Err(r) => *report.rejections.entry(r).or_default() += 1,
        }
    }
    report.recount();
    match policy.per_layout_cap {
        Some(cap) => balance_layouts(&report, cap, seed),
        None => Ok(report),
    }
}

/// Keep at most `cap` pages per layout signature, sampled uniformly with a
/// seeded generator. Survivors keep their original order.
pub fn balance_layouts(report: &SelectionReport, cap: usize, seed: u64) -> Result<SelectionReport> {
    if cap < 1 {
        return Err(Error::Config("per-layout cap must be at least 1".into()));
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in report.selected.iter().enumerate() {
        groups.entry(s.signature.as_str()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; report.selected.len()];
    for members in groups.values() {
        if members.len() <= cap {
            members.iter().for_each(|&i| keep[i] = true);
        } else {
            for k in sample(&mut rng, members.len(), cap) {
                keep[members[k]] = true;
            }
        }
    }
    let mut out = report.clone();
    out.selected = report
        .selected
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(s, _)| s.clone())
        .collect();
    out.recount();
    Ok(out)
}
