use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::annotate::{PageAnnotation, RegionGeometry};
use crate::error::{Error, Result};
use crate::geom::{covered_fraction, polygon_iou, BBox, Polygon};
use crate::region::RegionType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RetrievalCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl RetrievalCounts {
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn add(&mut self, o: &RetrievalCounts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

pub type PerType = BTreeMap<RegionType, RetrievalCounts>;

pub fn merge_per_type(into: &mut PerType, other: &PerType) {
    for (t, c) in other {
        into.entry(*t).or_default().add(c);
    }
}

/// Minimum covered share of a word box for the word to count as inside.
pub const WORD_INSIDE_FRACTION: f64 = 0.5;

fn polygons_of(page: &PageAnnotation, t: RegionType) -> Vec<&Polygon> {
    page.regions
        .iter()
        .filter(|r| r.region_type == t)
        .map(|r| &r.polygon)
        .collect()
}

/// Per region type, compare the words inside the union of reference regions
/// with those inside the union of predicted regions. Types absent from both
/// pages are left out.
pub fn word_level_retrieval(reference: &PageAnnotation, predicted: &PageAnnotation, words: &[BBox]) -> PerType {
    let types: BTreeSet<RegionType> = reference
        .regions
        .iter()
        .chain(&predicted.regions)
        .map(|r| r.region_type)
        .collect();
    types
        .into_iter()
        .map(|t| {
            let (rp, pp) = (polygons_of(reference, t), polygons_of(predicted, t));
            let mut c = RetrievalCounts::default();
            for w in words {
                let in_ref = !rp.is_empty() && covered_fraction(w, &rp) >= WORD_INSIDE_FRACTION;
                let in_pred = !pp.is_empty() && covered_fraction(w, &pp) >= WORD_INSIDE_FRACTION;
                match (in_ref, in_pred) {
                    (true, true) => c.tp += 1,
                    (true, false) => c.fn_ += 1,
                    (false, true) => c.fp += 1,
                    (false, false) => {}
                }
            }
            (t, c)
        })
        .collect()
}

/// Gating applied to predicted instances before a type counts as present.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct RegionGate {
    /// Predictions scoring below this are ignored; unscored ones pass.
    pub min_score: Option<f64>,
    /// A present reference type is only recovered by a same-type prediction
    /// with at least this polygon IoU against one of its instances.
    pub min_iou: Option<f64>,
}

fn passes_score(r: &RegionGeometry, gate: &RegionGate) -> bool {
    match (gate.min_score, r.score) {
        (Some(min), Some(s)) => s >= min,
        _ => true,
    }
}

/// Presence counts for one page.
///
/// Without an IoU gate: tp when the type is in both pages, fp when only
/// predicted, fn when only in the reference. With an IoU gate, a reference
/// type is recovered (tp) only by an IoU-matching prediction; otherwise it is
/// fn, plus fp when unmatched predictions of the type exist.
pub fn page_presence(reference: &PageAnnotation, predicted: &PageAnnotation, gate: &RegionGate) -> PerType {
    let ref_types: BTreeSet<RegionType> = reference.regions.iter().map(|r| r.region_type).collect();
    let pred: Vec<&RegionGeometry> = predicted.regions.iter().filter(|r| passes_score(r, gate)).collect();
    let pred_types: BTreeSet<RegionType> = pred.iter().map(|r| r.region_type).collect();
    ref_types
        .union(&pred_types)
        .map(|&t| {
            let (in_ref, in_pred) = (ref_types.contains(&t), pred_types.contains(&t));
            let matched = match gate.min_iou {
                None => in_ref && in_pred,
                Some(th) => pred.iter().filter(|p| p.region_type == t).any(|p| {
                    reference
                        .regions
                        .iter()
                        .filter(|r| r.region_type == t)
                        .any(|r| polygon_iou(&r.polygon, &p.polygon) >= th)
                }),
            };
            let c = RetrievalCounts {
                tp: u64::from(matched),
                fn_: u64::from(in_ref && !matched),
                fp: u64::from(in_pred && !matched),
            };
            (t, c)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRetrieval {
    pub page: String,
    pub per_type: PerType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionLevel {
    pub per_type: PerType,
    pub per_page: Vec<PageRetrieval>,
}

/// Pair two page streams by image id. Errors list ids present on one side only.
pub fn pair_pages<'a, 'b>(
    reference: &'a [PageAnnotation],
    predicted: &'b [PageAnnotation],
) -> Result<Vec<(&'a PageAnnotation, &'b PageAnnotation)>> {
    let pred: BTreeMap<&str, &PageAnnotation> = predicted.iter().map(|p| (p.image.as_str(), p)).collect();
    let refs: BTreeSet<&str> = reference.iter().map(|p| p.image.as_str()).collect();
    let mut unmatched: Vec<String> = refs
        .iter()
        .filter(|id| !pred.contains_key(*id))
        .chain(pred.keys().filter(|id| !refs.contains(*id)))
        .map(|s| s.to_string())
        .collect();
    if reference.len() != refs.len() || predicted.len() != pred.len() {
        unmatched.push("<duplicate page ids>".into());
    }
    if !unmatched.is_empty() {
        unmatched.sort();
        return Err(Error::PageMismatch(unmatched));
    }
    Ok(reference.iter().map(|r| (r, pred[r.image.as_str()])).collect())
}

/// Presence-based retrieval aggregated over page-aligned streams.
pub fn region_level_retrieval(
    reference: &[PageAnnotation],
    predicted: &[PageAnnotation],
    gate: &RegionGate,
) -> Result<RegionLevel> {
    let pairs = pair_pages(reference, predicted)?;
    let mut per_type = PerType::new();
    let per_page = pairs
        .into_iter()
        .map(|(r, p)| {
            let counts = page_presence(r, p, gate);
            merge_per_type(&mut per_type, &counts);
            PageRetrieval {
                page: r.image.clone(),
                per_type: counts,
            }
        })
        .collect();
    Ok(RegionLevel { per_type, per_page })
}
