//! Region geometry from aligned lines, figure boxes from detector output, and
//! the annotation file format.
//!
//! One annotation file holds one page:
//!
//! ```json
//! {"image":"p0001.png","width":1200,"height":1800,
//!  "regions":[{"type":"body","polygon":[[10,10],[90,10],[90,52],[10,52]],
//!              "source":"aligned","checked":false}]}
//! ```
//!
//! Prediction files use the same layout and may carry a `score` per region.

mod figures;
mod outline;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::align::PageAlignment;
use crate::error::{Error, Result};
use crate::geom::{BBox, Polygon};
use crate::region::RegionType;

pub use figures::{greedy_figure_select, DetectionCandidate, FigureSelection};
pub use outline::{hull_rect, union_outline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Aligned,
    Detector,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGeometry {
    #[serde(rename = "type")]
    pub region_type: RegionType,
    pub polygon: Polygon,
    pub source: Source,
    /// Set only by a human reviewer.
    #[serde(default)]
    pub checked: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl RegionGeometry {
    pub fn bbox(&self) -> BBox {
        self.polygon.bbox()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageAnnotation {
    pub image: String,
    pub width: u32,
    pub height: u32,
    pub regions: Vec<RegionGeometry>,
}

impl PageAnnotation {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::json("annotation", e))
    }

    /// File name used when writing a page into an annotation directory.
    pub fn file_name(&self) -> String {
        let stem = std::path::Path::new(&self.image)
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|s| !s.is_empty())
            .unwrap_or("page");
        format!("{stem}.json")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct AnnotateConfig {
    /// Emit hull rectangles instead of line-union outlines.
    pub rect: bool,
    /// Treat detector boxes as overlapping only above this IoU.
    pub overlap_iou: Option<f64>,
    /// Detector classes accepted as figures.
    pub figure_classes: Vec<String>,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        AnnotateConfig {
            rect: false,
            overlap_iou: None,
            figure_classes: vec!["figure".into()],
        }
    }
}

/// Region outline from its lines in reading order; `None` when there are no
/// lines with area.
pub fn region_bounds_from_lines(
    region_type: RegionType,
    lines: &[BBox],
    rect: bool,
) -> Option<RegionGeometry> {
    let polygon = if rect { hull_rect(lines) } else { union_outline(lines) }?;
    Some(RegionGeometry {
        region_type,
        polygon,
        source: Source::Aligned,
        checked: false,
        score: None,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AnnotateReport {
    /// Indices into the page's regions with no geometry.
    pub unlocated: Vec<usize>,
    pub under_detected: bool,
    pub warnings: Vec<String>,
}

/// Geometry for every located region of an aligned page, plus figure boxes
/// chosen from `detections`.
pub fn build_page_annotation(
    alignment: &PageAlignment,
    detections: &[DetectionCandidate],
    cfg: &AnnotateConfig,
) -> (PageAnnotation, AnnotateReport) {
    let mut report = AnnotateReport::default();
    let mut spans: Vec<_> = alignment.regions.iter().collect();
    spans.sort_by_key(|s| s.region);
    let mut regions = Vec::new();
    for span in spans {
        let lines: Vec<BBox> = alignment.region_lines(span.region).iter().map(|l| l.bbox).collect();
        match region_bounds_from_lines(span.region_type, &lines, cfg.rect) {
            Some(g) => regions.push(g),
            None => report.unlocated.push(span.region),
        }
    }
    if alignment.figure_count > 0 {
        let figures: Vec<DetectionCandidate> = detections
            .iter()
            .filter(|d| cfg.figure_classes.iter().any(|c| c.eq_ignore_ascii_case(&d.class_label)))
            .cloned()
            .collect();
        let sel = greedy_figure_select(&figures, alignment.figure_count, cfg.overlap_iou);
        report.under_detected = sel.under_detected;
        if sel.under_detected {
            report.warnings.push(format!(
                "{} figure(s) in the transcription, {} selected",
                alignment.figure_count,
                sel.selected.len()
            ));
        }
        regions.extend(sel.selected.into_iter().map(|d| RegionGeometry {
            region_type: RegionType::Figure,
            polygon: d.bbox.to_polygon(),
            source: Source::Detector,
            checked: false,
            score: None,
        }));
    }
    let page = PageAnnotation {
        image: alignment.image.clone(),
        width: alignment.width,
        height: alignment.height,
        regions,
    };
    (page, report)
}

/// Serialize a page, clamping geometry into `[0, width] x [0, height]`.
/// Returns the JSON text (newline-terminated) and one warning per clamped
/// region.
pub fn emit_annotation(page: &PageAnnotation) -> (String, Vec<String>) {
    let mut page = page.clone();
    let mut warnings = Vec::new();
    let (w, h) = (page.width as f64, page.height as f64);
    for (i, r) in page.regions.iter_mut().enumerate() {
        let (p, moved) = r.polygon.clamp_to(w, h);
        if moved {
            warnings.push(format!("{}: region {i} ({}) clamped to page bounds", page.image, r.region_type));
            r.polygon = p;
        }
    }
    let mut s = serde_json::to_string(&page).expect("annotation serializes");
    s.push('\n');
    (s, warnings)
}

/// Detector candidates keyed by page image.
pub type DetectionFile = BTreeMap<String, Vec<DetectionCandidate>>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{LineAssignment, RegionSpan};
    use crate::geom::Point;

    fn line(i: usize, region: Option<usize>, t: RegionType, b: [f64; 4], pos: f64) -> LineAssignment {
        LineAssignment {
            line: i,
            bbox: BBox::new(b[0], b[1], b[2], b[3]),
            region,
            region_type: region.map(|_| t),
            matched: 10,
            fraction: 1.0,
            gt_position: region.map(|_| pos),
        }
    }

    fn span(region: usize, t: RegionType, located: bool) -> RegionSpan {
        RegionSpan {
            region,
            region_type: t,
            gt_start: 0,
            gt_end: 0,
            ocr_start: None,
            ocr_end: None,
            located,
        }
    }

    fn fixture() -> PageAlignment {
        use RegionType::*;
        PageAlignment {
            edition_id: "ed".into(),
            page_index: 0,
            image: "scan/p0007.png".into(),
            width: 400,
            height: 600,
            regions: vec![span(1, PageNum, true), span(0, Body, true)],
            lines: vec![
                line(0, Some(1), PageNum, [180.0, 20.0, 220.0, 40.0], 0.0),
                line(1, Some(0), Body, [40.0, 80.0, 360.0, 100.0], 10.0),
                line(2, Some(0), Body, [40.0, 104.0, 250.0, 124.0], 50.0),
                line(3, None, Body, [40.0, 500.0, 80.0, 520.0], 0.0),
            ],
            figure_count: 0,
            score: 0,
            matched_chars: 0,
            gt_len: 0,
            ocr_len: 0,
            alignment: None,
        }
    }

    #[test]
    fn body_and_page_number_match_golden_file() {
        let (page, report) = build_page_annotation(&fixture(), &[], &AnnotateConfig::default());
        assert!(report.unlocated.is_empty());
        let (json, warnings) = emit_annotation(&page);
        assert!(warnings.is_empty());
        assert_eq!(json, include_str!("../../tests/fixtures/golden/p0007.json"));
        assert_eq!(page.file_name(), "p0007.json");
        assert_eq!(PageAnnotation::from_json(&json).unwrap(), page);
    }

    #[test]
    fn empty_page() {
        let page = PageAnnotation {
            image: "x.png".into(),
            width: 10,
            height: 10,
            regions: vec![],
        };
        let (json, _) = emit_annotation(&page);
        assert_eq!(json, "{\"image\":\"x.png\",\"width\":10,\"height\":10,\"regions\":[]}\n");
    }

    #[test]
    fn boundary_vertex_retained_and_overflow_clamped() {
        let mk = |b: BBox| RegionGeometry {
            region_type: RegionType::Body,
            polygon: b.to_polygon(),
            source: Source::Manual,
            checked: true,
            score: None,
        };
        let page = PageAnnotation {
            image: "x.png".into(),
            width: 100,
            height: 50,
            regions: vec![mk(BBox::new(0.0, 0.0, 100.0, 50.0)), mk(BBox::new(90.0, 40.0, 120.0, 50.0))],
        };
        let (json, warnings) = emit_annotation(&page);
        assert_eq!(warnings.len(), 1);
        let back = PageAnnotation::from_json(&json).unwrap();
        assert_eq!(back.regions[0].polygon.vertices[2], Point::new(100.0, 50.0));
        assert_eq!(back.regions[1].bbox(), BBox::new(90.0, 40.0, 100.0, 50.0));
        assert!(back.regions[1].checked);
    }

    #[test]
    fn rect_mode_is_hull_of_poly_mode() {
        let a = fixture();
        let (poly, _) = build_page_annotation(&a, &[], &AnnotateConfig::default());
        let (rect, _) = build_page_annotation(
            &a,
            &[],
            &AnnotateConfig {
                rect: true,
                ..Default::default()
            },
        );
        for (p, r) in poly.regions.iter().zip(&rect.regions) {
            assert_eq!(p.bbox(), r.bbox());
            assert_eq!(r.polygon, p.bbox().to_polygon());
        }
    }

    #[test]
    fn unlocated_and_figures() {
        let mut a = fixture();
        a.regions.push(span(2, RegionType::Caption, false));
        a.figure_count = 2;
        let det = vec![
            DetectionCandidate {
                bbox: BBox::new(50.0, 200.0, 350.0, 400.0),
                score: 0.9,
                class_label: "Figure".into(),
            },
            DetectionCandidate {
                bbox: BBox::new(60.0, 210.0, 340.0, 390.0),
                score: 0.8,
                class_label: "figure".into(),
            },
            DetectionCandidate {
                bbox: BBox::new(0.0, 0.0, 10.0, 10.0),
                score: 0.99,
                class_label: "table".into(),
            },
        ];
        let (page, report) = build_page_annotation(&a, &det, &AnnotateConfig::default());
        assert_eq!(report.unlocated, [2]);
        assert!(report.under_detected);
        let figs: Vec<_> = page.regions.iter().filter(|r| r.region_type == RegionType::Figure).collect();
        assert_eq!(figs.len(), 1);
        assert_eq!(figs[0].source, Source::Detector);
    }
}
