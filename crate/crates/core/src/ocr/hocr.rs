//! hOCR → canonical page conversion.

use roxmltree::Node;

use super::{OcrLine, OcrPage, OcrWord};
use crate::error::{Error, Result};
use crate::geom::BBox;
use crate::xml::parse_document;

const LINE_CLASSES: &[&str] = &["ocr_line", "ocrx_line", "ocr_header", "ocr_caption", "ocr_textfloat"];
const WORD_CLASSES: &[&str] = &["ocrx_word", "ocr_word"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub warnings: Vec<String>,
    /// Boxes clamped into the page bounds.
    pub clamped: usize,
}

fn has_class(node: Node, classes: &[&str]) -> bool {
    node.attribute("class")
        .is_some_and(|c| c.split_whitespace().any(|x| classes.contains(&x)))
}

/// Value of one `;`-separated hOCR property in a `title` attribute.
fn property<'a>(node: Node<'a, '_>, key: &str) -> Option<&'a str> {
    node.attribute("title")?.split(';').find_map(|p| {
        let p = p.trim();
        let rest = p.strip_prefix(key)?;
        rest.starts_with(char::is_whitespace).then(|| rest.trim())
    })
}

fn bbox(node: Node) -> Option<BBox> {
    let v: Vec<f64> = property(node, "bbox")?
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .ok()?;
    match v[..] {
        [x0, y0, x1, y1] => Some(BBox::from_corners(x0.max(0.0), y0.max(0.0), x1.max(0.0), y1.max(0.0))),
        _ => None,
    }
}

fn node_text(node: Node) -> String {
    node.descendants()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect::<String>()
}

fn describe(node: Node) -> String {
    node.attribute("id")
        .map(|id| format!("`{id}`"))
        .unwrap_or_else(|| format!("<{}>", node.tag_name().name()))
}

/// Parse the first `ocr_page` of an hOCR document.
pub fn parse_hocr(bytes: &[u8]) -> Result<(OcrPage, IngestReport)> {
    let doc = parse_document(bytes)?;
    let mut report = IngestReport::default();
    let mut pages = doc
        .descendants()
        .filter(|n| n.is_element() && has_class(*n, &["ocr_page"]));
    let page_node = pages
        .next()
        .ok_or_else(|| Error::InvalidInput("no ocr_page element".into()))?;
    if pages.next().is_some() {
        report
            .warnings
            .push("document holds more than one ocr_page; only the first is read".into());
    }
    let page_box = bbox(page_node)
        .ok_or_else(|| Error::InvalidInput("ocr_page has no bbox property".into()))?;
    let image = property(page_node, "image")
        .map(|s| s.trim_matches('"').to_string())
        .unwrap_or_default();

    let mut lines = Vec::new();
    for line_node in page_node
        .descendants()
        .filter(|n| n.is_element() && has_class(*n, LINE_CLASSES))
    {
        let Some(line_box) = bbox(line_node) else {
            report
                .warnings
                .push(format!("line {} has no bbox; skipped", describe(line_node)));
            continue;
        };
        let mut words = Vec::new();
        for w in line_node
            .descendants()
            .filter(|n| n.is_element() && has_class(*n, WORD_CLASSES))
        {
            let Some(wb) = bbox(w) else {
                report
                    .warnings
                    .push(format!("word {} has no bbox; skipped", describe(w)));
                continue;
            };
            let text = node_text(w).trim().to_string();
            if text.is_empty() {
                continue;
            }
            let confidence = property(w, "x_wconf")
                .and_then(|c| c.parse::<f64>().ok())
                .map(|c| (c / 100.0).clamp(0.0, 1.0));
            words.push(OcrWord {
                text,
                bbox: wb,
                confidence,
            });
        }
        if words.is_empty() {
            continue;
        }
        // Containment is restored after clamping, in enforce_geometry.
        let mut line = OcrLine::from_words(words, None);
        line.bbox = line_box;
        lines.push(line);
    }

    let mut page = OcrPage {
        image,
        width: page_box.x1.round() as u32,
        height: page_box.y1.round() as u32,
        lines,
    };
    let clamped = page.enforce_geometry();
    if clamped > 0 {
        report
            .warnings
            .push(format!("{clamped} box(es) extended past the page and were clamped"));
    }
    report.clamped = clamped;
    Ok((page, report))
}
