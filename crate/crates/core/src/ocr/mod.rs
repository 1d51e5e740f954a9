//! Canonical OCR page model and converters into it.
//!
//! The canonical form is JSON (one page per line in `.ndjson` files):
//!
//! ```json
//! {"image":"p0001.png","width":1200,"height":1800,
//!  "lines":[{"bbox":[10,10,90,30],"text":"Ge- schichte","hyphenated":false,
//!            "words":[{"text":"Ge-","bbox":[10,10,40,30],"confidence":0.93}]}]}
//! ```

mod hocr;
mod normalize;

use serde::{Deserialize, Serialize};

use crate::geom::BBox;

pub use hocr::{parse_hocr, IngestReport};
pub use normalize::{normalize_text, NormalizationConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrWord {
    pub text: String,
    pub bbox: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrLine {
    pub bbox: BBox,
    pub text: String,
    /// Line ends in a hyphen (`-`, `⸗` or `¬`) that may join with the next line.
    #[serde(default)]
    pub hyphenated: bool,
    pub words: Vec<OcrWord>,
}

impl OcrLine {
    /// Build a line from its words; the bbox is the hull of the word boxes
    /// unioned with `bbox` when given.
    pub fn from_words(words: Vec<OcrWord>, bbox: Option<BBox>) -> Self {
        let hull = words
            .iter()
            .map(|w| w.bbox)
            .chain(bbox)
            .reduce(|a, b| a.union(&b))
            .unwrap_or_default();
        let text = words
            .iter()
            .map(|w| w.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        OcrLine {
            bbox: hull,
            hyphenated: ends_with_hyphen(&text),
            text,
            words,
        }
    }
}

pub(crate) fn ends_with_hyphen(s: &str) -> bool {
    s.trim_end().ends_with(['-', '⸗', '¬'])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrPage {
    pub image: String,
    pub width: u32,
    pub height: u32,
    pub lines: Vec<OcrLine>,
}

impl OcrPage {
    pub fn bounds(&self) -> BBox {
        BBox::new(0.0, 0.0, self.width as f64, self.height as f64)
    }

    pub fn words(&self) -> impl Iterator<Item = &OcrWord> {
        self.lines.iter().flat_map(|l| l.words.iter())
    }

    /// Clamp all geometry into page bounds and restore line-contains-word.
    /// Returns the number of boxes that had to be clamped.
    pub fn enforce_geometry(&mut self) -> usize {
        let (w, h) = (self.width as f64, self.height as f64);
        let mut clamped = 0;
        for line in &mut self.lines {
            for word in &mut line.words {
                let (b, moved) = word.bbox.clamp_to(w, h);
                clamped += usize::from(moved);
                word.bbox = b;
            }
            let (b, moved) = line.bbox.clamp_to(w, h);
            clamped += usize::from(moved);
            line.bbox = line.words.iter().fold(b, |acc, wd| acc.union(&wd.bbox));
        }
        clamped
    }

    /// Concatenated line texts, one line per row.
    pub fn text(&self) -> String {
        self.lines
            .iter()
            .map(|l| l.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn word(t: &str, b: [f64; 4]) -> OcrWord {
        OcrWord {
            text: t.into(),
            bbox: BBox::new(b[0], b[1], b[2], b[3]),
            confidence: None,
        }
    }

    #[test]
    fn line_from_words() {
        let l = OcrLine::from_words(
            vec![word("Ge-", [10.0, 10.0, 40.0, 30.0]), word("x", [50.0, 12.0, 60.0, 31.0])],
            None,
        );
        assert_eq!(l.text, "Ge- x");
        assert!(!l.hyphenated);
        assert_eq!(l.bbox, BBox::new(10.0, 10.0, 60.0, 31.0));
        let h = OcrLine::from_words(vec![word("Ge⸗", [0.0, 0.0, 5.0, 5.0])], None);
        assert!(h.hyphenated);
    }

    proptest! {
        #[test]
        fn geometry_containment_after_enforce(
            boxes in proptest::collection::vec((0.0f64..150.0, 0.0f64..150.0, 0.0f64..80.0, 0.0f64..80.0), 1..8)
        ) {
            let words: Vec<_> = boxes
                .iter()
                .map(|&(x, y, w, h)| word("w", [x, y, x + w, y + h]))
                .collect();
            let mut page = OcrPage {
                image: "p".into(),
                width: 100,
                height: 120,
                lines: vec![OcrLine::from_words(words, None)],
            };
            page.enforce_geometry();
            let bounds = page.bounds();
            for l in &page.lines {
                prop_assert!(bounds.contains(&l.bbox));
                for w in &l.words {
                    prop_assert!(l.bbox.contains(&w.bbox));
                }
            }
        }
    }
}
