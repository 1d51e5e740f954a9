//! Synthetic book: a TEI edition plus OCR pages whose region boxes are known.
#![allow(dead_code)]

use pagezones::annotate::{PageAnnotation, RegionGeometry, Source};
use pagezones::ocr::{OcrLine, OcrPage, OcrWord};
use pagezones::{BBox, RegionType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WIDTH: u32 = 1000;
pub const HEIGHT: u32 = 1400;
const LEFT: f64 = 100.0;
const RIGHT: f64 = 900.0;
const CHAR_W: f64 = 12.0;
const LINE_H: f64 = 28.0;
const PITCH: f64 = 36.0;
const LINE_CHARS: usize = 64;

const WORDS: &[&str] = &[
    "und", "der", "die", "das", "nicht", "sich", "mit", "auch", "eine", "einer", "wird", "seine", "Natur",
    "Menschen", "Geschichte", "Vernunft", "zwischen", "welche", "diese", "Zeit", "Welt", "Gesetze", "immer",
    "schon", "durch", "Erfahrung", "gleichsam", "Staaten", "Sprache", "Gemüth", "ſelbſt", "Wiſſenſchaft",
    "Begriff", "allein", "vielmehr", "darum", "Kraft", "Urtheil", "Bewegung", "Ordnung", "jener", "daher",
];

pub struct SyntheticPage {
    pub ocr: OcrPage,
    pub truth: PageAnnotation,
}

pub struct SyntheticBook {
    pub tei: String,
    pub pages: Vec<SyntheticPage>,
    /// Characters in noised OCR lines, and how many edits were applied.
    pub noised_chars: usize,
    pub edits: usize,
}

fn words(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())].to_string()).collect()
}

/// Greedy fill into lines of at most `LINE_CHARS` characters.
fn fill(ws: &[String]) -> Vec<String> {
    let mut lines = vec![String::new()];
    for w in ws {
        let cur = lines.last_mut().unwrap();
        if !cur.is_empty() && cur.chars().count() + 1 + w.chars().count() > LINE_CHARS {
            lines.push(w.clone());
        } else {
            if !cur.is_empty() {
                cur.push(' ');
            }
            cur.push_str(w);
        }
    }
    lines
}

/// Substitute, delete or insert letters at `rate` per character.
fn noise(rng: &mut ChaCha8Rng, s: &str, rate: f64, edits: &mut usize) -> String {
    const ALPHA: &[u8] = b"abcdefghiklmnorstuvw";
    let mut out = String::new();
    for c in s.chars() {
        if rng.gen_bool(rate) {
            *edits += 1;
            let letter = ALPHA[rng.gen_range(0..ALPHA.len())] as char;
            match rng.gen_range(0..3) {
                0 => out.push(letter),
                1 => {}
                _ => {
                    out.push(c);
                    out.push(letter);
                }
            }
        } else {
            out.push(c);
        }
    }
    if out.trim().is_empty() {
        s.to_string()
    } else {
        out
    }
}

/// OCR line spanning `[x0, x1]` with word boxes spread over it.
fn ocr_line(text: &str, x0: f64, x1: f64, y: f64) -> OcrLine {
    let n = text.chars().count().max(1) as f64;
    let step = (x1 - x0) / n;
    let mut words = Vec::new();
    let mut offset = 0usize;
    for part in text.split(' ') {
        let len = part.chars().count();
        if len > 0 {
            words.push(OcrWord {
                text: part.to_string(),
                bbox: BBox::new(x0 + offset as f64 * step, y, x0 + (offset + len) as f64 * step, y + LINE_H),
                confidence: None,
            });
        }
        offset += len + 1;
    }
    OcrLine::from_words(words, Some(BBox::new(x0, y, x1, y + LINE_H)))
}

fn short_line(text: &str, x0: f64, y: f64) -> OcrLine {
    ocr_line(text, x0, x0 + text.chars().count() as f64 * CHAR_W, y)
}

fn region(t: RegionType, b: BBox) -> RegionGeometry {
    RegionGeometry {
        region_type: t,
        polygon: b.to_polygon(),
        source: Source::Manual,
        checked: false,
        score: None,
    }
}

fn hull(lines: &[OcrLine]) -> BBox {
    lines.iter().map(|l| l.bbox).reduce(|a, b| a.union(&b)).unwrap()
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;")
}

pub fn image_id(index: usize) -> String {
    format!("f{index:04}")
}

/// `n` pages. Body and note lines get character noise at `rate`; running
/// titles, page numbers and catchwords are left clean.
pub fn synthetic_book(n: usize, rate: f64, seed: u64) -> SyntheticBook {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bodies: Vec<Vec<String>> = (0..n)
        .map(|_| {
            let k = rng.gen_range(150..220);
            fill(&words(&mut rng, k))
        })
        .collect();
    let mut tei = String::from("<TEI xmlns=\"http://www.tei-c.org/ns/1.0\"><text><body>\n");
    let mut pages = Vec::new();
    let (mut noised_chars, mut edits) = (0usize, 0usize);
    for i in 0..n {
        let image = image_id(i + 1);
        let label = (i + 3).to_string();
        let title = if i % 2 == 0 { "Erſtes Buch." } else { "Von der Natur." };
        let has_title = i > 0;
        let note: Option<Vec<String>> = (i % 3 == 1).then(|| {
            let k = rng.gen_range(15..40);
            fill(&words(&mut rng, k))
        });
        let catch: Option<String> =
            (i % 4 == 2 && i + 1 < n).then(|| bodies[i + 1][0].split(' ').next().unwrap().to_string());

        tei.push_str(&format!("<pb n=\"{label}\" facs=\"#{image}\"/>\n"));
        let mut lines = Vec::new();
        let mut regions = Vec::new();
        if has_title {
            tei.push_str(&format!("<fw type=\"head\" place=\"top\">{}</fw>\n", xml_escape(title)));
            let l = short_line(title, LEFT, 60.0);
            regions.push(region(RegionType::Title, l.bbox));
            lines.push(l);
        }
        let num = short_line(&label, RIGHT - label.len() as f64 * CHAR_W, 60.0);
        regions.push(region(RegionType::PageNum, num.bbox));
        lines.push(num);

        let mut y = 130.0;
        let body: Vec<OcrLine> = bodies[i]
            .iter()
            .map(|t| {
                noised_chars += t.chars().count();
                let l = ocr_line(&noise(&mut rng, t, rate, &mut edits), LEFT, RIGHT, y);
                y += PITCH;
                l
            })
            .collect();
        let body_xml: Vec<String> = bodies[i].iter().map(|t| xml_escape(t)).collect();
        tei.push_str(&format!("<p>{}</p>\n", body_xml.join("<lb/>\n")));
        regions.push(region(RegionType::Body, hull(&body)));
        lines.extend(body);

        if let Some(note) = &note {
            y += 40.0;
            let nl: Vec<OcrLine> = note
                .iter()
                .map(|t| {
                    noised_chars += t.chars().count();
                    let l = ocr_line(&noise(&mut rng, t, rate, &mut edits), LEFT, RIGHT, y);
                    y += PITCH;
                    l
                })
                .collect();
            let note_xml: Vec<String> = note.iter().map(|t| xml_escape(t)).collect();
            tei.push_str(&format!("<note place=\"foot\">{}</note>\n", note_xml.join("<lb/>\n")));
            regions.push(region(RegionType::Note, hull(&nl)));
            lines.extend(nl);
        }
        if let Some(c) = &catch {
            tei.push_str(&format!("<fw type=\"catch\" place=\"bottom\">{}</fw>\n", xml_escape(c)));
            let l = short_line(c, RIGHT - c.chars().count() as f64 * CHAR_W, HEIGHT as f64 - 100.0);
            regions.push(region(RegionType::Catchword, l.bbox));
            lines.push(l);
        }
        pages.push(SyntheticPage {
            ocr: OcrPage {
                image: image.clone(),
                width: WIDTH,
                height: HEIGHT,
                lines,
            },
            truth: PageAnnotation {
                image,
                width: WIDTH,
                height: HEIGHT,
                regions,
            },
        });
    }
    tei.push_str("</body></text></TEI>\n");
    SyntheticBook {
        tei,
        pages,
        noised_chars,
        edits,
    }
}

/// Minimal hOCR rendering of a canonical page.
pub fn to_hocr(page: &OcrPage) -> String {
    let b = |x: &BBox| format!("bbox {} {} {} {}", x.x0, x.y0, x.x1, x.y1);
    let mut s = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<html xmlns=\"http://www.w3.org/1999/xhtml\"><body>\n",
    );
    s.push_str(&format!(
        "<div class=\"ocr_page\" title=\"image &quot;{}&quot;; bbox 0 0 {} {}\">\n",
        page.image, page.width, page.height
    ));
    for (i, l) in page.lines.iter().enumerate() {
        s.push_str(&format!("<span class=\"ocr_line\" id=\"line_{i}\" title=\"{}\">", b(&l.bbox)));
        for w in &l.words {
            s.push_str(&format!("<span class=\"ocrx_word\" title=\"{}\">{}</span> ", b(&w.bbox), xml_escape(&w.text)));
        }
        s.push_str("</span>\n");
    }
    s.push_str("</div></body></html>\n");
    s
}
