use serde::{Deserialize, Serialize};

use super::{align_texts, banded_char_align, find_anchors, chain_anchors, AlignmentParams, CharAlignment};
use crate::error::Result;
use crate::geom::BBox;
use crate::ocr::{normalize_text, OcrPage};
use crate::region::RegionType;
use crate::tei::PageRecord;

/// Where one edition region landed in the aligned streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpan {
    /// Index into `PageRecord::regions`.
    pub region: usize,
    #[serde(rename = "type")]
    pub region_type: RegionType,
    /// Character span in the concatenated ground-truth stream.
    pub gt_start: usize,
    pub gt_end: usize,
    /// First and one-past-last OCR offsets matched to this region.
    pub ocr_start: Option<usize>,
    pub ocr_end: Option<usize>,
    /// At least one OCR line was assigned to the region.
    pub located: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineAssignment {
    pub line: usize,
    pub bbox: BBox,
    pub region: Option<usize>,
    #[serde(rename = "type")]
    pub region_type: Option<RegionType>,
    /// Exactly matched characters in the line.
    pub matched: usize,
    /// Share of `matched` that falls in the winning region.
    pub fraction: f64,
    /// Mean ground-truth offset of the line's matches in its region, used
    /// to order the lines of a region.
    pub gt_position: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageAlignment {
    pub edition_id: String,
    pub page_index: usize,
    pub image: String,
    pub width: u32,
    pub height: u32,
    /// Regions in the order they were concatenated for the final pass.
    pub regions: Vec<RegionSpan>,
    pub lines: Vec<LineAssignment>,
    /// Figures in the transcription; located later from detector output.
    pub figure_count: usize,
    pub score: i64,
    pub matched_chars: usize,
    pub gt_len: usize,
    pub ocr_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<CharAlignment>,
}

impl PageAlignment {
    /// Regions with text that no OCR line was assigned to.
    pub fn unlocated(&self) -> impl Iterator<Item = &RegionSpan> {
        self.regions.iter().filter(|r| !r.located)
    }

    /// Assigned line boxes of `region` in reading order.
    pub fn region_lines(&self, region: usize) -> Vec<&LineAssignment> {
        let mut v: Vec<_> = self.lines.iter().filter(|l| l.region == Some(region)).collect();
        v.sort_by(|a, b| {
            a.gt_position
                .unwrap_or(0.0)
                .total_cmp(&b.gt_position.unwrap_or(0.0))
                .then(a.line.cmp(&b.line))
        });
        v
    }
}

struct OcrStream {
    chars: Vec<char>,
    joins: Vec<bool>,
    /// Line index of each character; `None` for separators.
    line_of: Vec<Option<usize>>,
    /// Character span per line.
    spans: Vec<(usize, usize)>,
}

fn ocr_stream(ocr: &OcrPage, params: &AlignmentParams) -> OcrStream {
    let mut s = OcrStream {
        chars: Vec::new(),
        joins: Vec::new(),
        line_of: Vec::new(),
        spans: Vec::new(),
    };
    let mut pending_join = false;
    for (i, line) in ocr.lines.iter().enumerate() {
        let text: Vec<char> = normalize_text(&line.text, &params.normalization).chars().collect();
        if text.is_empty() {
            s.spans.push((s.chars.len(), s.chars.len()));
            continue;
        }
        if !s.chars.is_empty() {
            s.chars.push(' ');
            s.joins.push(pending_join);
            s.line_of.push(None);
        }
        let start = s.chars.len();
        s.chars.extend_from_slice(&text);
        s.joins.extend(std::iter::repeat_n(false, text.len()));
        s.line_of.extend(std::iter::repeat_n(Some(i), text.len()));
        pending_join = line.hyphenated && matches!(text.last(), Some('-' | '⸗' | '¬'));
        if pending_join {
            let last = s.joins.len() - 1;
            s.joins[last] = true;
        }
        s.spans.push((start, s.chars.len()));
    }
    // A trailing hyphen with nothing after it stays an ordinary character.
    if pending_join {
        let last = s.joins.len() - 1;
        s.joins[last] = false;
    }
    s
}

struct GtRegion {
    index: usize,
    region_type: RegionType,
    text: Vec<char>,
}

struct GtStream {
    chars: Vec<char>,
    region_of: Vec<Option<usize>>,
    spans: Vec<(usize, usize)>,
}

fn gt_stream(regions: &[GtRegion], order: &[usize]) -> GtStream {
    let mut s = GtStream {
        chars: Vec::new(),
        region_of: Vec::new(),
        spans: vec![(0, 0); regions.len()],
    };
    for &r in order {
        if !s.chars.is_empty() {
            s.chars.push(' ');
            s.region_of.push(None);
        }
        let start = s.chars.len();
        s.chars.extend_from_slice(&regions[r].text);
        s.region_of.extend(std::iter::repeat_n(Some(r), regions[r].text.len()));
        s.spans[r] = (start, s.chars.len());
    }
    s
}

struct Assignment {
    region: Option<usize>,
    matched: usize,
    fraction: f64,
    gt_position: Option<f64>,
}

/// Majority rule: a line goes to the region holding the largest share of its
/// exactly matched characters, when both the share and the line's overall
/// match rate clear their floors.
fn assign_lines(
    gt: &GtStream,
    ocr: &OcrStream,
    alignment: &CharAlignment,
    n_regions: usize,
    params: &AlignmentParams,
) -> Vec<Assignment> {
    let n_lines = ocr.spans.len();
    let mut counts = vec![vec![0usize; n_regions]; n_lines];
    let mut offsets = vec![vec![0usize; n_regions]; n_lines];
    for pair in &alignment.pairs {
        let (Some(g), Some(o)) = *pair else { continue };
        if gt.chars[g] != ocr.chars[o] {
            continue;
        }
        if let (Some(r), Some(l)) = (gt.region_of[g], ocr.line_of[o]) {
            counts[l][r] += 1;
            offsets[l][r] += g;
        }
    }
    (0..n_lines)
        .map(|l| {
            let matched: usize = counts[l].iter().sum();
            let len = ocr.spans[l].1 - ocr.spans[l].0;
            // Ties go to the region concatenated first.
            let best = (0..n_regions).fold(None::<usize>, |acc, r| match acc {
                Some(b) if counts[l][b] >= counts[l][r] => Some(b),
                _ if counts[l][r] > 0 => Some(r),
                _ => acc,
            });
            let Some(r) = best else {
                return Assignment {
                    region: None,
                    matched,
                    fraction: 0.0,
                    gt_position: None,
                };
            };
            let fraction = counts[l][r] as f64 / matched as f64;
            let covered = matched as f64 >= params.min_line_match_fraction * len as f64;
            let ok = covered && fraction >= params.min_line_assign_fraction;
            Assignment {
                region: ok.then_some(r),
                matched,
                fraction,
                gt_position: ok.then(|| offsets[l][r] as f64 / counts[l][r] as f64),
            }
        })
        .collect()
}

fn run_pass(
    regions: &[GtRegion],
    order: &[usize],
    ocr: &OcrStream,
    params: &AlignmentParams,
) -> Result<(GtStream, CharAlignment, Vec<Assignment>)> {
    let gt = gt_stream(regions, order);
    let alignment = align_texts(&gt.chars, &ocr.chars, Some(&ocr.joins), params)?;
    let assignment = assign_lines(&gt, ocr, &alignment, regions.len(), params);
    Ok((gt, alignment, assignment))
}

/// Longest run of consecutive free lines a region may be fitted onto.
const MAX_FIT_LINES: usize = 4;

/// Best run of consecutive free lines for a region without anchors.
fn fit_region(
    text: &[char],
    ocr: &OcrStream,
    free: &[bool],
    params: &AlignmentParams,
) -> Result<Option<(usize, usize, f64)>> {
    let mut best: Option<(usize, usize, f64)> = None;
    let n = ocr.spans.len();
    for first in 0..n {
        for last in first..n.min(first + MAX_FIT_LINES) {
            if !free[last] {
                break;
            }
            let (s, e) = (ocr.spans[first].0, ocr.spans[last].1);
            if e == s {
                continue;
            }
            let seg = &ocr.chars[s..e];
            let a = banded_char_align(text, seg, params)?;
            let sim = a.matches(text, seg) as f64 / text.len().max(seg.len()) as f64;
            if best.is_none_or(|b| sim > b.2) {
                best = Some((first, last, sim));
            }
        }
    }
    Ok(best.filter(|b| b.2 >= params.short_region_min_similarity))
}

/// Align one edition page to its OCR page and assign every OCR line to at
/// most one region.
///
/// Regions seeded by anchors are ordered by where their anchors fall in the
/// OCR stream. Regions without anchors (page numbers, catchwords, short
/// captions) are fitted onto the lines the first pass left unassigned. The
/// final character pass runs over the regions in that order.
pub fn align_page(page: &PageRecord, ocr: &OcrPage, params: &AlignmentParams) -> Result<PageAlignment> {
    let regions: Vec<GtRegion> = page
        .regions
        .iter()
        .enumerate()
        .filter(|(_, r)| r.region_type != RegionType::Figure)
        .map(|(index, r)| GtRegion {
            index,
            region_type: r.region_type,
            text: normalize_text(&r.text, &params.normalization).chars().collect(),
        })
        .filter(|r| !r.text.is_empty())
        .collect();
    let stream = ocr_stream(ocr, params);
    let n = regions.len();

    // Placement from anchors.
    let mut pos: Vec<Option<usize>> = vec![None; n];
    if !stream.chars.is_empty() {
        for (r, reg) in regions.iter().enumerate() {
            let chain = chain_anchors(&find_anchors(&reg.text, &stream.chars, params.anchor_ngram));
            if let Some(a) = chain.anchors.first() {
                pos[r] = Some(a.ocr.saturating_sub(a.gt));
            }
        }
    }

    let placed_order = |pos: &[Option<usize>]| {
        let mut v: Vec<usize> = (0..n).filter(|&r| pos[r].is_some()).collect();
        v.sort_by_key(|&r| (pos[r], r));
        v
    };

    // Fit the unseeded regions onto lines the seeded ones left over.
    if pos.iter().any(Option::is_none) && !stream.chars.is_empty() {
        let order = placed_order(&pos);
        let mut free = vec![true; stream.spans.len()];
        if !order.is_empty() {
            let (_, _, assignment) = run_pass(&regions, &order, &stream, params)?;
            for (l, a) in assignment.iter().enumerate() {
                free[l] = a.region.is_none();
            }
        }
        for (l, span) in stream.spans.iter().enumerate() {
            if span.0 == span.1 {
                free[l] = false;
            }
        }
        let mut pending: Vec<usize> = (0..n).filter(|&r| pos[r].is_none()).collect();
        pending.sort_by_key(|&r| (std::cmp::Reverse(regions[r].text.len()), r));
        for r in pending {
            if let Some((first, last, _)) = fit_region(&regions[r].text, &stream, &free, params)? {
                pos[r] = Some(stream.spans[first].0);
                free[first..=last].iter_mut().for_each(|f| *f = false);
            }
        }
    }

    let mut order = placed_order(&pos);
    order.extend((0..n).filter(|&r| pos[r].is_none()));
    let (gt, alignment, assignment) = run_pass(&regions, &order, &stream, params)?;

    let mut ocr_range: Vec<Option<(usize, usize)>> = vec![None; n];
    for pair in &alignment.pairs {
        if let (Some(g), Some(o)) = *pair {
            if gt.chars[g] == stream.chars[o] {
                if let Some(r) = gt.region_of[g] {
                    let e = ocr_range[r].get_or_insert((o, o + 1));
                    e.0 = e.0.min(o);
                    e.1 = e.1.max(o + 1);
                }
            }
        }
    }
    let located: Vec<bool> = (0..n)
        .map(|r| assignment.iter().any(|a| a.region == Some(r)))
        .collect();

    let spans = order
        .iter()
        .map(|&r| RegionSpan {
            region: regions[r].index,
            region_type: regions[r].region_type,
            gt_start: gt.spans[r].0,
            gt_end: gt.spans[r].1,
            ocr_start: ocr_range[r].map(|x| x.0),
            ocr_end: ocr_range[r].map(|x| x.1),
            located: located[r],
        })
        .collect();
    let lines = assignment
        .into_iter()
        .enumerate()
        .map(|(l, a)| LineAssignment {
            line: l,
            bbox: ocr.lines[l].bbox,
            region: a.region.map(|r| regions[r].index),
            region_type: a.region.map(|r| regions[r].region_type),
            matched: a.matched,
            fraction: a.fraction,
            gt_position: a.gt_position,
        })
        .collect();

    Ok(PageAlignment {
        edition_id: page.edition_id.clone(),
        page_index: page.page_index,
        image: ocr.image.clone(),
        width: ocr.width,
        height: ocr.height,
        regions: spans,
        lines,
        figure_count: page.figure_count(),
        score: alignment.score,
        matched_chars: alignment.matches(&gt.chars, &stream.chars),
        gt_len: gt.chars.len(),
        ocr_len: stream.chars.len(),
        alignment: Some(alignment),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocr::{OcrLine, OcrWord};
    use crate::tei::RegionTranscript;

    fn region(t: RegionType, text: &str, order: usize) -> RegionTranscript {
        RegionTranscript {
            region_type: t,
            text: text.into(),
            reading_order: order,
            run_on: false,
            source_path: String::new(),
            column: 0,
            heads: Vec::new(),
            line_breaks: 0,
        }
    }

    fn page(regions: Vec<RegionTranscript>) -> PageRecord {
        PageRecord {
            edition_id: "ed".into(),
            page_index: 0,
            printed_page_label: None,
            label_inferred: false,
            image_ref: None,
            regions,
        }
    }

    fn ocr(lines: &[&str]) -> OcrPage {
        let lines = lines
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let y = 10.0 + 30.0 * i as f64;
                let words = t
                    .split_whitespace()
                    .enumerate()
                    .map(|(k, w)| OcrWord {
                        text: w.into(),
                        bbox: BBox::new(10.0 + 60.0 * k as f64, y, 60.0 + 60.0 * k as f64, y + 20.0),
                        confidence: None,
                    })
                    .collect();
                OcrLine::from_words(words, None)
            })
            .collect();
        OcrPage {
            image: "p.png".into(),
            width: 2000,
            height: 2000,
            lines,
        }
    }

    fn types(a: &PageAlignment) -> Vec<Option<RegionType>> {
        a.lines.iter().map(|l| l.region_type).collect()
    }

    const BODY: &str = "Es war einmal ein König der hatte drei Töchter und die jüngste war so schön \
                        dass die Sonne selber sich verwunderte so oft sie ihr ins Gesicht schien";

    #[test]
    fn body_lines_and_short_floats() {
        let p = page(vec![
            region(RegionType::Body, BODY, 0),
            region(RegionType::PageNum, "17", 1),
            region(RegionType::Catchword, "Die", 2),
        ]);
        let o = ocr(&[
            "17",
            "Es war einmal ein König der hatte drei Töchter",
            "und die jüngste war so ſchön daß die Sonne",
            "selber sich verwunderte so oft sie ihr ins Gesicht schien",
            "Die",
        ]);
        let a = align_page(&p, &o, &AlignmentParams::default()).unwrap();
        use RegionType::*;
        assert_eq!(types(&a), [Some(PageNum), Some(Body), Some(Body), Some(Body), Some(Catchword)]);
        assert!(a.unlocated().next().is_none());
        let body_lines: Vec<usize> = a.region_lines(0).iter().map(|l| l.line).collect();
        assert_eq!(body_lines, [1, 2, 3]);
        let al = a.alignment.as_ref().unwrap();
        assert!(al.is_complete(a.gt_len, a.ocr_len));
    }

    #[test]
    fn noise_line_stays_unassigned() {
        let p = page(vec![region(RegionType::Body, BODY, 0)]);
        let o = ocr(&[
            "Es war einmal ein König der hatte drei Töchter und die jüngste war so schön",
            "@#%& |||| ~~~ ^^^",
            "dass die Sonne selber sich verwunderte so oft sie ihr ins Gesicht schien",
        ]);
        let a = align_page(&p, &o, &AlignmentParams::default()).unwrap();
        assert_eq!(types(&a), [Some(RegionType::Body), None, Some(RegionType::Body)]);
        assert_eq!(a.lines[1].matched, 0);
    }

    #[test]
    fn majority_rule_split_line() {
        // Line 0 carries 6 body characters and 4 note characters.
        let p = page(vec![region(RegionType::Body, "abcdef", 0), region(RegionType::Note, "wxyz", 1)]);
        let o = ocr(&["abcdefwxyz"]);
        let a = align_page(&p, &o, &AlignmentParams::default()).unwrap();
        assert_eq!(a.lines[0].region_type, Some(RegionType::Body));
        assert!((a.lines[0].fraction - 0.6).abs() < 1e-12);
        assert_eq!(a.lines[0].matched, 10);
    }

    #[test]
    fn float_before_body_is_reordered() {
        let title = "Geschichte der Stadt Nürnberg im Mittelalter";
        let p = page(vec![region(RegionType::Body, BODY, 0), region(RegionType::Title, title, 1)]);
        let o = ocr(&[
            "Geſchichte der Stadt Nürnberg im Mittelalter",
            "Es war einmal ein König der hatte drei Töchter und die jüngste war so schön",
            "dass die Sonne selber sich verwunderte so oft sie ihr ins Gesicht schien",
        ]);
        let a = align_page(&p, &o, &AlignmentParams::default()).unwrap();
        use RegionType::*;
        assert_eq!(types(&a), [Some(Title), Some(Body), Some(Body)]);
        assert_eq!(a.regions[0].region_type, Title);
    }

    #[test]
    fn hyphenated_line_break() {
        let p = page(vec![region(RegionType::Body, "die geschichte der stadt", 0)]);
        let o = ocr(&["die ge-", "schichte der stadt"]);
        let a = align_page(&p, &o, &AlignmentParams::default()).unwrap();
        assert_eq!(a.matched_chars, a.gt_len);
        assert_eq!(types(&a), [Some(RegionType::Body); 2]);
    }

    #[test]
    fn empty_ocr_page_leaves_regions_unlocated() {
        let p = page(vec![region(RegionType::Body, BODY, 0), region(RegionType::PageNum, "3", 1)]);
        let a = align_page(&p, &ocr(&[]), &AlignmentParams::default()).unwrap();
        assert!(a.lines.is_empty());
        assert_eq!(a.unlocated().count(), 2);
    }

    #[test]
    fn deterministic() {
        let p = page(vec![region(RegionType::Body, BODY, 0), region(RegionType::PageNum, "17", 1)]);
        let o = ocr(&["17", BODY]);
        let params = AlignmentParams::default();
        assert_eq!(align_page(&p, &o, &params).unwrap(), align_page(&p, &o, &params).unwrap());
    }
}
