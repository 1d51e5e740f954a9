//! Global affine-gap alignment (Gotoh) over a diagonal band or the full matrix.
//!
//! Scores live in two rolling rows; only a one-byte traceback per cell is kept,
//! so a band of half-width `w` costs `(n + 1) * (2w + 1)` bytes.

use serde::{Deserialize, Serialize};

use super::AlignmentParams;
use crate::error::{Error, Result};

/// Character-level correspondence. A pair with one side `None` is a gap.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CharAlignment {
    pub pairs: Vec<(Option<usize>, Option<usize>)>,
    pub score: i64,
}

impl CharAlignment {
    /// Pairs whose characters are identical.
    pub fn matches(&self, gt: &[char], ocr: &[char]) -> usize {
        self.pairs
            .iter()
            .filter(|p| matches!(p, (Some(g), Some(o)) if gt[*g] == ocr[*o]))
            .count()
    }

    /// Every offset of both inputs appears exactly once, in increasing order.
    pub fn is_complete(&self, gt_len: usize, ocr_len: usize) -> bool {
        let (mut g, mut o) = (0, 0);
        for p in &self.pairs {
            if let Some(x) = p.0 {
                if x != g {
                    return false;
                }
                g += 1;
            }
            if let Some(x) = p.1 {
                if x != o {
                    return false;
                }
                o += 1;
            }
            if p.0.is_none() && p.1.is_none() {
                return false;
            }
        }
        g == gt_len && o == ocr_len
    }

    pub(crate) fn shifted(mut self, gt: usize, ocr: usize) -> Self {
        for p in &mut self.pairs {
            p.0 = p.0.map(|x| x + gt);
            p.1 = p.1.map(|x| x + ocr);
        }
        self
    }
}

const NEG: i64 = i64::MIN / 4;

// Traceback codes per state: which state the best path came from.
const FROM_M: u8 = 0;
const FROM_X: u8 = 1;
const FROM_Y: u8 = 2;
// Skipped a free (zero-cost) OCR character while staying in the same state.
const FROM_SKIP: u8 = 3;

#[derive(Clone, Copy)]
struct Cell {
    m: i64,
    x: i64,
    y: i64,
}

const DEAD: Cell = Cell {
    m: NEG,
    x: NEG,
    y: NEG,
};

fn best3(m: i64, x: i64, y: i64) -> (i64, u8) {
    // Ties prefer M, then X, then Y.
    let mut best = (m, FROM_M);
    if x > best.0 {
        best = (x, FROM_X);
    }
    if y > best.0 {
        best = (y, FROM_Y);
    }
    best
}

struct Rows {
    lo: Vec<usize>,
    hi: Vec<usize>,
    start: Vec<usize>,
}

impl Rows {
    fn new(n: usize, m: usize, band: Option<usize>) -> Self {
        let mut lo = Vec::with_capacity(n + 1);
        let mut hi = Vec::with_capacity(n + 1);
        let mut start = Vec::with_capacity(n + 2);
        start.push(0);
        for i in 0..=n {
            let (l, h) = match band {
                Some(w) => (i.saturating_sub(w), (i + w).min(m)),
                None => (0, m),
            };
            // Rows entirely right of the matrix (i - w > m) are empty.
            let (l, h) = if l > h { (h + 1, h) } else { (l, h) };
            lo.push(l);
            hi.push(h);
            start.push(start[i] + (h + 1).saturating_sub(l));
        }
        Rows { lo, hi, start }
    }

    fn contains(&self, i: usize, j: usize) -> bool {
        j >= self.lo[i] && j <= self.hi[i]
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        self.start[i] + (j - self.lo[i])
    }
}

/// Affine-gap global alignment restricted to `|i - j| <= band` (or the full
/// matrix when `band` is `None`). `free[j]` marks OCR characters that may be
/// skipped at no cost.
pub(crate) fn gotoh(
    gt: &[char],
    ocr: &[char],
    free: Option<&[bool]>,
    p: &AlignmentParams,
    band: Option<usize>,
) -> CharAlignment {
    let (n, m) = (gt.len(), ocr.len());
    let rows = Rows::new(n, m, band);
    let mut trace = vec![0u8; rows.start[n + 1]];
    let (open, ext) = (p.gap_open as i64, p.gap_extend as i64);
    let is_free = |j: usize| free.is_some_and(|f| f[j]);

    let width = m + 1;
    let mut prev = vec![DEAD; width];
    let mut cur = vec![DEAD; width];

    for i in 0..=n {
        let (lo, hi) = (rows.lo[i], rows.hi[i]);
        for j in lo..=hi {
            let mut c = DEAD;
            let mut t = 0u8;
            if i == 0 && j == 0 {
                c.m = 0;
            }
            if i > 0 && j > 0 && rows.contains(i - 1, j - 1) {
                let d = prev[j - 1];
                let (s, from) = best3(d.m, d.x, d.y);
                if s > NEG {
                    let sub = if gt[i - 1] == ocr[j - 1] {
                        p.match_score
                    } else {
                        p.mismatch
                    } as i64;
                    c.m = s + sub;
                    t |= from;
                }
            }
            if i > 0 && rows.contains(i - 1, j) {
                let u = prev[j];
                let (s, from) = best3(u.m + open + ext, u.x + ext, u.y + open + ext);
                if u.m.max(u.x).max(u.y) > NEG {
                    c.x = s;
                    t |= from << 2;
                }
            }
            if j > 0 && rows.contains(i, j - 1) {
                let l = cur[j - 1];
                let (s, from) = best3(l.m + open + ext, l.x + open + ext, l.y + ext);
                if l.m.max(l.x).max(l.y) > NEG {
                    c.y = s;
                    t |= from << 4;
                }
                if is_free(j - 1) {
                    if l.m > c.m {
                        c.m = l.m;
                        t = (t & !0b11) | FROM_SKIP;
                    }
                    if l.x > c.x {
                        c.x = l.x;
                        t = (t & !(0b11 << 2)) | (FROM_SKIP << 2);
                    }
                    if l.y > c.y {
                        c.y = l.y;
                        t = (t & !(0b11 << 4)) | (FROM_SKIP << 4);
                    }
                }
            }
            cur[j] = c;
            trace[rows.idx(i, j)] = t;
        }
        if i < n {
            std::mem::swap(&mut prev, &mut cur);
            for c in cur.iter_mut() {
                *c = DEAD;
            }
        }
    }

    let end = cur[m];
    let (score, mut state) = best3(end.m, end.x, end.y);
    let mut pairs = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let t = trace[rows.idx(i, j)];
        let from = (t >> (2 * state)) & 0b11;
        if from == FROM_SKIP {
            pairs.push((None, Some(j - 1)));
            j -= 1;
            continue;
        }
        match state {
            FROM_M => {
                pairs.push((Some(i - 1), Some(j - 1)));
                i -= 1;
                j -= 1;
            }
            FROM_X => {
                pairs.push((Some(i - 1), None));
                i -= 1;
            }
            _ => {
                pairs.push((None, Some(j - 1)));
                j -= 1;
            }
        }
        state = from;
    }
    pairs.reverse();
    CharAlignment { pairs, score }
}

/// Optimal global alignment within a diagonal band of `params.band_width`,
/// falling back to the full matrix when the length difference does not fit
/// in the band.
pub fn banded_char_align(gt: &[char], ocr: &[char], params: &AlignmentParams) -> Result<CharAlignment> {
    banded_char_align_with_joins(gt, ocr, None, params)
}

/// As [`banded_char_align`], with OCR characters in `joins` skippable at no cost.
pub fn banded_char_align_with_joins(
    gt: &[char],
    ocr: &[char],
    joins: Option<&[bool]>,
    params: &AlignmentParams,
) -> Result<CharAlignment> {
    let longest = gt.len().max(ocr.len());
    if longest > params.max_segment_len {
        return Err(Error::SegmentTooLong {
            gt_len: gt.len(),
            ocr_len: ocr.len(),
            limit: params.max_segment_len,
        });
    }
    if let Some(j) = joins {
        if j.len() != ocr.len() {
            return Err(Error::InvalidInput("join mask length differs from OCR length".into()));
        }
    }
    let band = (gt.len().abs_diff(ocr.len()) < params.band_width).then_some(params.band_width);
    Ok(gotoh(gt, ocr, joins, params, band))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    fn params() -> AlignmentParams {
        AlignmentParams::default()
    }

    #[test]
    fn identity() {
        let a = chars("abc");
        let r = banded_char_align(&a, &a, &params()).unwrap();
        assert_eq!(r.score, 3);
        assert_eq!(r.matches(&a, &a), 3);
        assert_eq!(r.pairs, [(Some(0), Some(0)), (Some(1), Some(1)), (Some(2), Some(2))]);
    }

    #[test]
    fn kitten_sitting() {
        let (a, b) = (chars("kitten"), chars("sitting"));
        let r = banded_char_align(&a, &b, &params()).unwrap();
        let subs = r
            .pairs
            .iter()
            .filter(|p| matches!(p, (Some(g), Some(o)) if a[*g] != b[*o]))
            .count();
        let gaps = r.pairs.iter().filter(|p| p.0.is_none() || p.1.is_none()).count();
        assert_eq!((subs, gaps), (2, 1));
        // four matches, two mismatches, one opened gap of length one
        assert_eq!(r.score, 4 - 2 - 3);
        assert!(r.is_complete(6, 7));
    }

    #[test]
    fn against_empty() {
        let a = chars("abc");
        let r = banded_char_align(&a, &[], &params()).unwrap();
        assert_eq!(r.score, -2 + 3 * -1);
        assert_eq!(r.pairs, [(Some(0), None), (Some(1), None), (Some(2), None)]);
        let r = banded_char_align(&[], &[], &params()).unwrap();
        assert_eq!((r.score, r.pairs.len()), (0, 0));
    }

    #[test]
    fn full_matrix_fallback_for_skewed_lengths() {
        let p = AlignmentParams {
            band_width: 2,
            anchor_ngram: 2,
            ..params()
        };
        let a = chars("abcdefgh");
        let b = chars("xxxxxabcdefgh");
        let r = banded_char_align(&a, &b, &p).unwrap();
        assert_eq!(r.matches(&a, &b), 8);
        assert_eq!(r.score, 8 - 2 - 5);
    }

    #[test]
    fn too_long_segment_is_an_error() {
        let p = AlignmentParams {
            max_segment_len: 4,
            ..params()
        };
        let err = banded_char_align(&chars("abcde"), &chars("abc"), &p).unwrap_err();
        assert!(matches!(err, Error::SegmentTooLong { limit: 4, .. }));
        assert!(err.to_string().contains("raise"));
    }

    #[test]
    fn hyphen_join_is_free() {
        let gt = chars("geschichte");
        let ocr = chars("ge- schichte");
        let mut joins = vec![false; ocr.len()];
        joins[2] = true;
        joins[3] = true;
        let r = banded_char_align_with_joins(&gt, &ocr, Some(&joins), &params()).unwrap();
        assert_eq!(r.score, 10);
        assert!(r.is_complete(10, 12));
        let plain = banded_char_align(&gt, &ocr, &params()).unwrap();
        assert_eq!(plain.score, 10 - 2 - 2);
    }
}
