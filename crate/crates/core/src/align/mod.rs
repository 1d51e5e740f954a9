//! Forced alignment of edition page text against OCR output.
//!
//! Two passes: unique n-gram anchors pin the coarse correspondence, then a
//! banded affine-gap DP aligns the characters between anchors.

mod anchors;
mod books;
mod dp;
mod page;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ocr::NormalizationConfig;

pub use anchors::{chain_anchors, find_anchors, Anchor, AnchorChain};
pub use books::{match_books, score_page_pair, BookMatchReport, BookThresholds, PageMatch};
pub use dp::{banded_char_align, banded_char_align_with_joins, CharAlignment};
pub use page::{align_page, LineAssignment, PageAlignment, RegionSpan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct AlignmentParams {
    #[serde(rename = "anchor-ngram-length")]
    pub anchor_ngram: usize,
    pub band_width: usize,
    pub match_score: i32,
    #[serde(rename = "mismatch-cost")]
    pub mismatch: i32,
    pub gap_open: i32,
    pub gap_extend: i32,
    /// Share of a line's matched characters one region must hold.
    pub min_line_assign_fraction: f64,
    /// Share of a line's characters that must be matched at all before the
    /// line is assigned; keeps noise lines unassigned.
    pub min_line_match_fraction: f64,
    /// Similarity needed to place a region that no anchor seeds onto a run
    /// of unassigned OCR lines.
    pub short_region_min_similarity: f64,
    /// Longest segment handed to the DP.
    pub max_segment_len: usize,
    pub normalization: NormalizationConfig,
}

impl Default for AlignmentParams {
    fn default() -> Self {
        AlignmentParams {
            anchor_ngram: 12,
            band_width: 64,
            match_score: 1,
            mismatch: -1,
            gap_open: -2,
            gap_extend: -1,
            min_line_assign_fraction: 0.5,
            min_line_match_fraction: 0.3,
            short_region_min_similarity: 0.5,
            max_segment_len: 8192,
            normalization: NormalizationConfig::default(),
        }
    }
}

impl AlignmentParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("alignment params: {m}")));
        if self.anchor_ngram == 0 {
            return fail("anchor-ngram-length must be positive");
        }
        if self.band_width < self.anchor_ngram {
            return fail("band-width must be at least anchor-ngram-length");
        }
        if self.match_score <= self.mismatch {
            return fail("match-score must exceed mismatch-cost");
        }
        if self.gap_open > 0 || self.gap_extend > 0 {
            return fail("gap penalties must not be positive");
        }
        for (name, v) in [
            ("min-line-assign-fraction", self.min_line_assign_fraction),
            ("min-line-match-fraction", self.min_line_match_fraction),
            ("short-region-min-similarity", self.short_region_min_similarity),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(&format!("{name} must lie in [0, 1]"));
            }
        }
        if self.max_segment_len == 0 {
            return fail("max-segment-len must be positive");
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let p: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

/// Anchor-seeded alignment of two whole texts: anchors are taken verbatim and
/// the gaps between them are aligned by the banded DP.
pub fn align_texts(
    gt: &[char],
    ocr: &[char],
    joins: Option<&[bool]>,
    params: &AlignmentParams,
) -> Result<CharAlignment> {
    let chain = chain_anchors(&find_anchors(gt, ocr, params.anchor_ngram));
    let mut out = CharAlignment::default();
    let (mut g, mut o) = (0, 0);
    let segment = |g0: usize, g1: usize, o0: usize, o1: usize| {
        banded_char_align_with_joins(&gt[g0..g1], &ocr[o0..o1], joins.map(|j| &j[o0..o1]), params)
            .map(|a| a.shifted(g0, o0))
    };
    for a in &chain.anchors {
        let seg = segment(g, a.gt, o, a.ocr)?;
        out.score += seg.score;
        out.pairs.extend(seg.pairs);
        out.pairs.extend((0..a.len).map(|k| (Some(a.gt + k), Some(a.ocr + k))));
        out.score += a.len as i64 * params.match_score as i64;
        g = a.gt + a.len;
        o = a.ocr + a.len;
    }
    let seg = segment(g, gt.len(), o, ocr.len())?;
    out.score += seg.score;
    out.pairs.extend(seg.pairs);
    Ok(out)
}
