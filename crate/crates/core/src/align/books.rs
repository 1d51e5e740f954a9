use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{align_texts, AlignmentParams};
use crate::error::Result;

/// Share of matched characters relative to the longer text. Symmetric: the
/// pair is put in a canonical order before aligning.
pub fn score_page_pair(a: &str, b: &str, params: &AlignmentParams) -> Result<f64> {
    let (a, b) = if (a.chars().count(), a) <= (b.chars().count(), b) {
        (a, b)
    } else {
        (b, a)
    };
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return Ok(1.0);
    }
    let al = align_texts(&a, &b, None, params)?;
    Ok(al.matches(&a, &b) as f64 / longest as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct BookThresholds {
    pub page_threshold: f64,
    pub min_scan_aligned: f64,
    pub min_edition_aligned: f64,
    /// Rejection bound; the multimatch share must stay strictly below it.
    pub max_scan_multimatch: f64,
    /// Only pairs sharing at least one character n-gram of this length are
    /// scored; `0` scores every pair.
    pub prefilter_ngram: usize,
}

impl Default for BookThresholds {
    fn default() -> Self {
        BookThresholds {
            page_threshold: 0.5,
            min_scan_aligned: 0.8,
            min_edition_aligned: 0.8,
            max_scan_multimatch: 0.1,
            prefilter_ngram: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageMatch {
    pub scan_page: usize,
    pub edition_page: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookMatchReport {
    pub scan_book_id: String,
    pub edition_id: String,
    pub frac_scan_aligned: f64,
    pub frac_edition_aligned: f64,
    pub frac_scan_multimatch: f64,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Best edition page per aligned scan page.
    pub matches: Vec<PageMatch>,
}

fn shingles(text: &[char], n: usize) -> HashSet<&[char]> {
    if n == 0 {
        return HashSet::new();
    }
    text.windows(n).collect()
}

/// Page-level agreement between a scanned book and an edition.
///
/// Each scan page takes its best edition page (ties to the lower index) as
/// its match when the similarity reaches the page threshold. An edition page
/// is aligned when it is some scan page's match. A scan page multimatches
/// when two or more edition pages reach the threshold.
pub fn match_books(
    scan_id: &str,
    scan: &[String],
    edition_id: &str,
    edition: &[String],
    params: &AlignmentParams,
    thresholds: &BookThresholds,
) -> Result<BookMatchReport> {
    let mut report = BookMatchReport {
        scan_book_id: scan_id.to_string(),
        edition_id: edition_id.to_string(),
        frac_scan_aligned: 0.0,
        frac_edition_aligned: 0.0,
        frac_scan_multimatch: 0.0,
        accepted: false,
        reason: None,
        matches: Vec::new(),
    };
    if scan.is_empty() || edition.is_empty() {
        let side = if scan.is_empty() { "scanned book" } else { "edition" };
        report.reason = Some(format!("{side} has no pages"));
        return Ok(report);
    }

    let n = thresholds.prefilter_ngram;
    let scan_chars: Vec<Vec<char>> = scan.iter().map(|s| s.chars().collect()).collect();
    let ed_chars: Vec<Vec<char>> = edition.iter().map(|s| s.chars().collect()).collect();
    let ed_shingles: Vec<HashSet<&[char]>> = ed_chars.iter().map(|t| shingles(t, n)).collect();

    let per_scan: Vec<Vec<(usize, f64)>> = scan
        .par_iter()
        .enumerate()
        .map(|(si, text)| {
            let mine = shingles(&scan_chars[si], n);
            edition
                .iter()
                .enumerate()
                .filter(|(ei, _)| n == 0 || !mine.is_disjoint(&ed_shingles[*ei]))
                .map(|(ei, ed)| score_page_pair(text, ed, params).map(|s| (ei, s)))
                .filter(|r| r.as_ref().map_or(true, |(_, s)| *s >= thresholds.page_threshold))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut edition_hit = vec![false; edition.len()];
    let mut multi = 0usize;
    for (si, hits) in per_scan.iter().enumerate() {
        if hits.len() >= 2 {
            multi += 1;
        }
        let best = hits
            .iter()
            .copied()
            .reduce(|a, b| if b.1 > a.1 { b } else { a });
        if let Some((ei, sim)) = best {
            edition_hit[ei] = true;
            report.matches.push(PageMatch {
                scan_page: si,
                edition_page: ei,
                similarity: sim,
            });
        }
    }
    report.frac_scan_aligned = report.matches.len() as f64 / scan.len() as f64;
    report.frac_edition_aligned = edition_hit.iter().filter(|h| **h).count() as f64 / edition.len() as f64;
    report.frac_scan_multimatch = multi as f64 / scan.len() as f64;
    report.accepted = report.frac_scan_aligned >= thresholds.min_scan_aligned
        && report.frac_edition_aligned >= thresholds.min_edition_aligned
        && report.frac_scan_multimatch < thresholds.max_scan_multimatch;
    if !report.accepted {
        report.reason = Some(format!(
            "scan aligned {:.2}, edition aligned {:.2}, scan multimatch {:.2}",
            report.frac_scan_aligned, report.frac_edition_aligned, report.frac_scan_multimatch
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p() -> AlignmentParams {
        AlignmentParams::default()
    }

    fn random_page(rng: &mut ChaCha8Rng, len: usize, alphabet: &[u8]) -> String {
        (0..len)
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())] as char)
            .collect()
    }

    #[test]
    fn pair_scores() {
        assert_eq!(score_page_pair("abc def", "abc def", &p()).unwrap(), 1.0);
        assert_eq!(score_page_pair("abc", "xyz", &p()).unwrap(), 0.0);
        assert_eq!(score_page_pair("", "", &p()).unwrap(), 1.0);
        assert_eq!(score_page_pair("", "abc", &p()).unwrap(), 0.0);
    }

    #[test]
    fn half_overlapping_pair() {
        // Shared prefix of 20 characters, then disjoint alphabets.
        let a = "abcdefghijabcdefghijKLMNOPQRSTKLMNOPQRST";
        let b = "abcdefghijabcdefghij0123456789012345678901234";
        // Oracle: the 20 shared characters are the only possible matches.
        assert_eq!(score_page_pair(a, b, &p()).unwrap(), 20.0 / 45.0);
    }

    fn book(seed: u64, pages: usize) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..pages)
            .map(|_| random_page(&mut rng, 400, b"abcdefghijklmnopqrstuvwxyz "))
            .collect()
    }

    #[test]
    fn identical_books_accepted() {
        let b = book(1, 10);
        let r = match_books("s", &b, "e", &b, &p(), &BookThresholds::default()).unwrap();
        assert_eq!((r.frac_scan_aligned, r.frac_edition_aligned, r.frac_scan_multimatch), (1.0, 1.0, 0.0));
        assert!(r.accepted);
        assert!(r.reason.is_none());
    }

    #[test]
    fn seven_of_ten_rejected() {
        let ed = book(2, 10);
        let mut scan = ed.clone();
        let other = book(3, 3);
        scan[7..].clone_from_slice(&other);
        let r = match_books("s", &scan, "e", &ed, &p(), &BookThresholds::default()).unwrap();
        assert_eq!(r.frac_scan_aligned, 0.7);
        assert!(!r.accepted);
    }

    #[test]
    fn duplicated_edition_pages_multimatch() {
        let scan = book(4, 5);
        let ed: Vec<String> = scan.iter().flat_map(|p| [p.clone(), p.clone()]).collect();
        let r = match_books("s", &scan, "e", &ed, &p(), &BookThresholds::default()).unwrap();
        assert_eq!(r.frac_scan_multimatch, 1.0);
        assert!(!r.accepted);
    }

    #[test]
    fn empty_book_rejected_with_reason() {
        let r = match_books("s", &[], "e", &book(5, 2), &p(), &BookThresholds::default()).unwrap();
        assert!(!r.accepted);
        assert!(r.reason.unwrap().contains("no pages"));
    }

    #[test]
    fn prefilter_does_not_change_verdict() {
        let ed = book(6, 6);
        let mut scan = ed.clone();
        scan[0] = book(7, 1).remove(0);
        let with = match_books("s", &scan, "e", &ed, &p(), &BookThresholds::default()).unwrap();
        let without = match_books(
            "s",
            &scan,
            "e",
            &ed,
            &p(),
            &BookThresholds {
                prefilter_ngram: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(with, without);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn symmetric(a in "[abc ]{0,60}", b in "[abc ]{0,60}") {
            let x = score_page_pair(&a, &b, &p()).unwrap();
            let y = score_page_pair(&b, &a, &p()).unwrap();
            prop_assert_eq!(x, y);
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }
}
