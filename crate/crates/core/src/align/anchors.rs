use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// A run of characters shared by both texts; `gt` and `ocr` are start offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Anchor {
    pub gt: usize,
    pub ocr: usize,
    pub len: usize,
}

impl Anchor {
    pub fn new(gt: usize, ocr: usize, len: usize) -> Self {
        Anchor { gt, ocr, len }
    }

    /// `next` starts after `self` ends on both sides.
    pub fn precedes(&self, next: &Anchor) -> bool {
        next.gt >= self.gt + self.len && next.ocr >= self.ocr + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnchorChain {
    pub anchors: Vec<Anchor>,
    /// No input anchor had to be dropped.
    pub monotone: bool,
}

impl AnchorChain {
    pub fn total_len(&self) -> usize {
        self.anchors.iter().map(|a| a.len).sum()
    }
}

fn unique_ngrams(text: &[char], n: usize) -> HashMap<&[char], Option<usize>> {
    let mut seen: HashMap<&[char], Option<usize>> = HashMap::new();
    if n == 0 || text.len() < n {
        return seen;
    }
    for (i, w) in text.windows(n).enumerate() {
        seen.entry(w)
            .and_modify(|pos| *pos = None)
            .or_insert(Some(i));
    }
    seen
}

/// All n-grams occurring exactly once in each text, merged into maximal
/// diagonal runs. Sorted by GT offset.
pub fn find_anchors(gt: &[char], ocr: &[char], n: usize) -> Vec<Anchor> {
    let in_ocr = unique_ngrams(ocr, n);
    if in_ocr.is_empty() {
        return Vec::new();
    }
    let in_gt = unique_ngrams(gt, n);
    let mut hits: Vec<(usize, usize)> = in_gt
        .iter()
        .filter_map(|(k, g)| Some(((*g)?, in_ocr.get(k).copied()??)))
        .collect();
    hits.sort_unstable();

    let mut out: Vec<Anchor> = Vec::new();
    for (g, o) in hits {
        if let Some(last) = out.last_mut() {
            // The next window on the same diagonal extends the run by one.
            if g == last.gt + last.len - n + 1 && o == last.ocr + last.len - n + 1 {
                last.len += 1;
                continue;
            }
        }
        out.push(Anchor::new(g, o, n));
    }
    out
}

/// Maximum-total-length subset that increases in both coordinates without
/// overlap. Among optimal chains the lexicographically smallest sequence of
/// (gt, ocr, len) triples wins, i.e. earliest GT offset first.
pub fn chain_anchors(anchors: &[Anchor]) -> AnchorChain {
    let mut sorted = anchors.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let k = sorted.len();
    // best[i]: longest chain starting at i.
    let mut best = vec![0usize; k];
    for i in (0..k).rev() {
        let tail = (i + 1..k)
            .filter(|&j| sorted[i].precedes(&sorted[j]))
            .map(|j| best[j])
            .max()
            .unwrap_or(0);
        best[i] = sorted[i].len + tail;
    }
    let mut chain = Vec::new();
    if let Some(&top) = best.iter().max() {
        let mut need = top;
        let mut from: Option<usize> = None;
        while need > 0 {
            let start = from.map_or(0, |f| f + 1);
            let next = (start..k)
                .find(|&j| best[j] == need && from.is_none_or(|f| sorted[f].precedes(&sorted[j])))
                .expect("chain continuation exists");
            chain.push(sorted[next]);
            need -= sorted[next].len;
            from = Some(next);
        }
    }
    AnchorChain {
        monotone: chain.len() == anchors.len(),
        anchors: chain,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    fn random_text(rng: &mut ChaCha8Rng, len: usize) -> Vec<char> {
        (0..len).map(|_| (b'a' + rng.gen_range(0..26)) as char).collect()
    }

    #[test]
    fn identical_texts_give_one_anchor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_text(&mut rng, 100);
        assert_eq!(find_anchors(&t, &t, 12), [Anchor::new(0, 0, 100)]);
    }

    #[test]
    fn single_shared_ngram() {
        let shared = "uniqueshared";
        let gt = chars(&format!("01234{shared}abcdefgh"));
        let ocr = chars(&format!("{}{shared}zz", "#".repeat(40)));
        assert_eq!(find_anchors(&gt, &ocr, 12), [Anchor::new(5, 40, 12)]);
    }

    #[test]
    fn repeated_ngram_is_not_an_anchor() {
        let rep = "repeatedgram";
        let gt = chars(&format!("{rep} x {rep}"));
        let ocr = chars(rep);
        assert!(find_anchors(&gt, &ocr, 12).is_empty());
    }

    #[test]
    fn monotone_input_unchanged() {
        let a = [Anchor::new(0, 0, 12), Anchor::new(20, 25, 12), Anchor::new(40, 50, 15)];
        let c = chain_anchors(&a);
        assert_eq!(c.anchors, a);
        assert!(c.monotone);
    }

    #[test]
    fn crossing_pair_keeps_earliest() {
        let c = chain_anchors(&[Anchor::new(20, 10, 12), Anchor::new(0, 50, 12)]);
        assert_eq!(c.anchors, [Anchor::new(0, 50, 12)]);
        assert!(!c.monotone);
    }

    fn brute_force(anchors: &[Anchor]) -> (usize, Vec<Anchor>) {
        // Exhaustive search over chains, extended one anchor at a time.
        let mut sorted = anchors.to_vec();
        sorted.sort();
        fn go(sorted: &[Anchor], from: Option<usize>, cur: &mut Vec<Anchor>, best: &mut (usize, Vec<Anchor>)) {
            let total: usize = cur.iter().map(|a| a.len).sum();
            if total > best.0 || (total == best.0 && *cur < best.1) {
                *best = (total, cur.clone());
            }
            let start = from.map_or(0, |f| f + 1);
            for j in start..sorted.len() {
                if from.is_none_or(|f| sorted[f].precedes(&sorted[j])) {
                    cur.push(sorted[j]);
                    go(sorted, Some(j), cur, best);
                    cur.pop();
                }
            }
        }
        let mut best = (0, Vec::new());
        go(&sorted, None, &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn random_fixture_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for round in 0..20 {
            let count = if round == 0 { 50 } else { rng.gen_range(1..18) };
            let anchors: Vec<Anchor> = (0..count)
                .map(|_| Anchor::new(rng.gen_range(0..2000), rng.gen_range(0..2000), rng.gen_range(12..40)))
                .collect();
            let (total, chain) = brute_force(&anchors);
            let got = chain_anchors(&anchors);
            assert_eq!(got.total_len(), total, "round {round}");
            assert_eq!(got.anchors, chain, "round {round}");
        }
    }
}
