//! Edit-distance primitives and the page-level text metrics.
//!
//! Distances count Unicode scalar values, not bytes or graphemes.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::matching::MatchAssignment;
use crate::normalize::{normalize_block_content, normalize_text, NormalizationConfig};
use crate::schema::{BlockCategory, PageDocument};

/// Joins block texts in the page-level concatenation.
pub const GLOBAL_TEXT_JOINER: &str = " ";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NedScore {
    pub distance: usize,
    pub max_len: usize,
    pub ned: f64,
}

impl NedScore {
    fn new(distance: usize, max_len: usize) -> Self {
        let ned = if max_len == 0 {
            0.0
        } else {
            distance as f64 / max_len as f64
        };
        Self {
            distance,
            max_len,
            ned,
        }
    }
}

/// Levenshtein distance over arbitrary comparable symbols.
///
/// Shared prefixes and suffixes are trimmed first; the remainder runs through
/// Myers' bit-parallel algorithm in 64-row blocks, using the shorter sequence
/// as the pattern.
pub fn levenshtein_seq<T: Eq + Hash + Copy>(a: &[T], b: &[T]) -> usize {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);
    let (pattern, text) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if pattern.is_empty() {
        return text.len();
    }
    myers(pattern, text)
}

fn myers<T: Eq + Hash + Copy>(pattern: &[T], text: &[T]) -> usize {
    let m = pattern.len();
    let words = m.div_ceil(64);
    let mut peq: HashMap<T, Vec<u64>> = HashMap::new();
    for (i, &symbol) in pattern.iter().enumerate() {
        peq.entry(symbol).or_insert_with(|| vec![0; words])[i / 64] |= 1u64 << (i % 64);
    }
    let absent = vec![0u64; words];
    let mut pv = vec![!0u64; words];
    let mut mv = vec![0u64; words];
    let last_bit = 1u64 << ((m - 1) % 64);
    let mut score = m as isize;

    for symbol in text {
        let eq = peq.get(symbol).unwrap_or(&absent);
        // The top row of the DP matrix grows by one per column.
        let mut carry = 1i32;
        for w in 0..words {
            let high = if w + 1 == words { last_bit } else { 1u64 << 63 };
            carry = advance_block(&mut pv[w], &mut mv[w], eq[w], carry, high);
        }
        score += carry as isize;
    }
    score as usize
}

/// One 64-row block of a DP column. `carry_in` and the return value are the
/// horizontal deltas entering the block's top row and leaving its bottom row.
#[inline]
fn advance_block(pv: &mut u64, mv: &mut u64, eq: u64, carry_in: i32, high: u64) -> i32 {
    let mut eq = eq;
    let xv = eq | *mv;
    if carry_in < 0 {
        eq |= 1;
    }
    let xh = (((eq & *pv).wrapping_add(*pv)) ^ *pv) | eq;
    let mut ph = *mv | !(xh | *pv);
    let mut mh = *pv & xh;
    let carry_out = if ph & high != 0 {
        1
    } else if mh & high != 0 {
        -1
    } else {
        0
    };
    ph <<= 1;
    mh <<= 1;
    if carry_in < 0 {
        mh |= 1;
    } else if carry_in > 0 {
        ph |= 1;
    }
    *pv = mh | !(xv | ph);
    *mv = ph & xv;
    carry_out
}

pub fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    levenshtein_seq(a, b)
}

/// Minimum number of single-codepoint insertions, deletions and substitutions.
pub fn levenshtein(a: &str, b: &str) -> usize {
    if a == b {
        return 0;
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_seq(&a, &b)
}

pub fn ned_score(a: &str, b: &str) -> NedScore {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    NedScore::new(levenshtein_seq(&a, &b), a.len().max(b.len()))
}

/// Levenshtein distance over the longer length; 0 when both are empty.
pub fn ned(a: &str, b: &str) -> f64 {
    ned_score(a, b).ned
}

pub fn ned_chars(a: &[char], b: &[char]) -> f64 {
    ned_seq(a, b)
}

pub fn ned_seq<T: Eq + Hash + Copy>(a: &[T], b: &[T]) -> f64 {
    NedScore::new(levenshtein_seq(a, b), a.len().max(b.len())).ned
}

/// The page's text as one string: normalized text-like blocks in reading
/// order, headers and footers left out, empty blocks skipped.
pub fn global_text(doc: &PageDocument, cfg: &NormalizationConfig) -> String {
    let mut parts = Vec::new();
    for block in &doc.blocks {
        if block.category.is_text_like() && !block.category.excluded_from_global_text() {
            let text = normalize_text(&block.content, cfg);
            if !text.is_empty() {
                parts.push(text);
            }
        }
    }
    parts.join(GLOBAL_TEXT_JOINER)
}

/// NED between the two pages' concatenated texts. Insensitive to how the
/// text is split into blocks.
pub fn global_text_edit(pred: &PageDocument, gt: &PageDocument, cfg: &NormalizationConfig) -> f64 {
    ned(&global_text(pred, cfg), &global_text(gt, cfg))
}

/// Mean NED over the matched pairs of one category, where every unmatched
/// block of that category on either side counts as 1.0.
pub fn category_edit(
    pred: &PageDocument,
    gt: &PageDocument,
    category: BlockCategory,
    assignment: &MatchAssignment,
    cfg: &NormalizationConfig,
) -> f64 {
    let restricted = assignment.restrict_to(category, pred, gt);
    let mut total = 0.0;
    let mut count = 0usize;
    for pair in &restricted.pairs {
        let p = normalize_block_content(category, &pred.blocks[pair.pred].content, cfg);
        let g = normalize_block_content(category, &gt.blocks[pair.gt].content, cfg);
        total += ned(&p, &g);
        count += 1;
    }
    let misses = restricted.unmatched_pred.len() + restricted.unmatched_gt.len();
    total += misses as f64;
    count += misses;
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::MatchedPair;
    use crate::schema::Block;

    fn dp(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut prev: Vec<usize> = (0..=b.len()).collect();
        for i in 1..=a.len() {
            let mut cur = vec![i; b.len() + 1];
            for j in 1..=b.len() {
                let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
                cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
            }
            prev = cur;
        }
        prev[b.len()]
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("abc", "abc"), 0);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), dp("kitten", "sitting"));
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("中文字", "中字"), 1);
    }

    #[test]
    fn multiword_blocks_agree_with_dp() {
        let a: String = (0..300)
            .map(|i| ["a", "b", "c"][(i * 7 + i / 5) % 3])
            .collect();
        let b: String = (0..260)
            .map(|i| ["a", "b", "c"][(i * 11 + i / 3) % 3])
            .collect();
        assert_eq!(levenshtein(&a, &b), dp(&a, &b));
        let c = format!("x{a}");
        assert_eq!(levenshtein(&a, &c), 1);
    }

    #[test]
    fn ned_examples() {
        assert_eq!(ned("x", "x"), 0.0);
        assert_eq!(ned("abcd", ""), 1.0);
        assert_eq!(ned("", ""), 0.0);
        assert_eq!(ned("kitten", "sitting"), 3.0 / 7.0);
        let s = ned_score("kitten", "sitting");
        assert_eq!((s.distance, s.max_len), (3, 7));
    }

    fn page(blocks: &[(BlockCategory, &str)]) -> PageDocument {
        PageDocument::default().with_blocks(
            blocks
                .iter()
                .map(|(c, t)| Block::new(*c, None, *t))
                .collect(),
        )
    }

    #[test]
    fn global_text_examples() {
        let cfg = NormalizationConfig::default();
        let gt = page(&[(BlockCategory::Text, "alpha beta")]);
        assert_eq!(global_text_edit(&gt, &gt, &cfg), 0.0);
        let split = page(&[
            (BlockCategory::Text, "alpha"),
            (BlockCategory::Title, "beta"),
        ]);
        assert_eq!(global_text_edit(&split, &gt, &cfg), 0.0);
        let typo = page(&[(BlockCategory::Text, "alpha bata")]);
        assert_eq!(global_text_edit(&typo, &gt, &cfg), 0.1);
    }

    #[test]
    fn global_text_skips_furniture_and_non_text() {
        let cfg = NormalizationConfig::default();
        let doc = page(&[
            (BlockCategory::Header, "running head"),
            (BlockCategory::Text, "body"),
            (BlockCategory::Formula, "x^2"),
            (BlockCategory::Caption, "Fig. 1"),
            (BlockCategory::Footer, "3"),
        ]);
        assert_eq!(global_text(&doc, &cfg), "body Fig. 1");
    }

    #[test]
    fn category_edit_aggregation() {
        let cfg = NormalizationConfig::default();
        let none = page(&[(BlockCategory::Text, "a")]);
        let empty = MatchAssignment::default();
        assert_eq!(
            category_edit(&none, &none, BlockCategory::Formula, &empty, &cfg),
            0.0
        );

        let gt = page(&[(BlockCategory::Formula, "x")]);
        let unmatched = MatchAssignment {
            pairs: vec![],
            unmatched_pred: vec![0],
            unmatched_gt: vec![0],
        };
        assert_eq!(
            category_edit(&none, &gt, BlockCategory::Formula, &unmatched, &cfg),
            1.0
        );

        // one pair at ned 0.2 and one missed ground-truth formula
        let gt = page(&[
            (BlockCategory::Formula, "abcde"),
            (BlockCategory::Formula, "zz"),
        ]);
        let pred = page(&[(BlockCategory::Formula, "abcdX")]);
        let m = MatchAssignment {
            pairs: vec![MatchedPair {
                pred: 0,
                gt: 0,
                similarity: 0.8,
            }],
            unmatched_pred: vec![],
            unmatched_gt: vec![1],
        };
        let got = category_edit(&pred, &gt, BlockCategory::Formula, &m, &cfg);
        assert!((got - 0.6).abs() < 1e-12);
    }
}
