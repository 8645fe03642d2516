//! Correspondence between predicted and ground-truth blocks.
//!
//! Blocks are paired by content similarity (`1 - NED` of their normalized
//! contents) through an optimal assignment that maximizes total similarity.
//! Pairs below the threshold or across incompatible categories are never
//! formed. Costs are solved in exact integer arithmetic: similarities are
//! quantized to 2^-30 and a secondary term prefers pairings between low
//! indices and, after that, order-preserving pairings. The result is
//! deterministic, and a page matched against itself yields the identity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::{normalize_block_content, NormalizationConfig};
use crate::schema::{BlockCategory, PageDocument};
use crate::textmetrics::levenshtein_chars;

#[derive(Debug, Error, PartialEq)]
pub enum MatchConfigError {
    #[error("match threshold must lie in [0, 1], got {0}")]
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    pub threshold: f64,
    /// Only pair blocks of the same category, with text, title and caption
    /// treated as one class.
    pub category_must_agree: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            threshold: 0.4,
            category_must_agree: true,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), MatchConfigError> {
        if (0.0..=1.0).contains(&self.threshold) {
            Ok(())
        } else {
            Err(MatchConfigError::Threshold(self.threshold))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub pred: usize,
    pub gt: usize,
    pub similarity: f64,
}

/// A partial bijection between predicted and ground-truth blocks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchAssignment {
    /// Sorted by ground-truth index.
    pub pairs: Vec<MatchedPair>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gt: Vec<usize>,
}

impl MatchAssignment {
    pub fn total_similarity(&self) -> f64 {
        self.pairs.iter().map(|p| p.similarity).sum()
    }

    /// The part of the assignment concerning `category`: pairs whose
    /// ground-truth block has that category, plus every block of that
    /// category on either side that is not in one of those pairs.
    pub fn restrict_to(
        &self,
        category: BlockCategory,
        pred: &PageDocument,
        gt: &PageDocument,
    ) -> MatchAssignment {
        let pairs: Vec<MatchedPair> = self
            .pairs
            .iter()
            .filter(|p| gt.blocks[p.gt].category == category)
            .copied()
            .collect();
        let unmatched_gt = (0..gt.blocks.len())
            .filter(|&i| gt.blocks[i].category == category && !pairs.iter().any(|p| p.gt == i))
            .collect();
        let unmatched_pred = (0..pred.blocks.len())
            .filter(|&i| pred.blocks[i].category == category && !pairs.iter().any(|p| p.pred == i))
            .collect();
        MatchAssignment {
            pairs,
            unmatched_pred,
            unmatched_gt,
        }
    }
}

/// A page's block categories and normalized contents, computed once and
/// shared by every metric that needs them.
#[derive(Debug, Clone)]
pub struct PreparedPage {
    pub categories: Vec<BlockCategory>,
    pub contents: Vec<Vec<char>>,
}

impl PreparedPage {
    pub fn new(doc: &PageDocument, cfg: &NormalizationConfig) -> Self {
        Self {
            categories: doc.blocks.iter().map(|b| b.category).collect(),
            contents: doc
                .blocks
                .iter()
                .map(|b| {
                    normalize_block_content(b.category, &b.content, cfg)
                        .chars()
                        .collect()
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}

fn category_class(category: BlockCategory) -> BlockCategory {
    match category {
        BlockCategory::Title | BlockCategory::Caption => BlockCategory::Text,
        other => other,
    }
}

/// `1 - NED`, or `None` when it is certainly below `threshold`.
fn similarity(a: &[char], b: &[char], threshold: f64) -> Option<f64> {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return Some(1.0);
    }
    let shortest = a.len().min(b.len());
    // The length difference alone is a lower bound on the distance.
    if (shortest as f64 / longest as f64) < threshold {
        return None;
    }
    let sim = 1.0 - levenshtein_chars(a, b) as f64 / longest as f64;
    (sim >= threshold).then_some(sim)
}

pub fn match_blocks(
    pred: &PageDocument,
    gt: &PageDocument,
    cfg: &MatchConfig,
    norm: &NormalizationConfig,
) -> MatchAssignment {
    match_prepared(
        &PreparedPage::new(pred, norm),
        &PreparedPage::new(gt, norm),
        cfg,
    )
}

const SIM_SCALE: f64 = (1u64 << 30) as f64;

pub fn match_prepared(
    pred: &PreparedPage,
    gt: &PreparedPage,
    cfg: &MatchConfig,
) -> MatchAssignment {
    let n = pred.len().max(gt.len()) as i128;
    let order_weight = n * n * n + 1;
    let sim_weight = 2 * n.pow(5) + n.pow(3) + 2 * n * n + 1;

    let mut groups: Vec<(BlockCategory, Vec<usize>, Vec<usize>)> = Vec::new();
    if cfg.category_must_agree {
        for class in BlockCategory::ALL {
            let g: Vec<usize> = (0..gt.len())
                .filter(|&i| category_class(gt.categories[i]) == class)
                .collect();
            let p: Vec<usize> = (0..pred.len())
                .filter(|&j| category_class(pred.categories[j]) == class)
                .collect();
            if !g.is_empty() && !p.is_empty() {
                groups.push((class, g, p));
            }
        }
    } else if !gt.is_empty() && !pred.is_empty() {
        groups.push((
            BlockCategory::Other,
            (0..gt.len()).collect(),
            (0..pred.len()).collect(),
        ));
    }

    let mut pairs = Vec::new();
    for (_, rows, cols) in groups {
        let width = cols.len() + rows.len();
        let mut cost = vec![vec![0i128; width]; rows.len()];
        let mut sims = vec![vec![None; cols.len()]; rows.len()];
        for (r, &gi) in rows.iter().enumerate() {
            for (c, &pj) in cols.iter().enumerate() {
                let sim = similarity(&gt.contents[gi], &pred.contents[pj], cfg.threshold);
                sims[r][c] = sim;
                cost[r][c] = match sim {
                    Some(s) => {
                        let (i, j) = (gi as i128, pj as i128);
                        let tie = (i + j) * order_weight + (i - j) * (i - j);
                        tie - (s * SIM_SCALE).round() as i128 * sim_weight
                    }
                    // Any positive cost loses to the zero-cost dummy column.
                    None => 1,
                };
            }
        }
        let assigned = hungarian(&cost);
        for (r, &c) in assigned.iter().enumerate() {
            if c < cols.len() {
                if let Some(similarity) = sims[r][c] {
                    pairs.push(MatchedPair {
                        pred: cols[c],
                        gt: rows[r],
                        similarity,
                    });
                }
            }
        }
    }
    pairs.sort_by_key(|p| p.gt);

    let mut pred_used = vec![false; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    for p in &pairs {
        pred_used[p.pred] = true;
        gt_used[p.gt] = true;
    }
    MatchAssignment {
        pairs,
        unmatched_pred: (0..pred.len()).filter(|&j| !pred_used[j]).collect(),
        unmatched_gt: (0..gt.len()).filter(|&i| !gt_used[i]).collect(),
    }
}

/// Minimum-cost assignment of every row to a distinct column
/// (rows ≤ columns), by the potentials form of the Hungarian method.
fn hungarian(cost: &[Vec<i128>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    debug_assert!(n <= m);
    let inf = i128::MAX / 4;
    let mut u = vec![0i128; n + 1];
    let mut v = vec![0i128; m + 1];
    // p[j]: row (1-based) assigned to column j; column 0 is the virtual root.
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![usize::MAX; n];
    for j in 1..=m {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Block;

    fn page(texts: &[&str]) -> PageDocument {
        PageDocument::default().with_blocks(
            texts
                .iter()
                .map(|t| Block::new(BlockCategory::Text, None, *t))
                .collect(),
        )
    }

    fn run(pred: &PageDocument, gt: &PageDocument) -> MatchAssignment {
        match_blocks(
            pred,
            gt,
            &MatchConfig::default(),
            &NormalizationConfig::default(),
        )
    }

    #[test]
    fn identity_matching() {
        let doc = page(&["one", "two", "three"]);
        let m = run(&doc, &doc);
        assert_eq!(m.pairs.len(), 3);
        for (k, p) in m.pairs.iter().enumerate() {
            assert_eq!((p.pred, p.gt, p.similarity), (k, k, 1.0));
        }
        assert!(m.unmatched_gt.is_empty() && m.unmatched_pred.is_empty());
    }

    #[test]
    fn duplicates_pair_in_order() {
        let doc = page(&["same", "same", "same"]);
        let m = run(&doc, &doc);
        let pairs: Vec<(usize, usize)> = m.pairs.iter().map(|p| (p.gt, p.pred)).collect();
        assert_eq!(pairs, vec![(0, 0), (1, 1), (2, 2)]);

        let one = page(&["same"]);
        let m = run(&one, &doc);
        assert_eq!((m.pairs[0].gt, m.pairs[0].pred), (0, 0));
        assert_eq!(m.unmatched_gt, vec![1, 2]);
        let m = run(&doc, &one);
        assert_eq!((m.pairs[0].gt, m.pairs[0].pred), (0, 0));
        assert_eq!(m.unmatched_pred, vec![1, 2]);
    }

    #[test]
    fn empty_prediction() {
        let gt = page(&["a", "b"]);
        let m = run(&PageDocument::default(), &gt);
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_gt, vec![0, 1]);
    }

    #[test]
    fn swapped_blocks() {
        let gt = page(&["alpha", "beta"]);
        let pred = page(&["beta", "alpha"]);
        let m = run(&pred, &gt);
        let pairs: Vec<(usize, usize, f64)> = m
            .pairs
            .iter()
            .map(|p| (p.pred, p.gt, p.similarity))
            .collect();
        assert_eq!(pairs, vec![(1, 0, 1.0), (0, 1, 1.0)]);
    }

    #[test]
    fn threshold_and_categories_gate_pairs() {
        let gt = page(&["abcdefghij"]);
        let far = page(&["zzzzzzzzzz"]);
        assert!(run(&far, &gt).pairs.is_empty());

        let mut formula = page(&["abcdefghij"]);
        formula.blocks[0].category = BlockCategory::Formula;
        assert!(run(&formula, &gt).pairs.is_empty());
        let loose = MatchConfig {
            category_must_agree: false,
            ..MatchConfig::default()
        };
        let m = match_blocks(&formula, &gt, &loose, &NormalizationConfig::default());
        assert_eq!(m.pairs.len(), 1);

        let mut title = page(&["abcdefghij"]);
        title.blocks[0].category = BlockCategory::Title;
        assert_eq!(run(&title, &gt).pairs.len(), 1);
    }

    #[test]
    fn config_validation() {
        assert!(MatchConfig::default().validate().is_ok());
        let bad = MatchConfig {
            threshold: 1.5,
            ..MatchConfig::default()
        };
        assert_eq!(bad.validate(), Err(MatchConfigError::Threshold(1.5)));
    }
}
