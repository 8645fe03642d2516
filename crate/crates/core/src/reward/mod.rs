//! Layout-centric reward for one (prediction, ground truth) pair.
//!
//! Three components, each in [0, 1] with 1 meaning a perfect prediction:
//!
//! - text: `1 - NED` of the page-level text concatenations,
//! - bbox: mean IoU over matched blocks, diluted by unmatched blocks,
//! - order: `1 - inversions / max_inversions` over matched blocks.
//!
//! The total is their weighted sum. Using `1 - NED` rather than `-NED` is a
//! positive affine shift, so candidates rank identically and group-relative
//! advantages are unchanged.

pub mod mining;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EvalConfig;
use crate::matching::{match_blocks, MatchAssignment};
use crate::ordermetrics::{inversion_count, order_permutation};
use crate::schema::{parse_page, validate, PageDocument, SchemaError};
use crate::textmetrics::global_text_edit;

pub use mining::{mine_hard_samples, MiningConfig, MiningDecision, MiningOutcome, MiningRecord};

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("invalid ground truth: {0}")]
    InvalidGroundTruth(String),
    #[error("invalid reward weights: {0}")]
    InvalidWeights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    #[serde(rename = "w_text")]
    pub text: f64,
    #[serde(rename = "w_bbox")]
    pub bbox: f64,
    #[serde(rename = "w_order")]
    pub order: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            text: 1.0 / 3.0,
            bbox: 1.0 / 3.0,
            order: 1.0 / 3.0,
        }
    }
}

impl RewardWeights {
    pub const SUM_TOLERANCE: f64 = 1e-6;

    pub fn new(text: f64, bbox: f64, order: f64) -> Result<Self, RewardError> {
        let w = Self { text, bbox, order };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        let all = [self.text, self.bbox, self.order];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(RewardError::InvalidWeights(format!(
                "{self}: weights must be finite and non-negative"
            )));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(RewardError::InvalidWeights(format!(
                "{self}: weights sum to {sum}, not 1"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for RewardWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.text, self.bbox, self.order)
    }
}

impl FromStr for RewardWeights {
    type Err = RewardError;

    /// `"w_text,w_bbox,w_order"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [t, b, o] = parts.as_slice() else {
            return Err(RewardError::InvalidWeights(format!(
                "expected three comma-separated weights, got {s:?}"
            )));
        };
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| RewardError::InvalidWeights(format!("not a number: {v:?}")))
        };
        Self::new(num(t)?, num(b)?, num(o)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_text: f64,
    pub r_bbox: f64,
    pub r_order: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn zero() -> Self {
        Self {
            r_text: 0.0,
            r_bbox: 0.0,
            r_order: 0.0,
            total: 0.0,
        }
    }

    pub fn combine(r_text: f64, r_bbox: f64, r_order: f64, weights: &RewardWeights) -> Self {
        let total = weights.text * r_text + weights.bbox * r_bbox + weights.order * r_order;
        Self {
            r_text,
            r_bbox,
            r_order,
            total: total.clamp(0.0, 1.0),
        }
    }
}

pub fn text_reward(pred: &PageDocument, gt: &PageDocument, cfg: &EvalConfig) -> f64 {
    1.0 - global_text_edit(pred, gt, &cfg.normalize)
}

/// Mean IoU over matched pairs with `max(#pred, #gt)` as denominator. A pair
/// missing either box contributes 0; two empty pages score 1.
pub fn bbox_reward(assignment: &MatchAssignment, pred: &PageDocument, gt: &PageDocument) -> f64 {
    let denom = pred.blocks.len().max(gt.blocks.len());
    if denom == 0 {
        return 1.0;
    }
    let overlap: f64 = assignment
        .pairs
        .iter()
        .map(
            |p| match (&pred.blocks[p.pred].bbox, &gt.blocks[p.gt].bbox) {
                (Some(a), Some(b)) => a.iou(b),
                _ => 0.0,
            },
        )
        .sum();
    overlap / denom as f64
}

pub fn order_reward(assignment: &MatchAssignment, pred: &PageDocument, gt: &PageDocument) -> f64 {
    let perm = order_permutation(assignment, pred, gt);
    if perm.len() <= 1 {
        return 1.0;
    }
    1.0 - inversion_count(&perm) as f64 / perm.max_inversions() as f64
}

/// Reward for two parsed pages.
pub fn reward_pages(
    pred: &PageDocument,
    gt: &PageDocument,
    weights: &RewardWeights,
    cfg: &EvalConfig,
) -> RewardBreakdown {
    let assignment = match_blocks(pred, gt, &cfg.matching, &cfg.normalize);
    RewardBreakdown::combine(
        text_reward(pred, gt, cfg),
        bbox_reward(&assignment, pred, gt),
        order_reward(&assignment, pred, gt),
        weights,
    )
}

/// Parses both pages and scores them. A prediction that does not parse earns
/// nothing; a ground truth that does not parse or validate is an error.
pub fn compute_reward(
    pred_html: &str,
    gt_html: &str,
    weights: &RewardWeights,
    cfg: &EvalConfig,
) -> Result<RewardBreakdown, RewardError> {
    let gt = parse_page(gt_html)
        .map_err(|e: SchemaError| RewardError::InvalidGroundTruth(e.to_string()))?;
    if let Some(v) = validate(&gt).first() {
        return Err(RewardError::InvalidGroundTruth(v.to_string()));
    }
    match parse_page(pred_html) {
        Ok(pred) => Ok(reward_pages(&pred, &gt, weights, cfg)),
        Err(e) => {
            log::debug!("prediction does not parse: {e}");
            Ok(RewardBreakdown::zero())
        }
    }
}
