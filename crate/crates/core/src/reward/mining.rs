//! Hard-sample mining: keep the samples whose page-level text NED falls in a
//! "hard but learnable" band.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::map_ordered;
use crate::normalize::NormalizationConfig;
use crate::schema::{parse_page, PageDocument};
use crate::textmetrics::global_text_edit;

#[derive(Debug, Error, PartialEq)]
#[error("invalid mining range [{lo}, {hi}]: need 0 <= lo <= hi <= 1")]
pub struct MiningRangeError {
    pub lo: f64,
    pub hi: f64,
}

/// Inclusive NED band `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    pub lo: f64,
    pub hi: f64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self { lo: 0.5, hi: 0.8 }
    }
}

impl MiningConfig {
    pub fn new(lo: f64, hi: f64) -> Result<Self, MiningRangeError> {
        let cfg = Self { lo, hi };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MiningRangeError> {
        let ok = self.lo.is_finite()
            && self.hi.is_finite()
            && 0.0 <= self.lo
            && self.lo <= self.hi
            && self.hi <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(MiningRangeError {
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    pub fn contains(&self, ned: f64) -> bool {
        self.lo <= ned && ned <= self.hi
    }
}

impl std::str::FromStr for MiningConfig {
    type Err = String;

    /// `"lo,hi"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s
            .split_once(',')
            .ok_or_else(|| format!("expected lo,hi, got {s:?}"))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("not a number: {v:?}"))
        };
        Self::new(num(lo)?, num(hi)?).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiningRecord {
    pub sample_id: String,
    pub pred_html: String,
    pub gt_html: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningDecision {
    pub sample_id: String,
    pub ned: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MiningOutcome {
    /// One entry per usable record, in input order.
    pub decisions: Vec<MiningDecision>,
    /// `(sample_id, reason)` for records whose ground truth did not parse.
    pub skipped: Vec<(String, String)>,
}

impl MiningOutcome {
    pub fn selected(&self) -> impl Iterator<Item = &MiningDecision> {
        self.decisions.iter().filter(|d| d.selected)
    }
}

/// Scores every record and flags those inside the band. A prediction that
/// does not parse counts as an empty page.
pub fn mine_hard_samples(
    records: &[MiningRecord],
    cfg: &MiningConfig,
    norm: &NormalizationConfig,
    workers: usize,
) -> MiningOutcome {
    let results = map_ordered(records, workers, |rec| {
        let gt = parse_page(&rec.gt_html).map_err(|e| e.to_string())?;
        let pred = parse_page(&rec.pred_html).unwrap_or_else(|_| PageDocument::default());
        let ned = global_text_edit(&pred, &gt, norm);
        Ok::<_, String>(MiningDecision {
            sample_id: rec.sample_id.clone(),
            ned,
            selected: cfg.contains(ned),
        })
    });
    let mut outcome = MiningOutcome::default();
    for (rec, result) in records.iter().zip(results) {
        match result {
            Ok(d) => outcome.decisions.push(d),
            Err(reason) => {
                log::warn!(
                    "skipping sample {}: ground truth does not parse: {reason}",
                    rec.sample_id
                );
                outcome.skipped.push((rec.sample_id.clone(), reason));
            }
        }
    }
    outcome
}
