//! Document-parsing evaluation: block-structured HTML pages, text, formula,
//! table and reading-order metrics, a layout-aware reward with hard-sample
//! mining, and benchmark reports.
//!
//! ```
//! use layoutmetrics::{compute_reward, EvalConfig, RewardWeights};
//!
//! let page = r#"<div data-page-id="p1"><div data-category="text" data-bbox="0,0,10,10">Hello</div></div>"#;
//! let r = compute_reward(page, page, &RewardWeights::default(), &EvalConfig::default()).unwrap();
//! assert_eq!((r.r_text, r.r_bbox, r.r_order), (1.0, 1.0, 1.0));
//! ```

mod error;
mod html;

pub mod config;
pub mod exec;
pub mod matching;
pub mod normalize;
pub mod ordermetrics;
pub mod pipeline;
pub mod report;
pub mod reward;
pub mod schema;
pub mod synth;
pub mod tablemetrics;
pub mod textmetrics;

pub use config::{EvalConfig, Settings, CONFIG_ENV};
pub use error::{Error, Result};
pub use matching::{match_blocks, MatchAssignment, MatchConfig, MatchedPair};
pub use normalize::NormalizationConfig;
pub use ordermetrics::{inversion_count, order_permutation, read_order_edit, OrderPermutation};
pub use report::{
    emit_report, overall_edit, score_page, BenchmarkReport, PageScores, ReportFormat, SummaryRow,
};
pub use reward::{
    compute_reward, mine_hard_samples, MiningConfig, MiningDecision, MiningOutcome, MiningRecord,
    RewardBreakdown, RewardError, RewardWeights,
};
pub use schema::{
    parse_page, serialize_page, validate, BBox, Block, BlockCategory, Language, PageDocument,
};
pub use tablemetrics::{table_edit, teds};
pub use textmetrics::{global_text_edit, levenshtein, ned};
