//! Corpus evaluation: manifest, page files, parallel scoring and output files.
//!
//! The manifest is JSON lines with `page_id`, `language` and `doc_category`.
//! Ground truth and predictions live in two directories as `<page_id>.html`.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::exec::map_ordered;
use crate::report::{emit_report, score_page, BenchmarkReport, PageScores, ReportFormat};
use crate::schema::{parse_page_with, Language, PageDocument, ParseOptions};

pub const MISSING_PREDICTION: &str = "missing prediction, scored as a total miss";
pub const UNPARSEABLE_PREDICTION: &str = "prediction does not parse, scored as a total miss";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub page_id: String,
    pub language: Language,
    pub doc_category: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    page_id: String,
    #[serde(default)]
    language: Option<String>,
    #[serde(default)]
    doc_category: String,
}

/// Parses a JSON-lines manifest. Blank lines are skipped; errors name the
/// 1-based line.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::Manifest {
            line: line_no,
            reason,
        };
        let raw: RawEntry = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if raw.page_id.trim().is_empty() {
            return Err(bad("empty page_id".into()));
        }
        if raw.page_id.contains(['/', '\\']) || raw.page_id == "." || raw.page_id == ".." {
            return Err(bad(format!(
                "page_id {:?} is not a plain file name",
                raw.page_id
            )));
        }
        let language = match raw.language.as_deref() {
            None => Language::default(),
            Some(code) => {
                Language::parse(code).ok_or_else(|| bad(format!("unknown language {code:?}")))?
            }
        };
        if !seen.insert(raw.page_id.clone()) {
            return Err(bad(format!("duplicate page_id {:?}", raw.page_id)));
        }
        entries.push(ManifestEntry {
            page_id: raw.page_id,
            language,
            doc_category: raw.doc_category,
        });
    }
    Ok(entries)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text)
}

/// Raw page sources; the prediction is `None` when its file is absent.
#[derive(Debug, Clone)]
pub struct PageInput {
    pub entry: ManifestEntry,
    pub gt_html: String,
    pub pred_html: Option<String>,
}

pub fn load_corpus(
    pred_dir: &Path,
    gt_dir: &Path,
    manifest: &[ManifestEntry],
) -> Result<Vec<PageInput>> {
    let mut inputs = Vec::with_capacity(manifest.len());
    for entry in manifest {
        let file = format!("{}.html", entry.page_id);
        let gt_path = gt_dir.join(&file);
        let gt_html = fs::read_to_string(&gt_path).map_err(|e| Error::io(&gt_path, e))?;
        let pred_path = pred_dir.join(&file);
        let pred_html = match fs::read_to_string(&pred_path) {
            Ok(s) => Some(s),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(Error::io(&pred_path, e)),
        };
        inputs.push(PageInput {
            entry: entry.clone(),
            gt_html,
            pred_html,
        });
    }
    Ok(inputs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Sorted by page id.
    pub pages: Vec<PageScores>,
    pub report: BenchmarkReport,
}

fn parse_ground_truth(input: &PageInput) -> Result<PageDocument> {
    let mut gt = parse_page_with(
        &input.gt_html,
        ParseOptions::default(),
        Some(&input.entry.page_id),
    )
    .map_err(|e| Error::InvalidGroundTruth {
        page_id: input.entry.page_id.clone(),
        reason: e.to_string(),
    })?;
    // the manifest is authoritative for page metadata
    gt.page_id = input.entry.page_id.clone();
    gt.language = input.entry.language;
    gt.doc_category = input.entry.doc_category.clone();
    Ok(gt)
}

pub fn evaluate_input(input: &PageInput, cfg: &EvalConfig) -> Result<PageScores> {
    let gt = parse_ground_truth(input)?;
    let mut warning = None;
    let pred = match &input.pred_html {
        None => {
            warning = Some(MISSING_PREDICTION);
            PageDocument::default()
        }
        Some(html) => parse_page_with(html, ParseOptions::default(), None).unwrap_or_else(|e| {
            log::debug!("{}: prediction does not parse: {e}", input.entry.page_id);
            warning = Some(UNPARSEABLE_PREDICTION);
            PageDocument::default()
        }),
    };
    let mut scores = score_page(&pred, &gt, cfg)?;
    if let Some(w) = warning {
        scores.warnings.insert(0, w.to_string());
    }
    Ok(scores)
}

/// Scores every page on `workers` threads. The first failing page in input
/// order determines the error.
pub fn evaluate_inputs(
    inputs: &[PageInput],
    cfg: &EvalConfig,
    method: &str,
    workers: usize,
) -> Result<Evaluation> {
    let results = map_ordered(inputs, workers, |input| evaluate_input(input, cfg));
    let mut pages = results.into_iter().collect::<Result<Vec<_>>>()?;
    pages.sort_by(|a, b| a.page_id.cmp(&b.page_id));
    let report = BenchmarkReport::from_pages(method, &pages);
    Ok(Evaluation { pages, report })
}

pub fn evaluate_corpus(
    pred_dir: &Path,
    gt_dir: &Path,
    manifest_path: &Path,
    cfg: &EvalConfig,
    method: &str,
    workers: usize,
) -> Result<Evaluation> {
    let manifest = read_manifest(manifest_path)?;
    let inputs = load_corpus(pred_dir, gt_dir, &manifest)?;
    evaluate_inputs(&inputs, cfg, method, workers)
}

pub fn per_page_jsonl(pages: &[PageScores]) -> String {
    let mut out = String::new();
    for page in pages {
        out.push_str(&serde_json::to_string(page).expect("scores always serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_per_page_jsonl(text: &str) -> Result<Vec<PageScores>> {
    let mut pages = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let page = serde_json::from_str(line)
            .map_err(|e| Error::Report(format!("line {}: {e}", i + 1)))?;
        pages.push(page);
    }
    Ok(pages)
}

pub const PER_PAGE_FILE: &str = "per_page_scores.jsonl";

/// Writes `per_page_scores.jsonl` and `report.{json,csv,md}` into `out_dir`.
pub fn write_outputs(eval: &Evaluation, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let write = |name: &str, body: &str| {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))
    };
    write(PER_PAGE_FILE, &per_page_jsonl(&eval.pages))?;
    for format in [
        ReportFormat::Json,
        ReportFormat::Csv,
        ReportFormat::Markdown,
    ] {
        write(
            &format!("report.{}", format.extension()),
            &emit_report(&eval.report, format),
        )?;
    }
    Ok(())
}
