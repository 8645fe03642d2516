//! Per-page scores and their aggregation into the benchmark table.
//!
//! Aggregates store exact fixed-point sums, so the result does not depend on
//! the order in which pages are added or partial reports merged.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::matching::match_blocks;
use crate::ordermetrics::read_order_edit;
use crate::schema::{validate, BlockCategory, Language, PageDocument};
use crate::tablemetrics::{table_edit, teds, TedsWarning};
use crate::textmetrics::{category_edit, global_text_edit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TextEdit,
    FormulaEdit,
    TableTeds,
    TableEdit,
    ReadOrderEdit,
    ChemistryEdit,
    HwEdit,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::TextEdit,
        Metric::FormulaEdit,
        Metric::TableTeds,
        Metric::TableEdit,
        Metric::ReadOrderEdit,
        Metric::ChemistryEdit,
        Metric::HwEdit,
    ];

    /// Components of the overall edit score.
    pub const OVERALL_PARTS: [Metric; 4] = [
        Metric::TextEdit,
        Metric::FormulaEdit,
        Metric::TableEdit,
        Metric::ReadOrderEdit,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Metric::TextEdit => "text_edit",
            Metric::FormulaEdit => "formula_edit",
            Metric::TableTeds => "table_teds",
            Metric::TableEdit => "table_edit",
            Metric::ReadOrderEdit => "read_order_edit",
            Metric::ChemistryEdit => "chemistry_edit",
            Metric::HwEdit => "hw_edit",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.key() == key)
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::TextEdit => "Text Edit ↓",
            Metric::FormulaEdit => "Formula Edit ↓",
            Metric::TableTeds => "Table TEDS ↑",
            Metric::TableEdit => "Table Edit ↓",
            Metric::ReadOrderEdit => "ReadOrder Edit ↓",
            Metric::ChemistryEdit => "Chemistry Edit ↓",
            Metric::HwEdit => "HW Edit ↓",
        }
    }

    /// Reported over all pages rather than per language.
    pub fn pooled(self) -> bool {
        matches!(self, Metric::ChemistryEdit | Metric::HwEdit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageScores {
    pub page_id: String,
    pub language: Language,
    pub doc_category: String,
    pub text_edit: Option<f64>,
    pub formula_edit: Option<f64>,
    pub table_teds: Option<f64>,
    pub table_edit: Option<f64>,
    pub read_order_edit: Option<f64>,
    pub chemistry_edit: Option<f64>,
    pub hw_edit: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PageScores {
    pub fn empty(gt: &PageDocument) -> Self {
        Self {
            page_id: gt.page_id.clone(),
            language: gt.language,
            doc_category: gt.doc_category.clone(),
            text_edit: None,
            formula_edit: None,
            table_teds: None,
            table_edit: None,
            read_order_edit: None,
            chemistry_edit: None,
            hw_edit: None,
            warnings: Vec::new(),
        }
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::TextEdit => self.text_edit,
            Metric::FormulaEdit => self.formula_edit,
            Metric::TableTeds => self.table_teds,
            Metric::TableEdit => self.table_edit,
            Metric::ReadOrderEdit => self.read_order_edit,
            Metric::ChemistryEdit => self.chemistry_edit,
            Metric::HwEdit => self.hw_edit,
        }
    }
}

/// Scores one page. Metrics whose block kind does not occur in the ground
/// truth are left absent.
pub fn score_page(pred: &PageDocument, gt: &PageDocument, cfg: &EvalConfig) -> Result<PageScores> {
    if let Some(v) = validate(gt).first() {
        return Err(Error::InvalidGroundTruth {
            page_id: gt.page_id.clone(),
            reason: v.to_string(),
        });
    }
    let norm = &cfg.normalize;
    let assignment = match_blocks(pred, gt, &cfg.matching, norm);
    let mut scores = PageScores::empty(gt);

    let has_text = gt
        .blocks
        .iter()
        .any(|b| b.category.is_text_like() && !b.category.excluded_from_global_text());
    if has_text {
        scores.text_edit = Some(global_text_edit(pred, gt, norm));
    }
    let edit_of = |category| {
        gt.has_category(category)
            .then(|| category_edit(pred, gt, category, &assignment, norm))
    };
    scores.formula_edit = edit_of(BlockCategory::Formula);
    scores.chemistry_edit = edit_of(BlockCategory::Chemistry);
    scores.hw_edit = edit_of(BlockCategory::Handwriting);

    if gt.has_category(BlockCategory::Table) {
        let tables = assignment.restrict_to(BlockCategory::Table, pred, gt);
        let mut teds_sum = 0.0;
        let mut edit_sum = 0.0;
        for pair in &tables.pairs {
            let p = &pred.blocks[pair.pred].content;
            let g = &gt.blocks[pair.gt].content;
            // the ground truth was validated above, so only the prediction can be malformed
            let score = teds(p, g, norm).map_err(|e| Error::InvalidGroundTruth {
                page_id: gt.page_id.clone(),
                reason: e.to_string(),
            })?;
            if score.warning == Some(TedsWarning::PredictionMalformed) {
                scores
                    .warnings
                    .push(format!("predicted table {} is malformed", pair.pred));
            }
            teds_sum += score.score;
            edit_sum += table_edit(p, g, norm);
        }
        let misses = tables.unmatched_pred.len() + tables.unmatched_gt.len();
        let count = (tables.pairs.len() + misses) as f64;
        scores.table_teds = Some(teds_sum / count);
        scores.table_edit = Some((edit_sum + misses as f64) / count);
    }

    if gt
        .blocks
        .iter()
        .any(|b| !b.category.excluded_from_reading_order())
    {
        scores.read_order_edit = Some(read_order_edit(&assignment, pred, gt));
    }
    Ok(scores)
}

const FIXED_SCALE: f64 = 1_267_650_600_228_229_401_496_703_205_376.0; // 2^100

/// Sum of ratios in 2^-100 fixed point. Ratios down to 2^-48 are represented
/// exactly, and integer addition makes the sum independent of order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FixedSum(i128);

impl FixedSum {
    pub fn of(x: f64) -> Self {
        Self((x * FIXED_SCALE).round() as i128)
    }

    pub fn add(&mut self, x: f64) {
        self.0 = self.0.saturating_add(Self::of(x).0);
    }

    pub fn merge(&mut self, other: FixedSum) {
        self.0 = self.0.saturating_add(other.0);
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / FIXED_SCALE
    }

    pub fn raw(self) -> i128 {
        self.0
    }

    pub fn from_raw(raw: i128) -> Self {
        Self(raw)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "AggregateRepr", try_from = "AggregateRepr")]
pub struct Aggregate {
    pub count: u64,
    pub sum: FixedSum,
}

#[derive(Serialize, Deserialize)]
struct AggregateRepr {
    count: u64,
    /// Fixed-point sum as a decimal integer.
    sum: String,
    #[serde(default)]
    mean: Option<f64>,
}

impl From<Aggregate> for AggregateRepr {
    fn from(a: Aggregate) -> Self {
        Self {
            count: a.count,
            sum: a.sum.raw().to_string(),
            mean: a.mean(),
        }
    }
}

impl TryFrom<AggregateRepr> for Aggregate {
    type Error = String;

    fn try_from(r: AggregateRepr) -> std::result::Result<Self, String> {
        let raw = r
            .sum
            .parse::<i128>()
            .map_err(|_| format!("bad fixed-point sum {:?}", r.sum))?;
        Ok(Self {
            count: r.count,
            sum: FixedSum::from_raw(raw),
        })
    }
}

impl Aggregate {
    pub fn add(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
    }

    pub fn merge(&mut self, other: &Aggregate) {
        self.count += other.count;
        self.sum.merge(other.sum);
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum.value() / self.count as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricGroup {
    pub pages: u64,
    pub metrics: BTreeMap<Metric, Aggregate>,
}

impl Default for MetricGroup {
    fn default() -> Self {
        Self {
            pages: 0,
            metrics: Metric::ALL
                .into_iter()
                .map(|m| (m, Aggregate::default()))
                .collect(),
        }
    }
}

impl MetricGroup {
    pub fn add_page(&mut self, page: &PageScores) {
        self.pages += 1;
        for metric in Metric::ALL {
            if let Some(v) = page.get(metric) {
                self.metrics.entry(metric).or_default().add(v);
            }
        }
    }

    pub fn merge(&mut self, other: &MetricGroup) {
        self.pages += other.pages;
        for (metric, agg) in &other.metrics {
            self.metrics.entry(*metric).or_default().merge(agg);
        }
    }

    pub fn mean(&self, metric: Metric) -> Option<f64> {
        self.metrics.get(&metric).and_then(Aggregate::mean)
    }

    pub fn overall_edit(&self) -> Option<f64> {
        overall_edit(self)
    }
}

/// Mean of the present text, formula, table and reading-order edit means.
pub fn overall_edit(group: &MetricGroup) -> Option<f64> {
    let parts: Vec<f64> = Metric::OVERALL_PARTS
        .iter()
        .filter_map(|m| group.mean(*m))
        .collect();
    (!parts.is_empty()).then(|| parts.iter().sum::<f64>() / parts.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub method: String,
    pub all: MetricGroup,
    pub languages: BTreeMap<Language, MetricGroup>,
    pub categories: BTreeMap<String, MetricGroup>,
    pub warnings: Vec<String>,
}

impl BenchmarkReport {
    pub fn new(method: impl Into<String>) -> Self {
        Self {
            method: method.into(),
            all: MetricGroup::default(),
            languages: Language::ALL
                .into_iter()
                .map(|l| (l, MetricGroup::default()))
                .collect(),
            categories: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    /// Aggregates pages in `page_id` order; warnings are sorted.
    pub fn from_pages(method: impl Into<String>, pages: &[PageScores]) -> Self {
        let mut sorted: Vec<&PageScores> = pages.iter().collect();
        sorted.sort_by(|a, b| a.page_id.cmp(&b.page_id));
        let mut report = Self::new(method);
        for page in sorted {
            report.add_page(page);
        }
        report.warnings.sort();
        report
    }

    pub fn add_page(&mut self, page: &PageScores) {
        self.all.add_page(page);
        self.languages
            .entry(page.language)
            .or_default()
            .add_page(page);
        self.categories
            .entry(page.doc_category.clone())
            .or_default()
            .add_page(page);
        for w in &page.warnings {
            self.warnings.push(format!("{}: {w}", page.page_id));
        }
    }

    pub fn merge(&mut self, other: &BenchmarkReport) {
        self.all.merge(&other.all);
        for (lang, group) in &other.languages {
            self.languages.entry(*lang).or_default().merge(group);
        }
        for (cat, group) in &other.categories {
            self.categories.entry(cat.clone()).or_default().merge(group);
        }
        self.warnings.extend(other.warnings.iter().cloned());
        self.warnings.sort();
    }

    pub fn language(&self, lang: Language) -> MetricGroup {
        self.languages.get(&lang).cloned().unwrap_or_default()
    }

    pub fn summary_row(&self) -> SummaryRow {
        let en = self.language(Language::En);
        let zh = self.language(Language::Zh);
        let pair = |m: Metric| [en.mean(m), zh.mean(m)];
        SummaryRow {
            method: self.method.clone(),
            overall: [en.overall_edit(), zh.overall_edit()],
            text: pair(Metric::TextEdit),
            formula: pair(Metric::FormulaEdit),
            teds: pair(Metric::TableTeds),
            table_edit: pair(Metric::TableEdit),
            read_order: pair(Metric::ReadOrderEdit),
            chemistry: self.all.mean(Metric::ChemistryEdit),
            hw: self.all.mean(Metric::HwEdit),
        }
    }
}

/// One method's line of the benchmark table: `[EN, ZH]` pairs plus the two
/// pooled columns. TEDS is stored as a ratio and shown ×100.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub overall: [Option<f64>; 2],
    pub text: [Option<f64>; 2],
    pub formula: [Option<f64>; 2],
    pub teds: [Option<f64>; 2],
    pub table_edit: [Option<f64>; 2],
    pub read_order: [Option<f64>; 2],
    pub chemistry: Option<f64>,
    pub hw: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(format!("unknown report format {s:?}")),
        }
    }
}

pub fn emit_report(report: &BenchmarkReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => report_to_json(report),
        ReportFormat::Csv => report_to_csv(report),
        ReportFormat::Markdown => report_to_markdown(report),
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    #[serde(flatten)]
    report: &'a BenchmarkReport,
    summary: SummaryRow,
}

fn report_to_json(report: &BenchmarkReport) -> String {
    let doc = JsonReport {
        report,
        summary: report.summary_row(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("report always serializes");
    out.push('\n');
    out
}

pub fn report_from_json(text: &str) -> Result<BenchmarkReport> {
    serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))
}

const CSV_HEADER: [&str; 6] = ["scope", "key", "metric", "count", "sum", "mean"];

fn report_to_csv(report: &BenchmarkReport) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    {
        let mut row = |fields: [&str; 6]| w.write_record(fields).expect("writing to memory");
        row(CSV_HEADER);
        row(["meta", "method", &report.method, "", "", ""]);
        let mut groups: Vec<(&str, String, &MetricGroup)> =
            vec![("all", String::new(), &report.all)];
        groups.extend(
            report
                .languages
                .iter()
                .map(|(l, g)| ("language", l.code().to_string(), g)),
        );
        groups.extend(
            report
                .categories
                .iter()
                .map(|(c, g)| ("category", c.clone(), g)),
        );
        for (scope, key, group) in groups {
            row([scope, &key, "pages", &group.pages.to_string(), "", ""]);
            for (metric, agg) in &group.metrics {
                let mean = agg.mean().map(|m| m.to_string()).unwrap_or_default();
                row([
                    scope,
                    &key,
                    metric.key(),
                    &agg.count.to_string(),
                    &agg.sum.raw().to_string(),
                    &mean,
                ]);
            }
        }
        for (i, warning) in report.warnings.iter().enumerate() {
            row(["warning", &i.to_string(), warning, "", "", ""]);
        }
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
}

pub fn report_from_csv(text: &str) -> Result<BenchmarkReport> {
    let bad = |line: u64, msg: String| Error::Report(format!("csv line {line}: {msg}"));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Report(e.to_string()))?
        .clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Report("unexpected csv header".into()));
    }
    let mut report = BenchmarkReport::new("");
    report.languages.clear();
    let mut warnings: Vec<(usize, String)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Report(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let (scope, key, metric) = (field(0), field(1), field(2));
        let group = match scope {
            "meta" => {
                if key == "method" {
                    report.method = metric.to_string();
                }
                continue;
            }
            "warning" => {
                let index = key
                    .parse::<usize>()
                    .map_err(|_| bad(line, format!("bad warning index {key:?}")))?;
                warnings.push((index, metric.to_string()));
                continue;
            }
            "all" => &mut report.all,
            "language" => {
                let lang = Language::parse(key)
                    .ok_or_else(|| bad(line, format!("unknown language {key:?}")))?;
                report.languages.entry(lang).or_default()
            }
            "category" => report.categories.entry(key.to_string()).or_default(),
            other => return Err(bad(line, format!("unknown scope {other:?}"))),
        };
        let count = field(3)
            .parse::<u64>()
            .map_err(|_| bad(line, format!("bad count {:?}", field(3))))?;
        if metric == "pages" {
            group.pages = count;
            continue;
        }
        let metric = Metric::from_key(metric)
            .ok_or_else(|| bad(line, format!("unknown metric {metric:?}")))?;
        let raw = field(4)
            .parse::<i128>()
            .map_err(|_| bad(line, format!("bad sum {:?}", field(4))))?;
        group.metrics.insert(
            metric,
            Aggregate {
                count,
                sum: FixedSum::from_raw(raw),
            },
        );
    }
    warnings.sort_by_key(|(i, _)| *i);
    report.warnings = warnings.into_iter().map(|(_, w)| w).collect();
    Ok(report)
}

fn fmt_edit(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

fn fmt_teds(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{:.1}", v * 100.0))
}

/// Header cells of the summary table, after "Method".
pub fn summary_columns() -> Vec<String> {
    let mut cols = Vec::new();
    let split = [
        "Overall Edit ↓",
        Metric::TextEdit.label(),
        Metric::FormulaEdit.label(),
        Metric::TableTeds.label(),
        Metric::TableEdit.label(),
        Metric::ReadOrderEdit.label(),
    ];
    for label in split {
        for lang in Language::ALL {
            cols.push(format!("{label} {}", lang.label()));
        }
    }
    cols.push(format!("{} ALL", Metric::ChemistryEdit.label()));
    cols.push(format!("{} ALL", Metric::HwEdit.label()));
    cols
}

fn summary_cells(row: &SummaryRow) -> Vec<String> {
    let mut cells = Vec::new();
    for pair in [row.overall, row.text, row.formula] {
        cells.extend(pair.iter().map(|v| fmt_edit(*v)));
    }
    cells.extend(row.teds.iter().map(|v| fmt_teds(*v)));
    for pair in [row.table_edit, row.read_order] {
        cells.extend(pair.iter().map(|v| fmt_edit(*v)));
    }
    cells.push(fmt_edit(row.chemistry));
    cells.push(fmt_edit(row.hw));
    cells
}

fn table_line(out: &mut String, cells: &[String]) {
    let _ = writeln!(out, "| {} |", cells.join(" | "));
}

fn rule_line(out: &mut String, columns: usize) {
    let mut cells = vec!["---".to_string()];
    cells.extend(std::iter::repeat_n("---:".to_string(), columns - 1));
    table_line(out, &cells);
}

/// The benchmark table for any number of methods.
pub fn render_summary_table(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let mut header = vec!["Method".to_string()];
    header.extend(summary_columns());
    table_line(&mut out, &header);
    rule_line(&mut out, header.len());
    for row in rows {
        let mut cells = vec![row.method.clone()];
        cells.extend(summary_cells(row));
        table_line(&mut out, &cells);
    }
    out
}

fn report_to_markdown(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Benchmark report: {}\n", report.method);
    let counts: Vec<String> = Language::ALL
        .iter()
        .map(|l| format!("{} {}", l.label(), report.language(*l).pages))
        .collect();
    let _ = writeln!(out, "Pages: {} ({})\n", report.all.pages, counts.join(", "));

    let rows = if report.all.pages == 0 {
        Vec::new()
    } else {
        vec![report.summary_row()]
    };
    out.push_str(&render_summary_table(&rows));

    out.push_str("\n## By document category\n\n");
    let mut header = vec![
        "Category".to_string(),
        "Pages".to_string(),
        "Overall Edit ↓".to_string(),
    ];
    header.extend(Metric::ALL.iter().map(|m| m.label().to_string()));
    table_line(&mut out, &header);
    rule_line(&mut out, header.len());
    for (name, group) in &report.categories {
        let mut cells = vec![
            name.clone(),
            group.pages.to_string(),
            fmt_edit(group.overall_edit()),
        ];
        for m in Metric::ALL {
            cells.push(if m == Metric::TableTeds {
                fmt_teds(group.mean(m))
            } else {
                fmt_edit(group.mean(m))
            });
        }
        table_line(&mut out, &cells);
    }

    if !report.warnings.is_empty() {
        let _ = writeln!(out, "\n## Warnings ({})\n", report.warnings.len());
        for w in &report.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}
