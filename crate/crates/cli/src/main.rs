use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use layoutmetrics::exec::default_workers;
use layoutmetrics::normalize::{
    normalize_latex, normalize_table_html, normalize_text, normalize_whitespace,
};
use layoutmetrics::pipeline::{
    evaluate_corpus, parse_per_page_jsonl, write_outputs, PER_PAGE_FILE,
};
use layoutmetrics::{
    compute_reward, emit_report, mine_hard_samples, BenchmarkReport, Error, MiningConfig,
    MiningRecord, ReportFormat, RewardError, RewardWeights, Settings, CONFIG_ENV,
};

/// Document-parsing evaluation, layout reward and hard-sample mining.
#[derive(Debug, Parser)]
#[command(name = "layoutmetrics", version)]
struct Cli {
    /// TOML settings file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    /// Minimum block similarity for a match, in [0, 1].
    #[arg(long, global = true)]
    match_threshold: Option<f64>,

    /// Reward weights as w_text,w_bbox,w_order.
    #[arg(long, global = true, value_parser = parse_weights)]
    weights: Option<RewardWeights>,

    /// Inclusive mining band as lo,hi.
    #[arg(long, global = true, value_parser = parse_range)]
    mine_range: Option<MiningConfig>,

    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,

    /// Compare raw contents without normalization.
    #[arg(long, global = true)]
    no_normalize: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a prediction directory against ground truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// JSON lines with page_id, language and doc_category.
        #[arg(long)]
        manifest: PathBuf,
        /// Directory for per_page_scores.jsonl and report.{json,csv,md}.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "prediction")]
        method: String,
        /// Also print the report to standard output.
        #[arg(long)]
        format: Option<Format>,
    },
    /// Reward for one predicted page, printed as JSON.
    Reward {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Select samples whose text NED falls inside the mining band.
    Mine {
        /// JSON lines with sample_id plus pred_path/gt_path or pred_html/gt_html.
        #[arg(long)]
        records: PathBuf,
        /// Output JSON lines; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the normalized form of a file or standard input.
    Normalize {
        #[arg(long, value_enum, default_value_t = Kind::Text)]
        kind: Kind,
        input: Option<PathBuf>,
    },
    /// Rebuild a report from per_page_scores.jsonl.
    Report {
        /// A per_page_scores.jsonl file or the directory holding it.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value = "prediction")]
        method: String,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Markdown,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
            Format::Markdown => ReportFormat::Markdown,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Text,
    Latex,
    Table,
    Smiles,
}

fn parse_weights(s: &str) -> Result<RewardWeights, String> {
    s.parse().map_err(|e: RewardError| e.to_string())
}

fn parse_range(s: &str) -> Result<MiningConfig, String> {
    s.parse()
}

/// Exit code 1 for I/O failures, 2 for invalid data.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn data(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Self {
            code: 1,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_io() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn settings(cli: &Cli) -> Result<Settings, Failure> {
    let mut s = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    if let Some(t) = cli.match_threshold {
        s.matching.threshold = t;
    }
    if let Some(w) = cli.weights {
        s.reward = w;
    }
    if let Some(r) = cli.mine_range {
        s.mining = r;
    }
    if cli.no_normalize {
        s.normalize.enabled = false;
    }
    s.validate()?;
    Ok(s)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write(path: &Path, body: &str) -> CmdResult {
    fs::write(path, body).map_err(|e| Failure::io(path, e))
}

fn print(body: &str) -> CmdResult {
    let mut out = io::stdout().lock();
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Failure::io(Path::new("<stdout>"), e))
}

fn run(cli: Cli) -> CmdResult {
    let settings = settings(&cli)?;
    let workers = cli.workers.map_or_else(default_workers, |w| w as usize);
    let cfg = settings.eval_config();
    match cli.command {
        Command::Evaluate {
            pred,
            gt,
            manifest,
            out,
            method,
            format,
        } => {
            let eval = evaluate_corpus(&pred, &gt, &manifest, &cfg, &method, workers)?;
            write_outputs(&eval, &out)?;
            for w in &eval.report.warnings {
                log::warn!("{w}");
            }
            eprintln!(
                "evaluated {} pages ({} warnings) into {}",
                eval.pages.len(),
                eval.report.warnings.len(),
                out.display()
            );
            if let Some(f) = format {
                print(&emit_report(&eval.report, f.into()))?;
            }
            Ok(())
        }
        Command::Reward { pred, gt } => {
            let pred_html = read(&pred)?;
            let gt_html = read(&gt)?;
            let r = compute_reward(&pred_html, &gt_html, &settings.reward, &cfg)
                .map_err(|e| Failure::data(format!("{}: {e}", gt.display())))?;
            print(&format!(
                "{}\n",
                serde_json::to_string(&r).expect("breakdown serializes")
            ))
        }
        Command::Mine { records, out } => {
            let list = load_records(&records)?;
            let outcome = mine_hard_samples(&list, &settings.mining, &cfg.normalize, workers);
            let mut body = String::new();
            for d in &outcome.decisions {
                body.push_str(&serde_json::to_string(d).expect("decision serializes"));
                body.push('\n');
            }
            let selected = outcome.selected().count();
            let summary = format!("selected {selected} of {} samples", outcome.decisions.len());
            match out {
                Some(path) => {
                    write(&path, &body)?;
                    print(&format!("{summary}\n"))
                }
                None => {
                    print(&body)?;
                    eprintln!("{summary}");
                    Ok(())
                }
            }
        }
        Command::Normalize { kind, input } => {
            let text = match &input {
                Some(path) => read(path)?,
                None => {
                    let mut s = String::new();
                    io::stdin()
                        .read_to_string(&mut s)
                        .map_err(|e| Failure::io(Path::new("<stdin>"), e))?;
                    s
                }
            };
            let norm = &cfg.normalize;
            let result = match kind {
                Kind::Text => normalize_text(&text, norm),
                Kind::Latex => normalize_latex(&text, norm),
                Kind::Smiles => normalize_whitespace(&text, norm),
                Kind::Table => {
                    normalize_table_html(&text, norm).map_err(|e| Failure::data(e.to_string()))?
                }
            };
            print(&format!("{result}\n"))
        }
        Command::Report {
            scores,
            method,
            format,
        } => {
            let path = if scores.is_dir() {
                scores.join(PER_PAGE_FILE)
            } else {
                scores
            };
            let pages = parse_per_page_jsonl(&read(&path)?)
                .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
            let report = BenchmarkReport::from_pages(method, &pages);
            print(&emit_report(&report, format.into()))
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    sample_id: String,
    #[serde(default)]
    pred_path: Option<PathBuf>,
    #[serde(default)]
    gt_path: Option<PathBuf>,
    #[serde(default)]
    pred_html: Option<String>,
    #[serde(default)]
    gt_html: Option<String>,
}

/// Reads mining records. Paths are relative to the records file. Records
/// that cannot be used are skipped with a warning; a missing prediction file
/// counts as an empty prediction.
fn load_records(path: &Path) -> Result<Vec<MiningRecord>, Failure> {
    let text = read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                log::warn!(
                    "{}:{}: skipping malformed record: {e}",
                    path.display(),
                    i + 1
                );
                continue;
            }
        };
        let gt_html = match (raw.gt_html, &raw.gt_path) {
            (Some(html), _) => html,
            (None, Some(p)) => match fs::read_to_string(base.join(p)) {
                Ok(s) => s,
                Err(e) => {
                    log::warn!(
                        "{}: skipping sample, cannot read ground truth {}: {e}",
                        raw.sample_id,
                        p.display()
                    );
                    continue;
                }
            },
            (None, None) => {
                log::warn!(
                    "{}:{}: skipping record without ground truth",
                    path.display(),
                    i + 1
                );
                continue;
            }
        };
        let pred_html = match (raw.pred_html, &raw.pred_path) {
            (Some(html), _) => html,
            (None, Some(p)) => fs::read_to_string(base.join(p)).unwrap_or_else(|e| {
                log::warn!(
                    "{}: cannot read prediction {}: {e}",
                    raw.sample_id,
                    p.display()
                );
                String::new()
            }),
            (None, None) => String::new(),
        };
        records.push(MiningRecord {
            sample_id: raw.sample_id,
            pred_html,
            gt_html,
        });
    }
    Ok(records)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
