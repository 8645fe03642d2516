//! Deterministic synthetic pages for tests and benchmarks.
//!
//! Every page mixes paragraphs with optional titles, formulas, tables,
//! figures, chemistry, handwriting and page furniture, all with boxes. Block
//! contents within a page are distinct, so a page matched against itself
//! pairs each block with its own copy.

use std::fs;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pipeline::ManifestEntry;
use crate::schema::{serialize_page, BBox, Block, BlockCategory, Language, PageDocument};

pub const DOC_CATEGORIES: [&str; 9] = [
    "academic_paper",
    "technical_report",
    "textbook",
    "exam_paper",
    "newspaper",
    "magazine",
    "financial_report",
    "slides",
    "handwritten_notes",
];

const WORDS: [&str; 48] = [
    "model",
    "layout",
    "page",
    "column",
    "reading",
    "order",
    "table",
    "figure",
    "result",
    "method",
    "data",
    "value",
    "sample",
    "training",
    "reward",
    "policy",
    "section",
    "report",
    "analysis",
    "signal",
    "network",
    "vision",
    "language",
    "document",
    "parsing",
    "structure",
    "formula",
    "caption",
    "region",
    "benchmark",
    "accuracy",
    "error",
    "distance",
    "metric",
    "score",
    "batch",
    "token",
    "image",
    "scale",
    "matrix",
    "vector",
    "graph",
    "curve",
    "phase",
    "energy",
    "market",
    "growth",
    "stream",
];

const HANZI: &str = "的一是在不了有和人这中大为上个国我以要他时来用们生到作地于出就分对成会可主发年动同工也能下过子说产种面而方后多定行学法所民得经十三之进着等部度家电力里如水化高自二理起小物现实加量都两体制机当使点从业本去把性好应开它合还因由其些然前外天政四日那社义事平形相全表间样与关各重新线内数正心反你明看原又么利比或但质气第向道命此变条只没结解问意建月公无系军很情者最立代想已通并提直题党程展五果料象员革位入常文总次品式活设及管特件长求老头基资边流路级少图山统接知较将组见计别她手角期根论运农指几九区强放决西被干做必战先回则任取据处队南给色光门即保治北造百规热领七海口东导器压志世金增争济阶油思术极交受联什认六共权收证改清己美再采转更单风切打白教速花带安场身车例真务具万每目至达走积示议声报斗完类八离华名确才科张信马节话米整空元况今集温传土许步群广石记需段研界拉林律叫且究观越织装影算低持音众书布复容儿须际商非验连断深难近矿千周委素技备半办青省列习响约支般史感劳便团往酸历市克何除消构府称太准精值号率族维划选标写存候毛亲快效斯院查江型眼王按格养易置派层片始却专状育厂京识适属圆包火住调满县局照参红细引听该铁价严";

const FORMULA_PIECES: [&str; 10] = [
    "\\frac{a_{%}}{b}",
    "\\sum_{i=1}^{%} x_i",
    "\\mathrm{d}x",
    "\\int_0^{%} f(t) \\, dt",
    "\\alpha^{%}",
    "\\left( y_{%} \\right)",
    "\\sqrt{%}",
    "\\displaystyle \\beta_{%}",
    "e^{-%t}",
    "\\quad z_{%}",
];

const SMILES_PIECES: [&str; 9] = [
    "C", "CC", "O", "N", "c1ccccc1", "C(=O)O", "Cl", "C=C", "[NH3+]",
];

const PAGE_WIDTH: i64 = 1000;

struct Layout {
    y: i64,
    columns: i64,
    column: i64,
}

impl Layout {
    fn place(&mut self, rng: &mut ChaCha8Rng, height: i64) -> BBox {
        let width = PAGE_WIDTH / self.columns;
        let x1 = self.column * width + rng.random_range(20..40);
        let x2 = (self.column + 1) * width - rng.random_range(20..40);
        let bbox = BBox::new(x1, self.y, x2, self.y + height);
        self.y += height + rng.random_range(8..24);
        if self.columns > 1 && self.y > 1300 && self.column + 1 < self.columns {
            self.column += 1;
            self.y = 120;
        }
        bbox
    }
}

fn full_width(rng: &mut ChaCha8Rng, y: i64, height: i64) -> BBox {
    BBox::new(
        rng.random_range(20..60),
        y,
        PAGE_WIDTH - rng.random_range(20..60),
        y + height,
    )
}

fn sentence(rng: &mut ChaCha8Rng, lang: Language, min: usize, max: usize) -> String {
    let n = rng.random_range(min..=max);
    match lang {
        Language::En => {
            let mut words: Vec<String> = (0..n)
                .map(|_| (*WORDS.choose(rng).unwrap()).to_string())
                .collect();
            if let Some(first) = words.first_mut() {
                let mut chars = first.chars();
                if let Some(c) = chars.next() {
                    *first = c.to_uppercase().chain(chars).collect();
                }
            }
            let mut s = words.join(" ");
            s.push('.');
            s
        }
        Language::Zh => {
            let pool: Vec<char> = HANZI.chars().collect();
            let mut s: String = (0..n * 2).map(|_| *pool.choose(rng).unwrap()).collect();
            s.push('。');
            s
        }
    }
}

fn formula(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(2..=5);
    let parts: Vec<String> = (0..n)
        .map(|_| {
            let piece = FORMULA_PIECES.choose(rng).unwrap();
            piece.replace('%', &rng.random_range(1..100).to_string())
        })
        .collect();
    let ops = [" + ", " - ", " = ", " \\cdot "];
    let mut s = parts[0].clone();
    for p in &parts[1..] {
        s.push_str(ops.choose(rng).unwrap());
        s.push_str(p);
    }
    s
}

fn smiles(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(3..=8);
    (0..n)
        .map(|_| *SMILES_PIECES.choose(rng).unwrap())
        .collect()
}

/// A well-formed table fragment with a header row and an optional spanning
/// cell.
pub fn synth_table(rng: &mut ChaCha8Rng, lang: Language) -> String {
    let rows = rng.random_range(2..=5);
    let cols = rng.random_range(2..=4);
    let mut html = String::from("<table>");
    let span_row = if rng.random_bool(0.3) {
        Some(rng.random_range(1..rows))
    } else {
        None
    };
    for r in 0..rows {
        html.push_str("<tr>");
        let mut c = 0;
        while c < cols {
            let tag = if r == 0 { "th" } else { "td" };
            let text = if r == 0 {
                match lang {
                    Language::En => WORDS.choose(rng).unwrap().to_string(),
                    Language::Zh => HANZI
                        .chars()
                        .skip(rng.random_range(0..300))
                        .take(2)
                        .collect(),
                }
            } else {
                format!("{}.{}", rng.random_range(0..1000), rng.random_range(0..100))
            };
            if span_row == Some(r) && c == 0 && cols > 2 {
                html.push_str(&format!("<{tag} colspan=\"2\">{text}</{tag}>"));
                c += 2;
            } else {
                html.push_str(&format!("<{tag}>{text}</{tag}>"));
                c += 1;
            }
        }
        html.push_str("</tr>");
    }
    html.push_str("</table>");
    html
}

fn paragraph_height(text: &str, columns: i64) -> i64 {
    let chars = text.chars().count() as i64;
    20 + chars * columns / 4
}

/// One page. Block contents on the page are distinct.
pub fn synth_page(rng: &mut ChaCha8Rng, page_id: impl Into<String>) -> PageDocument {
    let language = if rng.random_bool(0.5) {
        Language::En
    } else {
        Language::Zh
    };
    let doc_category = *DOC_CATEGORIES.choose(rng).unwrap();
    let mut doc = PageDocument::new(page_id, language, doc_category);
    let mut layout = Layout {
        y: 120,
        columns: if matches!(doc_category, "newspaper" | "magazine") {
            2
        } else {
            rng.random_range(1..=2)
        },
        column: 0,
    };
    let mut blocks = Vec::new();

    if rng.random_bool(0.6) {
        let text = format!(
            "{} {}",
            sentence(rng, language, 2, 4),
            rng.random_range(1..10_000)
        );
        blocks.push(Block::new(
            BlockCategory::Header,
            Some(full_width(rng, 20, 30)),
            text,
        ));
    }
    if rng.random_bool(0.8) {
        let title = sentence(rng, language, 3, 8);
        blocks.push(Block::new(
            BlockCategory::Title,
            Some(full_width(rng, 60, 40)),
            title,
        ));
    }

    let mut body: Vec<(BlockCategory, String)> = Vec::new();
    for _ in 0..rng.random_range(2..=6) {
        body.push((BlockCategory::Text, sentence(rng, language, 12, 40)));
    }
    for _ in 0..rng.random_range(0..=2) {
        body.push((BlockCategory::Formula, formula(rng)));
    }
    if rng.random_bool(0.4) {
        body.push((BlockCategory::Table, synth_table(rng, language)));
    }
    if rng.random_bool(0.3) {
        body.push((BlockCategory::Image, String::new()));
        body.push((
            BlockCategory::Caption,
            format!(
                "Figure {}: {}",
                rng.random_range(1..50),
                sentence(rng, language, 4, 10)
            ),
        ));
    }
    if rng.random_bool(0.15) {
        body.push((BlockCategory::Chemistry, smiles(rng)));
    }
    if doc_category == "handwritten_notes" || rng.random_bool(0.1) {
        body.push((BlockCategory::Handwriting, sentence(rng, language, 3, 10)));
    }
    // keep the image directly before its caption, shuffle the rest lightly
    for i in (1..body.len()).rev() {
        let j = rng.random_range(0..=i);
        let pinned = |k: usize| matches!(body[k].0, BlockCategory::Image | BlockCategory::Caption);
        if !pinned(i) && !pinned(j) {
            body.swap(i, j);
        }
    }
    for (category, content) in body {
        let height = match category {
            BlockCategory::Table => 160,
            BlockCategory::Image => 240,
            BlockCategory::Formula | BlockCategory::Chemistry => 40,
            _ => paragraph_height(&content, layout.columns),
        };
        blocks.push(Block::new(
            category,
            Some(layout.place(rng, height)),
            content,
        ));
    }
    if rng.random_bool(0.6) {
        let text = format!("- {} -", rng.random_range(1..400));
        blocks.push(Block::new(
            BlockCategory::Footer,
            Some(full_width(rng, 1360, 20)),
            text,
        ));
    }
    doc.blocks = blocks;
    doc
}

/// `pages` pages with ids `page_0000`, `page_0001`, ...
pub fn synth_corpus(pages: usize, seed: u64) -> Vec<PageDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pages)
        .map(|i| synth_page(&mut rng, format!("page_{i:04}")))
        .collect()
}

pub fn manifest_entries(docs: &[PageDocument]) -> Vec<ManifestEntry> {
    docs.iter()
        .map(|d| ManifestEntry {
            page_id: d.page_id.clone(),
            language: d.language,
            doc_category: d.doc_category.clone(),
        })
        .collect()
}

pub fn manifest_jsonl(docs: &[PageDocument]) -> String {
    let mut out = String::new();
    for entry in manifest_entries(docs) {
        out.push_str(&serde_json::to_string(&entry).expect("manifest entries serialize"));
        out.push('\n');
    }
    out
}

/// Writes `<page_id>.html` for every page into `dir`.
pub fn write_pages(docs: &[PageDocument], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for doc in docs {
        let path = dir.join(format!("{}.html", doc.page_id));
        fs::write(&path, serialize_page(doc)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
