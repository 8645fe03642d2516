//! Block-structured HTML page annotations.
//!
//! A page is a wrapper element carrying page metadata whose child elements are
//! the content blocks, in reading order:
//!
//! ```html
//! <div data-page-id="p001" data-language="en" data-doc-category="academic">
//! <div data-category="title" data-bbox="40,32,560,60">A Title</div>
//! <div data-category="table" data-bbox="40,80,560,300"><table><tr><td>1</td></tr></table></div>
//! </div>
//! ```
//!
//! Table blocks hold their HTML fragment verbatim. Every other block holds
//! character data, escaped on output and entity-decoded on input.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::html::{self, Token, TokenKind};
use crate::tablemetrics;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("malformed html: {0}")]
    MalformedHtml(String),
    #[error("page has no page id")]
    MissingPageId,
    #[error("document is empty")]
    Empty,
}

impl From<html::HtmlError> for SchemaError {
    fn from(e: html::HtmlError) -> Self {
        SchemaError::MalformedHtml(e.to_string())
    }
}

/// Axis-aligned box in page pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x1: i64,
    pub y1: i64,
    pub x2: i64,
    pub y2: i64,
}

impl BBox {
    pub fn new(x1: i64, y1: i64, x2: i64, y2: i64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> i64 {
        (self.x2 - self.x1).max(0)
    }

    pub fn height(&self) -> i64 {
        (self.y2 - self.y1).max(0)
    }

    pub fn area(&self) -> i64 {
        self.width() * self.height()
    }

    /// Intersection over union. Degenerate boxes with zero union count as a
    /// perfect overlap only when they are identical.
    pub fn iou(&self, other: &BBox) -> f64 {
        let ix = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0);
        let iy = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0);
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= 0 {
            return if self == other { 1.0 } else { 0.0 };
        }
        inter as f64 / union as f64
    }

    fn parse(s: &str) -> Option<BBox> {
        let mut coords = [0i64; 4];
        let mut parts = s.split(',');
        for slot in coords.iter_mut() {
            let part = parts.next()?.trim();
            *slot = match part.parse::<i64>() {
                Ok(v) => v,
                Err(_) => {
                    let f = part.parse::<f64>().ok().filter(|f| f.is_finite())?;
                    f.round() as i64
                }
            };
        }
        if parts.next().is_some() {
            return None;
        }
        Some(BBox::new(coords[0], coords[1], coords[2], coords[3]))
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.x1, self.y1, self.x2, self.y2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockCategory {
    Text,
    Title,
    Formula,
    Table,
    Image,
    Chemistry,
    Handwriting,
    Header,
    Footer,
    Caption,
    Other,
}

impl BlockCategory {
    pub const ALL: [BlockCategory; 11] = [
        BlockCategory::Text,
        BlockCategory::Title,
        BlockCategory::Formula,
        BlockCategory::Table,
        BlockCategory::Image,
        BlockCategory::Chemistry,
        BlockCategory::Handwriting,
        BlockCategory::Header,
        BlockCategory::Footer,
        BlockCategory::Caption,
        BlockCategory::Other,
    ];

    /// The `data-category` value written for this category.
    pub fn name(self) -> &'static str {
        match self {
            BlockCategory::Text => "text",
            BlockCategory::Title => "title",
            BlockCategory::Formula => "formula",
            BlockCategory::Table => "table",
            BlockCategory::Image => "image",
            BlockCategory::Chemistry => "chemistry",
            BlockCategory::Handwriting => "handwriting",
            BlockCategory::Header => "header",
            BlockCategory::Footer => "footer",
            BlockCategory::Caption => "caption",
            BlockCategory::Other => "other",
        }
    }

    /// Case-insensitive lookup that also accepts the labels common layout
    /// models emit. Anything unrecognised is `Other`.
    pub fn from_name(name: &str) -> Self {
        let key = name.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        match key.as_str() {
            "text" | "paragraph" | "plain_text" | "list" | "list_item" => BlockCategory::Text,
            "title" | "section_header" | "heading" | "doc_title" => BlockCategory::Title,
            "formula" | "equation" | "math" | "isolate_formula" | "interline_equation" => {
                BlockCategory::Formula
            }
            "table" => BlockCategory::Table,
            "image" | "figure" | "picture" => BlockCategory::Image,
            "chemistry" | "molecule" | "smiles" | "chemical" => BlockCategory::Chemistry,
            "handwriting" | "handwritten" => BlockCategory::Handwriting,
            "header" | "page_header" => BlockCategory::Header,
            "footer" | "page_footer" => BlockCategory::Footer,
            "caption" | "figure_caption" | "table_caption" => BlockCategory::Caption,
            _ => BlockCategory::Other,
        }
    }

    fn from_tag(tag: &str) -> Self {
        match tag {
            "p" => BlockCategory::Text,
            "h1" | "h2" | "h3" | "h4" | "h5" | "h6" => BlockCategory::Title,
            "table" => BlockCategory::Table,
            "img" | "figure" => BlockCategory::Image,
            "math" => BlockCategory::Formula,
            "header" => BlockCategory::Header,
            "footer" => BlockCategory::Footer,
            "figcaption" | "caption" => BlockCategory::Caption,
            _ => BlockCategory::Other,
        }
    }

    /// Headers and footers never enter the page-level text concatenation.
    pub fn excluded_from_global_text(self) -> bool {
        matches!(self, BlockCategory::Header | BlockCategory::Footer)
    }

    /// Categories whose content takes part in the page-level text string.
    pub fn is_text_like(self) -> bool {
        matches!(
            self,
            BlockCategory::Text
                | BlockCategory::Title
                | BlockCategory::Caption
                | BlockCategory::Handwriting
        )
    }

    /// Tables, images and the ignorable page furniture (headers, footers) are
    /// left out of reading-order scoring.
    pub fn excluded_from_reading_order(self) -> bool {
        matches!(
            self,
            BlockCategory::Table
                | BlockCategory::Image
                | BlockCategory::Header
                | BlockCategory::Footer
        )
    }
}

impl fmt::Display for BlockCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum Language {
    #[default]
    #[serde(rename = "en", alias = "EN")]
    En,
    #[serde(rename = "zh", alias = "ZH")]
    Zh,
}

impl Language {
    pub const ALL: [Language; 2] = [Language::En, Language::Zh];

    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Zh => "zh",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Language::En => "EN",
            Language::Zh => "ZH",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "en" || s.starts_with("en-") || s == "english" {
            Some(Language::En)
        } else if s == "zh" || s.starts_with("zh-") || s == "chinese" {
            Some(Language::Zh)
        } else {
            None
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub category: BlockCategory,
    pub bbox: Option<BBox>,
    pub content: String,
}

impl Block {
    pub fn new(category: BlockCategory, bbox: Option<BBox>, content: impl Into<String>) -> Self {
        Self {
            category,
            bbox,
            content: content.into(),
        }
    }
}

/// One annotated page. Block order is reading order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageDocument {
    pub page_id: String,
    pub language: Language,
    pub doc_category: String,
    pub blocks: Vec<Block>,
}

impl PageDocument {
    pub fn new(
        page_id: impl Into<String>,
        language: Language,
        doc_category: impl Into<String>,
    ) -> Self {
        Self {
            page_id: page_id.into(),
            language,
            doc_category: doc_category.into(),
            blocks: Vec::new(),
        }
    }

    pub fn with_blocks(mut self, blocks: Vec<Block>) -> Self {
        self.blocks = blocks;
        self
    }

    pub fn has_category(&self, category: BlockCategory) -> bool {
        self.blocks.iter().any(|b| b.category == category)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Fail with [`SchemaError::MissingPageId`] when neither the markup nor a
    /// fallback supplies an id.
    pub require_page_id: bool,
}

/// Parses a page leniently: no page id is required.
pub fn parse_page(html: &str) -> Result<PageDocument, SchemaError> {
    parse_page_with(html, ParseOptions::default(), None)
}

/// Parses a page. `fallback_id` is used when the wrapper carries no id.
pub fn parse_page_with(
    html: &str,
    opts: ParseOptions,
    fallback_id: Option<&str>,
) -> Result<PageDocument, SchemaError> {
    if html.trim().is_empty() {
        return Err(SchemaError::Empty);
    }
    let tokens = html::tokenize(html)?;
    let mut doc = PageDocument::default();
    let mut saw_wrapper = false;

    for element in scan_level(&tokens, 0..tokens.len())? {
        if !saw_wrapper && element.is_page_wrapper() {
            saw_wrapper = true;
            if let Some(id) = element.attr("data-page-id") {
                doc.page_id = id.to_string();
            }
            if let Some(lang) = element.attr("data-language").and_then(Language::parse) {
                doc.language = lang;
            }
            if let Some(cat) = element.attr("data-doc-category") {
                doc.doc_category = cat.to_string();
            }
            for child in scan_level(&tokens, element.inner_tokens.clone())? {
                doc.blocks.push(child.to_block(html, &tokens));
            }
        } else {
            doc.blocks.push(element.to_block(html, &tokens));
        }
    }

    if doc.page_id.is_empty() {
        if let Some(id) = fallback_id {
            doc.page_id = id.to_string();
        }
    }
    if opts.require_page_id && doc.page_id.is_empty() {
        return Err(SchemaError::MissingPageId);
    }
    Ok(doc)
}

/// Reads a page file; the file stem is the fallback page id.
pub fn read_page_file(path: &Path) -> Result<PageDocument, crate::Error> {
    let html = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    let stem = path.file_stem().and_then(|s| s.to_str());
    parse_page_with(
        &html,
        ParseOptions {
            require_page_id: true,
        },
        stem,
    )
    .map_err(|e| crate::Error::Schema {
        path: path.display().to_string(),
        source: e,
    })
}

struct ScannedElement<'t> {
    name: &'t str,
    attrs: &'t [(String, String)],
    outer: std::ops::Range<usize>,
    inner: std::ops::Range<usize>,
    inner_tokens: std::ops::Range<usize>,
}

impl ScannedElement<'_> {
    fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    fn is_page_wrapper(&self) -> bool {
        self.attr("data-category").is_none()
            && ["data-page-id", "data-language", "data-doc-category"]
                .iter()
                .any(|a| self.attr(a).is_some())
    }

    fn to_block(&self, src: &str, tokens: &[Token]) -> Block {
        let category = match self.attr("data-category") {
            Some(name) => BlockCategory::from_name(name),
            None => BlockCategory::from_tag(self.name),
        };
        let bbox = self.attr("data-bbox").and_then(BBox::parse);
        let content = if category == BlockCategory::Table {
            if self.attr("data-category").is_none() {
                src[self.outer.clone()].to_string()
            } else {
                src[self.inner.clone()].to_string()
            }
        } else {
            let mut text = String::new();
            for token in &tokens[self.inner_tokens.clone()] {
                match &token.kind {
                    TokenKind::Text => {
                        text.push_str(&html::decode_entities(&src[token.span.clone()]))
                    }
                    TokenKind::Start { name, .. } if name == "br" => text.push('\n'),
                    _ => {}
                }
            }
            text
        };
        Block {
            category,
            bbox,
            content,
        }
    }
}

/// Splits the token range into sibling elements. Each element extends to the
/// matching close tag of the same name; what lies inside is not validated here.
fn scan_level(
    tokens: &[Token],
    range: std::ops::Range<usize>,
) -> Result<Vec<ScannedElement<'_>>, SchemaError> {
    let mut out = Vec::new();
    let mut i = range.start;
    while i < range.end {
        let token = &tokens[i];
        match &token.kind {
            TokenKind::Text | TokenKind::Other => i += 1,
            TokenKind::End { name } => {
                return Err(SchemaError::MalformedHtml(format!(
                    "stray closing tag </{name}> at byte {}",
                    token.span.start
                )))
            }
            TokenKind::Start {
                name,
                attrs,
                self_closing,
            } => {
                if *self_closing || html::is_void(name) {
                    out.push(ScannedElement {
                        name,
                        attrs,
                        outer: token.span.clone(),
                        inner: token.span.end..token.span.end,
                        inner_tokens: i + 1..i + 1,
                    });
                    i += 1;
                    continue;
                }
                let mut depth = 0usize;
                let mut close = None;
                for (j, t) in tokens.iter().enumerate().take(range.end).skip(i + 1) {
                    match &t.kind {
                        TokenKind::Start {
                            name: n,
                            self_closing: false,
                            ..
                        } if n == name => depth += 1,
                        TokenKind::End { name: n } if n == name => {
                            if depth == 0 {
                                close = Some(j);
                                break;
                            }
                            depth -= 1;
                        }
                        _ => {}
                    }
                }
                let Some(j) = close else {
                    return Err(SchemaError::MalformedHtml(format!(
                        "<{name}> at byte {} is never closed",
                        token.span.start
                    )));
                };
                out.push(ScannedElement {
                    name,
                    attrs,
                    outer: token.span.start..tokens[j].span.end,
                    inner: token.span.end..tokens[j].span.start,
                    inner_tokens: i + 1..j,
                });
                i = j + 1;
            }
        }
    }
    Ok(out)
}

/// Writes the canonical wire form. [`parse_page`] restores the document exactly.
pub fn serialize_page(doc: &PageDocument) -> String {
    let mut out = format!(
        "<div data-page-id=\"{}\" data-language=\"{}\" data-doc-category=\"{}\">\n",
        html::escape_attr(&doc.page_id),
        doc.language.code(),
        html::escape_attr(&doc.doc_category)
    );
    for block in &doc.blocks {
        out.push_str("<div data-category=\"");
        out.push_str(block.category.name());
        out.push('"');
        if let Some(bbox) = &block.bbox {
            out.push_str(&format!(" data-bbox=\"{bbox}\""));
        }
        out.push('>');
        if block.category == BlockCategory::Table {
            out.push_str(&block.content);
        } else {
            out.push_str(&html::escape_text(&block.content));
        }
        out.push_str("</div>\n");
    }
    out.push_str("</div>\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    BoxXOrder,
    BoxYOrder,
    NegativeCoordinate,
    MalformedTable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub block: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "block {}: ", self.block)?;
        match &self.kind {
            ViolationKind::BoxXOrder => f.write_str("x1 > x2"),
            ViolationKind::BoxYOrder => f.write_str("y1 > y2"),
            ViolationKind::NegativeCoordinate => f.write_str("negative coordinate"),
            ViolationKind::MalformedTable(why) => write!(f, "malformed table fragment ({why})"),
        }
    }
}

/// Every invariant violation in `doc`; empty iff the document is valid.
pub fn validate(doc: &PageDocument) -> Vec<Violation> {
    let mut out = Vec::new();
    for (index, block) in doc.blocks.iter().enumerate() {
        if let Some(b) = &block.bbox {
            if b.x1 > b.x2 {
                out.push(Violation {
                    block: index,
                    kind: ViolationKind::BoxXOrder,
                });
            }
            if b.y1 > b.y2 {
                out.push(Violation {
                    block: index,
                    kind: ViolationKind::BoxYOrder,
                });
            }
            if b.x1 < 0 || b.y1 < 0 || b.x2 < 0 || b.y2 < 0 {
                out.push(Violation {
                    block: index,
                    kind: ViolationKind::NegativeCoordinate,
                });
            }
        }
        if block.category == BlockCategory::Table {
            if let Err(e) = tablemetrics::check_table_fragment(&block.content) {
                out.push(Violation {
                    block: index,
                    kind: ViolationKind::MalformedTable(e.to_string()),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_bare_block() {
        let doc =
            parse_page(r#"<div data-category="text" data-bbox="0,0,100,20">Hello</div>"#).unwrap();
        assert_eq!(doc.blocks.len(), 1);
        assert_eq!(doc.blocks[0].category, BlockCategory::Text);
        assert_eq!(doc.blocks[0].bbox, Some(BBox::new(0, 0, 100, 20)));
        assert_eq!(doc.blocks[0].content, "Hello");
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(parse_page(""), Err(SchemaError::Empty)));
        assert!(matches!(parse_page(" \n"), Err(SchemaError::Empty)));
        assert!(parse_page("<div data-page-id=\"p\"></div>")
            .unwrap()
            .blocks
            .is_empty());
    }

    #[test]
    fn order_is_preserved() {
        let html = concat!(
            r#"<div data-page-id="p" data-language="zh">"#,
            r#"<div data-category="formula">x^2</div>"#,
            r#"<div data-category="table"><table><tr><td>1</td></tr></table></div>"#,
            "</div>"
        );
        let doc = parse_page(html).unwrap();
        assert_eq!(doc.page_id, "p");
        assert_eq!(doc.language, Language::Zh);
        assert_eq!(doc.blocks[0].category, BlockCategory::Formula);
        assert_eq!(doc.blocks[1].category, BlockCategory::Table);
        assert_eq!(doc.blocks[1].content, "<table><tr><td>1</td></tr></table>");
    }

    #[test]
    fn unknown_category_and_missing_bbox() {
        let doc =
            parse_page(r#"<div data-category="marginalia">x</div><p>y</p><section>z</section>"#)
                .unwrap();
        assert_eq!(doc.blocks[0].category, BlockCategory::Other);
        assert_eq!(doc.blocks[0].bbox, None);
        assert_eq!(doc.blocks[1].category, BlockCategory::Text);
        assert_eq!(doc.blocks[2].category, BlockCategory::Other);
    }

    #[test]
    fn bare_table_element_keeps_outer_html() {
        let doc = parse_page("<table><tr><td>a</td></tr></table>").unwrap();
        assert_eq!(doc.blocks[0].category, BlockCategory::Table);
        assert_eq!(doc.blocks[0].content, "<table><tr><td>a</td></tr></table>");
    }

    #[test]
    fn unbalanced_top_level_is_malformed() {
        assert!(matches!(
            parse_page(r#"<div data-category="text">x"#),
            Err(SchemaError::MalformedHtml(_))
        ));
        assert!(matches!(
            parse_page("</div>"),
            Err(SchemaError::MalformedHtml(_))
        ));
    }

    #[test]
    fn page_id_requirement() {
        let opts = ParseOptions {
            require_page_id: true,
        };
        assert!(matches!(
            parse_page_with("<p>x</p>", opts, None),
            Err(SchemaError::MissingPageId)
        ));
        assert_eq!(
            parse_page_with("<p>x</p>", opts, Some("f"))
                .unwrap()
                .page_id,
            "f"
        );
    }

    #[test]
    fn serialize_round_trip_with_markup_characters() {
        let doc = PageDocument::new("a\"b", Language::Zh, "exam").with_blocks(vec![
            Block::new(BlockCategory::Formula, None, "a < b & c </div>"),
            Block::new(BlockCategory::Image, Some(BBox::new(1, 2, 3, 4)), ""),
            Block::new(
                BlockCategory::Table,
                None,
                "<table><tr><td>&amp;</td></tr></table>",
            ),
        ]);
        let html = serialize_page(&doc);
        assert_eq!(parse_page(&html).unwrap(), doc);
    }

    #[test]
    fn empty_page_serializes_to_wrapper() {
        let html = serialize_page(&PageDocument::default());
        assert_eq!(
            html,
            "<div data-page-id=\"\" data-language=\"en\" data-doc-category=\"\">\n</div>\n"
        );
        assert_eq!(html.matches("data-category").count(), 0);
        let one =
            PageDocument::default().with_blocks(vec![Block::new(BlockCategory::Text, None, "x")]);
        assert_eq!(serialize_page(&one).matches("data-category").count(), 1);
    }

    #[test]
    fn validate_reports_each_violation() {
        let doc = PageDocument::default().with_blocks(vec![
            Block::new(BlockCategory::Text, Some(BBox::new(10, 0, 5, 0)), "a"),
            Block::new(BlockCategory::Table, None, "<td>a"),
            Block::new(BlockCategory::Text, Some(BBox::new(-1, 0, 5, 3)), "b"),
        ]);
        let v = validate(&doc);
        assert_eq!(v.len(), 3);
        assert_eq!(v[0].to_string(), "block 0: x1 > x2");
        assert_eq!(v[1].block, 1);
        assert!(v[1].to_string().contains("malformed table fragment"));
        assert_eq!(v[2].kind, ViolationKind::NegativeCoordinate);
        let ok = PageDocument::default().with_blocks(vec![Block::new(
            BlockCategory::Text,
            Some(BBox::new(0, 0, 1, 1)),
            "a",
        )]);
        assert!(validate(&ok).is_empty());
    }

    #[test]
    fn iou_arithmetic() {
        let a = BBox::new(0, 0, 2, 2);
        let b = BBox::new(1, 0, 3, 2);
        assert!((a.iou(&b) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(a.iou(&BBox::new(5, 5, 6, 6)), 0.0);
        assert_eq!(a.iou(&a), 1.0);
    }

    #[test]
    fn lenient_bbox_forms() {
        assert_eq!(BBox::parse("1, 2 ,3,4"), Some(BBox::new(1, 2, 3, 4)));
        assert_eq!(BBox::parse("1.4,2.6,3,4"), Some(BBox::new(1, 3, 3, 4)));
        assert_eq!(BBox::parse("1,2,3"), None);
        assert_eq!(BBox::parse("a,b,c,d"), None);
    }
}
