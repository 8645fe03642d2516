//! Content normalization applied before every comparison, so that metrics
//! measure content rather than formatting.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::html::{self, Element, Node};
use crate::schema::BlockCategory;
use crate::tablemetrics::{table_root, TableError};

/// Attributes that define the cell grid; they survive any drop list.
const STRUCTURAL_ATTRS: [&str; 2] = ["rowspan", "colspan"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    /// When false every normalizer returns its input unchanged.
    pub enabled: bool,
    pub collapse_whitespace: bool,
    pub unicode_compat_fold: bool,
    pub fullwidth_to_halfwidth: bool,
    /// Macro names without the leading backslash, e.g. `mathrm` or `,`.
    pub latex_strip_list: Vec<String>,
    pub table_drop_attrs: Vec<String>,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            collapse_whitespace: true,
            unicode_compat_fold: true,
            fullwidth_to_halfwidth: true,
            latex_strip_list: [
                "displaystyle",
                "mathrm",
                "textstyle",
                "left",
                "right",
                ",",
                ";",
                "!",
                "quad",
                "qquad",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
            table_drop_attrs: ["style", "class", "width", "height", "align"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

impl NormalizationConfig {
    /// Configuration that compares raw content.
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

fn fullwidth_to_halfwidth(c: char) -> char {
    match c {
        '\u{3000}' => ' ',
        '\u{ff01}'..='\u{ff5e}' => char::from_u32(c as u32 - 0xfee0).unwrap_or(c),
        _ => c,
    }
}

pub fn normalize_text(s: &str, cfg: &NormalizationConfig) -> String {
    if !cfg.enabled {
        return s.to_string();
    }
    let mut out: String = if cfg.unicode_compat_fold {
        s.nfkc().collect()
    } else {
        s.to_string()
    };
    if cfg.fullwidth_to_halfwidth {
        out = out.chars().map(fullwidth_to_halfwidth).collect();
    }
    if cfg.collapse_whitespace {
        out = collapse_whitespace(&out);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TexToken {
    Word(String),
    Symbol(char),
    Open,
    Close,
    Space(String),
    Char(char),
}

fn tex_tokens(s: &str) -> Vec<TexToken> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\\' if i + 1 < chars.len() => {
                if chars[i + 1].is_ascii_alphabetic() {
                    let start = i + 1;
                    i = start;
                    while i < chars.len() && chars[i].is_ascii_alphabetic() {
                        i += 1;
                    }
                    out.push(TexToken::Word(chars[start..i].iter().collect()));
                } else {
                    out.push(TexToken::Symbol(chars[i + 1]));
                    i += 2;
                }
                continue;
            }
            '{' => out.push(TexToken::Open),
            '}' => out.push(TexToken::Close),
            c if c.is_whitespace() => {
                let start = i;
                while i < chars.len() && chars[i].is_whitespace() {
                    i += 1;
                }
                out.push(TexToken::Space(chars[start..i].iter().collect()));
                continue;
            }
            c => out.push(TexToken::Char(c)),
        }
        i += 1;
    }
    out
}

fn braces_balanced(tokens: &[TexToken]) -> bool {
    let mut depth = 0i64;
    for t in tokens {
        match t {
            TexToken::Open => depth += 1,
            TexToken::Close => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0
}

fn matching_close(tokens: &[TexToken], open: usize) -> usize {
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate().skip(open) {
        match t {
            TexToken::Open => depth += 1,
            TexToken::Close => {
                depth -= 1;
                if depth == 0 {
                    return i;
                }
            }
            _ => {}
        }
    }
    unreachable!("braces were checked for balance")
}

/// Strips the configured presentation macros from a LaTeX string. A stripped
/// control word that takes a braced argument keeps the argument text.
/// Unbalanced input is only whitespace-normalized.
pub fn normalize_latex(s: &str, cfg: &NormalizationConfig) -> String {
    if !cfg.enabled {
        return s.to_string();
    }
    let tokens = tex_tokens(s);
    let mut keep = vec![true; tokens.len()];
    if braces_balanced(&tokens) {
        let strip = |name: &str| cfg.latex_strip_list.iter().any(|m| m == name);
        for i in 0..tokens.len() {
            if !keep[i] {
                continue;
            }
            match &tokens[i] {
                TexToken::Word(name) if strip(name) => {
                    keep[i] = false;
                    let mut j = i + 1;
                    while matches!(tokens.get(j), Some(TexToken::Space(_))) {
                        j += 1;
                    }
                    if tokens.get(j) == Some(&TexToken::Open) {
                        let close = matching_close(&tokens, j);
                        for k in keep.iter_mut().take(j + 1).skip(i + 1) {
                            *k = false;
                        }
                        keep[close] = false;
                    }
                }
                TexToken::Symbol(c) if strip(c.encode_utf8(&mut [0; 4])) => keep[i] = false,
                _ => {}
            }
        }
    }

    let kept: Vec<&TexToken> = tokens
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(t, _)| t)
        .collect();
    let mut out = String::with_capacity(s.len());
    let mut pending_space: Option<&str> = None;
    let mut last_word = false;
    for token in kept {
        if let TexToken::Space(ws) = token {
            if !out.is_empty() && pending_space.is_none() {
                pending_space = Some(ws);
            }
            continue;
        }
        if let Some(ws) = pending_space.take() {
            out.push_str(if cfg.collapse_whitespace { " " } else { ws });
        } else if last_word && matches!(token, TexToken::Char(c) if c.is_ascii_alphabetic()) {
            // keep the control word from absorbing the letters that now follow it
            out.push(' ');
        }
        last_word = false;
        match token {
            TexToken::Word(name) => {
                out.push('\\');
                out.push_str(name);
                last_word = true;
            }
            TexToken::Symbol(c) => {
                out.push('\\');
                out.push(*c);
            }
            TexToken::Open => out.push('{'),
            TexToken::Close => out.push('}'),
            TexToken::Char(c) => out.push(*c),
            TexToken::Space(_) => unreachable!(),
        }
    }
    if !cfg.collapse_whitespace {
        if let Some(ws) = pending_space {
            out.push_str(ws);
        }
    }
    out
}

/// Canonical form of a table fragment: lowercase tags, presentational
/// attributes dropped, no inter-tag whitespace, normalized cell text.
pub fn normalize_table_html(s: &str, cfg: &NormalizationConfig) -> Result<String, TableError> {
    let root = table_root(s)?;
    if !cfg.enabled {
        return Ok(s.to_string());
    }
    let mut out = String::with_capacity(s.len());
    emit_table_element(&root, cfg, &mut out);
    Ok(out)
}

fn emit_table_element(el: &Element, cfg: &NormalizationConfig, out: &mut String) {
    out.push('<');
    out.push_str(&el.name);
    for (name, value) in &el.attrs {
        let dropped = !STRUCTURAL_ATTRS.contains(&name.as_str())
            && cfg
                .table_drop_attrs
                .iter()
                .any(|d| d.eq_ignore_ascii_case(name));
        if !dropped {
            out.push(' ');
            out.push_str(name);
            out.push_str("=\"");
            out.push_str(&html::escape_attr(value));
            out.push('"');
        }
    }
    out.push('>');
    if html::is_void(&el.name) {
        return;
    }
    if matches!(el.name.as_str(), "td" | "th" | "caption") {
        out.push_str(&html::escape_text(&normalize_text(&el.text_content(), cfg)));
    } else {
        for child in &el.children {
            match child {
                Node::Element(e) => emit_table_element(e, cfg, out),
                Node::Text(t) => {
                    if !t.trim().is_empty() {
                        out.push_str(&html::escape_text(&normalize_text(t, cfg)));
                    }
                }
            }
        }
    }
    out.push_str("</");
    out.push_str(&el.name);
    out.push('>');
}

/// Whitespace-only normalization, used for SMILES strings.
pub fn normalize_whitespace(s: &str, cfg: &NormalizationConfig) -> String {
    if cfg.enabled && cfg.collapse_whitespace {
        collapse_whitespace(s)
    } else {
        s.to_string()
    }
}

/// The form of a block's content that metrics compare, chosen by category.
/// Tables that fail to parse fall back to text normalization of the raw markup.
pub fn normalize_block_content(
    category: BlockCategory,
    content: &str,
    cfg: &NormalizationConfig,
) -> String {
    match category {
        BlockCategory::Formula => normalize_latex(content, cfg),
        BlockCategory::Chemistry => normalize_whitespace(content, cfg),
        BlockCategory::Table => {
            normalize_table_html(content, cfg).unwrap_or_else(|_| normalize_text(content, cfg))
        }
        _ => normalize_text(content, cfg),
    }
}
