//! Table structure metrics: TEDS over ordered table trees, and table NED.
//!
//! The tree edit distance uses the usual table-recognition cost model.
//! Insertions and deletions cost 1. Relabelling two cells costs the
//! normalized edit distance of their texts when both spans agree and 1
//! otherwise. Relabelling structural nodes costs 0 for equal tags and 1
//! otherwise.

use thiserror::Error;

use crate::html::{self, Element, Node};
use crate::normalize::{normalize_table_html, normalize_text, NormalizationConfig};
use crate::textmetrics::ned_chars;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("malformed table: {0}")]
    Malformed(String),
}

impl From<html::HtmlError> for TableError {
    fn from(e: html::HtmlError) -> Self {
        TableError::Malformed(e.to_string())
    }
}

pub const CELL_LABEL: &str = "cell";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableNode {
    /// `table`, `tr`, or [`CELL_LABEL`].
    pub label: String,
    /// Normalized cell text; `None` for structural nodes.
    pub text: Option<String>,
    pub colspan: u32,
    pub rowspan: u32,
    pub children: Vec<TableNode>,
}

impl TableNode {
    pub fn structural(label: impl Into<String>, children: Vec<TableNode>) -> Self {
        Self {
            label: label.into(),
            text: None,
            colspan: 1,
            rowspan: 1,
            children,
        }
    }

    pub fn cell(text: impl Into<String>, colspan: u32, rowspan: u32) -> Self {
        Self {
            label: CELL_LABEL.to_string(),
            text: Some(text.into()),
            colspan: colspan.max(1),
            rowspan: rowspan.max(1),
            children: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(TableNode::size).sum::<usize>()
    }
}

/// Rooted ordered tree of a table: `table` → `tr` → cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableTree {
    pub root: TableNode,
}

impl TableTree {
    pub fn new(root: TableNode) -> Self {
        Self { root }
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }
}

/// The single `<table>` element of a fragment. Only whitespace and comments
/// may surround it.
pub(crate) fn table_root(s: &str) -> Result<Element, TableError> {
    let nodes = html::parse_fragment(s)?;
    let mut root = None;
    for node in nodes {
        match node {
            Node::Text(t) if t.trim().is_empty() => {}
            Node::Text(t) => {
                return Err(TableError::Malformed(format!(
                    "text outside the table: {:?}",
                    t.trim().chars().take(20).collect::<String>()
                )))
            }
            Node::Element(e) if e.name == "table" && root.is_none() => root = Some(e),
            Node::Element(e) => {
                return Err(TableError::Malformed(format!(
                    "unexpected top-level <{}>",
                    e.name
                )))
            }
        }
    }
    root.ok_or_else(|| TableError::Malformed("no <table> element".into()))
}

fn span_attr(el: &Element, name: &str) -> u32 {
    el.attr(name)
        .and_then(|v| v.trim().parse::<u32>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(1)
}

fn build_row(tr: &Element, cfg: &NormalizationConfig) -> Result<TableNode, TableError> {
    let mut cells = Vec::new();
    for child in tr.child_elements() {
        match child.name.as_str() {
            "td" | "th" => {
                let raw = child.text_content();
                let text = if cfg.enabled {
                    normalize_text(&raw, cfg)
                } else {
                    raw
                };
                cells.push(TableNode::cell(
                    text,
                    span_attr(child, "colspan"),
                    span_attr(child, "rowspan"),
                ));
            }
            other => return Err(TableError::Malformed(format!("<{other}> inside <tr>"))),
        }
    }
    Ok(TableNode::structural("tr", cells))
}

/// Parses a table fragment into its tree. Row groups (`thead`, `tbody`,
/// `tfoot`) are flattened so rows compare in document order; captions and
/// column groups carry no structure and are skipped.
pub fn parse_table_tree(html: &str, cfg: &NormalizationConfig) -> Result<TableTree, TableError> {
    let table = table_root(html)?;
    let mut rows = Vec::new();
    for child in table.child_elements() {
        match child.name.as_str() {
            "tr" => rows.push(build_row(child, cfg)?),
            "thead" | "tbody" | "tfoot" => {
                for grouped in child.child_elements() {
                    if grouped.name != "tr" {
                        return Err(TableError::Malformed(format!(
                            "<{}> inside <{}>",
                            grouped.name, child.name
                        )));
                    }
                    rows.push(build_row(grouped, cfg)?);
                }
            }
            "caption" | "colgroup" | "col" => {}
            other => return Err(TableError::Malformed(format!("<{other}> inside <table>"))),
        }
    }
    Ok(TableTree::new(TableNode::structural("table", rows)))
}

/// Ok iff the fragment parses as a table.
pub fn check_table_fragment(html: &str) -> Result<(), TableError> {
    parse_table_tree(html, &NormalizationConfig::default()).map(|_| ())
}

struct Flat<'a> {
    nodes: Vec<&'a TableNode>,
    /// Postorder index of each node's leftmost leaf.
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
    text: Vec<Vec<char>>,
}

impl<'a> Flat<'a> {
    fn new(tree: &'a TableTree) -> Self {
        fn walk<'a>(
            node: &'a TableNode,
            nodes: &mut Vec<&'a TableNode>,
            leftmost: &mut Vec<usize>,
        ) -> usize {
            let mut first_leaf = None;
            for child in &node.children {
                let l = walk(child, nodes, leftmost);
                first_leaf.get_or_insert(l);
            }
            let index = nodes.len();
            nodes.push(node);
            let l = first_leaf.unwrap_or(index);
            leftmost.push(l);
            l
        }
        let mut nodes = Vec::new();
        let mut leftmost = Vec::new();
        walk(&tree.root, &mut nodes, &mut leftmost);

        // A keyroot is the highest node having a given leftmost leaf.
        let n = nodes.len();
        let mut seen = vec![false; n];
        let mut keyroots = Vec::new();
        for i in (0..n).rev() {
            if !seen[leftmost[i]] {
                seen[leftmost[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.reverse();
        let text = nodes
            .iter()
            .map(|n| n.text.as_deref().unwrap_or("").chars().collect())
            .collect();
        Self {
            nodes,
            leftmost,
            keyroots,
            text,
        }
    }
}

fn relabel_cost(a: &TableNode, a_text: &[char], b: &TableNode, b_text: &[char]) -> f64 {
    if a.label == CELL_LABEL && b.label == CELL_LABEL {
        if a.colspan == b.colspan && a.rowspan == b.rowspan {
            ned_chars(a_text, b_text)
        } else {
            1.0
        }
    } else if a.label == b.label {
        0.0
    } else {
        1.0
    }
}

/// Ordered tree edit distance (Zhang–Shasha) under the TEDS cost model.
pub fn tree_edit_distance(t1: &TableTree, t2: &TableTree) -> f64 {
    let a = Flat::new(t1);
    let b = Flat::new(t2);
    let (n, m) = (a.nodes.len(), b.nodes.len());

    let mut relabel = vec![0.0f64; n * m];
    for i in 0..n {
        for j in 0..m {
            relabel[i * m + j] = if a.nodes[i].label == CELL_LABEL
                && b.nodes[j].label == CELL_LABEL
                && a.text[i] == b.text[j]
                && a.nodes[i].colspan == b.nodes[j].colspan
                && a.nodes[i].rowspan == b.nodes[j].rowspan
            {
                0.0
            } else {
                relabel_cost(a.nodes[i], &a.text[i], b.nodes[j], &b.text[j])
            };
        }
    }

    let mut treedist = vec![0.0f64; n * m];
    // forest distance buffer, indexed by offsets from the keyroots' leftmost leaves
    let mut fd = vec![0.0f64; (n + 1) * (m + 1)];
    let w = m + 1;

    for &i in &a.keyroots {
        for &j in &b.keyroots {
            let li = a.leftmost[i];
            let lj = b.leftmost[j];
            let rows = i - li + 2;
            let cols = j - lj + 2;
            fd[0] = 0.0;
            for x in 1..rows {
                fd[x * w] = fd[(x - 1) * w] + 1.0;
            }
            for y in 1..cols {
                fd[y] = fd[y - 1] + 1.0;
            }
            for x in 1..rows {
                let ni = li + x - 1;
                for y in 1..cols {
                    let nj = lj + y - 1;
                    let delete = fd[(x - 1) * w + y] + 1.0;
                    let insert = fd[x * w + y - 1] + 1.0;
                    let value = if a.leftmost[ni] == li && b.leftmost[nj] == lj {
                        let v = delete
                            .min(insert)
                            .min(fd[(x - 1) * w + y - 1] + relabel[ni * m + nj]);
                        treedist[ni * m + nj] = v;
                        v
                    } else {
                        let px = a.leftmost[ni] - li;
                        let py = b.leftmost[nj] - lj;
                        delete
                            .min(insert)
                            .min(fd[px * w + py] + treedist[ni * m + nj])
                    };
                    fd[x * w + y] = value;
                }
            }
        }
    }
    treedist[(n - 1) * m + (m - 1)]
}

/// TEDS of two parsed trees: `1 - TED / max(|T1|, |T2|)`, clamped to [0, 1].
pub fn teds_trees(pred: &TableTree, gt: &TableTree) -> f64 {
    let denom = pred.size().max(gt.size()) as f64;
    (1.0 - tree_edit_distance(pred, gt) / denom).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TedsWarning {
    PredictionMalformed,
    BothMalformed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TedsScore {
    pub score: f64,
    pub warning: Option<TedsWarning>,
}

/// TEDS between a predicted and a ground-truth table fragment.
///
/// An unparseable prediction scores 0. An unparseable ground truth is a data
/// error unless the prediction is unparseable as well, in which case the pair
/// scores 0 with [`TedsWarning::BothMalformed`].
pub fn teds(
    pred_html: &str,
    gt_html: &str,
    cfg: &NormalizationConfig,
) -> Result<TedsScore, TableError> {
    let gt = parse_table_tree(gt_html, cfg);
    let pred = parse_table_tree(pred_html, cfg);
    match (pred, gt) {
        (Ok(p), Ok(g)) => Ok(TedsScore {
            score: teds_trees(&p, &g),
            warning: None,
        }),
        (Err(_), Ok(_)) => Ok(TedsScore {
            score: 0.0,
            warning: Some(TedsWarning::PredictionMalformed),
        }),
        (Err(_), Err(_)) => Ok(TedsScore {
            score: 0.0,
            warning: Some(TedsWarning::BothMalformed),
        }),
        (Ok(_), Err(e)) => Err(e),
    }
}

/// NED between the normalized HTML of two table fragments. Fragments that do
/// not parse are compared by their text-normalized markup.
pub fn table_edit(pred_html: &str, gt_html: &str, cfg: &NormalizationConfig) -> f64 {
    let canon = |s: &str| normalize_table_html(s, cfg).unwrap_or_else(|_| normalize_text(s, cfg));
    let p: Vec<char> = canon(pred_html).chars().collect();
    let g: Vec<char> = canon(gt_html).chars().collect();
    ned_chars(&p, &g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NormalizationConfig {
        NormalizationConfig::default()
    }

    fn tree(html: &str) -> TableTree {
        parse_table_tree(html, &cfg()).unwrap()
    }

    #[test]
    fn parses_minimal_tables() {
        let t = tree("<table><tr><td>a</td></tr></table>");
        assert_eq!(t.size(), 3);
        assert_eq!(t.root.children[0].children[0].text.as_deref(), Some("a"));
        assert_eq!(tree("<table></table>").size(), 1);
        let spanned = tree("<table><tr><td colspan=\"2\">x</td></tr></table>");
        assert_eq!(spanned.root.children[0].children[0].colspan, 2);
    }

    #[test]
    fn row_groups_flatten() {
        let t = tree(
            "<table><thead><tr><th>h</th></tr></thead><tbody><tr><td>b</td></tr></tbody></table>",
        );
        assert_eq!(t.root.children.len(), 2);
        assert_eq!(t.size(), 5);
        assert_eq!(
            t,
            tree("<table><tr><td>h</td></tr><tr><td>b</td></tr></table>")
        );
    }

    #[test]
    fn malformed_tables() {
        assert!(parse_table_tree("<td>a", &cfg()).is_err());
        assert!(parse_table_tree("<table><td>a</td></table>", &cfg()).is_err());
        assert!(parse_table_tree("<table><tr><p>x</p></tr></table>", &cfg()).is_err());
    }

    #[test]
    fn distance_examples() {
        let a = tree("<table><tr><td>a</td><td>b</td></tr></table>");
        assert_eq!(tree_edit_distance(&a, &a), 0.0);
        let extra = tree("<table><tr><td>a</td><td>b</td><td></td></tr></table>");
        assert_eq!(tree_edit_distance(&a, &extra), 1.0);
        assert_eq!(tree_edit_distance(&extra, &a), 1.0);

        let ab = tree("<table><tr><td>x</td><td>ab</td></tr></table>");
        let ad = tree("<table><tr><td>x</td><td>ad</td></tr></table>");
        assert_eq!(tree_edit_distance(&ab, &ad), 0.5);
    }

    #[test]
    fn span_mismatch_costs_one() {
        let a = tree("<table><tr><td>a</td></tr></table>");
        let b = tree("<table><tr><td colspan=\"2\">a</td></tr></table>");
        assert_eq!(tree_edit_distance(&a, &b), 1.0);
    }

    #[test]
    fn teds_examples() {
        let ab = "<table><tr><td>x</td><td>ab</td></tr></table>";
        let ad = "<table><tr><td>x</td><td>ad</td></tr></table>";
        assert_eq!(teds(ab, ab, &cfg()).unwrap().score, 1.0);
        assert_eq!(teds(ab, ad, &cfg()).unwrap().score, 0.875);
        let bad = teds("<td>", ab, &cfg()).unwrap();
        assert_eq!(bad.score, 0.0);
        assert_eq!(bad.warning, Some(TedsWarning::PredictionMalformed));
        assert_eq!(
            teds("<td>", "<tr>", &cfg()).unwrap().warning,
            Some(TedsWarning::BothMalformed)
        );
        assert!(teds(ab, "<td>", &cfg()).is_err());
    }

    #[test]
    fn table_edit_examples() {
        let t = "<table><tr><td>a</td></tr></table>";
        assert_eq!(table_edit(t, t, &cfg()), 0.0);
        assert_eq!(table_edit("", t, &cfg()), 1.0);
        assert_eq!(
            table_edit(
                "<TABLE><tr><td style=\"color:red\">a</td></tr></TABLE>",
                t,
                &cfg()
            ),
            0.0
        );
    }
}
