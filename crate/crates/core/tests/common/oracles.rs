//! Slow reference implementations used to check the production code.

use std::collections::HashMap;

use layoutmetrics::schema::BlockCategory;
use layoutmetrics::tablemetrics::{TableNode, CELL_LABEL};

/// Quadratic Wagner–Fischer table.
pub fn dp_levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

pub fn dp_ned<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        0.0
    } else {
        dp_levenshtein(a, b) as f64 / longest as f64
    }
}

pub fn dp_ned_str(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    dp_ned(&a, &b)
}

/// Pairs `i < j` with `p[i] > p[j]`, enumerated directly.
pub fn naive_inversions(p: &[usize]) -> u64 {
    let mut count = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                count += 1;
            }
        }
    }
    count
}

fn relabel(a: &TableNode, b: &TableNode) -> f64 {
    match (a.label == CELL_LABEL, b.label == CELL_LABEL) {
        (true, true) if a.colspan == b.colspan && a.rowspan == b.rowspan => dp_ned_str(
            a.text.as_deref().unwrap_or(""),
            b.text.as_deref().unwrap_or(""),
        ),
        (true, true) => 1.0,
        (false, false) if a.label == b.label => 0.0,
        _ => 1.0,
    }
}

fn forest_size(f: &[TableNode]) -> usize {
    f.iter().map(TableNode::size).sum()
}

/// Ordered forest edit distance by the textbook recursion on rightmost
/// roots, memoized on the forests themselves.
pub fn naive_tree_distance(a: &TableNode, b: &TableNode) -> f64 {
    let mut memo = HashMap::new();
    forest_distance(std::slice::from_ref(a), std::slice::from_ref(b), &mut memo)
}

fn forest_distance(f: &[TableNode], g: &[TableNode], memo: &mut HashMap<String, f64>) -> f64 {
    if f.is_empty() {
        return forest_size(g) as f64;
    }
    if g.is_empty() {
        return forest_size(f) as f64;
    }
    let key = format!("{f:?}|{g:?}");
    if let Some(&d) = memo.get(&key) {
        return d;
    }
    let v = f.last().unwrap();
    let w = g.last().unwrap();
    let f_rest = &f[..f.len() - 1];
    let g_rest = &g[..g.len() - 1];
    let f_without_v: Vec<TableNode> = f_rest.iter().chain(&v.children).cloned().collect();
    let g_without_w: Vec<TableNode> = g_rest.iter().chain(&w.children).cloned().collect();

    let delete = forest_distance(&f_without_v, g, memo) + 1.0;
    let insert = forest_distance(f, &g_without_w, memo) + 1.0;
    let replace = forest_distance(&v.children, &w.children, memo)
        + forest_distance(f_rest, g_rest, memo)
        + relabel(v, w);
    let d = delete.min(insert).min(replace);
    memo.insert(key, d);
    d
}

fn class(c: BlockCategory) -> BlockCategory {
    match c {
        BlockCategory::Title | BlockCategory::Caption => BlockCategory::Text,
        other => other,
    }
}

type Labeled = (BlockCategory, String);

/// Best total similarity over every partial injection of predicted blocks
/// into ground-truth blocks, given normalized contents and categories.
pub fn brute_force_matching(
    pred: &[(BlockCategory, String)],
    gt: &[(BlockCategory, String)],
    threshold: f64,
    category_must_agree: bool,
) -> f64 {
    let sim = |p: &(BlockCategory, String), g: &(BlockCategory, String)| -> Option<f64> {
        if category_must_agree && class(p.0) != class(g.0) {
            return None;
        }
        let s = 1.0 - dp_ned_str(&p.1, &g.1);
        (s >= threshold).then_some(s)
    };
    fn search(
        i: usize,
        used: &mut Vec<bool>,
        pred: &[(BlockCategory, String)],
        gt: &[(BlockCategory, String)],
        sim: &dyn Fn(&Labeled, &Labeled) -> Option<f64>,
    ) -> f64 {
        if i == pred.len() {
            return 0.0;
        }
        // leave pred[i] unmatched
        let mut best = search(i + 1, used, pred, gt, sim);
        for j in 0..gt.len() {
            if used[j] {
                continue;
            }
            if let Some(s) = sim(&pred[i], &gt[j]) {
                used[j] = true;
                best = best.max(s + search(i + 1, used, pred, gt, sim));
                used[j] = false;
            }
        }
        best
    }
    search(0, &mut vec![false; gt.len()], pred, gt, &sim)
}
