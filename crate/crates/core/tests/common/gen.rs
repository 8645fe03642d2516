//! Seeded random inputs shared by the integration tests.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use layoutmetrics::tablemetrics::{TableNode, TableTree};

pub fn random_string(rng: &mut ChaCha8Rng, alphabet: &[char], max_len: usize) -> Vec<char> {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

pub fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    p
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                extend(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// A random ordered tree of at most `max_nodes` nodes mixing structural nodes
/// and leaf cells with short texts and small spans.
pub fn random_table_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> TableTree {
    const LABELS: [&str; 3] = ["table", "tr", "thead"];
    let size = rng.random_range(1..=max_nodes);
    // flat arena: (node, parent)
    let mut nodes: Vec<(TableNode, Option<usize>)> = vec![(
        TableNode::structural(*LABELS.choose(rng).unwrap(), vec![]),
        None,
    )];
    for _ in 1..size {
        let parents: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].0.text.is_none())
            .collect();
        let parent = *parents.choose(rng).unwrap();
        let node = if rng.random_bool(0.5) {
            let text: String = random_string(rng, &['a', 'b'], 3).into_iter().collect();
            TableNode::cell(text, rng.random_range(1..=2), rng.random_range(1..=2))
        } else {
            TableNode::structural(*LABELS.choose(rng).unwrap(), vec![])
        };
        nodes.push((node, Some(parent)));
    }
    // attach children in creation order, deepest indices first
    for i in (1..nodes.len()).rev() {
        let (child, parent) = nodes[i].clone();
        let parent = parent.unwrap();
        nodes[parent].0.children.insert(0, child);
    }
    TableTree::new(nodes.swap_remove(0).0)
}
