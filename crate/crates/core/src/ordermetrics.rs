//! Reading-order scoring: the permutation between ground-truth and predicted
//! order of matched blocks, its inversion count, and the order NED.

use thiserror::Error;

use crate::matching::{MatchAssignment, MatchedPair};
use crate::schema::PageDocument;
use crate::textmetrics::ned_seq;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("not a permutation of 0..{0}")]
pub struct NotAPermutation(pub usize);

/// For each included matched block in ground-truth order, the rank of its
/// counterpart in the prediction's order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OrderPermutation(Vec<usize>);

impl OrderPermutation {
    pub fn new(perm: Vec<usize>) -> Result<Self, NotAPermutation> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &v in &perm {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(NotAPermutation(n));
            }
        }
        Ok(Self(perm))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_inversions(&self) -> u64 {
        let n = self.0.len() as u64;
        n * n.saturating_sub(1) / 2
    }
}

/// Matched pairs that take part in reading-order scoring, sorted by
/// ground-truth index.
pub fn included_pairs(assignment: &MatchAssignment, gt: &PageDocument) -> Vec<MatchedPair> {
    let mut pairs: Vec<MatchedPair> = assignment
        .pairs
        .iter()
        .filter(|p| !gt.blocks[p.gt].category.excluded_from_reading_order())
        .copied()
        .collect();
    pairs.sort_by_key(|p| p.gt);
    pairs
}

pub fn order_permutation(
    assignment: &MatchAssignment,
    _pred: &PageDocument,
    gt: &PageDocument,
) -> OrderPermutation {
    let pairs = included_pairs(assignment, gt);
    let mut by_pred: Vec<usize> = (0..pairs.len()).collect();
    by_pred.sort_by_key(|&k| pairs[k].pred);
    let mut perm = vec![0usize; pairs.len()];
    for (rank, &k) in by_pred.iter().enumerate() {
        perm[k] = rank;
    }
    OrderPermutation(perm)
}

/// Number of pairs `i < j` with `p[i] > p[j]`, by merge sort.
pub fn inversion_count(p: &OrderPermutation) -> u64 {
    let mut values = p.0.clone();
    let mut buffer = vec![0usize; values.len()];
    sort_counting(&mut values, &mut buffer)
}

fn sort_counting(values: &mut [usize], buffer: &mut [usize]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = values.split_at_mut(mid);
        let (lbuf, rbuf) = buffer.split_at_mut(mid);
        sort_counting(left, lbuf) + sort_counting(right, rbuf)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if values[i] <= values[j] {
            buffer[k] = values[i];
            i += 1;
        } else {
            // every remaining left element exceeds values[j]
            count += (mid - i) as u64;
            buffer[k] = values[j];
            j += 1;
        }
        k += 1;
    }
    buffer[k..k + mid - i].copy_from_slice(&values[i..mid]);
    k += mid - i;
    buffer[k..k + n - j].copy_from_slice(&values[j..n]);
    values.copy_from_slice(&buffer[..n]);
    count
}

/// NED between the ground-truth and predicted sequences of matched block ids;
/// 0 when at most one block is included.
pub fn read_order_edit(
    assignment: &MatchAssignment,
    pred: &PageDocument,
    gt: &PageDocument,
) -> f64 {
    let perm = order_permutation(assignment, pred, gt);
    order_edit_of(&perm)
}

/// Order NED for a permutation: ids `0..n` in ground-truth order against the
/// same ids in predicted order.
pub fn order_edit_of(perm: &OrderPermutation) -> f64 {
    let n = perm.len();
    if n <= 1 {
        return 0.0;
    }
    let mut predicted = vec![0usize; n];
    for (id, &rank) in perm.as_slice().iter().enumerate() {
        predicted[rank] = id;
    }
    let reference: Vec<usize> = (0..n).collect();
    ned_seq(&reference, &predicted)
}
