//! Bottom-up merge sort driven one comparison at a time.
//!
//! Runs are ordered best first. Every active merge exposes exactly one
//! pending comparison (the heads of its two runs); the caller resolves
//! pending comparisons in any order.

use crate::types::ItemIndex;

#[derive(Debug, Clone, PartialEq)]
struct Merge {
    left: Vec<ItemIndex>,
    right: Vec<ItemIndex>,
    a: usize,
    b: usize,
    out: Vec<ItemIndex>,
}

impl Merge {
    fn done(&self) -> bool {
        self.a == self.left.len() || self.b == self.right.len()
    }

    fn pending(&self) -> Option<(ItemIndex, ItemIndex)> {
        (!self.done()).then(|| (self.left[self.a], self.right[self.b]))
    }

    fn resolve(&mut self, left_wins: bool) {
        if left_wins {
            self.out.push(self.left[self.a]);
            self.a += 1;
        } else {
            self.out.push(self.right[self.b]);
            self.b += 1;
        }
    }

    /// Resolved prefix followed by whatever is still unmerged.
    fn current(&self) -> impl Iterator<Item = ItemIndex> + '_ {
        self.out
            .iter()
            .chain(&self.left[self.a..])
            .chain(&self.right[self.b..])
            .copied()
    }

    fn finish(mut self) -> Vec<ItemIndex> {
        self.out.extend_from_slice(&self.left[self.a..]);
        self.out.extend_from_slice(&self.right[self.b..]);
        self.out
    }
}

/// A pending comparison: `left ≻ right` is the question for merge `merge`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrontierPair {
    pub merge: usize,
    pub left: ItemIndex,
    pub right: ItemIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeSort {
    merges: Vec<Merge>,
    carry: Option<Vec<ItemIndex>>,
    pass: usize,
    comparisons: u64,
}

impl MergeSort {
    /// Starts from `order` split into runs of length one.
    pub fn new(order: &[ItemIndex]) -> Self {
        let mut sort = Self {
            merges: Vec::new(),
            carry: None,
            pass: 0,
            comparisons: 0,
        };
        sort.start_pass(order.iter().map(|&i| vec![i]).collect());
        sort
    }

    fn start_pass(&mut self, mut runs: Vec<Vec<ItemIndex>>) {
        self.carry = if runs.len() % 2 == 1 { runs.pop() } else { None };
        let mut it = runs.into_iter();
        self.merges.clear();
        while let (Some(left), Some(right)) = (it.next(), it.next()) {
            self.merges.push(Merge {
                out: Vec::with_capacity(left.len() + right.len()),
                left,
                right,
                a: 0,
                b: 0,
            });
        }
        self.pass += 1;
        self.advance();
    }

    /// Moves to the next pass while every merge of the current one is done.
    fn advance(&mut self) {
        while !self.merges.is_empty() && self.merges.iter().all(Merge::done) {
            let mut runs: Vec<Vec<ItemIndex>> = std::mem::take(&mut self.merges)
                .into_iter()
                .map(Merge::finish)
                .collect();
            runs.extend(self.carry.take());
            if runs.len() == 1 {
                self.carry = runs.pop();
                return;
            }
            self.start_pass(runs);
            return;
        }
    }

    pub fn is_done(&self) -> bool {
        self.merges.is_empty()
    }

    pub fn pass(&self) -> usize {
        self.pass
    }

    pub fn comparisons(&self) -> u64 {
        self.comparisons
    }

    pub fn frontier(&self) -> Vec<FrontierPair> {
        self.merges
            .iter()
            .enumerate()
            .filter_map(|(merge, m)| m.pending().map(|(left, right)| FrontierPair { merge, left, right }))
            .collect()
    }

    /// Pending pair containing both items, in either orientation.
    pub fn find(&self, i: ItemIndex, j: ItemIndex) -> Option<FrontierPair> {
        self.frontier()
            .into_iter()
            .find(|p| (p.left == i && p.right == j) || (p.left == j && p.right == i))
    }

    /// Resolves the pending comparison of merge `merge`. Returns false when
    /// that merge has no pending comparison.
    pub fn resolve(&mut self, merge: usize, left_wins: bool) -> bool {
        match self.merges.get_mut(merge) {
            Some(m) if !m.done() => {
                m.resolve(left_wins);
                self.comparisons += 1;
                self.advance();
                true
            }
            _ => false,
        }
    }

    /// Best-first order: finished merges, partial merges with their
    /// unresolved remainder in prior order, then the carried run.
    pub fn current_order(&self) -> Vec<ItemIndex> {
        let mut order: Vec<ItemIndex> = self.merges.iter().flat_map(Merge::current).collect();
        if let Some(c) = &self.carry {
            order.extend_from_slice(c);
        }
        order
    }
}
