//! Horton-Strahler orders, branches and side-branch counts.

use serde::{Deserialize, Serialize};

use super::ops::prune_reduced;
use super::{series_reduce, Tree};
use crate::table::OrderTable;
use crate::{Error, Result};

/// A tree together with the Horton-Strahler order of every vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedTree {
    pub tree: Tree,
    /// Order per node; the root of `φ` gets 0.
    pub vertex_order: Vec<u32>,
    /// Order of the tree, equal to the root's order.
    pub order: u32,
}

impl OrderedTree {
    /// A vertex is terminal in its branch when no child shares its order.
    /// Leaves are terminal vertices of order-1 branches.
    pub fn is_terminal(&self, v: usize) -> bool {
        let k = self.vertex_order[v];
        !self
            .tree
            .children(v)
            .iter()
            .any(|&c| self.vertex_order[c] == k)
    }

    /// First vertex of a branch: the root, or a vertex whose parent has a
    /// different order.
    pub fn is_initial(&self, v: usize) -> bool {
        match self.tree.parent(v) {
            None => true,
            Some(p) => self.vertex_order[p] != self.vertex_order[v],
        }
    }

    /// Branches as vertex paths from the initial vertex down to the
    /// terminal one. Same-order children are unique, so each branch is a
    /// path.
    pub fn branches(&self) -> Vec<Vec<usize>> {
        if self.order == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for v in 0..self.tree.len() {
            if !self.is_initial(v) {
                continue;
            }
            let mut path = vec![v];
            let mut cur = v;
            while let Some(&next) = self
                .tree
                .children(cur)
                .iter()
                .find(|&&c| self.vertex_order[c] == self.vertex_order[cur])
            {
                path.push(next);
                cur = next;
            }
            out.push(path);
        }
        out
    }
}

/// Number of Horton prunings needed to reach `φ`.
///
/// Unreduced input is series-reduced first, which leaves the order
/// unchanged.
pub fn hs_order_by_pruning(tree: &Tree) -> u32 {
    let mut t = series_reduce(tree);
    let mut k = 0;
    while !t.is_empty() {
        t = prune_reduced(&t);
        k += 1;
    }
    k
}

/// Orders by hierarchical counting: leaves get 1; a parent whose children
/// reach maximal order `r` gets `r` if only one child attains it and
/// `r + 1` otherwise.
pub fn hs_order_recursive(tree: &Tree) -> OrderedTree {
    let mut ord = vec![0u32; tree.len()];
    if !tree.is_empty() {
        for &v in tree.preorder().iter().rev() {
            let cs = tree.children(v);
            if cs.is_empty() {
                ord[v] = 1;
                continue;
            }
            let mut r = 0;
            let mut count = 0;
            for &c in cs {
                match ord[c].cmp(&r) {
                    std::cmp::Ordering::Greater => {
                        r = ord[c];
                        count = 1;
                    }
                    std::cmp::Ordering::Equal => count += 1,
                    std::cmp::Ordering::Less => {}
                }
            }
            ord[v] = if count >= 2 { r + 1 } else { r };
        }
    }
    let order = ord[tree.root()];
    OrderedTree {
        tree: tree.clone(),
        vertex_order: ord,
        order,
    }
}

/// Branch counts and side-branch merger counts of one tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchStatistics {
    /// Tree order `K`.
    pub order: usize,
    /// `N_k` for `k = 1..=K`, stored at index `k - 1`.
    pub branch_counts: Vec<u64>,
    /// `n_{i,j}`: vertices of order `i` whose parent has order `j > i`.
    pub n_side: OrderTable<u64>,
    /// `n^o_{i,j}`: those of them whose parent is not terminal.
    pub n_side_regular: OrderTable<u64>,
}

impl BranchStatistics {
    pub fn branch_count(&self, k: usize) -> u64 {
        self.branch_counts[k - 1]
    }
}

/// Branch statistics of a nonempty tree.
pub fn branch_statistics(tree: &Tree) -> Result<BranchStatistics> {
    if tree.is_empty() {
        return Err(Error::EmptyTree("branch statistics"));
    }
    Ok(branch_statistics_ordered(&hs_order_recursive(tree)))
}

pub(crate) fn branch_statistics_ordered(ot: &OrderedTree) -> BranchStatistics {
    let k = ot.order as usize;
    let mut branch_counts = vec![0u64; k];
    let mut n_side = OrderTable::new(k);
    let mut n_side_regular = OrderTable::new(k);
    let terminal: Vec<bool> = (0..ot.tree.len()).map(|v| ot.is_terminal(v)).collect();
    for v in 0..ot.tree.len() {
        let i = ot.vertex_order[v] as usize;
        match ot.tree.parent(v) {
            None => branch_counts[i - 1] += 1,
            Some(p) => {
                let j = ot.vertex_order[p] as usize;
                if j != i {
                    branch_counts[i - 1] += 1;
                    *n_side.get_mut(i, j) += 1;
                    if !terminal[p] {
                        *n_side_regular.get_mut(i, j) += 1;
                    }
                }
            }
        }
    }
    BranchStatistics {
        order: k,
        branch_counts,
        n_side,
        n_side_regular,
    }
}
