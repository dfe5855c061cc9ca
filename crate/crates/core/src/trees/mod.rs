//! Finite rooted trees and their combinatorics.
//!
//! Trees are stored as index-based node records with explicit child lists.
//! The working space is that of *planted* trees: the root has exactly one
//! child, except for the empty tree `φ` which is a lone root. Reduced trees
//! have no non-root vertex with exactly one child; the root is exempt.
//!
//! Child order is kept as generated, but every statistic here is
//! insensitive to it. Structural equality of unlabeled trees goes through
//! [`Tree::canonical_form`] or [`isomorphic`].

mod ops;
mod order;

pub use ops::{horton_prune, series_reduce};
pub use order::{
    branch_statistics, hs_order_by_pruning, hs_order_recursive, BranchStatistics, OrderedTree,
};
pub(crate) use order::branch_statistics_ordered;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default cap on the number of nodes of a single tree.
pub const DEFAULT_MAX_NODES: usize = 10_000_000;

/// One vertex: its parent (`None` for the root) and its children.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// A finite rooted tree. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TreeRecord")]
pub struct Tree {
    nodes: Vec<Node>,
    root: usize,
}

#[derive(Deserialize)]
struct TreeRecord {
    nodes: Vec<Node>,
    root: usize,
}

impl TryFrom<TreeRecord> for Tree {
    type Error = Error;

    fn try_from(r: TreeRecord) -> Result<Self> {
        Tree::new(r.nodes, r.root)
    }
}

impl Tree {
    /// Validates and wraps node records, using [`DEFAULT_MAX_NODES`] as cap.
    pub fn new(nodes: Vec<Node>, root: usize) -> Result<Self> {
        Self::with_cap(nodes, root, DEFAULT_MAX_NODES)
    }

    /// Validates the tree property: one root, consistent parent and child
    /// links, every node reachable from the root.
    pub fn with_cap(nodes: Vec<Node>, root: usize, cap: usize) -> Result<Self> {
        let n = nodes.len();
        if n > cap {
            return Err(Error::Capacity { limit: cap });
        }
        if root >= n {
            return Err(Error::MalformedTree(format!(
                "root index {root} out of range for {n} nodes"
            )));
        }
        if nodes[root].parent.is_some() {
            return Err(Error::MalformedTree("root has a parent".into()));
        }
        for (v, node) in nodes.iter().enumerate() {
            match node.parent {
                None if v != root => {
                    return Err(Error::MalformedTree(format!("node {v} is a second root")))
                }
                Some(p) if p >= n => {
                    return Err(Error::MalformedTree(format!(
                        "node {v} has parent {p} out of range"
                    )))
                }
                Some(p) if !nodes[p].children.contains(&v) => {
                    return Err(Error::MalformedTree(format!(
                        "node {v} missing from child list of its parent {p}"
                    )))
                }
                _ => {}
            }
            for &c in &node.children {
                if c >= n || nodes[c].parent != Some(v) {
                    return Err(Error::MalformedTree(format!(
                        "child {c} of node {v} does not point back"
                    )));
                }
            }
        }
        // Parent links are consistent; reachability rules out cycles and
        // duplicate child entries.
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        let mut count = 0;
        while let Some(v) = stack.pop() {
            if seen[v] {
                return Err(Error::MalformedTree(format!("node {v} reached twice")));
            }
            seen[v] = true;
            count += 1;
            stack.extend_from_slice(&nodes[v].children);
        }
        if count != n {
            return Err(Error::MalformedTree(format!(
                "{} nodes unreachable from the root",
                n - count
            )));
        }
        Ok(Self { nodes, root })
    }

    /// Builds a tree from child lists; parents are derived.
    pub fn from_children(children: Vec<Vec<usize>>, root: usize) -> Result<Self> {
        let n = children.len();
        let mut parent = vec![None; n];
        for (v, cs) in children.iter().enumerate() {
            for &c in cs {
                if c >= n {
                    return Err(Error::MalformedTree(format!("child {c} out of range")));
                }
                if parent[c].is_some() {
                    return Err(Error::MalformedTree(format!("node {c} has two parents")));
                }
                parent[c] = Some(v);
            }
        }
        let nodes = children
            .into_iter()
            .zip(parent)
            .map(|(children, parent)| Node { parent, children })
            .collect();
        Self::new(nodes, root)
    }

    /// Builds a tree from a parent array; children are listed in index order.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Self> {
        let n = parents.len();
        let mut children = vec![Vec::new(); n];
        let mut root = None;
        for (v, p) in parents.iter().enumerate() {
            match *p {
                Some(p) if p < n => children[p].push(v),
                Some(p) => {
                    return Err(Error::MalformedTree(format!("parent {p} out of range")))
                }
                None if root.is_none() => root = Some(v),
                None => return Err(Error::MalformedTree("more than one root".into())),
            }
        }
        let root = root.ok_or_else(|| Error::MalformedTree("no root".into()))?;
        let nodes = parents
            .iter()
            .zip(children)
            .map(|(&parent, children)| Node { parent, children })
            .collect();
        Self::new(nodes, root)
    }

    /// Trusted constructor for internal builders whose output is valid by
    /// construction.
    pub(crate) fn from_valid_children(children: Vec<Vec<usize>>, root: usize) -> Self {
        let mut nodes: Vec<Node> = children
            .into_iter()
            .map(|children| Node {
                parent: None,
                children,
            })
            .collect();
        for v in 0..nodes.len() {
            for i in 0..nodes[v].children.len() {
                let c = nodes[v].children[i];
                nodes[c].parent = Some(v);
            }
        }
        debug_assert!(Self::new(nodes.clone(), root).is_ok());
        Self { nodes, root }
    }

    /// The empty tree `φ`: a lone root.
    pub fn empty() -> Self {
        Self::from_valid_children(vec![vec![]], 0)
    }

    /// The planted tree with a single leaf.
    pub fn single_leaf() -> Self {
        Self::from_valid_children(vec![vec![1], vec![]], 0)
    }

    /// Planted tree whose only branching structure is a perfect binary tree
    /// with `2^(depth)` leaves below the root's child.
    pub fn perfect_binary(depth: u32) -> Self {
        let mut children = vec![vec![1]];
        let mut frontier = vec![1usize];
        children.push(vec![]);
        for _ in 0..depth {
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for &v in &frontier {
                let a = children.len();
                children.push(vec![]);
                children.push(vec![]);
                children[v] = vec![a, a + 1];
                next.extend([a, a + 1]);
            }
            frontier = next;
        }
        Self::from_valid_children(children, 0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True for the empty tree `φ`.
    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.nodes[v].children
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.nodes[v].parent
    }

    /// A leaf is a non-root vertex without children.
    pub fn is_leaf(&self, v: usize) -> bool {
        v != self.root && self.nodes[v].children.is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        (0..self.len()).filter(|&v| self.is_leaf(v)).count()
    }

    /// Root has exactly one child, or the tree is `φ`.
    pub fn is_planted(&self) -> bool {
        self.is_empty() || self.nodes[self.root].children.len() == 1
    }

    /// No non-root vertex has exactly one child.
    pub fn is_reduced(&self) -> bool {
        self.nodes
            .iter()
            .enumerate()
            .all(|(v, n)| v == self.root || n.children.len() != 1)
    }

    /// Vertices in depth-first preorder from the root.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.nodes[v].children.iter().rev());
        }
        out
    }

    /// Canonical parenthesis string with sorted children, e.g. `((()()))` for
    /// the planted cherry. Meant for small trees; [`isomorphic`] scales better.
    pub fn canonical_form(&self) -> String {
        let order = self.preorder();
        let mut enc: Vec<String> = vec![String::new(); self.len()];
        for &v in order.iter().rev() {
            let mut parts: Vec<String> = self.nodes[v]
                .children
                .iter()
                .map(|&c| std::mem::take(&mut enc[c]))
                .collect();
            parts.sort_unstable();
            let mut s = String::with_capacity(2 + parts.iter().map(String::len).sum::<usize>());
            s.push('(');
            for p in parts {
                s.push_str(&p);
            }
            s.push(')');
            enc[v] = s;
        }
        std::mem::take(&mut enc[self.root])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Shape identifiers shared between trees: equal ids mean isomorphic
/// subtrees as unlabeled rooted trees.
#[derive(Default)]
pub struct ShapeInterner {
    ids: HashMap<Vec<u32>, u32>,
}

impl ShapeInterner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Shape id of the whole tree.
    pub fn shape_of(&mut self, tree: &Tree) -> u32 {
        let order = tree.preorder();
        let mut id = vec![0u32; tree.len()];
        for &v in order.iter().rev() {
            let mut key: Vec<u32> = tree.children(v).iter().map(|&c| id[c]).collect();
            key.sort_unstable();
            let next = self.ids.len() as u32;
            id[v] = *self.ids.entry(key).or_insert(next);
        }
        id[tree.root()]
    }
}

/// Isomorphism of unlabeled rooted trees.
pub fn isomorphic(a: &Tree, b: &Tree) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut interner = ShapeInterner::new();
    interner.shape_of(a) == interner.shape_of(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_exact() {
        let t = Tree::perfect_binary(2);
        let s = t.to_json().unwrap();
        assert!(s.starts_with("{\"nodes\":[{\"parent\":null,\"children\":[1]}"));
        let back = Tree::from_json(&s).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_inconsistent_links() {
        let bad = r#"{"nodes":[{"parent":null,"children":[1]},{"parent":null,"children":[]}],"root":0}"#;
        assert!(Tree::from_json(bad).is_err());
        let cyc = vec![
            Node { parent: None, children: vec![] },
            Node { parent: Some(2), children: vec![2] },
            Node { parent: Some(1), children: vec![1] },
        ];
        assert!(Tree::new(cyc, 0).is_err());
    }

    #[test]
    fn capacity_is_enforced() {
        let nodes = Tree::perfect_binary(3).nodes().to_vec();
        assert!(matches!(
            Tree::with_cap(nodes, 0, 5),
            Err(Error::Capacity { limit: 5 })
        ));
    }

    #[test]
    fn planted_and_reduced_flags() {
        assert!(Tree::empty().is_planted());
        assert!(Tree::single_leaf().is_planted());
        assert!(Tree::perfect_binary(3).is_reduced());
        let chain = Tree::from_parents(&[None, Some(0), Some(1), Some(2)]).unwrap();
        assert!(chain.is_planted());
        assert!(!chain.is_reduced());
        let stemless = Tree::from_parents(&[None, Some(0), Some(0)]).unwrap();
        assert!(!stemless.is_planted());
    }

    #[test]
    fn canonical_form_ignores_child_order() {
        // root - a - {leaf, b - {leaf, leaf}} in two child orders
        let x = Tree::from_parents(&[None, Some(0), Some(1), Some(1), Some(3), Some(3)]).unwrap();
        let y = Tree::from_children(
            vec![vec![1], vec![2, 5], vec![3, 4], vec![], vec![], vec![]],
            0,
        )
        .unwrap();
        assert_eq!(x.canonical_form(), y.canonical_form());
        assert!(isomorphic(&x, &y));
        assert!(!isomorphic(&x, &Tree::perfect_binary(2)));
    }
}
