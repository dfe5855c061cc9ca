//! Series reduction and Horton pruning.

use super::Tree;
use crate::{Error, Result};

/// Removes every non-root vertex with exactly one child, merging its two
/// edges. The root is exempt, so planted trees stay planted.
///
/// Node caps are enforced when a [`Tree`] is built, and the output is never
/// larger than the input, so this cannot fail.
pub fn series_reduce(tree: &Tree) -> Tree {
    collapse(tree, |_| true)
}

/// One Horton pruning `R(T)`: delete the leaves with their parental edges,
/// then series-reduce. `R(φ) = φ`.
pub fn horton_prune(tree: &Tree) -> Result<Tree> {
    if !tree.is_planted() {
        return Err(Error::MalformedTree("pruning expects a planted tree".into()));
    }
    if !tree.is_reduced() {
        return Err(Error::MalformedTree("pruning expects a reduced tree".into()));
    }
    Ok(prune_reduced(tree))
}

pub(crate) fn prune_reduced(tree: &Tree) -> Tree {
    collapse(tree, |v| !tree.is_leaf(v))
}

/// Rebuilds the subtree of kept vertices, splicing out every non-root
/// vertex left with exactly one kept child. Vertices are renumbered from
/// the root downward.
fn collapse(tree: &Tree, keep: impl Fn(usize) -> bool) -> Tree {
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut stack = vec![(tree.root(), 0usize)];
    while let Some((old, new)) = stack.pop() {
        for &c in tree.children(old) {
            if !keep(c) {
                continue;
            }
            let mut c = c;
            loop {
                let mut kept = tree.children(c).iter().copied().filter(|&g| keep(g));
                match (kept.next(), kept.next()) {
                    (Some(only), None) => c = only,
                    _ => break,
                }
            }
            let id = children.len();
            children.push(Vec::new());
            children[new].push(id);
            stack.push((c, id));
        }
    }
    Tree::from_valid_children(children, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::isomorphic;

    #[test]
    fn chain_collapses_to_one_edge() {
        let chain = Tree::from_parents(&[None, Some(0), Some(1), Some(2)]).unwrap();
        let r = series_reduce(&chain);
        assert!(isomorphic(&r, &Tree::single_leaf()));
    }

    #[test]
    fn reduction_is_idempotent_on_reduced_input() {
        let t = Tree::perfect_binary(3);
        let r = series_reduce(&t);
        assert!(isomorphic(&r, &t));
        assert_eq!(series_reduce(&r), r);
    }

    #[test]
    fn reduction_keeps_branching_above_chains() {
        // root - a - b - {c - leaf, d - {leaf, leaf}}: a, c collapse
        let t = Tree::from_parents(&[
            None,
            Some(0),
            Some(1),
            Some(2),
            Some(3),
            Some(2),
            Some(5),
            Some(5),
        ])
        .unwrap();
        let r = series_reduce(&t);
        let expected =
            Tree::from_parents(&[None, Some(0), Some(1), Some(1), Some(3), Some(3)]).unwrap();
        assert!(isomorphic(&r, &expected));
        assert_eq!(r.leaf_count(), t.leaf_count());
        assert!(r.is_reduced() && r.is_planted());
    }

    #[test]
    fn root_is_exempt() {
        let t = Tree::single_leaf();
        assert_eq!(series_reduce(&t).len(), 2);
    }

    #[test]
    fn pruning_small_trees() {
        assert!(horton_prune(&Tree::empty()).unwrap().is_empty());
        assert!(horton_prune(&Tree::single_leaf()).unwrap().is_empty());
        let four = Tree::perfect_binary(2);
        assert!(isomorphic(
            &horton_prune(&four).unwrap(),
            &Tree::perfect_binary(1)
        ));
    }

    #[test]
    fn pruning_rejects_unplanted_or_unreduced() {
        let stemless = Tree::from_parents(&[None, Some(0), Some(0)]).unwrap();
        assert!(horton_prune(&stemless).is_err());
        let chain = Tree::from_parents(&[None, Some(0), Some(1)]).unwrap();
        assert!(horton_prune(&chain).is_err());
    }
}
