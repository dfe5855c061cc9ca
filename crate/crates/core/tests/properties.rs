use proptest::prelude::*;
use proptest::sample::Index;

use horton::distributions::{
    g_eval, gf_eval, igw, order_distribution, order_distribution_by_recursion, tokunaga_analytic,
    OffspringDistribution,
};
use horton::pruning::{prune_distribution, standard_grid};
use horton::sampler::{sample_tree, Draw};
use horton::trees::{
    branch_statistics, horton_prune, hs_order_by_pruning, hs_order_recursive, series_reduce, Tree,
};

/// Planted trees from random parent choices: vertex `i + 2` hangs below one
/// of the vertices `1..=i + 1`.
fn planted_tree() -> impl Strategy<Value = Tree> {
    prop::collection::vec(any::<Index>(), 0..80).prop_map(|picks| {
        let mut parents = vec![None, Some(0)];
        for (i, p) in picks.iter().enumerate() {
            parents.push(Some(1 + p.index(i + 1)));
        }
        Tree::from_parents(&parents).unwrap()
    })
}

fn reduced_tree() -> impl Strategy<Value = Tree> {
    planted_tree().prop_map(|t| series_reduce(&t))
}

/// Finite law on `{0, 2, ..., 2 + weights.len() - 1}` with mean `1 - slack`.
fn finite_law(weights: &[f64], slack: f64) -> OffspringDistribution {
    let total: f64 = weights.iter().sum();
    let m: f64 = weights.iter().enumerate().map(|(i, w)| (i + 2) as f64 * w).sum::<f64>() / total;
    let mass = (1.0 - slack) / m;
    let mut q = vec![1.0 - mass, 0.0];
    q.extend(weights.iter().map(|w| mass * w / total));
    OffspringDistribution::finite(q).unwrap()
}

fn law_inputs() -> impl Strategy<Value = (Vec<f64>, f64)> {
    (prop::collection::vec(0.01f64..1.0, 1..6), prop_oneof![Just(0.0), 0.01f64..0.5])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn order_algorithms_agree(t in planted_tree()) {
        prop_assert_eq!(hs_order_by_pruning(&t), hs_order_recursive(&t).order);
    }

    #[test]
    fn series_reduce_is_idempotent(t in planted_tree()) {
        let once = series_reduce(&t);
        prop_assert!(once.is_reduced());
        prop_assert_eq!(series_reduce(&once), once.clone());
        prop_assert_eq!(hs_order_recursive(&once).order, hs_order_recursive(&t).order);
    }

    #[test]
    fn pruning_lowers_order_by_one(t in reduced_tree()) {
        let p = horton_prune(&t).unwrap();
        prop_assert_eq!(hs_order_recursive(&p).order + 1, hs_order_recursive(&t).order);
        prop_assert_eq!(horton_prune(&t).unwrap(), p);
    }

    #[test]
    fn pruning_shifts_branch_counts(t in reduced_tree()) {
        let s = branch_statistics(&t).unwrap();
        let p = horton_prune(&t).unwrap();
        if s.order >= 2 {
            let sp = branch_statistics(&p).unwrap();
            prop_assert_eq!(&s.branch_counts[1..], &sp.branch_counts[..]);
            for (i, j) in sp.n_side.pairs() {
                prop_assert_eq!(s.n_side.get(i + 1, j + 1), sp.n_side.get(i, j));
            }
        } else {
            prop_assert!(p.is_empty());
        }
    }

    #[test]
    fn branches_partition_vertices(t in reduced_tree()) {
        let ot = hs_order_recursive(&t);
        let s = branch_statistics(&t).unwrap();
        let branches = ot.branches();
        prop_assert_eq!(branches.iter().map(Vec::len).sum::<usize>(), t.len());
        prop_assert_eq!(branches.len() as u64, s.branch_counts.iter().sum::<u64>());
        prop_assert_eq!(s.branch_counts[s.order - 1], 1);
        // every branch below the top starts at a side or principal merger
        for i in 1..s.order {
            let merged: u64 = (i + 1..=s.order).map(|j| s.n_side.get(i, j)).sum();
            prop_assert_eq!(merged, s.branch_counts[i - 1]);
            for j in i + 1..=s.order {
                prop_assert!(s.n_side_regular.get(i, j) <= s.n_side.get(i, j));
            }
        }
    }

    #[test]
    fn json_round_trip(t in planted_tree()) {
        prop_assert_eq!(Tree::from_json(&t.to_json().unwrap()).unwrap(), t);
    }

    #[test]
    fn critical_gf_identity((w, _) in law_inputs()) {
        let d = finite_law(&w, 0.0);
        for z in standard_grid() {
            let lhs = gf_eval(&d, z, 0).unwrap() - z;
            let rhs = (1.0 - z).powi(2) * g_eval(&d, z).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10, "z={} {} vs {}", z, lhs, rhs);
        }
    }

    #[test]
    fn order_recursions_agree((w, slack) in law_inputs()) {
        let d = finite_law(&w, slack);
        // subcritical order tails decay doubly exponentially and underflow
        let jmax = if slack > 0.0 { 8 } else { 40 };
        let a = order_distribution(&d, jmax).unwrap();
        // the two-step recursion cancels absolutely, so stop it while the tail is sizable
        let jb = (1..=jmax.min(20)).take_while(|&j| a.tail(j - 1) > 1e-4).last().unwrap();
        let b = order_distribution_by_recursion(&d, jb).unwrap();
        for j in 1..=jmax {
            if j <= jb {
                prop_assert!((a.pi(j) - b.pi(j)).abs() <= 1e-10, "j={} {} vs {}", j, a.pi(j), b.pi(j));
            }
            prop_assert!(a.pi(j) >= 0.0);
            // sigma_j strictly increasing, checked on 1 - sigma_j where it is resolved
            prop_assert!(a.tail(j) < a.tail(j - 1) && a.tail(j) >= 0.0);
            prop_assert!(a.sigma(j) >= a.sigma(j - 1) && a.sigma(j) <= 1.0);
        }
    }

    #[test]
    fn pruned_law_is_a_law((w, slack) in law_inputs()) {
        let d = finite_law(&w, slack);
        let p = prune_distribution(&d).unwrap();
        let pmf = p.pmf(400);
        prop_assert_eq!(pmf[1], 0.0);
        prop_assert!(pmf.iter().all(|&x| x >= 0.0));
        prop_assert!(pmf.iter().sum::<f64>() <= 1.0 + 1e-12);
        let m0 = gf_eval(&d, 1.0, 1).unwrap();
        let m1 = gf_eval(&p, 1.0, 1).unwrap();
        if slack == 0.0 {
            prop_assert!((m1 - 1.0).abs() <= 1e-9, "mean {}", m1);
        } else {
            prop_assert!(m1 < m0, "mean {} -> {}", m0, m1);
        }
    }

    #[test]
    fn igw_tables_are_toeplitz(q in 0.5f64..0.75) {
        let t = tokunaga_analytic(&igw(q).unwrap(), 10).unwrap();
        prop_assert!(t.toeplitz_deviation() <= 1e-9, "{}", t.toeplitz_deviation());
        for (i, j) in t.t_side.pairs() {
            prop_assert!(t.t_side.get(i, j) >= 0.0);
            prop_assert!(t.t_regular.get(i, j) <= t.t_total.get(i, j) + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_trees_are_consistent(seed in any::<u64>(), (w, slack) in law_inputs()) {
        let d = finite_law(&w, slack);
        if let Draw::Tree(ot) = sample_tree(&d, seed, 20_000) {
            prop_assert!(ot.tree.is_planted() && ot.tree.is_reduced());
            prop_assert_eq!(hs_order_by_pruning(&ot.tree), ot.order);
            prop_assert_eq!(sample_tree(&d, seed, 20_000), Draw::Tree(ot));
        }
    }
}
