//! Seeded Galton-Watson sampling and Monte Carlo estimators.
//!
//! Every draw is keyed by `(seed, draw index)`: draw `i` runs its own
//! ChaCha8 stream `i` under the run's seed, so results do not depend on how
//! draws are split across threads. Trees are grown depth first; the order of
//! each vertex is known when its subtree closes, which lets order-conditioned
//! runs abandon a draw as soon as some subtree exceeds the target order.

mod commutation;
mod estimators;
mod offspring;

pub use commutation::{commutation_test, ChiSquare, CommutationConfig, CommutationReport};
pub use estimators::{mc_order_distribution, mc_tokunaga, Estimate, McEstimates, OrderEstimates};
pub use offspring::{OffspringSampler, TABLE_LEN};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{order_distribution, OffspringDistribution};
use crate::trees::{OrderedTree, Tree};
use crate::{Error, Result};

/// Default cap on vertices per draw.
pub const DEFAULT_MAX_VERTICES: usize = 1_000_000;

/// Parameters shared by all sampling runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub seed: u64,
    /// Accepted trees wanted.
    pub n_trees: u64,
    pub max_vertices: usize,
    /// Conditioning order `K`, if any.
    pub max_order: Option<u32>,
    /// Allowed attempts per wanted tree; a run stops after
    /// `rejection_budget * n_trees` attempts.
    pub rejection_budget: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_trees: 10_000,
            max_vertices: DEFAULT_MAX_VERTICES,
            max_order: None,
            rejection_budget: 10_000,
        }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::Domain {
                what: "n_trees",
                value: self.n_trees as f64,
                expected: "n_trees >= 1",
            });
        }
        if self.max_vertices < 2 {
            return Err(Error::Domain {
                what: "max_vertices",
                value: self.max_vertices as f64,
                expected: "max_vertices >= 2",
            });
        }
        if self.rejection_budget < 1 {
            return Err(Error::Domain {
                what: "rejection_budget",
                value: self.rejection_budget as f64,
                expected: "rejection_budget >= 1",
            });
        }
        if self.max_order == Some(0) {
            return Err(Error::Domain {
                what: "K",
                value: 0.0,
                expected: "K >= 1",
            });
        }
        Ok(())
    }

    pub(crate) fn attempt_cap(&self) -> u64 {
        self.rejection_budget.saturating_mul(self.n_trees)
    }
}

/// Why a draw was abandoned without a tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensorReason {
    /// The tree would exceed `max_vertices`.
    Vertices,
    /// An offspring count fell past a tabulated law's table.
    Tail,
}

/// Outcome of one draw.
#[derive(Clone, Debug, PartialEq)]
pub enum Draw {
    Tree(OrderedTree),
    Censored(CensorReason),
    /// Some subtree exceeded the order cap; the tree was not finished.
    OrderExceeded,
}

struct Frame {
    v: usize,
    remaining: u64,
    /// Largest child order so far and how many children attain it.
    top: u32,
    count: u32,
}

/// One planted Galton-Watson tree, abandoned early if a subtree's order
/// exceeds `order_cap`.
pub(crate) fn grow(
    sampler: &OffspringSampler,
    rng: &mut ChaCha8Rng,
    max_vertices: usize,
    order_cap: Option<u32>,
) -> Draw {
    let mut children: Vec<Vec<usize>> = vec![vec![1], vec![]];
    let mut order: Vec<u32> = vec![0, 0];
    let mut stack: Vec<Frame> = Vec::new();
    let cap = order_cap.unwrap_or(u32::MAX);

    // Vertices created plus children already drawn but not yet created.
    let mut committed = 2usize;

    // Opens vertex `v`; returns its order if it is a leaf.
    let mut open = |v: usize, rng: &mut ChaCha8Rng, stack: &mut Vec<Frame>| -> std::result::Result<Option<u32>, CensorReason> {
        match sampler.draw(rng) {
            None => Err(CensorReason::Tail),
            Some(0) => Ok(Some(1)),
            Some(x) if x > max_vertices.saturating_sub(committed) as u64 => Err(CensorReason::Vertices),
            Some(x) => {
                committed += x as usize;
                stack.push(Frame {
                    v,
                    remaining: x,
                    top: 0,
                    count: 0,
                });
                Ok(None)
            }
        }
    };

    match open(1, rng, &mut stack) {
        Err(r) => return Draw::Censored(r),
        Ok(Some(k)) => order[1] = k,
        Ok(None) => {}
    }
    while let Some(frame) = stack.last_mut() {
        if frame.remaining > 0 {
            frame.remaining -= 1;
            let parent = frame.v;
            let c = children.len();
            children.push(Vec::new());
            order.push(0);
            children[parent].push(c);
            match open(c, rng, &mut stack) {
                Err(r) => return Draw::Censored(r),
                Ok(Some(k)) => {
                    order[c] = k;
                    absorb(stack.last_mut().unwrap(), k);
                }
                Ok(None) => {}
            }
        } else {
            let f = stack.pop().unwrap();
            let k = if f.count >= 2 { f.top + 1 } else { f.top };
            if k > cap {
                return Draw::OrderExceeded;
            }
            order[f.v] = k;
            if let Some(parent) = stack.last_mut() {
                absorb(parent, k);
            }
        }
    }
    if order[1] > cap {
        return Draw::OrderExceeded;
    }
    order[0] = order[1];
    let k = order[0];
    Draw::Tree(OrderedTree {
        tree: Tree::from_valid_children(children, 0),
        vertex_order: order,
        order: k,
    })
}

fn absorb(f: &mut Frame, k: u32) {
    match k.cmp(&f.top) {
        std::cmp::Ordering::Greater => {
            f.top = k;
            f.count = 1;
        }
        std::cmp::Ordering::Equal => f.count += 1,
        std::cmp::Ordering::Less => {}
    }
}

/// Generator for draw `index` of a run seeded with `seed`.
pub(crate) fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One unconditioned planted tree. Deterministic in `seed`.
pub fn sample_tree(dist: &OffspringDistribution, seed: u64, max_vertices: usize) -> Draw {
    let sampler = OffspringSampler::new(dist);
    grow(&sampler, &mut stream(seed, 0), max_vertices.max(2), None)
}

/// Result of rejection sampling from the order-`K` ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionedDraw {
    /// The accepted tree, or `None` when the budget ran out.
    pub tree: Option<OrderedTree>,
    pub attempts: u64,
    pub censored: u64,
    /// `1 / pi_K`.
    pub expected_attempts: f64,
}

impl ConditionedDraw {
    pub fn is_accepted(&self) -> bool {
        self.tree.is_some()
    }
}

/// `pi_K`, failing when order `K` is unreachable.
pub(crate) fn feasible_pi(dist: &OffspringDistribution, k: u32) -> Result<f64> {
    let od = order_distribution(dist, k as usize)
        .map_err(|e| Error::Conditioning(format!("order {k} is unreachable: {e}")))?;
    let p = od.pi(k as usize);
    if !(p > 0.0) {
        return Err(Error::Conditioning(format!("pi_{k} = {p:e}; order {k} is unreachable")));
    }
    Ok(p)
}

/// Draws until a tree of order exactly `K` appears or `budget` attempts are
/// spent. Attempt `i` uses stream `i` of `seed`.
pub fn sample_conditioned(
    dist: &OffspringDistribution,
    k: u32,
    seed: u64,
    budget: u64,
    max_vertices: usize,
) -> Result<ConditionedDraw> {
    if k == 0 {
        return Err(Error::Domain {
            what: "K",
            value: 0.0,
            expected: "K >= 1",
        });
    }
    let p = feasible_pi(dist, k)?;
    let sampler = OffspringSampler::new(dist);
    let mut censored = 0;
    for i in 0..budget {
        match grow(&sampler, &mut stream(seed, i), max_vertices.max(2), Some(k)) {
            Draw::Tree(t) if t.order == k => {
                return Ok(ConditionedDraw {
                    tree: Some(t),
                    attempts: i + 1,
                    censored,
                    expected_attempts: 1.0 / p,
                })
            }
            Draw::Censored(_) => censored += 1,
            _ => {}
        }
    }
    Ok(ConditionedDraw {
        tree: None,
        attempts: budget,
        censored,
        expected_attempts: 1.0 / p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::igw;
    use crate::trees::{hs_order_recursive, series_reduce};

    #[test]
    fn point_mass_at_zero_gives_single_leaf() {
        let d = OffspringDistribution::finite(vec![1.0]).unwrap();
        for s in 0..10 {
            let Draw::Tree(t) = sample_tree(&d, s, 100) else { panic!() };
            assert_eq!(t.tree, Tree::single_leaf());
            assert_eq!(t.order, 1);
        }
    }

    #[test]
    fn draws_are_planted_reduced_and_ordered() {
        let d = igw(0.6).unwrap();
        for s in 0..200 {
            if let Draw::Tree(t) = sample_tree(&d, s, 100_000) {
                assert!(t.tree.is_planted());
                assert!(t.tree.is_reduced());
                assert_eq!(series_reduce(&t.tree).len(), t.tree.len());
                assert_eq!(hs_order_recursive(&t.tree), t);
            }
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let d = OffspringDistribution::binary();
        assert_eq!(sample_tree(&d, 42, 10_000), sample_tree(&d, 42, 10_000));
    }

    #[test]
    fn vertex_cap_censors() {
        let d = OffspringDistribution::binary();
        let censored = (0..500)
            .filter(|&s| matches!(sample_tree(&d, s, 3), Draw::Censored(CensorReason::Vertices)))
            .count();
        // only the single leaf fits under a cap of 3 nodes
        assert!(censored > 150 && censored < 350, "{censored}");
    }

    #[test]
    fn accepted_trees_respect_vertex_cap() {
        let d = OffspringDistribution::zipf_example();
        for s in 0..2000 {
            if let Draw::Tree(t) = sample_tree(&d, s, 40) {
                assert!(t.tree.len() <= 40);
            }
        }
    }

    #[test]
    fn conditioned_order_one_is_single_leaf() {
        let d = OffspringDistribution::binary();
        let c = sample_conditioned(&d, 1, 3, 100, 1000).unwrap();
        assert_eq!(c.tree.unwrap().tree, Tree::single_leaf());
        assert!((c.expected_attempts - 2.0).abs() < 1e-12);
    }

    #[test]
    fn conditioned_hits_order() {
        let d = igw(0.75).unwrap();
        let c = sample_conditioned(&d, 3, 11, 100_000, DEFAULT_MAX_VERTICES).unwrap();
        assert_eq!(c.tree.unwrap().order, 3);
        assert!((c.expected_attempts - 1.0 / 0.046875).abs() < 1e-9);
    }

    #[test]
    fn unreachable_order_is_a_conditioning_error() {
        let d = OffspringDistribution::finite(vec![1.0]).unwrap();
        assert!(matches!(sample_conditioned(&d, 2, 0, 10, 100), Err(Error::Conditioning(_))));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let d = OffspringDistribution::binary();
        let c = sample_conditioned(&d, 12, 0, 5, 1000).unwrap();
        assert!(!c.is_accepted());
        assert_eq!(c.attempts, 5);
    }

    #[test]
    fn config_validation() {
        assert!(SampleConfig::default().validate().is_ok());
        for bad in [
            SampleConfig { n_trees: 0, ..Default::default() },
            SampleConfig { max_vertices: 1, ..Default::default() },
            SampleConfig { rejection_budget: 0, ..Default::default() },
            SampleConfig { max_order: Some(0), ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
