//! Two-sample check that pruning a Galton-Watson tree and sampling from the
//! pruned law give the same tree distribution.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::estimators::scan_draws;
use super::{grow, Draw, OffspringSampler, DEFAULT_MAX_VERTICES};
use crate::distributions::OffspringDistribution;
use crate::pruning::prune_distribution;
use crate::trees::horton_prune;
use crate::{Error, Result};

/// Bins with fewer combined counts are pooled.
const MIN_BIN: u64 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutationConfig {
    pub seed: u64,
    /// Nonempty trees per side.
    pub n: u64,
    /// Orders above this share one bin. At least 3, so every tree in the
    /// high bin is too large for the shape histogram.
    pub max_order: u32,
    /// Trees with more nodes share one shape bin.
    pub shape_max_nodes: usize,
    pub max_vertices: usize,
}

impl Default for CommutationConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n: 100_000,
            max_order: 4,
            shape_max_nodes: 8,
            max_vertices: DEFAULT_MAX_VERTICES,
        }
    }
}

/// Pearson statistic for two histograms over the same bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Bins after pooling.
    pub bins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutationReport {
    pub orders: ChiSquare,
    pub shapes: ChiSquare,
    /// Order histograms `1..=max_order` plus the high bin, pruned side first.
    pub order_hist_pruned: Vec<u64>,
    pub order_hist_sampled: Vec<u64>,
    pub n: u64,
    /// Draws on the prune-after-sampling side, including empty outcomes.
    pub attempts_pruned: u64,
    pub censored_pruned: u64,
    pub censored_sampled: u64,
}

impl CommutationReport {
    pub fn passes(&self, alpha: f64) -> bool {
        self.orders.p_value > alpha && self.shapes.p_value > alpha
    }
}

enum Outcome {
    Empty,
    Censored,
    Seen { order: u32, shape: Option<String> },
}

/// Compares `horton_prune(sample(dist))` given nonempty against
/// `sample(prune_distribution(dist))` on order and small-shape histograms.
pub fn commutation_test(dist: &OffspringDistribution, cfg: &CommutationConfig) -> Result<CommutationReport> {
    if cfg.max_order < 3 || cfg.n < 1 {
        return Err(Error::Domain {
            what: "max_order",
            value: cfg.max_order as f64,
            expected: "max_order >= 3 and n >= 1",
        });
    }
    let kc = cfg.max_order;
    let small = |t: &crate::trees::Tree| (t.len() <= cfg.shape_max_nodes).then(|| t.canonical_form());

    let original = OffspringSampler::new(dist);
    let mut a = Side::new(kc);
    let attempts_pruned = scan_draws(
        cfg.seed,
        u64::MAX,
        cfg.n,
        1.0 - dist.q0(),
        |rng| match grow(&original, rng, cfg.max_vertices, Some(kc + 1)) {
            Draw::Tree(t) if t.order == 1 => Outcome::Empty,
            Draw::Tree(t) => {
                let p = horton_prune(&t.tree).expect("sampled trees are well formed");
                Outcome::Seen {
                    order: t.order - 1,
                    shape: small(&p),
                }
            }
            Draw::OrderExceeded => Outcome::Seen { order: kc + 1, shape: None },
            Draw::Censored(_) => Outcome::Censored,
        },
        |o| a.consume(o),
    );

    let pruned = OffspringSampler::new(&prune_distribution(dist)?);
    let mut b = Side::new(kc);
    scan_draws(
        cfg.seed ^ 0x9e37_79b9_7f4a_7c15,
        u64::MAX,
        cfg.n,
        1.0,
        |rng| match grow(&pruned, rng, cfg.max_vertices, Some(kc)) {
            Draw::Tree(t) => Outcome::Seen {
                order: t.order,
                shape: small(&t.tree),
            },
            Draw::OrderExceeded => Outcome::Seen { order: kc + 1, shape: None },
            Draw::Censored(_) => Outcome::Censored,
        },
        |o| b.consume(o),
    );

    let orders = two_sample(&to_map(&a.orders), &to_map(&b.orders));
    let shapes = two_sample(&a.shapes, &b.shapes);
    Ok(CommutationReport {
        orders,
        shapes,
        order_hist_pruned: a.orders,
        order_hist_sampled: b.orders,
        n: cfg.n,
        attempts_pruned,
        censored_pruned: a.censored,
        censored_sampled: b.censored,
    })
}

struct Side {
    orders: Vec<u64>,
    shapes: BTreeMap<String, u64>,
    censored: u64,
}

impl Side {
    fn new(kc: u32) -> Self {
        Self {
            orders: vec![0; kc as usize + 1],
            shapes: BTreeMap::new(),
            censored: 0,
        }
    }

    fn consume(&mut self, o: Outcome) -> bool {
        match o {
            Outcome::Empty => false,
            Outcome::Censored => {
                self.censored += 1;
                false
            }
            Outcome::Seen { order, shape } => {
                self.orders[order as usize - 1] += 1;
                *self.shapes.entry(shape.unwrap_or_else(|| "large".into())).or_default() += 1;
                true
            }
        }
    }
}

fn to_map(h: &[u64]) -> BTreeMap<String, u64> {
    h.iter().enumerate().map(|(i, &c)| (format!("{:04}", i + 1), c)).collect()
}

/// Pearson two-sample statistic
/// `sum (sqrt(nb/na) a - sqrt(na/nb) b)^2 / (a + b)` with sparse bins pooled.
pub(crate) fn two_sample(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> ChiSquare {
    let mut keys: Vec<&String> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pool = (0.0, 0.0);
    for k in keys {
        let x = a.get(k).copied().unwrap_or(0);
        let y = b.get(k).copied().unwrap_or(0);
        if x + y < MIN_BIN {
            pool.0 += x as f64;
            pool.1 += y as f64;
        } else {
            cells.push((x as f64, y as f64));
        }
    }
    if pool.0 + pool.1 > 0.0 {
        cells.push(pool);
    }
    let na: f64 = cells.iter().map(|c| c.0).sum();
    let nb: f64 = cells.iter().map(|c| c.1).sum();
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let statistic: f64 = cells
        .iter()
        .map(|&(x, y)| (ka * x - kb * y).powi(2) / (x + y))
        .sum();
    let df = cells.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        ChiSquared::new(df as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN)
    };
    ChiSquare {
        statistic,
        df,
        p_value,
        bins: cells.len(),
    }
}
