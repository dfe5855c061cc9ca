//! Ratio estimators over seeded batches of draws.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{feasible_pi, grow, stream, Draw, OffspringSampler, SampleConfig};
use crate::distributions::{OffspringDistribution, Provenance, TokunagaTable};
use crate::table::OrderTable;
use crate::trees::{branch_statistics_ordered, BranchStatistics};
use crate::{Error, Result};

/// A point estimate and its standard error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// `|value - target| <= m * se`.
    pub fn within(&self, target: f64, m: f64) -> bool {
        (self.value - target).abs() <= m * self.se
    }

    fn proportion(hits: u64, n: u64) -> Self {
        if n == 0 {
            return Self::default();
        }
        let p = hits as f64 / n as f64;
        Self {
            value: p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
        }
    }
}

/// Runs draws `0, 1, 2, ...` of `seed` in parallel batches and feeds them
/// to `consume` in index order until it has accepted `want` of them or
/// `cap` draws were made. Returns the number of draws consumed.
pub(crate) fn scan_draws<T: Send>(
    seed: u64,
    cap: u64,
    want: u64,
    rate: f64,
    draw: impl Fn(&mut ChaCha8Rng) -> T + Sync,
    mut consume: impl FnMut(T) -> bool,
) -> u64 {
    let mut next = 0u64;
    let mut accepted = 0u64;
    let mut used = 0u64;
    while accepted < want && next < cap {
        let guess = ((want - accepted) as f64 / rate.max(1e-9) * 1.05) as u64;
        let end = cap.min(next + guess.clamp(1024, 1 << 18));
        let batch: Vec<T> = (next..end)
            .into_par_iter()
            .map(|i| draw(&mut stream(seed, i)))
            .collect();
        next = end;
        for item in batch {
            used += 1;
            if consume(item) {
                accepted += 1;
                if accepted == want {
                    break;
                }
            }
        }
    }
    used
}

/// Empirical order distribution of unconditioned trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimates {
    /// `pi_hat_j` for `j = 1..=J` at index `j - 1`.
    pub pi_hat: Vec<Estimate>,
    /// Mass of orders above `J`.
    pub exceeded: Estimate,
    /// Uncensored draws.
    pub n: u64,
    pub censored: u64,
    pub censoring_rate: f64,
}

/// Orders of `cfg.n_trees` unconditioned draws, lumping orders above `J`.
/// Censored draws are excluded from the proportions and reported.
pub fn mc_order_distribution(dist: &OffspringDistribution, j_max: u32, cfg: &SampleConfig) -> Result<OrderEstimates> {
    cfg.validate()?;
    let sampler = OffspringSampler::new(dist);
    let mut counts = vec![0u64; j_max as usize + 1];
    let mut exceeded = 0u64;
    let mut censored = 0u64;
    scan_draws(
        cfg.seed,
        cfg.n_trees,
        cfg.n_trees,
        1.0,
        |rng| match grow(&sampler, rng, cfg.max_vertices, Some(j_max)) {
            Draw::Tree(t) => Some(t.order),
            Draw::OrderExceeded => Some(u32::MAX),
            Draw::Censored(_) => None,
        },
        |o| {
            match o {
                Some(u32::MAX) => exceeded += 1,
                Some(k) => counts[k as usize] += 1,
                None => censored += 1,
            }
            true
        },
    );
    let n = cfg.n_trees - censored;
    Ok(OrderEstimates {
        pi_hat: counts[1..].iter().map(|&c| Estimate::proportion(c, n)).collect(),
        exceeded: Estimate::proportion(exceeded, n),
        n,
        censored,
        censoring_rate: censored as f64 / cfg.n_trees as f64,
    })
}

/// Monte Carlo Tokunaga statistics of the order-`K` ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimates {
    pub k: usize,
    pub seed: u64,
    /// Accepted trees.
    pub n_trees: u64,
    pub attempts: u64,
    pub censored: u64,
    /// Censored draws over all attempts.
    pub censoring_rate: f64,
    /// `pi_hat_K`: accepted over uncensored attempts.
    pub acceptance: Estimate,
    /// `E_K[N_k]` for `k = 1..=K` at index `k - 1`.
    pub branch_means: Vec<Estimate>,
    /// `N_k[K] / N_1[K]` for `k = 1..=K` at index `k - 1`.
    pub n_ratios: Vec<Estimate>,
    /// Point estimates with standard errors in the provenance.
    pub tokunaga: TokunagaTable,
}

impl McEstimates {
    pub fn t_side(&self, i: usize, j: usize) -> Estimate {
        let Provenance::MonteCarlo { se_side, .. } = &self.tokunaga.provenance else {
            unreachable!()
        };
        Estimate {
            value: self.tokunaga.t_side.get(i, j),
            se: se_side.get(i, j),
        }
    }

    pub fn t_regular(&self, i: usize, j: usize) -> Estimate {
        let Provenance::MonteCarlo { se_regular, .. } = &self.tokunaga.provenance else {
            unreachable!()
        };
        Estimate {
            value: self.tokunaga.t_regular.get(i, j),
            se: se_regular.get(i, j),
        }
    }

    /// `t_(i,j) = T_(i,j) + 2 delta_(i,j-1)`; same standard error as `T`.
    pub fn t_total(&self, i: usize, j: usize) -> Estimate {
        Estimate {
            value: self.tokunaga.t_total.get(i, j),
            se: self.t_side(i, j).se,
        }
    }
}

/// Integer sums for ratio estimators of `E[x] / E[y]`.
#[derive(Clone, Copy, Default)]
struct Moments {
    x: u128,
    xx: u128,
    xy: u128,
}

impl Moments {
    fn add(&mut self, x: u64, y: u64) {
        let (x, y) = (x as u128, y as u128);
        self.x += x;
        self.xx += x * x;
        self.xy += x * y;
    }

    /// Delta method: `se^2 = Var(x - R y) / (n ybar^2)`.
    fn ratio(&self, y: &Moments, n: u64) -> Estimate {
        let (sx, sy) = (self.x as f64, y.x as f64);
        let r = sx / sy;
        let n_f = n as f64;
        let ss = self.xx as f64 - 2.0 * r * self.xy as f64 + r * r * y.xx as f64;
        let var = if n > 1 { (ss / (n_f - 1.0)).max(0.0) } else { 0.0 };
        let ybar = sy / n_f;
        Estimate {
            value: r,
            se: (var / n_f).sqrt() / ybar,
        }
    }

    fn mean(&self, n: u64) -> Estimate {
        let n_f = n as f64;
        let m = self.x as f64 / n_f;
        let var = if n > 1 {
            ((self.xx as f64 - n_f * m * m) / (n_f - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            value: m,
            se: (var / n_f).sqrt(),
        }
    }
}

struct Accumulator {
    n: u64,
    /// `N_k` moments with `y = N_1`.
    branches: Vec<Moments>,
    /// Moments of `N_j` with itself, for ratio denominators.
    own: Vec<Moments>,
    side: OrderTable<Moments>,
    regular: OrderTable<Moments>,
}

impl Accumulator {
    fn new(k: usize) -> Self {
        Self {
            n: 0,
            branches: vec![Moments::default(); k],
            own: vec![Moments::default(); k],
            side: OrderTable::new(k),
            regular: OrderTable::new(k),
        }
    }

    fn add(&mut self, s: &BranchStatistics) {
        self.n += 1;
        let n1 = s.branch_counts[0];
        for (idx, &nk) in s.branch_counts.iter().enumerate() {
            self.branches[idx].add(nk, n1);
            self.own[idx].add(nk, nk);
        }
        for (i, j) in s.n_side.pairs() {
            let nj = s.branch_counts[j - 1];
            self.side.get_mut(i, j).add(s.n_side.get(i, j), nj);
            self.regular.get_mut(i, j).add(s.n_side_regular.get(i, j), nj);
        }
    }
}

/// Tokunaga ratio estimators over `cfg.n_trees` trees of order exactly `K`
/// drawn by rejection.
///
/// `t_hat_(i,j) = sum n_(i,j) / sum N_j`, `T_hat = t_hat - 2 delta_(i,j-1)` and
/// `T_hat^o` from regular mergers, with delta-method standard errors.
/// Censored attempts count toward the attempt budget and the reported
/// censoring rate but never enter the statistics.
pub fn mc_tokunaga(dist: &OffspringDistribution, k: u32, cfg: &SampleConfig) -> Result<McEstimates> {
    cfg.validate()?;
    if k < 2 {
        return Err(Error::Domain {
            what: "K",
            value: k as f64,
            expected: "K >= 2",
        });
    }
    let p = feasible_pi(dist, k)?;
    let sampler = OffspringSampler::new(dist);
    let ku = k as usize;
    let mut acc = Accumulator::new(ku);
    let mut censored = 0u64;
    let attempts = scan_draws(
        cfg.seed,
        cfg.attempt_cap(),
        cfg.n_trees,
        p,
        |rng| match grow(&sampler, rng, cfg.max_vertices, Some(k)) {
            Draw::Tree(t) if t.order == k => Some(Some(branch_statistics_ordered(&t))),
            Draw::Censored(_) => None,
            _ => Some(None),
        },
        |o| match o {
            Some(Some(s)) => {
                acc.add(&s);
                true
            }
            Some(None) => false,
            None => {
                censored += 1;
                false
            }
        },
    );
    if acc.n < cfg.n_trees {
        return Err(Error::Conditioning(format!(
            "accepted {} of {} order-{k} trees in {attempts} attempts (expected about {:.0} per tree)",
            acc.n,
            cfg.n_trees,
            1.0 / p
        )));
    }
    let n = acc.n;
    for (idx, m) in acc.own.iter().enumerate() {
        if m.x == 0 {
            return Err(Error::Internal(format!("no order-{} branches in accepted trees", idx + 1)));
        }
    }
    let mut total = OrderTable::new(ku);
    let mut regular = OrderTable::new(ku);
    let mut se_side = OrderTable::new(ku);
    let mut se_regular = OrderTable::new(ku);
    for (i, j) in total.pairs().collect::<Vec<_>>() {
        let t = acc.side.get(i, j).ratio(&acc.own[j - 1], n);
        let r = acc.regular.get(i, j).ratio(&acc.own[j - 1], n);
        total.set(i, j, t.value);
        se_side.set(i, j, t.se);
        regular.set(i, j, r.value);
        se_regular.set(i, j, r.se);
    }
    let tokunaga = TokunagaTable::from_totals(
        total,
        regular,
        Provenance::MonteCarlo {
            n_trees: n,
            se_side,
            se_regular,
        },
    );
    let n_ratios = (0..ku)
        .map(|idx| {
            if idx == 0 {
                Estimate { value: 1.0, se: 0.0 }
            } else {
                acc.branches[idx].ratio(&acc.own[0], n)
            }
        })
        .collect();
    let uncensored = attempts - censored;
    Ok(McEstimates {
        k: ku,
        seed: cfg.seed,
        n_trees: n,
        attempts,
        censored,
        censoring_rate: censored as f64 / attempts as f64,
        acceptance: Estimate::proportion(n, uncensored),
        branch_means: acc.own.iter().map(|m| m.mean(n)).collect(),
        n_ratios,
        tokunaga,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{igw, tokunaga_analytic};

    fn cfg(seed: u64, n: u64) -> SampleConfig {
        SampleConfig {
            seed,
            n_trees: n,
            ..Default::default()
        }
    }

    #[test]
    fn moments_ratio_matches_direct_formula() {
        let xs = [3u64, 5, 2, 8, 4];
        let ys = [1u64, 2, 1, 3, 2];
        let mut mx = Moments::default();
        let mut my = Moments::default();
        for (&x, &y) in xs.iter().zip(&ys) {
            mx.add(x, y);
            my.add(y, y);
        }
        let e = mx.ratio(&my, 5);
        let r = 22.0 / 9.0;
        let resid: Vec<f64> = xs.iter().zip(&ys).map(|(&x, &y)| x as f64 - r * y as f64).collect();
        let var = resid.iter().map(|d| d * d).sum::<f64>() / 4.0;
        assert!((e.value - r).abs() < 1e-15);
        assert!((e.se - (var / 5.0).sqrt() / 1.8).abs() < 1e-14);
    }

    #[test]
    fn binary_order_distribution() {
        let est = mc_order_distribution(&OffspringDistribution::binary(), 5, &cfg(1, 100_000)).unwrap();
        for (idx, e) in est.pi_hat.iter().enumerate() {
            assert!(e.within(0.5f64.powi(idx as i32 + 1), 3.0), "j = {}: {e:?}", idx + 1);
        }
        assert_eq!(est.censored, 0);
    }

    #[test]
    fn igw_root_child_is_a_leaf_with_probability_q0() {
        let est = mc_order_distribution(&igw(0.75).unwrap(), 3, &cfg(2, 100_000)).unwrap();
        assert!(est.pi_hat[0].within(0.75, 3.0), "{:?}", est.pi_hat[0]);
    }

    #[test]
    fn parallel_batches_are_deterministic() {
        let d = igw(0.7).unwrap();
        let a = mc_tokunaga(&d, 3, &cfg(9, 2000)).unwrap();
        let b = mc_tokunaga(&d, 3, &cfg(9, 2000)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn igw_regular_coefficient() {
        let d = igw(0.75).unwrap();
        let est = mc_tokunaga(&d, 4, &cfg(5, 20_000)).unwrap();
        let r = est.t_regular(2, 4);
        assert!(r.within(4.0, 3.0), "{r:?}");
        assert!(est.acceptance.within(0.75 * 0.25f64.powi(3), 3.0));
    }

    #[test]
    fn binary_estimates_track_analytic() {
        let d = OffspringDistribution::binary();
        let est = mc_tokunaga(&d, 3, &cfg(3, 20_000)).unwrap();
        let exact = tokunaga_analytic(&d, 3).unwrap();
        for (i, j) in exact.t_side.pairs() {
            let e = est.t_side(i, j);
            assert!(e.within(exact.t_side.get(i, j), 3.5), "({i},{j}): {e:?}");
            assert!(e.value >= -3.0 * e.se);
        }
        assert!(est.censoring_rate < 1e-3);
    }

    #[test]
    fn tiny_budget_is_a_conditioning_error() {
        let c = SampleConfig {
            rejection_budget: 1,
            ..cfg(0, 100)
        };
        let err = mc_tokunaga(&OffspringDistribution::binary(), 6, &c).unwrap_err();
        assert!(matches!(err, Error::Conditioning(_)));
    }
}
