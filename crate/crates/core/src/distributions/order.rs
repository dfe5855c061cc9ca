//! Distribution of the Horton-Strahler order of a Galton-Watson tree.

use serde::{Deserialize, Serialize};

use super::OffspringDistribution;
use crate::{Error, Result};

/// `pi_j = P(ord T = j)` and `sigma_j = P(ord T <= j)`.
///
/// The complements `1 - sigma_j` are stored separately because for critical
/// laws they carry all the information once `sigma_j` is close to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderDistribution {
    /// `pi_1..pi_J`, stored 0-based.
    pub pi: Vec<f64>,
    /// `sigma_0..sigma_J` with `sigma_0 = 0`.
    pub sigma: Vec<f64>,
    /// `1 - sigma_0..1 - sigma_J`.
    pub tail: Vec<f64>,
}

impl OrderDistribution {
    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// `pi_j` for `j >= 1`.
    pub fn pi(&self, j: usize) -> f64 {
        self.pi[j - 1]
    }

    pub fn sigma(&self, j: usize) -> f64 {
        self.sigma[j]
    }

    /// `1 - sigma_j`.
    pub fn tail(&self, j: usize) -> f64 {
        self.tail[j]
    }
}

fn check_j(j: usize) -> Result<()> {
    if j == 0 {
        return Err(Error::Domain {
            what: "J",
            value: 0.0,
            expected: "J >= 1",
        });
    }
    Ok(())
}

fn finish(pi: Vec<f64>, tail: Vec<f64>) -> OrderDistribution {
    let sigma = tail.iter().map(|u| 1.0 - u).collect();
    OrderDistribution { pi, sigma, tail }
}

/// Orders `1..=J` by the iteration `sigma_j = S(sigma_(j-1))`, `sigma_0 = 0`.
///
/// In the complement `u = 1 - sigma` one step reads
/// `pi_j = (Q(1-u) - (1-u)) / (1 - Q'(1-u))`, `u_j = u_(j-1) - pi_j`.
pub fn order_distribution(dist: &OffspringDistribution, j_max: usize) -> Result<OrderDistribution> {
    check_j(j_max)?;
    let mut pi = Vec::with_capacity(j_max);
    let mut tail = Vec::with_capacity(j_max + 1);
    tail.push(1.0);
    let mut u = 1.0;
    for j in 1..=j_max {
        let (p, next) = if j == 1 {
            (dist.q0(), 1.0 - dist.q0())
        } else {
            (dist.qmz(u) / dist.omq(u), dist.oms(u))
        };
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Numerical(format!(
                "order recursion lost monotonicity at j = {j}: pi = {p:e}, 1 - sigma = {u:e}"
            )));
        }
        u = next.max(0.0);
        pi.push(p);
        tail.push(u);
    }
    Ok(finish(pi, tail))
}

/// Orders `1..=J` by the two-step recursion
/// `pi_j = [Q(s1) - Q(s2) - pi_(j-1) Q'(s2)] / (1 - Q'(s1))` with
/// `s1 = sigma_(j-1)`, `s2 = sigma_(j-2)`, which counts vertices with at least
/// two children of order `j - 1`.
///
/// Kept as a cross-check only: rounding errors grow by a factor of about 3
/// per order relative to `pi_j`, so agreement with [`order_distribution`]
/// degrades past `j` around 20.
pub fn order_distribution_by_recursion(
    dist: &OffspringDistribution,
    j_max: usize,
) -> Result<OrderDistribution> {
    check_j(j_max)?;
    let mut pi = vec![dist.q0()];
    let mut tail = vec![1.0, 1.0 - dist.q0()];
    for j in 2..=j_max {
        let u1 = tail[j - 1];
        let u2 = tail[j - 2];
        let prev = pi[j - 2];
        let num = dist.qmz(u1) - dist.qmz(u2) + prev * dist.omq(u2) + (u2 - u1 - prev);
        let p = num / dist.omq(u1);
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Numerical(format!(
                "order recursion lost monotonicity at j = {j}: pi = {p:e}"
            )));
        }
        pi.push(p);
        tail.push((u1 - p).max(0.0));
    }
    Ok(finish(pi, tail))
}
