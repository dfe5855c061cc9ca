//! Exact draws from offspring laws by inversion.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::distributions::{Kind, OffspringDistribution};

/// Table length for laws without a closed-form survival function.
pub const TABLE_LEN: usize = 4096;

/// Entries of the exact survival table kept for `IGW(q)`.
const IGW_TABLE: usize = 64;

#[derive(Clone, Debug)]
enum Inverse {
    /// Cumulative table; uniforms beyond its last entry are censored.
    Table(Vec<f64>),
    /// `P(X > k) = q Gamma(k - alpha) / (|Gamma(-alpha)| k!)`, `alpha = 1/q - 1`.
    Igw {
        alpha: f64,
        ln_scale: f64,
        survival: Vec<f64>,
    },
    /// `P(X >= k) = (2/3) / (k (k - 1))` for `k >= 2`.
    Zipf,
}

/// Draws offspring counts `X` with `P(X = k) = q_k`.
///
/// `IGW(q)` and the `k^-3` example are inverted through their exact
/// survival functions, so arbitrarily large counts are reachable. Other
/// laws use a cumulative table of [`TABLE_LEN`] entries; a uniform falling
/// past the table yields `None`, which callers count as censoring.
#[derive(Clone, Debug)]
pub struct OffspringSampler {
    inverse: Inverse,
}

impl OffspringSampler {
    pub fn new(dist: &OffspringDistribution) -> Self {
        let inverse = match dist.kind() {
            Kind::Igw(q) => {
                let alpha = 1.0 / q - 1.0;
                let mut survival = vec![1.0 - q; IGW_TABLE + 1];
                for k in 2..=IGW_TABLE {
                    survival[k] = survival[k - 1] * (k as f64 - 1.0 - alpha) / k as f64;
                }
                // |Gamma(-alpha)| = Gamma(1 - alpha) / alpha
                let ln_scale = if alpha < 1.0 {
                    q.ln() - (ln_gamma(1.0 - alpha) - alpha.ln())
                } else {
                    f64::NEG_INFINITY
                };
                Inverse::Igw {
                    alpha,
                    ln_scale,
                    survival,
                }
            }
            Kind::ZipfCriticalExample => Inverse::Zipf,
            Kind::ExplicitFinite(law) => {
                let mut cdf = cumulative(law.coefficients());
                let total = *cdf.last().unwrap();
                for v in &mut cdf {
                    *v /= total;
                }
                *cdf.last_mut().unwrap() = 1.0;
                Inverse::Table(cdf)
            }
            Kind::ExplicitWithTail(law) => Inverse::Table(cumulative(law.coefficients())),
            _ => Inverse::Table(cumulative(&dist.pmf(TABLE_LEN))),
        };
        Self { inverse }
    }

    /// One draw, or `None` when the uniform lands in an untabulated tail.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<u64> {
        // w in (0, 1]
        let w = 1.0 - rng.random::<f64>();
        match &self.inverse {
            Inverse::Table(cdf) => {
                let v = 1.0 - w;
                let k = cdf.partition_point(|&c| c <= v);
                (k < cdf.len()).then_some(k as u64)
            }
            Inverse::Igw {
                alpha,
                ln_scale,
                survival,
            } => Some(igw_inverse(*alpha, *ln_scale, survival, w)),
            Inverse::Zipf => Some(zipf_inverse(w)),
        }
    }
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// Smallest `k` with `P(X > k) < w`.
fn igw_inverse(alpha: f64, ln_scale: f64, survival: &[f64], w: f64) -> u64 {
    if let Some(k) = survival.iter().position(|&s| s < w) {
        return k as u64;
    }
    let ln_s = |k: f64| ln_scale + ln_gamma(k - alpha) - ln_gamma(k + 1.0);
    let ln_w = w.ln();
    let mut lo = (survival.len() - 1) as f64; // P(X > lo) >= w
    let mut hi = lo * 2.0;
    while ln_s(hi) >= ln_w {
        lo = hi;
        hi *= 2.0;
        if hi > 4e18 {
            return u64::MAX;
        }
    }
    while hi - lo > 1.0 {
        let mid = ((lo + hi) / 2.0).floor();
        if ln_s(mid) >= ln_w {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi as u64
}

/// Largest `k` with `P(X >= k) >= w`.
fn zipf_inverse(w: f64) -> u64 {
    if w > 1.0 / 3.0 {
        return 0;
    }
    let x = (1.0 + (1.0 + 8.0 / (3.0 * w)).sqrt()) / 2.0;
    if x > 4e18 {
        return u64::MAX;
    }
    let mut k = (x.floor() as u64).max(2);
    // guard the floor against rounding
    while crate::distributions::zipf_survival(k + 1) >= w {
        k += 1;
    }
    while k > 2 && crate::distributions::zipf_survival(k) < w {
        k -= 1;
    }
    k
}
