//! Numerical probe for the existence of `S'(1)`.

use serde::{Deserialize, Serialize};

use super::{Kind, OffspringDistribution};
use crate::Result;

/// Grid and tolerance for [`regularity_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Number of phases `alpha = i / phases`.
    pub phases: usize,
    /// Grid ratio; defaults to `1 - q_0` of the law, the natural period of
    /// prune-invariant laws.
    pub rho: Option<f64>,
    /// Smallest `1 - x` visited.
    pub min_u: f64,
    /// Relative tolerance on the detrended phase spread.
    pub tolerance: f64,
    /// Minimum usable depth before the probe is declared inconclusive.
    pub min_depth: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            phases: 8,
            rho: None,
            min_u: 1e-280,
            tolerance: 2e-8,
            min_depth: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityStatus {
    Regular,
    Oscillating,
    Inconclusive,
}

/// `Lambda = lim k sum_(m>=k) q_m / sum_(m>=k) m q_m` at the largest `k` the
/// stored coefficients support, bracketed by the tail bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub k: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub status: RegularityStatus,
    /// `S'(1)` when the phases agree.
    pub s1_estimate: Option<f64>,
    /// `L = 2 - 1/(1 - S'(1))` when the phases agree.
    pub l_estimate: Option<f64>,
    /// `ln g(x) / -ln(1-x)` at the deepest grid point, per phase.
    pub l_direct: Vec<f64>,
    /// `(1 - S(x))/(1 - x)` over the last period, per phase.
    pub phase_values: Vec<f64>,
    /// Relative spread after removing the quadratic drift.
    pub spread: f64,
    pub rho: f64,
    /// Deepest grid period `T` used.
    pub depth: usize,
    pub lambda: Option<LambdaEstimate>,
}

/// Floor below which `Q(x) - x` is no longer a normal double.
const VALUE_FLOOR: f64 = 1e-300;

/// Estimates `S'(1)` on the grids `x = 1 - rho^(m + alpha)`.
///
/// `E(x) = (1 - S(x))/(1 - x) = 1 - [Q(x) - x] / ((1 - x)(1 - Q'(x)))` is
/// sampled at `t = m + alpha` over the last two periods `[T - 2, T]` that
/// every phase reaches. A quadratic in `t` through the three integer points
/// removes the slow drift of a regular law (for the `k^-3` example the drift
/// is logarithmic in `1 - x`); what remains is the phase dependence. When it
/// is within the tolerance `S'(1)` is reported as `E` at the deepest point.
pub fn regularity_probe(dist: &OffspringDistribution, config: &ProbeConfig) -> Result<RegularityReport> {
    let rho = config.rho.unwrap_or(1.0 - dist.q0());
    let phases = config.phases.max(2);
    let ln_rho = rho.ln();
    let steps = (config.min_u.ln() / ln_rho).floor() as usize * phases;
    let ratio = |u: f64| -> Option<f64> {
        let qmz = dist.qmz(u);
        let omq = dist.omq(u);
        if !(qmz >= VALUE_FLOOR) || !(omq >= VALUE_FLOOR) || !qmz.is_finite() || !omq.is_finite() {
            return None;
        }
        Some(1.0 - qmz / (u * omq))
    };
    let at = |s: usize| (s as f64 / phases as f64 * ln_rho).exp();

    // deepest multiple of a period reachable without leaving the normal range
    let mut last = 0;
    for s in 0..=steps {
        if ratio(at(s)).is_none() {
            break;
        }
        last = s;
    }
    let depth = last / phases;
    let window = 2 * phases;
    let (values, l_direct) = if depth >= 2 {
        let base = depth * phases - window;
        let values: Vec<f64> = (0..=window).map(|j| ratio(at(base + j)).unwrap_or(f64::NAN)).collect();
        let l_direct = (0..phases)
            .map(|i| {
                let u = at(base + phases + i);
                let g = (dist.qmz(u) - dist.deficit * u) / (u * u);
                g.ln() / -u.ln()
            })
            .collect();
        (values, l_direct)
    } else {
        (vec![f64::NAN; window + 1], vec![])
    };
    // quadratic through j = 0, phases, 2 phases
    let (e0, e1, e2) = (values[0], values[phases], values[window]);
    let residuals: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let x = j as f64 / phases as f64;
            let fit = e0 * (x - 1.0) * (x - 2.0) / 2.0 - e1 * x * (x - 2.0) + e2 * x * (x - 1.0) / 2.0;
            v - fit
        })
        .collect();
    let lo = residuals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / e2.abs().max(1e-3);
    let phase_values = values[phases..window].to_vec();

    let status = if depth < config.min_depth || !spread.is_finite() {
        RegularityStatus::Inconclusive
    } else if spread <= config.tolerance {
        RegularityStatus::Regular
    } else {
        RegularityStatus::Oscillating
    };
    let (s1_estimate, l_estimate) = if status == RegularityStatus::Regular {
        (Some(e2), Some(2.0 - 1.0 / (1.0 - e2)))
    } else {
        (None, None)
    };
    Ok(RegularityReport {
        status,
        s1_estimate,
        l_estimate,
        l_direct,
        phase_values,
        spread,
        rho,
        depth,
        lambda: lambda_estimate(dist),
    })
}

fn lambda_estimate(dist: &OffspringDistribution) -> Option<LambdaEstimate> {
    let Kind::ExplicitWithTail(law) = dist.kind() else {
        return None;
    };
    let tail = law.tail?;
    let q = law.coefficients();
    let k = (q.len() / 2).max(2);
    if k >= q.len() {
        return None;
    }
    let mass: f64 = q[k..].iter().sum();
    let moment: f64 = q[k..].iter().enumerate().map(|(i, v)| (k + i) as f64 * v).sum();
    if moment <= 0.0 {
        return None;
    }
    let kf = k as f64;
    Some(LambdaEstimate {
        k,
        value: kf * mass / moment,
        lower: kf * mass / (moment + tail.first_moment),
        upper: kf * (mass + tail.mass) / moment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{igw, TailBound};

    #[test]
    fn binary_is_regular_with_half() {
        let r = regularity_probe(&OffspringDistribution::binary(), &ProbeConfig::default()).unwrap();
        assert_eq!(r.status, RegularityStatus::Regular);
        assert!((r.s1_estimate.unwrap() - 0.5).abs() < 1e-12);
        assert!(r.l_estimate.unwrap().abs() < 1e-11);
    }

    #[test]
    fn igw_gives_zipf_exponent() {
        for &alpha in &[1.25, 1.5, 2.0] {
            let r = regularity_probe(&igw(1.0 / alpha).unwrap(), &ProbeConfig::default()).unwrap();
            assert_eq!(r.status, RegularityStatus::Regular);
            assert!((r.s1_estimate.unwrap() - (alpha - 1.0) / alpha).abs() < 1e-10);
            assert!((r.l_estimate.unwrap() - (2.0 - alpha)).abs() < 1e-9);
        }
    }

    #[test]
    fn zipf_example_tends_to_half() {
        let r = regularity_probe(&OffspringDistribution::zipf_example(), &ProbeConfig::default()).unwrap();
        assert_eq!(r.status, RegularityStatus::Regular);
        assert!((r.s1_estimate.unwrap() - 0.5).abs() < 1e-3);
        assert!(r.l_estimate.unwrap().abs() < 4e-3);
    }

    #[test]
    fn subcritical_has_zero_slope() {
        let law = OffspringDistribution::finite(vec![0.6, 0.0, 0.4]).unwrap();
        let r = regularity_probe(&law, &ProbeConfig::default()).unwrap();
        assert_eq!(r.status, RegularityStatus::Regular);
        assert!(r.s1_estimate.unwrap().abs() < 1e-12);
    }

    #[test]
    fn lambda_from_stored_tail() {
        let law = OffspringDistribution::with_tail(
            vec![0.6, 0.0, 0.25, 0.08, 0.04, 0.02],
            TailBound {
                mass: 0.01,
                first_moment: 0.1,
            },
        )
        .unwrap();
        let l = lambda_estimate(&law).unwrap();
        assert_eq!(l.k, 3);
        assert!(l.lower <= l.value && l.value <= l.upper);
    }
}
