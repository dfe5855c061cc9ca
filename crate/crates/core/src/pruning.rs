//! Horton pruning acting on offspring laws.
//!
//! If `T ~ GW(Q)` then `R(T)` conditioned on `T != φ` is again Galton-Watson
//! with generating function
//! `Q_1(z) = z + [Q(q_0 + rho z) - q_0 - rho z] / (rho (1 - Q'(q_0)))`,
//! `rho = 1 - q_0`. Iterating this map drives every critical law satisfying
//! a regularity condition to an invariant law `IGW(q)` and every
//! subcritical law to the point mass at `q_0 = 1`.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::distributions::{
    criticality_constant, gf_eval, normalization_constraint, Kind, OffspringDistribution,
    OscillatoryLaw,
};
use crate::rootfind::{find_root, sign_changes, RootOptions};
use crate::{Error, Result};

/// `{0, 0.05, ..., 0.95, 0.99}`.
pub fn standard_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..20).map(|i| i as f64 * 0.05).collect();
    g.push(0.99);
    g
}

/// Law of `R(T) | T != φ` for `T ~ GW(dist)`.
///
/// `IGW(q)` is returned unchanged, finite laws are shifted exactly into new
/// finite laws, and every other kind is returned as a composed zoom of its
/// original representation so that no truncation accumulates.
pub fn prune_distribution(dist: &OffspringDistribution) -> Result<OffspringDistribution> {
    let q0 = dist.q0();
    if !(q0 < 1.0) {
        return Err(Error::Domain {
            what: "q_0",
            value: q0,
            expected: "[1/2, 1); the point mass never survives pruning",
        });
    }
    let rho = 1.0 - q0;
    match dist.kind() {
        Kind::Igw(_) => {
            let r = invariance_residual(dist, &standard_grid());
            if r > 1e-10 {
                return Err(Error::Internal(format!("IGW residual {r:e}")));
            }
            Ok(dist.clone())
        }
        Kind::ExplicitFinite(law) => {
            let b = law.coefficients().len() - 1;
            let d = rho * dist.omq(rho);
            let mut q = dist.taylor(rho, rho, b.max(2));
            q[0] = dist.qmz(rho) / d;
            q[1] = 0.0;
            for v in q.iter_mut().skip(2) {
                *v /= d;
            }
            OffspringDistribution::finite(q)
        }
        _ => Ok(dist.zoomed(rho)),
    }
}

/// `sup_z |Q(z) - Q_1(z)|` over `z_grid`, with `Q_1` the pruned generating
/// function evaluated from `Q` directly.
pub fn invariance_residual(dist: &OffspringDistribution, z_grid: &[f64]) -> f64 {
    let q0 = dist.q0();
    let rho = 1.0 - q0;
    let q = |z: f64| gf_eval(dist, z, 0).unwrap_or(f64::NAN);
    let den = rho * (1.0 - gf_eval(dist, q0, 1).unwrap_or(f64::NAN));
    z_grid
        .iter()
        .map(|&z| {
            let w = q0 + rho * z;
            let rhs = z + (q(w) - w) / den;
            (q(z) - rhs).abs()
        })
        .fold(0.0, f64::max)
}

/// `L = 1 - ln(1 - Q'(q_0)) / ln(1 - q_0)`, which for a prune-invariant law
/// is the exponent in `Q(z) - z ~ (1-z)^(2-L)`.
pub fn l_from_invariance(dist: &OffspringDistribution) -> f64 {
    let rho = 1.0 - dist.q0();
    1.0 - dist.omq(rho).ln() / rho.ln()
}

/// `sup_z |Q(z) - Q_IGW(q)(z)|` over `z_grid`.
pub fn distance_to_igw(dist: &OffspringDistribution, q: f64, z_grid: &[f64]) -> f64 {
    z_grid
        .iter()
        .map(|&z| {
            let u = 1.0 - z;
            (dist.qmz(u) - q * u.powf(1.0 / q)).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    ConvergedToIgw { q: f64, step: usize },
    ConvergedToPointMass { step: usize },
    BudgetExhausted { reason: String },
}

impl TrajectoryStatus {
    /// Short label used in tables.
    pub fn label(&self) -> String {
        match self {
            Self::ConvergedToIgw { q, .. } => format!("converged-to-IGW({q:.6})"),
            Self::ConvergedToPointMass { .. } => "converged-to-point-mass".into(),
            Self::BudgetExhausted { .. } => "budget-exhausted".into(),
        }
    }
}

/// One row of a trajectory table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub q0: f64,
    pub mean: f64,
    pub sup_distance: f64,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruningTrajectory {
    /// Step 0 is the input law.
    pub steps: Vec<OffspringDistribution>,
    pub q0_path: Vec<f64>,
    pub mean_path: Vec<f64>,
    /// Grid distance from step `k` to `IGW(q_0^(k))`.
    pub sup_distance: Vec<f64>,
    pub status: TrajectoryStatus,
}

impl PruningTrajectory {
    /// Rows for export; every row but the last is marked `in-progress`.
    pub fn rows(&self) -> Vec<TrajectoryRow> {
        let n = self.q0_path.len();
        (0..n)
            .map(|k| TrajectoryRow {
                step: k,
                q0: self.q0_path[k],
                mean: self.mean_path[k],
                sup_distance: self.sup_distance[k],
                status: if k + 1 == n {
                    self.status.label()
                } else {
                    "in-progress".into()
                },
            })
            .collect()
    }
}

/// Applies [`prune_distribution`] until the grid distance to
/// `IGW(q_0^(k))` and the projected further drift of `q_0^(k)` are both below
/// `tolerance`, `q_0^(k)` exceeds `1 - tolerance`, or `max_steps` prunings
/// have been made.
pub fn iterate_pruning(
    dist: &OffspringDistribution,
    max_steps: usize,
    tolerance: f64,
) -> Result<PruningTrajectory> {
    if !(tolerance > 0.0) {
        return Err(Error::Domain {
            what: "tolerance",
            value: tolerance,
            expected: "(0, inf)",
        });
    }
    let grid = standard_grid();
    let mut t = PruningTrajectory {
        steps: vec![],
        q0_path: vec![],
        mean_path: vec![],
        sup_distance: vec![],
        status: TrajectoryStatus::BudgetExhausted {
            reason: String::new(),
        },
    };
    let mut current = dist.clone();
    for k in 0..=max_steps {
        let q0 = current.q0();
        let distance = if q0 < 1.0 {
            distance_to_igw(&current, q0.max(0.5), &grid)
        } else {
            f64::NAN
        };
        t.q0_path.push(q0);
        t.mean_path.push(current.mean());
        t.sup_distance.push(distance);
        t.steps.push(current.clone());
        if q0 > 1.0 - tolerance {
            t.status = TrajectoryStatus::ConvergedToPointMass { step: k };
            return Ok(t);
        }
        // a law already on the IGW family needs no steps
        let invariant = k == 0 && distance <= 1e-12;
        if invariant || (distance < tolerance && remaining_drift(&t.q0_path) < tolerance) {
            t.status = TrajectoryStatus::ConvergedToIgw { q: q0, step: k };
            return Ok(t);
        }
        let tail = grid.iter().map(|&z| current.tail_error(z, 0)).fold(0.0, f64::max);
        if tail > tolerance {
            t.status = TrajectoryStatus::BudgetExhausted {
                reason: format!("tail bound {tail:e} exceeds tolerance at step {k}"),
            };
            return Ok(t);
        }
        if k == max_steps {
            break;
        }
        current = match prune_distribution(&current) {
            Ok(next) if next.q0().is_finite() => next,
            Ok(_) => {
                t.status = TrajectoryStatus::BudgetExhausted {
                    reason: format!("non-finite q_0 after step {k}"),
                };
                return Ok(t);
            }
            Err(e) => {
                t.status = TrajectoryStatus::BudgetExhausted {
                    reason: format!("pruning failed after step {k}: {e}"),
                };
                return Ok(t);
            }
        };
    }
    t.status = TrajectoryStatus::BudgetExhausted {
        reason: format!("no convergence within {max_steps} steps"),
    };
    Ok(t)
}

/// Projected further change of `q_0` along a trajectory.
///
/// Increments are modeled as `C k^-p`, fitted to the last two, so the
/// remaining drift is about `|dq_k| k / (p - 1)`; `p <= 1` means no bound.
/// This covers both geometric and slow algebraic approach to the limit,
/// where a small single increment alone says little.
fn remaining_drift(path: &[f64]) -> f64 {
    const FIXED: f64 = 1e-14;
    let k = path.len() - 1;
    if k == 0 {
        return f64::INFINITY;
    }
    let d1 = (path[k] - path[k - 1]).abs();
    if d1 <= FIXED {
        return 0.0;
    }
    if k < 2 {
        return f64::INFINITY;
    }
    let d0 = (path[k - 1] - path[k - 2]).abs();
    let p = (d0 / d1).ln() / (k as f64 / (k - 1) as f64).ln();
    if p > 1.0 {
        d1 * k as f64 / (p - 1.0)
    } else {
        f64::INFINITY
    }
}

/// Controls for [`oscillatory_invariant`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryConfig {
    /// Cap on explicit lattice terms per sum.
    pub max_terms: i64,
    /// Scan points for sign changes of the normalization constraint.
    pub scan_points: usize,
}

impl Default for OscillatoryConfig {
    fn default() -> Self {
        Self {
            max_terms: 4000,
            scan_points: 200,
        }
    }
}

/// A prune-invariant lattice-sum law and how it was found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryInvariant {
    pub law: OffspringDistribution,
    pub a: f64,
    pub b: f64,
    /// Sign changes of the constraint seen on the bracket; 1 means `B` is
    /// unique at scan resolution.
    pub sign_changes: usize,
}

/// Prune-invariant law
/// `q_m = (1/(m! A)) sum_n B^n rho^(nm) e^(-rho^n)` with `rho = 1 - q_0`.
///
/// `B` is the zero of the normalization constraint in
/// `((1 - q_0)^-1, (1 - q_0)^-2)` and `A` makes the law critical.
pub fn oscillatory_invariant(q0: f64, config: &OscillatoryConfig) -> Result<OscillatoryInvariant> {
    if !(q0 > 0.5 && q0 < 1.0) {
        return Err(Error::Domain {
            what: "q0",
            value: q0,
            expected: "(1/2, 1)",
        });
    }
    let rho = 1.0 - q0;
    let ln_lo = -rho.ln();
    // stay off the ends, where one of the geometric tails stops converging
    let margin = 1e-2 * ln_lo;
    let (lo, hi) = (ln_lo + margin, 2.0 * ln_lo - margin);
    let cap = config.max_terms;
    let failure = RefCell::new(None);
    let f = |ln_b: f64| match normalization_constraint(rho, ln_b.exp(), cap) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let brackets = sign_changes(f, lo, hi, config.scan_points.max(2));
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let Some(&(a, b)) = brackets.first() else {
        return Err(Error::Truncation(format!(
            "no sign change of the normalization constraint for B in ({}, {}); enlarge max_terms",
            1.0 / rho,
            1.0 / (rho * rho)
        )));
    };
    let ln_b = find_root(f, a, b, RootOptions { tol: 1e-15, max_iter: 200 })?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let b = ln_b.exp();
    let a = criticality_constant(rho, b, cap)?;
    let law = OffspringDistribution::oscillatory(OscillatoryLaw { q0, a, b });
    Ok(OscillatoryInvariant {
        law,
        a,
        b,
        sign_changes: brackets.len(),
    })
}

/// Constants of the integral version of the lattice law:
/// `B = (1 - q_0)^(-1/q_0)`, `A = q_0 Gamma(2 - 1/q_0) / (-(1 - q_0) ln(1 - q_0))`.
pub fn continuous_constants(q0: f64) -> Result<(f64, f64)> {
    if !(q0 > 0.5 && q0 < 1.0) {
        return Err(Error::Domain {
            what: "q0",
            value: q0,
            expected: "(1/2, 1)",
        });
    }
    let rho = 1.0 - q0;
    let b = rho.powf(-1.0 / q0);
    // Gamma(2 - 1/q0) > 0 on this range
    let a = q0 * ln_gamma(2.0 - 1.0 / q0).exp() / (-rho * rho.ln());
    Ok((a, b))
}

/// `q_m = (1/(m! A)) integral B^w rho^(wm) e^(-rho^w) dw` for `m = 2..=m_max`,
/// by the trapezoidal rule in `t = w ln rho`. Entries 0 and 1 hold `q_0`
/// and 0.
pub fn continuous_pmf(q0: f64, m_max: usize) -> Result<Vec<f64>> {
    let (a, b) = continuous_constants(q0)?;
    let rho = 1.0 - q0;
    let ln_rho = rho.ln();
    let ln_b = b.ln();
    let h = 0.02;
    let (t_lo, t_hi) = (-700.0, 7.0);
    let n = ((t_hi - t_lo) / h) as usize;
    let mut out = vec![0.0; m_max + 1];
    out[0] = q0;
    for (m, slot) in out.iter_mut().enumerate().skip(2) {
        // B^w rho^(wm) e^(-rho^w) with w = t / ln rho; dw = dt / |ln rho|
        let mut acc = 0.0;
        for i in 0..=n {
            let t = t_lo + i as f64 * h;
            let w = t / ln_rho;
            acc += (w * ln_b + m as f64 * t - t.exp()).exp();
        }
        *slot = acc * h / (-ln_rho) / (ln_gamma(m as f64 + 1.0).exp() * a);
    }
    Ok(out)
}
