//! Tokunaga coefficients, Horton numbers and the Horton exponent.

use serde::{Deserialize, Serialize};

use super::{order_distribution, OffspringDistribution};
use crate::rootfind::{find_root, RootOptions};
use crate::table::OrderTable;
use crate::{Error, Result};

/// Where the numbers in a [`TokunagaTable`] came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    /// Ratio estimators over `n_trees` accepted trees with delta-method
    /// standard errors.
    MonteCarlo {
        n_trees: u64,
        se_side: OrderTable<f64>,
        se_regular: OrderTable<f64>,
    },
    /// Exact partial sums with certified intervals.
    Oracle {
        covered_mass: f64,
        total_lower: OrderTable<f64>,
        total_upper: OrderTable<f64>,
        regular_lower: OrderTable<f64>,
        regular_upper: OrderTable<f64>,
    },
}

/// `T_(i,j)`, `T^o_(i,j)` and `t_(i,j) = T_(i,j) + 2 delta_(i,j-1)` for
/// `1 <= i < j <= K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokunagaTable {
    pub k: usize,
    /// Side-branch coefficients `T_(i,j)`.
    pub t_side: OrderTable<f64>,
    /// Regular coefficients `T^o_(i,j)`.
    pub t_regular: OrderTable<f64>,
    /// Total merger statistics `t_(i,j)`.
    pub t_total: OrderTable<f64>,
    pub provenance: Provenance,
}

impl TokunagaTable {
    /// Builds `t_side` from `t_total`.
    pub fn from_totals(t_total: OrderTable<f64>, t_regular: OrderTable<f64>, provenance: Provenance) -> Self {
        let t_side = t_total.map(|i, j, &t| if i + 1 == j { t - 2.0 } else { t });
        Self {
            k: t_total.k(),
            t_side,
            t_regular,
            t_total,
            provenance,
        }
    }

    /// `max |T_(i,j) - T_(1, 1+j-i)|`, zero for a Toeplitz table.
    pub fn toeplitz_deviation(&self) -> f64 {
        self.t_side
            .pairs()
            .map(|(i, j)| (self.t_side.get(i, j) - self.t_side.get(1, 1 + j - i)).abs())
            .fold(0.0, f64::max)
    }

    /// The column `T_(j-1,j), ..., T_(1,j)` read as `T_1..T_(j-1)`.
    pub fn column_sequence(&self, j: usize) -> Vec<f64> {
        (1..j).map(|k| self.t_side.get(j - k, j)).collect()
    }
}

/// Tokunaga coefficients of a Galton-Watson law for orders up to `K`.
///
/// With `u_j = 1 - sigma_j` the denominator
/// `Q(sigma_(j-1)) - Q(sigma_(j-2)) - pi_(j-1) Q'(sigma_(j-2))` is evaluated as
/// `[Q-z](u_(j-1)) - [Q-z](u_(j-2)) + pi_(j-1) [1-Q'](u_(j-2))`, and likewise for
/// the numerators, so the table stays accurate when `sigma_j` is within
/// rounding of 1.
pub fn tokunaga_analytic(dist: &OffspringDistribution, k: usize) -> Result<TokunagaTable> {
    if k < 2 {
        return Err(Error::Domain {
            what: "K",
            value: k as f64,
            expected: "K >= 2",
        });
    }
    let od = order_distribution(dist, k - 1)?;
    let mut side = OrderTable::new(k);
    let mut regular = OrderTable::new(k);
    for j in 2..=k {
        let u1 = od.tail(j - 1);
        let u2 = od.tail(j - 2);
        let p = od.pi(j - 1);
        let (qmz1, qmz2) = (dist.qmz(u1), dist.qmz(u2));
        let (omq1, omq2) = (dist.omq(u1), dist.omq(u2));
        let den = qmz1 - qmz2 + p * omq2;
        if !(den > 0.0) {
            return Err(Error::Numerical(format!(
                "terminal-vertex probability {den:e} at j = {j}; reduce K"
            )));
        }
        let num_side = -omq1 + omq2 - p * dist.d2(u2);
        let num_last = -p * (omq1 + omq2) - 2.0 * qmz1 + 2.0 * qmz2;
        let reg_rate = dist.d2(u1) / omq1;
        for i in 1..j {
            let pi_i = od.pi(i);
            let reg = pi_i * reg_rate;
            let term = if i + 1 == j { num_last / den } else { pi_i * num_side / den };
            let t = term + reg;
            if !t.is_finite() || !reg.is_finite() {
                return Err(Error::Numerical(format!(
                    "T({i},{j}) is not finite; Q'' diverges at sigma = {}",
                    1.0 - u1
                )));
            }
            side.set(i, j, t);
            regular.set(i, j, reg);
        }
    }
    let total = side.map(|i, j, &t| if i + 1 == j { t + 2.0 } else { t });
    Ok(TokunagaTable {
        k,
        t_side: side,
        t_regular: regular,
        t_total: total,
        provenance: Provenance::Analytic,
    })
}

/// Mean branch counts `N_k[K]` for `k = 1..=K`, from
/// `N_K = 1` and `N_k = sum_(j > k) t_(k,j) N_j`.
pub fn horton_numbers(table: &TokunagaTable) -> Vec<f64> {
    let k = table.k;
    let mut n = vec![0.0; k + 1];
    n[k] = 1.0;
    for i in (1..k).rev() {
        n[i] = (i + 1..=k).map(|j| table.t_total.get(i, j) * n[j]).sum();
    }
    n.remove(0);
    n
}

/// `T_1..T_m` with an optional geometric continuation
/// `T_(m+i) = T_m c^i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokunagaSequence {
    pub terms: Vec<f64>,
    pub tail_ratio: Option<f64>,
}

impl TokunagaSequence {
    /// `T_1` followed by `a c^(k-1)` for `k = 2..=m`, continued geometrically.
    pub fn self_similar(t1: f64, a: f64, c: f64, m: usize) -> Self {
        let mut terms = vec![t1];
        terms.extend((2..=m.max(2)).map(|k| a * c.powi(k as i32 - 1)));
        Self {
            terms,
            tail_ratio: Some(c),
        }
    }

    /// `t(z) = -1 + 2z + sum_k T_k z^k`.
    pub fn t_hat(&self, z: f64) -> f64 {
        let mut acc = -1.0 + 2.0 * z;
        let mut zk = 1.0;
        for t in &self.terms {
            zk *= z;
            acc += t * zk;
        }
        if let (Some(c), Some(last)) = (self.tail_ratio, self.terms.last()) {
            acc += last * zk * c * z / (1.0 - c * z);
        }
        acc
    }
}

/// `R = 1/w_0` where `w_0` is the real zero of `t(z)` in `(0, 1/2]`.
pub fn horton_exponent(seq: &TokunagaSequence) -> Result<f64> {
    if seq.terms.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidDistribution("non-finite Tokunaga term".into()));
    }
    let mut hi = 0.5;
    if let Some(c) = seq.tail_ratio {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain {
                what: "tail ratio",
                value: c,
                expected: "(0, inf)",
            });
        }
        if 1.0 / c <= hi {
            hi = (1.0 / c) * (1.0 - 1e-12);
        }
    }
    let w0 = find_root(|z| seq.t_hat(z), 0.0, hi, RootOptions::default()).map_err(|e| match e {
        Error::Structural(m) => Error::Structural(format!(
            "Tokunaga sequence has no zero of t(z) in (0, 1/2]: {m}"
        )),
        other => other,
    })?;
    if w0 <= 0.0 {
        return Err(Error::Structural("t(z) vanishes at 0".into()));
    }
    Ok(1.0 / w0)
}

/// Horton exponent of `T_1, a c, a c^2, ...` from the quadratic
/// `(a c - c (T_1 + 2)) z^2 + (c + T_1 + 2) z - 1 = 0`.
pub fn horton_exponent_self_similar(t1: f64, a: f64, c: f64) -> Result<f64> {
    let qa = a * c - c * (t1 + 2.0);
    let qb = c + t1 + 2.0;
    let hi = 0.5f64.min(1.0 / c);
    let w0 = if qa == 0.0 {
        1.0 / qb
    } else {
        let disc = qb * qb + 4.0 * qa;
        if disc < 0.0 {
            return Err(Error::Structural("t(z) has no real zero".into()));
        }
        // root of smaller magnitude, written without cancellation
        2.0 / (qb + disc.sqrt())
    };
    if !(w0 > 0.0 && w0 <= hi * (1.0 + 1e-12)) {
        return Err(Error::Structural(format!("zero {w0} of t(z) outside (0, {hi}]")));
    }
    Ok(1.0 / w0)
}

/// Closed-form constants of `IGW(q0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IgwConstants {
    pub q0: f64,
    pub a: f64,
    pub c: f64,
    pub t1: f64,
    /// `R = (1 - q0)^(-1/q0)`.
    pub horton_exponent: f64,
}

impl IgwConstants {
    /// `R` as `c^(c/(c-1))`.
    pub fn horton_exponent_from_c(&self) -> f64 {
        self.c.powf(self.c / (self.c - 1.0))
    }

    /// `T_k`: `T_1` for `k = 1`, `a c^(k-1)` beyond.
    pub fn tokunaga(&self, k: usize) -> f64 {
        if k == 1 {
            self.t1
        } else {
            self.a * self.c.powi(k as i32 - 1)
        }
    }

    /// `T^o_k = c^(k-1)`.
    pub fn tokunaga_regular(&self, k: usize) -> f64 {
        self.c.powi(k as i32 - 1)
    }
}

/// `c = 1/(1-q0)`, `a = (c-1)(c^(1/(c-1)) - 1)`, `T_1 = c^(c/(c-1)) - c - 1`,
/// `R = (1-q0)^(-1/q0)`.
pub fn igw_constants(q0: f64) -> Result<IgwConstants> {
    if !(0.5..1.0).contains(&q0) {
        return Err(Error::Domain {
            what: "q0",
            value: q0,
            expected: "[1/2, 1)",
        });
    }
    let c = 1.0 / (1.0 - q0);
    let ln_c = c.ln();
    let a = (c - 1.0) * (ln_c / (c - 1.0)).exp_m1();
    let t1 = (c * ln_c / (c - 1.0)).exp() - c - 1.0;
    let r = (-(1.0 - q0).ln() / q0).exp();
    Ok(IgwConstants {
        q0,
        a,
        c,
        t1,
        horton_exponent: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::igw;

    #[test]
    fn binary_table() {
        let t = tokunaga_analytic(&OffspringDistribution::binary(), 8).unwrap();
        for (i, j) in t.t_side.pairs() {
            let want = 2f64.powi((j - i - 1) as i32);
            assert!((t.t_side.get(i, j) - want).abs() < 1e-9, "({i},{j})");
            assert!((t.t_regular.get(i, j) - want).abs() < 1e-9);
        }
        assert!(t.toeplitz_deviation() < 1e-9);
    }

    #[test]
    fn igw_matches_closed_forms() {
        for &q in &[0.6, 0.75, 0.9] {
            let k = igw_constants(q).unwrap();
            let t = tokunaga_analytic(&igw(q).unwrap(), 10).unwrap();
            for (i, j) in t.t_side.pairs() {
                let d = j - i;
                assert!((t.t_side.get(i, j) - k.tokunaga(d)).abs() < 1e-9 * k.tokunaga(d).max(1.0));
                let r = k.tokunaga_regular(d);
                assert!((t.t_regular.get(i, j) - r).abs() < 1e-9 * r);
            }
        }
    }

    #[test]
    fn constants_examples() {
        let k = igw_constants(0.5).unwrap();
        assert_eq!((k.c, k.a, k.horton_exponent), (2.0, 1.0, 4.0));
        assert!((k.t1 - 1.0).abs() < 1e-15);
        let k = igw_constants(0.75).unwrap();
        assert_eq!(k.c, 4.0);
        assert!((k.a - 1.76221).abs() < 1e-5);
        assert!((k.horton_exponent - 6.349604).abs() < 1e-6);
        assert!((k.horton_exponent - k.horton_exponent_from_c()).abs() < 1e-12);
        assert!(igw_constants(1.0).is_err());
    }

    #[test]
    fn exponent_paths_agree() {
        let seq = TokunagaSequence::self_similar(1.0, 1.0, 2.0, 1);
        assert!((horton_exponent(&seq).unwrap() - 4.0).abs() < 1e-10);
        for &q in &[0.6, 0.9] {
            let k = igw_constants(q).unwrap();
            let seq = TokunagaSequence::self_similar(k.t1, k.a, k.c, 6);
            let r = horton_exponent(&seq).unwrap();
            let closed = horton_exponent_self_similar(k.t1, k.a, k.c).unwrap();
            assert!((r - k.horton_exponent).abs() < 1e-10 * k.horton_exponent);
            assert!((closed - k.horton_exponent).abs() < 1e-10 * k.horton_exponent);
        }
    }

    #[test]
    fn negative_sequence_is_structural() {
        let seq = TokunagaSequence {
            terms: vec![-5.0],
            tail_ratio: None,
        };
        assert!(matches!(horton_exponent(&seq), Err(Error::Structural(_))));
    }

    #[test]
    fn binary_horton_numbers_at_four() {
        let t = tokunaga_analytic(&OffspringDistribution::binary(), 4).unwrap();
        let n = horton_numbers(&t);
        let want = [43.0, 11.0, 3.0, 1.0];
        for (a, b) in n.iter().zip(want) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
