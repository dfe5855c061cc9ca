//! Laws given by explicit coefficients `q_0..q_M`, optionally with a
//! certified bound on the omitted tail.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Deficits `1 - mean` below this are treated as exact criticality.
pub const CRITICAL_SNAP: f64 = 1e-12;

/// Certified bounds on the part of the law beyond the stored coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    /// Upper bound on `sum_{m > M} q_m`.
    pub mass: f64,
    /// Upper bound on `sum_{m > M} m q_m`.
    pub first_moment: f64,
}

/// Coefficient tables with precomputed auxiliary series.
///
/// With `x = 1 - u` the identities used are
/// `Q(x) - x = (1 - mu) u + u^2 g(x)` with `g(x) = sum_m a_m x^m`,
/// `a_m = sum_k (k - m - 1)_+ q_k`, and
/// `1 - Q'(x) = (1 - mu) + u sum_k b_k x^k` with `b_k = sum_{m >= k+2} m q_m`.
/// All series have nonnegative terms, so no cancellation occurs near `x = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientLaw {
    pub(crate) q: Vec<f64>,
    pub(crate) tail: Option<TailBound>,
    a: Vec<f64>,
    b: Vec<f64>,
    /// `c_k = (k + 1) sum_{m >= k+2} q_m = b_k - a_k`.
    c: Vec<f64>,
    pub(crate) mean: f64,
    pub(crate) deficit: f64,
}

impl CoefficientLaw {
    pub fn new(mut q: Vec<f64>, tail: Option<TailBound>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidDistribution("no coefficients".into()));
        }
        if let Some((k, v)) = q.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDistribution(format!("q_{k} = {v} is not a probability")));
        }
        if q.len() > 1 && q[1] != 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "q_1 = {} but laws with single-child vertices are excluded",
                q[1]
            )));
        }
        while q.len() > 1 && *q.last().unwrap() == 0.0 {
            q.pop();
        }
        let (tail_mass, tail_moment) = tail.map_or((0.0, 0.0), |t| (t.mass, t.first_moment));
        if tail_mass < 0.0 || tail_moment < 0.0 || !tail_mass.is_finite() || !tail_moment.is_finite() {
            return Err(Error::InvalidDistribution("tail bounds must be finite and nonnegative".into()));
        }
        let total: f64 = q.iter().sum();
        if total > 1.0 + 1e-12 || total < 1.0 - tail_mass - 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "coefficients sum to {total}, tail mass bound {tail_mass}"
            )));
        }
        let mean: f64 = q.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
        if mean > 1.0 + 1e-12 {
            return Err(Error::InvalidDistribution(format!("supercritical mean {mean}")));
        }
        if q[0] < 0.5 - 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "q_0 = {} < 1/2 is impossible for mean <= 1 and q_1 = 0",
                q[0]
            )));
        }
        // The tail bound counts as missing mean: a truncated critical law
        // stays critical.
        let mut deficit = (1.0 - mean - tail_moment).max(0.0);
        if deficit < CRITICAL_SNAP {
            deficit = 0.0;
        }
        let n = q.len();
        // suffix sums S0[j] = sum_{m>=j} q_m, S1[j] = sum_{m>=j} m q_m
        let mut s0 = vec![0.0; n + 2];
        let mut s1 = vec![0.0; n + 2];
        for m in (0..n).rev() {
            s0[m] = s0[m + 1] + q[m];
            s1[m] = s1[m + 1] + m as f64 * q[m];
        }
        let len = n.saturating_sub(2);
        let mut a = vec![0.0; len];
        for m in (0..len).rev() {
            a[m] = a.get(m + 1).copied().unwrap_or(0.0) + s0[m + 2];
        }
        let b = (0..len).map(|k| s1[k + 2]).collect();
        let c = (0..len).map(|k| (k + 1) as f64 * s0[k + 2]).collect();
        Ok(Self {
            q,
            tail,
            a,
            b,
            c,
            mean: mean.min(1.0),
            deficit,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.q
    }

    pub fn q0(&self) -> f64 {
        self.q[0]
    }

    pub(crate) fn qmz(&self, u: f64) -> f64 {
        self.deficit * u + u * u * horner(&self.a, 1.0 - u)
    }

    pub(crate) fn omq(&self, u: f64) -> f64 {
        self.deficit + u * horner(&self.b, 1.0 - u)
    }

    /// `1 - S(1-u) = u^2 sum_k c_k x^k / (1 - Q'(x))`.
    pub(crate) fn oms(&self, u: f64) -> f64 {
        u * u * horner(&self.c, 1.0 - u) / self.omq(u)
    }

    pub(crate) fn d2(&self, u: f64) -> f64 {
        let x = 1.0 - u;
        let mut acc = 0.0;
        for m in (2..self.q.len()).rev() {
            acc = acc * x + (m * (m - 1)) as f64 * self.q[m];
        }
        acc
    }

    /// `g(x) = sum_m a_m x^m`.
    pub(crate) fn g(&self, x: f64) -> f64 {
        horner(&self.a, x)
    }

    /// `s^k Q^(k)(x) / k!` for `k = 2..=kmax`, with `x = 1 - u`.
    pub(crate) fn taylor_high(&self, u: f64, s: f64, kmax: usize, out: &mut [f64]) {
        let x = 1.0 - u;
        for k in 2..=kmax {
            if k >= self.q.len() {
                out[k] = 0.0;
                continue;
            }
            // sum_{m>=k} C(m,k) x^(m-k) q_m by Horner in x with binomial weights
            let mut acc = 0.0;
            let mut binom = 1.0;
            let mut terms = Vec::with_capacity(self.q.len() - k);
            for m in k..self.q.len() {
                if m > k {
                    binom *= m as f64 / (m - k) as f64;
                }
                terms.push(binom * self.q[m]);
            }
            for t in terms.iter().rev() {
                acc = acc * x + t;
            }
            out[k] = acc * s.powi(k as i32);
        }
    }

    /// Bound on the omitted tail's contribution to `Q^(deriv)(z)`.
    pub(crate) fn tail_error(&self, z: f64, deriv: u8) -> f64 {
        let Some(t) = self.tail else { return 0.0 };
        match deriv {
            0 => t.mass,
            1 => t.first_moment,
            _ => {
                if z >= 1.0 {
                    return if t.first_moment > 0.0 { f64::INFINITY } else { 0.0 };
                }
                // sum_{m>M} m(m-1) q_m z^(m-2) <= first_moment * max_{m>M} (m-1) z^(m-2)
                let m0 = self.q.len() as f64;
                let peak = if z > 0.0 { 1.0 - 1.0 / z.ln() } else { 0.0 };
                let m = peak.max(m0);
                t.first_moment * (m - 1.0) * z.powf(m - 2.0)
            }
        }
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auxiliary_series_match_definitions() {
        let q = vec![0.6, 0.0, 0.3, 0.1];
        let law = CoefficientLaw::new(q.clone(), None).unwrap();
        for &x in &[0.0f64, 0.3, 0.9] {
            let u = 1.0 - x;
            let big_q: f64 = q.iter().enumerate().map(|(k, v)| v * x.powi(k as i32)).sum();
            let dq: f64 = (1..4).map(|k| k as f64 * q[k] * x.powi(k as i32 - 1)).sum();
            assert!((law.qmz(u) - (big_q - x)).abs() < 1e-15);
            assert!((law.omq(u) - (1.0 - dq)).abs() < 1e-15);
        }
        assert!((law.deficit - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(CoefficientLaw::new(vec![0.5, 0.1, 0.4], None).is_err());
        assert!(CoefficientLaw::new(vec![0.4, 0.0, 0.6], None).is_err());
        assert!(CoefficientLaw::new(vec![0.5, 0.0, 0.4], None).is_err());
        assert!(CoefficientLaw::new(vec![0.5, 0.0, -0.1, 0.6], None).is_err());
    }

    #[test]
    fn tail_bound_admits_missing_mass() {
        let tail = TailBound {
            mass: 0.01,
            first_moment: 0.05,
        };
        let law = CoefficientLaw::new(vec![0.6, 0.0, 0.39], Some(tail)).unwrap();
        assert_eq!(law.tail_error(0.5, 0), 0.01);
        assert!(law.tail_error(0.5, 2) > 0.0);
        assert!(CoefficientLaw::new(vec![0.6, 0.0, 0.38], Some(tail)).is_err());
    }
}
