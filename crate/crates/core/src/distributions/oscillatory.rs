//! Lattice-sum laws
//! `q_m = (1/(m! A)) sum_{n in Z} B^n rho^(nm) e^(-rho^n)` for `m >= 2`,
//! with `q_1 = 0` and `q_0` fixed, `rho = 1 - q_0`.
//!
//! Every sum over `n` is split at a cutoff `n0`. Terms with `n >= n0` are
//! added explicitly in log space until they are negligible. For `n < n0`
//! the exponentials have underflowed, the summand is a polynomial in
//! `rho^n`, and the geometric tail is summed in closed form. A fixed
//! symmetric window would be far too short: the tail ratio `1/(B rho)` can
//! be close to 1.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// Safety cap on explicit terms for evaluations of an already validated
/// law.
const EVAL_CAP: i64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryLaw {
    pub q0: f64,
    pub a: f64,
    pub b: f64,
}

/// `phi(y) = 1 - (1 - e^-y)/y`, accurate for small `y`.
fn phi(y: f64) -> f64 {
    if y < 1e-3 {
        y * (0.5 - y * (1.0 / 6.0 - y * (1.0 / 24.0 - y / 120.0)))
    } else {
        (y + (-y).exp_m1()) / y
    }
}

/// `e^x - 1 - x`.
fn em(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        0.5 * x * x * (1.0 + x * (1.0 / 3.0 + x * (1.0 / 12.0 + x / 60.0)))
    } else {
        x.exp_m1() - x
    }
}

/// `1 - rho y - (1 + y - rho y) e^-y`, the constraint summand.
fn constraint_term(rho: f64, y: f64) -> f64 {
    if y < 0.1 {
        // sum_{k>=2} (-1)^k (k-1) y^k/k!  -  rho sum_{k>=1} (-1)^(k+1) y^(k+1)/k!
        let mut acc = 0.0;
        let mut yk = y; // y^k / k!
        for k in 1..30 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k >= 2 {
                acc += sign * (k - 1) as f64 * yk;
            }
            acc += sign * rho * yk * y;
            yk *= y / (k + 1) as f64;
            if k >= 2 && yk <= 1e-18 * acc.abs() {
                break;
            }
        }
        acc
    } else {
        1.0 - rho * y - (1.0 + y - rho * y) * (-y).exp()
    }
}

/// `sum_{n < n0} x^n` for `x > 1`.
fn geometric_below(ln_x: f64, n0: i64) -> f64 {
    (n0 as f64 * ln_x).exp() / ln_x.exp_m1()
}

struct Lattice {
    ln_b: f64,
    ln_rho: f64,
}

impl Lattice {
    /// Smallest `n` with `rho^n <= y`.
    fn n_for(&self, y: f64) -> i64 {
        (y.ln() / self.ln_rho).ceil() as i64
    }

    /// `sum_{n >= n0} term(n)`; `term` gets `n` and `ln rho^n`. Stops once
    /// `rho^n < 1` and three successive terms are negligible.
    fn sum_from(&self, n0: i64, cap: i64, mut term: impl FnMut(i64, f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        let mut quiet = 0;
        let mut n = n0;
        loop {
            let ln_y = n as f64 * self.ln_rho;
            let t = term(n, ln_y);
            acc += t;
            if ln_y < 0.0 && t.abs() <= 1e-19 * acc.abs() {
                quiet += 1;
                if quiet >= 3 {
                    return Ok(acc);
                }
            } else {
                quiet = 0;
            }
            n += 1;
            if n - n0 > cap {
                return Err(Error::Truncation(format!(
                    "lattice sum not converged after {cap} terms; enlarge the term budget"
                )));
            }
        }
    }
}

impl OscillatoryLaw {
    pub fn rho(&self) -> f64 {
        1.0 - self.q0
    }

    fn lattice(&self) -> Lattice {
        lattice(self.rho(), self.b)
    }

    fn eval(&self, n0: i64, term: impl FnMut(i64, f64) -> f64) -> f64 {
        self.lattice()
            .sum_from(n0, EVAL_CAP, term)
            .expect("validated lattice law")
    }

    /// `Q(1-u) - (1-u) = (u/A) sum_n B^n rho^n phi(u rho^n)`.
    pub(crate) fn qmz(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let l = self.lattice();
        let n0 = l.n_for(40.0 / u);
        let ln_u = u.ln();
        let head = self.eval(n0, |n, ln_y| {
            let yu = (ln_u + ln_y).exp();
            (n as f64 * (l.ln_b + l.ln_rho) + phi(yu).ln()).exp()
        });
        // phi(y) = 1 - 1/y there
        let tail = geometric_below(l.ln_b + l.ln_rho, n0) - geometric_below(l.ln_b, n0) / u;
        u * (head + tail) / self.a
    }

    /// `1 - Q'(1-u) = (1/A) sum_n B^n rho^n (1 - e^(-u rho^n))`.
    pub(crate) fn omq(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let l = self.lattice();
        let n0 = l.n_for(40.0 / u);
        let ln_u = u.ln();
        let head = self.eval(n0, |n, ln_y| {
            let yu = (ln_u + ln_y).exp();
            (n as f64 * (l.ln_b + l.ln_rho) + (-(-yu).exp_m1()).ln()).exp()
        });
        (head + geometric_below(l.ln_b + l.ln_rho, n0)) / self.a
    }

    /// `Q''(1-u) = (1/A) sum_n B^n rho^(2n) e^(-u rho^n)`.
    pub(crate) fn d2(&self, u: f64) -> f64 {
        if u == 0.0 {
            return f64::INFINITY;
        }
        let l = self.lattice();
        let n0 = l.n_for(800.0 / u);
        let ln_u = u.ln();
        self.eval(n0, |n, ln_y| {
            let yu = (ln_u + ln_y).exp();
            (n as f64 * l.ln_b + 2.0 * ln_y - yu).exp()
        }) / self.a
    }

    /// `s^k Q^(k)(1-u)/k! = (1/(A k!)) sum_n B^n (s rho^n)^k e^(-u rho^n)`.
    pub(crate) fn taylor_high(&self, u: f64, s: f64, kmax: usize, out: &mut [f64]) {
        let l = self.lattice();
        for k in 2..=kmax {
            if u == 0.0 {
                out[k] = f64::INFINITY;
                continue;
            }
            let kf = k as f64;
            let n0 = l.n_for((800.0 + 3.0 * kf) / u);
            let ln_u = u.ln();
            let ln_s = s.ln();
            let lg = ln_gamma(kf + 1.0);
            out[k] = self.eval(n0, |n, ln_y| {
                let yu = (ln_u + ln_y).exp();
                (n as f64 * l.ln_b + kf * (ln_s + ln_y) - yu - lg).exp()
            }) / self.a;
        }
    }

    /// `Q(z)` from the defining series, without using the normalization
    /// constraint or the definition of `A`.
    pub(crate) fn q_direct(&self, z: f64) -> f64 {
        let u = 1.0 - z;
        let l = self.lattice();
        let n0 = if u > 0.0 { l.n_for(800.0 / u) } else { l.n_for(40.0) };
        let head = self.eval(n0, |n, ln_y| {
            let y = ln_y.exp();
            let v = if y <= 1.0 {
                (-y).exp() * em(z * y)
            } else {
                (-u * y).exp() - (-y).exp() * (1.0 + z * y)
            };
            if v <= 0.0 {
                0.0
            } else {
                (n as f64 * l.ln_b + v.ln()).exp()
            }
        });
        let tail = if u > 0.0 { 0.0 } else { geometric_below(l.ln_b, n0) };
        self.q0 + (head + tail) / self.a
    }

    /// `Q'(z)` from the defining series.
    pub(crate) fn dq_direct(&self, z: f64) -> f64 {
        let u = 1.0 - z;
        let l = self.lattice();
        let n0 = if u > 0.0 { l.n_for(800.0 / u) } else { l.n_for(40.0) };
        let head = self.eval(n0, |n, ln_y| {
            let y = ln_y.exp();
            let v = if y <= 1.0 {
                (-y).exp() * (z * y).exp_m1()
            } else {
                (-u * y).exp() - (-y).exp()
            };
            if v <= 0.0 {
                0.0
            } else {
                (n as f64 * l.ln_b + ln_y + v.ln()).exp()
            }
        });
        let tail = if u > 0.0 {
            0.0
        } else {
            geometric_below(l.ln_b + l.ln_rho, n0)
        };
        (head + tail) / self.a
    }

    /// `max(|Q(1) - 1|, |Q'(1) - 1|)` from the defining series.
    pub fn criticality_error(&self) -> f64 {
        (self.q_direct(1.0) - 1.0)
            .abs()
            .max((self.dq_direct(1.0) - 1.0).abs())
    }
}

fn lattice(rho: f64, b: f64) -> Lattice {
    Lattice {
        ln_b: b.ln(),
        ln_rho: rho.ln(),
    }
}

/// `sum_n B^n (1 - rho^(n+1) - (1 + rho^n - rho^(n+1)) e^(-rho^n))`, whose
/// zero in `B` makes the lattice law a probability distribution.
pub fn normalization_constraint(rho: f64, b: f64, max_terms: i64) -> Result<f64> {
    let l = lattice(rho, b);
    let n0 = l.n_for(40.0);
    let head = l.sum_from(n0, max_terms, |n, ln_y| {
        let c = constraint_term(rho, ln_y.exp());
        if c == 0.0 {
            0.0
        } else {
            c.signum() * (n as f64 * l.ln_b + c.abs().ln()).exp()
        }
    })?;
    let tail = geometric_below(l.ln_b, n0) - rho * geometric_below(l.ln_b + l.ln_rho, n0);
    Ok(head + tail)
}

/// `A = sum_n B^n rho^n (1 - e^(-rho^n))`, which makes the law critical.
pub fn criticality_constant(rho: f64, b: f64, max_terms: i64) -> Result<f64> {
    let l = lattice(rho, b);
    let n0 = l.n_for(40.0);
    let head = l.sum_from(n0, max_terms, |n, ln_y| {
        let y = ln_y.exp();
        (n as f64 * (l.ln_b + l.ln_rho) + (-(-y).exp_m1()).ln()).exp()
    })?;
    Ok(head + geometric_below(l.ln_b + l.ln_rho, n0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_argument_helpers() {
        for &y in &[1e-8, 1e-4, 1e-3, 0.05, 0.5, 3.0] {
            // alternating series y/2! - y^2/3! + ...
            let mut exact_phi = 0.0;
            let mut t = 1.0;
            for k in 1..60 {
                t *= y / (k + 1) as f64;
                exact_phi += if k % 2 == 1 { t } else { -t };
            }
            assert!((phi(y) - exact_phi).abs() < 1e-12 * exact_phi, "y = {y}");
            let c = constraint_term(0.3, y);
            let direct = 1.0 - 0.3 * y - (1.0 + y - 0.3 * y) * (-y as f64).exp();
            assert!((c - direct).abs() < 1e-12, "y = {y}: {c} vs {direct}");
        }
    }

    #[test]
    fn constraint_term_keeps_leading_order() {
        for &y in &[1e-20, 1e-40, 1e-150] {
            let want = y * y * (0.5 - 0.3);
            assert!((constraint_term(0.3, y) - want).abs() < 1e-12 * want, "y = {y}");
        }
    }

    #[test]
    fn geometric_tail_closed_form() {
        let ln_x = 1.5f64.ln();
        let brute: f64 = (-400..-3).map(|n| 1.5f64.powi(n)).sum();
        assert!((geometric_below(ln_x, -3) - brute).abs() < 1e-14);
    }
}
