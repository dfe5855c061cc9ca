//! Closed forms for the invariant Galton-Watson law `IGW(q)`,
//! `Q(z) = z + q (1 - z)^(1/q)`.

/// `IGW(q)` evaluations in the complement coordinate `u = 1 - z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Igw {
    pub q: f64,
}

impl Igw {
    fn alpha(&self) -> f64 {
        1.0 / self.q
    }

    pub fn qmz(&self, u: f64) -> f64 {
        self.q * u.powf(self.alpha())
    }

    pub fn omq(&self, u: f64) -> f64 {
        u.powf(self.alpha() - 1.0)
    }

    pub fn d2(&self, u: f64) -> f64 {
        let a = self.alpha();
        if a == 2.0 {
            return 1.0;
        }
        (a - 1.0) * u.powf(a - 2.0)
    }

    /// `q (1 - z)^(1/q - 2)`.
    pub fn g(&self, u: f64) -> f64 {
        self.q * u.powf(self.alpha() - 2.0)
    }

    /// `s^k Q^(k)(1 - u) / k!` for `k >= 2`: `q e_k u^a (s/u)^k` with
    /// `e_k = (-1)^k binom(a, k)`.
    pub fn taylor_high(&self, u: f64, s: f64, kmax: usize, out: &mut [f64]) {
        let a = self.alpha();
        let mut e = 1.0;
        for k in 1..=kmax {
            e *= (k as f64 - 1.0 - a) / k as f64;
            if k < 2 {
                continue;
            }
            out[k] = if e == 0.0 {
                0.0
            } else if u == 0.0 {
                self.q * e * 0f64.powf(a - k as f64) * s.powi(k as i32)
            } else {
                self.q * e * u.powf(a) * (s / u).powi(k as i32)
            };
        }
    }

    /// `q_0..=q_kmax` from `q_2 = (1 - q)/(2q)` and
    /// `q_{k+1}/q_k = (k - 1/q)/(k + 1)`.
    pub fn pmf(&self, kmax: usize) -> Vec<f64> {
        let mut p = vec![0.0; kmax + 1];
        p[0] = self.q;
        if kmax >= 2 {
            p[2] = (1.0 - self.q) / (2.0 * self.q);
            for k in 2..kmax {
                p[k + 1] = p[k] * (k as f64 - self.alpha()) / (k as f64 + 1.0);
            }
        }
        p
    }
}
