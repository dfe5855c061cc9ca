//! The critical law with `q_0 = 2/3`, `q_1 = 0` and
//! `q_k = (4/3) / (k (k^2 - 1))` for `k >= 2`.
//!
//! Its generating function satisfies `Q(x) - x = (1 - x)^2 g(x)` with
//! `g(x) = -(2/3) ln(1 - x) / x`, so it has an infinite second moment but
//! still `S'(1) = 1/2`.

/// `h(x) = -ln(1 - x)/x = sum_k x^k/(k+1)`, and the two related positive
/// series used below. `u = 1 - x` is passed separately for accuracy.
fn h(x: f64, u: f64) -> f64 {
    if x < 0.1 {
        series(x, |k| 1.0 / (k + 1) as f64)
    } else {
        -u.ln() / x
    }
}

/// `sum_k x^k (1/(k+1) + 1/(k+2))`.
fn hb(x: f64, u: f64) -> f64 {
    if x < 0.1 {
        series(x, |k| 1.0 / (k + 1) as f64 + 1.0 / (k + 2) as f64)
    } else {
        let l = -u.ln();
        l / x + (l - x) / (x * x)
    }
}

/// `sum_j x^j/(j+3)`.
fn hd(x: f64, u: f64) -> f64 {
    if x < 0.3 {
        series(x, |k| 1.0 / (k + 3) as f64)
    } else {
        (-u.ln() - x - 0.5 * x * x) / (x * x * x)
    }
}

fn series(x: f64, c: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut p = 1.0;
    for k in 0..60 {
        acc += c(k) * p;
        p *= x;
        if p < 1e-18 {
            break;
        }
    }
    acc
}

pub(crate) fn pmf_term(k: usize) -> f64 {
    match k {
        0 => 2.0 / 3.0,
        1 => 0.0,
        _ => {
            let k = k as f64;
            (4.0 / 3.0) / (k * (k * k - 1.0))
        }
    }
}

/// `P(X >= k) = (2/3) / (k (k - 1))` for `k >= 2`.
pub(crate) fn survival(k: u64) -> f64 {
    match k {
        0 => 1.0,
        1 | 2 => 1.0 / 3.0,
        _ => {
            let k = k as f64;
            (2.0 / 3.0) / (k * (k - 1.0))
        }
    }
}

pub(crate) fn qmz(u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    (2.0 / 3.0) * u * u * h(1.0 - u, u)
}

pub(crate) fn g(x: f64) -> f64 {
    (2.0 / 3.0) * h(x, 1.0 - x)
}

pub(crate) fn omq(u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    (2.0 / 3.0) * u * hb(1.0 - u, u)
}

pub(crate) fn d2(u: f64) -> f64 {
    if u == 0.0 {
        return f64::INFINITY;
    }
    (4.0 / 3.0) * hd(1.0 - u, u)
}

/// `s^k Q^(k)(x)/k!` for `k = 2..=kmax` at `x = 1 - u`.
pub(crate) fn taylor_high(u: f64, s: f64, kmax: usize, out: &mut [f64]) {
    let x0 = 1.0 - u;
    if kmax < 2 {
        return;
    }
    if u == 0.0 {
        for v in out.iter_mut().take(kmax + 1).skip(2) {
            *v = f64::INFINITY;
        }
        return;
    }
    if x0 <= 0.5 {
        // Direct coefficient sums converge geometrically.
        for k in 2..=kmax {
            let mut acc = 0.0;
            let mut w = 1.0; // binom(m, k) x0^(m-k)
            let mut m = k;
            loop {
                let t = w * pmf_term(m);
                acc += t;
                if m > k + 8 && t < 1e-18 * acc {
                    break;
                }
                w *= x0 * (m + 1) as f64 / (m + 1 - k) as f64;
                m += 1;
                if w == 0.0 {
                    break;
                }
            }
            out[k] = acc * s.powi(k as i32);
        }
        return;
    }
    // Q(x0 + s t) - x0 - s t = (2/3)(u^2/x0) (1 - r t)^2 (l - ln(1 - r t)) / (1 + p t)
    // with r = s/u, p = s/x0 and l = -ln u. The first factor has the positive
    // expansion f_0 = l, f_1 = 1 - 2l, f_2 = l - 3/2, f_k = 2/(k(k-1)(k-2)).
    let r = s / u;
    let p = s / x0;
    let l = -u.ln();
    let f = |k: usize| -> f64 {
        let c = match k {
            0 => l,
            1 => 1.0 - 2.0 * l,
            2 => l - 1.5,
            _ => {
                let k = k as f64;
                2.0 / (k * (k - 1.0) * (k - 2.0))
            }
        };
        c * r.powi(k as i32)
    };
    let scale = (2.0 / 3.0) * u * u / x0;
    for k in 2..=kmax {
        let mut acc = 0.0;
        let mut mp = 1.0;
        for j in 0..=k {
            acc += f(k - j) * mp;
            mp *= -p;
        }
        out[k] = scale * acc;
    }
}
