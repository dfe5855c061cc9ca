//! Bracketed scalar root finding: bisection with secant acceleration.

use crate::{Error, Result};

/// Stopping rule for [`find_root`].
#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    /// Relative bracket width at which to stop.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Finds a zero of `f` in `[lo, hi]`, which must bracket a sign change.
///
/// Each step tries the secant point of the current bracket and falls back
/// to bisection whenever the secant point lands near an end or the bracket
/// failed to halve on the previous step.
pub fn find_root(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, opts: RootOptions) -> Result<f64> {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (mut fa, mut fb) = (f(a), f(b));
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::Numerical(format!("NaN at bracket [{a}, {b}]")));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Structural(format!(
            "no sign change on [{a}, {b}]: f = {fa:e}, {fb:e}"
        )));
    }
    let mut last_width = b - a;
    for _ in 0..opts.max_iter {
        let width = b - a;
        let mid = 0.5 * (a + b);
        if width <= opts.tol * mid.abs().max(f64::MIN_POSITIVE) || mid <= a || mid >= b {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
        let secant = b - fb * (b - a) / (fb - fa);
        let guard = 0.01 * width;
        let halved = width <= 0.5 * last_width;
        let x = if halved && secant > a + guard && secant < b - guard {
            secant
        } else {
            mid
        };
        last_width = width;
        let fx = f(x);
        if fx.is_nan() {
            return Err(Error::Numerical(format!("NaN at x = {x}")));
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Err(Error::Numerical(format!(
        "root not converged after {} iterations on [{a}, {b}]",
        opts.max_iter
    )))
}

/// Subintervals of an even grid on `[lo, hi]` across which `f` changes sign.
pub fn sign_changes(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    xs.windows(2)
        .zip(fs.windows(2))
        .filter(|(_, w)| w[0].is_finite() && w[1].is_finite() && (w[0] == 0.0 || w[0].signum() != w[1].signum()))
        .map(|(x, _)| (x[0], x[1]))
        .collect()
}
