//! Bisection for monotone functions of a probability variable.

use crate::error::{out_of_domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Monotone {
    Increasing,
    Decreasing,
}

const Y_LIMIT: f64 = 700.0;

/// Solves `f(t, 1 - t) = target` for t in (0, 1), bisecting in the logit
/// y = ln(t / (1 - t)) so that both ends are resolved to full relative
/// precision. Returns the pair (t, 1 - t).
pub(crate) fn bisect_logistic<F: Fn(f64, f64) -> f64>(f: F, target: f64, dir: Monotone) -> Result<(f64, f64)> {
    let at = |y: f64| (1.0 / (1.0 + (-y).exp()), 1.0 / (1.0 + y.exp()));
    let g = |y: f64| {
        let (t, s) = at(y);
        let v = f(t, s) - target;
        match dir {
            Monotone::Increasing => v,
            Monotone::Decreasing => -v,
        }
    };
    let (mut lo, mut hi) = (-Y_LIMIT, Y_LIMIT);
    if !(g(lo) <= 0.0 && g(hi) >= 0.0) {
        return Err(out_of_domain(target, "range of the monotone map"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(at(mid));
        }
        let v = g(mid);
        if v.is_nan() {
            return Err(Error::NoConvergence(format!("NaN during bisection at logit {mid}")));
        }
        if v == 0.0 {
            return Ok(at(mid));
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(0.5 * (lo + hi)))
}
