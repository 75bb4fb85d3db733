//! Bracketed bisection for monotone scalar equations.

use crate::error::{Error, Result};

/// Iteration cap shared by every bisection in the crate.
pub const MAX_ITER: usize = 200;

/// Stopping tolerance on the bracket width.
#[derive(Debug, Clone, Copy)]
pub enum Tolerance {
    Absolute(f64),
    Relative(f64),
}

impl Tolerance {
    fn done(self, lo: f64, hi: f64) -> bool {
        match self {
            Tolerance::Absolute(tol) => hi - lo <= tol,
            Tolerance::Relative(tol) => hi - lo <= tol * hi.abs().max(lo.abs()),
        }
    }
}

/// Solves `f(x) = target` for nondecreasing `f` on `[lo, hi]`, assuming
/// `f(lo) <= target <= f(hi)`. Returns the midpoint of the final bracket.
pub fn bisect_increasing<F>(mut f: F, target: f64, mut lo: f64, mut hi: f64, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(lo <= hi) {
        return Err(Error::Numerical(format!("empty bracket [{lo}, {hi}]")));
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if tol.done(lo, hi) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let v = f(mid);
        if v.is_nan() {
            return Err(Error::Numerical(format!("function is NaN at {mid}")));
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
