//! Bracketed scalar root finding.

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

/// Stopping rule shared by the bracketing solvers.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub rel: T,
    pub abs: T,
    pub max_iter: usize,
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Tolerance { rel: c(1e-15), abs: T::min_positive_value(), max_iter: 200 }
    }
}

impl<T: Real> Tolerance<T> {
    pub fn rel(rel: T) -> Self {
        Tolerance { rel, ..Default::default() }
    }

    fn done(&self, lo: T, hi: T) -> bool {
        (hi - lo).abs() <= self.abs + self.rel * lo.abs().max(hi.abs())
    }
}

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs (zero allowed).
pub fn bisect<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, tol: Tolerance<T>) -> Result<T> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let fb = f(b);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || (fa > T::zero()) == (fb > T::zero()) {
        return Err(Error::domain(format!(
            "no sign change on bracket [{a}, {b}]: f = ({fa}, {fb})"
        )));
    }
    let half = c::<T>(0.5);
    for _ in 0..tol.max_iter.max(1) * 8 {
        let m = a + (b - a) * half;
        if tol.done(a, b) || m <= a || m >= b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == T::zero() {
            return Ok(m);
        }
        if (fm > T::zero()) == (fa > T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(a + (b - a) * half)
}

/// Safeguarded Newton iteration: Newton steps that stay inside the current
/// bracket are accepted, otherwise the bracket is bisected.
///
/// `f` returns the value and the derivative.
pub fn newton_bisect<T: Real, F: FnMut(T) -> (T, T)>(
    mut f: F,
    lo: T,
    hi: T,
    tol: Tolerance<T>,
) -> Result<T> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let (fa, _) = f(a);
    let (fb, _) = f(b);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || (fa > T::zero()) == (fb > T::zero()) {
        return Err(Error::domain(format!(
            "no sign change on bracket [{a}, {b}]: f = ({fa}, {fb})"
        )));
    }
    let increasing = fb > T::zero();
    let half = c::<T>(0.5);
    let mut x = a + (b - a) * half;
    let mut last_width = b - a;
    for _ in 0..tol.max_iter {
        let (fx, dfx) = f(x);
        if fx == T::zero() {
            return Ok(x);
        }
        if (fx > T::zero()) == increasing {
            b = x;
        } else {
            a = x;
        }
        if tol.done(a, b) {
            return Ok(x);
        }
        let newton = x - fx / dfx;
        let width = b - a;
        let candidate = if dfx.is_finite()
            && dfx != T::zero()
            && newton > a
            && newton < b
            && width < last_width * c(0.75)
        {
            newton
        } else {
            a + width * half
        };
        last_width = width;
        if (candidate - x).abs() <= tol.abs + tol.rel * x.abs() {
            return Ok(candidate);
        }
        x = candidate;
    }
    if tol.done(a, b) || (b - a) <= c::<T>(1e-10) * a.abs().max(b.abs()) {
        return Ok(x);
    }
    Err(Error::convergence("safeguarded Newton", tol.max_iter))
}

/// Grows `hi` geometrically from `start` until `pred(hi)` holds.
pub fn expand_up<T: Real, P: FnMut(T) -> bool>(start: T, factor: T, limit: T, mut pred: P) -> Option<T> {
    let mut x = start;
    while x <= limit {
        if pred(x) {
            return Some(x);
        }
        x *= factor;
    }
    None
}

/// Shrinks `lo` geometrically from `start` until `pred(lo)` holds.
pub fn expand_down<T: Real, P: FnMut(T) -> bool>(start: T, factor: T, floor: T, mut pred: P) -> Option<T> {
    let mut x = start;
    while x >= floor {
        if pred(x) {
            return Some(x);
        }
        x /= factor;
    }
    None
}
