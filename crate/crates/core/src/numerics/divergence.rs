//! Finite-limit versus divergence decisions for monotone refinement sequences.

use crate::measure::ExtendedReal;
use crate::scalar::{c, Real};

/// Growth factor counted as a divergent step.
pub const GROWTH_RATIO: f64 = 1.01;
/// Consecutive growth steps that certify divergence.
pub const GROWTH_STEPS: usize = 3;

/// Classifies the sequence `estimate(0), estimate(1), ...` of non-negative
/// refinements. Divergent once [`GROWTH_STEPS`] successive ratios are at
/// least [`GROWTH_RATIO`]; finite once two successive values agree to `rel_tol`.
/// Running out of levels yields the last value as finite.
pub fn classify<T: Real>(mut estimate: impl FnMut(usize) -> T, max_levels: usize, rel_tol: T) -> ExtendedReal<T> {
    let ratio: T = c(GROWTH_RATIO);
    let mut prev = estimate(0);
    if prev.is_infinite() {
        return ExtendedReal::PosInfinity;
    }
    let mut growth = 0;
    for level in 1..max_levels.max(2) {
        let next = estimate(level);
        if next.is_infinite() {
            return ExtendedReal::PosInfinity;
        }
        if (next - prev).abs() <= rel_tol * next.abs() {
            return ExtendedReal::Finite(next);
        }
        if prev > T::zero() && next >= ratio * prev {
            growth += 1;
            if growth >= GROWTH_STEPS {
                return ExtendedReal::PosInfinity;
            }
        } else {
            growth = 0;
        }
        prev = next;
    }
    ExtendedReal::Finite(prev)
}
