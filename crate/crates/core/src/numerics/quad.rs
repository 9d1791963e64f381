//! Composite Gauss–Legendre quadrature on graded panels.
//!
//! Every density in the crate is sampled through a [`GradedMap`]: a smooth
//! monotone change of variables `x = x(s)`, `s ∈ [0, 1]`, that clusters nodes
//! algebraically at both ends of the support (and sends `s → 1` to `+∞` for
//! half-line supports). Uniform panels in `s` then resolve endpoint
//! singularities of the form `|x - a|^β` and power tails.

use std::sync::OnceLock;

use crate::scalar::{c, Real};

/// Nodes per panel.
pub const PANEL_NODES: usize = 64;

fn legendre_f64(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn panel_rule_f64() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| legendre_f64(PANEL_NODES))
}

/// Gauss–Legendre rule with `n` nodes on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let (x, w) = if n == PANEL_NODES { panel_rule_f64().clone() } else { legendre_f64(n) };
    (x.into_iter().map(T::lit).collect(), w.into_iter().map(T::lit).collect())
}

/// Support shape handled by [`GradedMap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support<T> {
    /// `[lo, hi]`.
    Bounded { lo: T, hi: T },
    /// `[lo, ∞)` with `x = lo + scale · s^left / (1 - s)^right`.
    HalfLine { lo: T, scale: T },
}

/// Graded change of variables from `s ∈ [0, 1]` onto a support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradedMap<T> {
    pub support: Support<T>,
    /// Algebraic grading exponent at the left end.
    pub left: i32,
    /// Grading exponent at the right end (tail exponent for half-lines).
    pub right: i32,
}

impl<T: Real> GradedMap<T> {
    pub fn bounded(lo: T, hi: T, left: i32, right: i32) -> Self {
        GradedMap { support: Support::Bounded { lo, hi }, left, right }
    }

    pub fn half_line(lo: T, scale: T, left: i32, right: i32) -> Self {
        GradedMap { support: Support::HalfLine { lo, scale }, left, right }
    }

    /// Plain uniform panels on `[lo, hi]`.
    pub fn uniform(lo: T, hi: T) -> Self {
        Self::bounded(lo, hi, 1, 1)
    }

    /// Returns `(x(s), dx/ds)`.
    pub fn eval(&self, s: T) -> (T, T) {
        let one = T::one();
        let pl = T::from_i32(self.left).unwrap();
        let pr = T::from_i32(self.right).unwrap();
        let u = one - s;
        match self.support {
            Support::Bounded { lo, hi } => {
                let a = s.powi(self.left);
                let b = u.powi(self.right);
                let den = a + b;
                let len = hi - lo;
                let da = pl * s.powi(self.left - 1);
                let db = pr * u.powi(self.right - 1);
                let deriv = len * (da * b + a * db) / (den * den);
                let g = a / den;
                let x = if g < c(0.5) { lo + len * g } else { hi - len * (b / den) };
                (x, deriv)
            }
            Support::HalfLine { lo, scale } => {
                let a = s.powi(self.left);
                let b = u.powi(-self.right);
                let x = lo + scale * a * b;
                let deriv = scale * (pl * s.powi(self.left - 1) * b + pr * a * b / u);
                (x, deriv)
            }
        }
    }

    /// Quadrature nodes `(x, weight)` for `panels` uniform panels in `s`.
    /// Nodes that collapse onto an endpoint or escape to infinity are dropped.
    pub fn nodes(&self, panels: usize) -> Vec<(T, T)> {
        let (gx, gw) = gauss_legendre::<T>(PANEL_NODES);
        let h = T::one() / T::from_count(panels);
        let half = h * c(0.5);
        let mut out = Vec::with_capacity(panels * PANEL_NODES);
        for p in 0..panels {
            let mid = (T::from_count(p) + c(0.5)) * h;
            for (xi, wi) in gx.iter().zip(&gw) {
                let s = mid + half * *xi;
                let (x, dx) = self.eval(s);
                let w = *wi * half * dx;
                if x.is_finite() && w.is_finite() && w > T::zero() && !self.on_endpoint(x) {
                    out.push((x, w));
                }
            }
        }
        out
    }

    fn on_endpoint(&self, x: T) -> bool {
        match self.support {
            Support::Bounded { lo, hi } => x <= lo || x >= hi,
            Support::HalfLine { lo, .. } => x <= lo,
        }
    }
}

/// Integrates `f` against the nodes of `map` at a fixed panel count.
pub fn integrate_at<T: Real, F: Fn(T) -> T>(f: &F, map: &GradedMap<T>, panels: usize) -> T {
    map.nodes(panels).into_iter().map(|(x, w)| f(x) * w).sum()
}

/// Doubles the panel count from `start` until two successive estimates agree
/// to `rel_tol`. Returns the last estimate and whether it converged.
pub fn integrate_adaptive<T: Real, F: Fn(T) -> T>(
    f: &F,
    map: &GradedMap<T>,
    start: usize,
    max_panels: usize,
    rel_tol: T,
) -> (T, bool) {
    let mut panels = start.max(1);
    let mut prev = integrate_at(f, map, panels);
    while panels < max_panels {
        panels *= 2;
        let next = integrate_at(f, map, panels);
        if (next - prev).abs() <= rel_tol * next.abs() + T::min_positive_value() {
            return (next, true);
        }
        prev = next;
    }
    (prev, false)
}

/// Convenience wrapper for smooth integrands on a finite interval.
pub fn integrate_interval<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T) -> T {
    if a == b {
        return T::zero();
    }
    let (lo, hi, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };
    let map = GradedMap::bounded(lo, hi, 2, 2);
    sign * integrate_adaptive(&f, &map, 2, 1 << 12, c(1e-13)).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre::<f64>(PANEL_NODES);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m126: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(126)).sum();
        assert!((m126 - 2.0 / 127.0).abs() < 1e-14);
    }

    #[test]
    fn graded_map_handles_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let map = GradedMap::bounded(0.0f64, 1.0, 6, 2);
        let v = integrate_at(&|x: f64| x.powf(-0.5), &map, 16);
        assert!((v - 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn half_line_handles_cauchy_tail() {
        // ∫_0^∞ 2/(π(1+x²)) dx = 1
        let map = GradedMap::half_line(0.0f64, 1.0, 2, 4);
        let v = integrate_at(&|x: f64| 2.0 / (std::f64::consts::PI * (1.0 + x * x)), &map, 32);
        assert!((v - 1.0).abs() < 1e-13, "{v}");
    }

    #[test]
    fn interval_helper() {
        let v = integrate_interval(|x: f64| x.sin(), 0.0, std::f64::consts::PI);
        assert!((v - 2.0).abs() < 1e-13);
        assert!((integrate_interval(|x: f64| x, 1.0, 0.0) + 0.5).abs() < 1e-14);
    }
}
