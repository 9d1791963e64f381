//! The family `X_{m,k} = c₁⋯c_m (c_{m+1}⋯c_{m+k})⁻¹` of products of free
//! circular elements and inverses, through `S(u) = (−u)^k/(1+u)^m` of
//! `μ_{|X_{m,k}|²}`.

use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::measure::{DensityChart, DensityFn, PositiveMeasure, DEFAULT_PANELS};
use crate::numerics::poly::roots_from;
use crate::numerics::quad::GradedMap;
use crate::numerics::roots::{bisect, Tolerance};
use crate::scalar::{c, Complex, Real};

/// Largest `m + k` for which the density of `μ_{|X_{m,k}|²}` is materialized.
pub const MAX_MATERIALIZED: u32 = 6;

/// `(−u)^k / (1+u)^m` on `−1 < u < 0`.
pub fn s_transform_xmk<T: Real>(m: u32, k: u32, u: T) -> Result<T> {
    if !(u > -T::one() && u < T::zero()) {
        return Err(Error::domain(format!("S-transform of X_{{m,k}} needs -1 < u < 0, got {u}")));
    }
    Ok((-u).powi(k as i32) / (T::one() + u).powi(m as i32))
}

/// Unique `F ∈ (0, 1)` with `a·log F − b·log(1 − F) = target`.
fn power_balance<T: Real>(a: u32, b: u32, target: T) -> T {
    let (a_t, b_t) = (T::from_u32(a).unwrap(), T::from_u32(b).unwrap());
    if b == 0 {
        return (target / a_t).exp().min(T::one());
    }
    let g = |f: T| a_t * f.ln() - b_t * (-f).ln_1p() - target;
    let tol = Tolerance { rel: c(1e-17), abs: T::zero(), max_iter: 400 };
    let (lo, hi) = (T::min_positive_value(), T::one().prev_down());
    if g(lo) >= T::zero() {
        return T::zero();
    }
    if g(hi) <= T::zero() {
        return T::one();
    }
    bisect(g, lo, hi, tol).expect("bracketed monotone balance")
}

/// Brown-measure mass of the disc of radius `r`: the `F` with `r² = F^m/(1−F)^k`.
pub fn radial_cdf_xmk<T: Real>(m: u32, k: u32, r: T) -> T {
    if !(r > T::zero()) {
        return T::zero();
    }
    power_balance(m, k, c::<T>(2.0) * r.ln())
}

/// The `w ∈ (0, 1)` with `s² = w^{k+1}/(1−w)^{m+1}`.
pub fn w_of_s<T: Real>(m: u32, k: u32, s: T) -> T {
    w_of_log_s(m, k, s.ln())
}

/// [`w_of_s`] parametrized by `log s`, usable far beyond the float range of `s`.
pub fn w_of_log_s<T: Real>(m: u32, k: u32, log_s: T) -> T {
    power_balance(k + 1, m + 1, log_s + log_s)
}

fn threshold(k: u32) -> f64 {
    2.0 / (k as f64 + 1.0)
}

fn check_p(k: u32, p: f64) -> Result<()> {
    let thr = threshold(k);
    if !(p > 0.0 && p < thr) {
        return Err(Error::ThresholdExceeded { p, threshold: thr });
    }
    Ok(())
}

fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// `τ(|X_{m,k}|^p)` for `0 < p < 2/(k+1)` by the Beta-function identity.
pub fn lp_moment_xmk(m: u32, k: u32, p: f64) -> Result<f64> {
    check_p(k, p)?;
    let (mf, kf) = (m as f64 + 1.0, k as f64 + 1.0);
    let pre = 2.0 / std::f64::consts::PI * (std::f64::consts::FRAC_PI_2 * p).sin();
    let b1 = beta(1.0 - kf * p / 2.0, 1.0 + mf * p / 2.0);
    let b2 = beta(2.0 - kf * p / 2.0, mf * p / 2.0);
    Ok(pre * (kf / 2.0 * b1 + mf / 2.0 * b2))
}

/// Same quantity by direct quadrature of `(2/π) sin(πp/2) ∫₀^∞ s^{−p−1} w(s) ds`,
/// written as `∫_ℝ e^{−px} w(eˣ) dx` and summed with the trapezoidal rule.
pub fn lp_moment_xmk_quadrature(m: u32, k: u32, p: f64, step: f64) -> Result<f64> {
    check_p(k, p)?;
    let decay_left = threshold(k) - p;
    let (xl, xr) = (-45.0 / decay_left, 45.0 / p);
    let n = ((xr - xl) / step).ceil() as usize;
    let h = (xr - xl) / n as f64;
    let mut sum = 0.0;
    for i in 0..=n {
        let x = xl + h * i as f64;
        let wt = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += wt * (-p * x).exp() * w_of_log_s::<f64>(m, k, x);
    }
    Ok(2.0 / std::f64::consts::PI * (std::f64::consts::FRAC_PI_2 * p).sin() * sum * h)
}

/// Right edge `(m+1)^{m+1}/m^m` of the support of `μ_{|X_{m,0}|²}`.
pub fn support_edge(m: u32) -> f64 {
    let mf = m as f64;
    (mf + 1.0).powf(mf + 1.0) / mf.powf(mf)
}

fn binomial(n: u32, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients (ascending) of `(1+u)^{m+1} + x(−u)^{k+1}` in `u`, or, with
/// `shifted`, of `v^{m+1} + x(1−v)^{k+1}` in `v = 1 + u`.
fn coefficients<T: Real>(m: u32, k: u32, x: T, shifted: bool) -> Vec<Complex<T>> {
    let deg = m.max(k) as usize + 1;
    let mut a = vec![Complex::new(T::zero(), T::zero()); deg + 1];
    if shifted {
        a[m as usize + 1].re += T::one();
        for j in 0..=k + 1 {
            let sign = if j % 2 == 0 { T::one() } else { -T::one() };
            a[j as usize].re += x * sign * T::lit(binomial(k + 1, j));
        }
    } else {
        for j in 0..=m + 1 {
            a[j as usize].re += T::lit(binomial(m + 1, j));
        }
        let sign = if (k + 1).is_multiple_of(2) { T::one() } else { -T::one() };
        a[k as usize + 1].re += x * sign;
    }
    a
}

/// Tracks the branch `u(x)` of `(1+u)^{m+1} + x(−u)^{k+1} = 0` that yields
/// `G(x + i0) = (1 + u)/x`, continuing in `x` from a point where the branch is
/// unambiguous.
struct BranchTracker<T: Real> {
    m: u32,
    k: u32,
    x: T,
    /// All roots in `u`; `cur` indexes the tracked one.
    roots: Vec<Complex<T>>,
    cur: usize,
}

const LOG_STEP: f64 = 0.005;

impl<T: Real> BranchTracker<T> {
    fn start(m: u32, k: u32, x_max: T) -> Result<Self> {
        let x = if k == 0 {
            x_max.max(c(2.0 * support_edge(m)))
        } else {
            x_max.max(c(1e12))
        };
        let roots = crate::numerics::poly::roots(&coefficients(m, k, x, false))?;
        let cur = if k == 0 {
            // Beyond the support: the real root closest to 0.
            (0..roots.len())
                .min_by(|&i, &j| {
                    let score = |z: Complex<T>| z.norm() + z.im.abs() * c(1e6);
                    score(roots[i]).partial_cmp(&score(roots[j])).unwrap()
                })
                .unwrap()
        } else {
            // Inside the heavy tail: the root near 0 with Im u < 0 and smallest |arg(−u)|.
            (0..roots.len())
                .filter(|&i| roots[i].im < T::zero() && roots[i].norm() < c(0.5))
                .min_by(|&i, &j| (-roots[i]).arg().abs().partial_cmp(&(-roots[j]).arg().abs()).unwrap())
                .ok_or_else(|| Error::convergence("X_mk branch start", 0))?
        };
        Ok(BranchTracker { m, k, x, roots, cur })
    }

    fn step_to(&mut self, x: T) -> Result<()> {
        let prev = self.roots[self.cur];
        let shifted = (prev + T::one()).norm() < prev.norm();
        let init: Vec<Complex<T>> =
            self.roots.iter().map(|&z| if shifted { z + T::one() } else { z }).collect();
        let mut found = roots_from(&coefficients(self.m, self.k, x, shifted), &init)?;
        if shifted {
            for z in &mut found {
                *z -= T::one();
            }
        }
        let cur = (0..found.len())
            .min_by(|&i, &j| (found[i] - prev).norm().partial_cmp(&(found[j] - prev).norm()).unwrap())
            .unwrap();
        if found[cur].im > T::zero() {
            found[cur] = found[cur].conj();
        }
        self.roots = found;
        self.cur = cur;
        self.x = x;
        Ok(())
    }

    /// Walks down to `x` in logarithmic steps and returns the density there.
    fn density_at(&mut self, x: T) -> Result<T> {
        let step: T = c(LOG_STEP);
        while (self.x / x).ln() > step {
            let next = self.x * (-step).exp();
            self.step_to(next)?;
        }
        self.step_to(x)?;
        let u = self.roots[self.cur];
        Ok((-u.im).max(T::zero()) / (T::PI() * x))
    }
}

/// Batch density of `μ_{|X_{m,k}|²}` by root continuation.
pub fn xmk_density<T: Real>(m: u32, k: u32) -> DensityFn<T> {
    Arc::new(move |xs: &[T]| {
        let mut out = vec![T::zero(); xs.len()];
        let Some(&x_max) = xs.last() else { return out };
        let mut tracker = BranchTracker::start(m, k, x_max).expect("continuation start");
        for i in (0..xs.len()).rev() {
            out[i] = if xs[i] > T::zero() {
                tracker.density_at(xs[i]).unwrap_or_else(|_| T::nan())
            } else {
                T::zero()
            };
        }
        out
    })
}

/// Graded chart adapted to `μ_{|X_{m,k}|²}`: `x^{−m/(m+1)}` at the origin,
/// a square-root edge (`k = 0`) or an `x^{−1−1/(k+1)}` tail (`k ≥ 1`).
pub fn xmk_map<T: Real>(m: u32, k: u32) -> GradedMap<T> {
    let left = 2 * (m as i32 + 1);
    if k == 0 {
        GradedMap::bounded(T::zero(), c(support_edge(m)), left, 2)
    } else {
        GradedMap::half_line(T::zero(), T::one(), left, 2 * (k as i32 + 1))
    }
}

/// Materialized `μ_{|X_{m,k}|²}` for `m + k ≤` [`MAX_MATERIALIZED`].
pub fn xmk_modulus_sq_law<T: Real>(m: u32, k: u32) -> Result<PositiveMeasure<T>> {
    if m == 0 {
        return Err(Error::domain("X_{m,k} needs m >= 1"));
    }
    if m + k > MAX_MATERIALIZED {
        return Err(Error::Unsupported(format!(
            "density of X_{{{m},{k}}} is materialized only for m + k <= {MAX_MATERIALIZED}"
        )));
    }
    let chart = DensityChart::new(xmk_map(m, k), xmk_density(m, k));
    PositiveMeasure::with_density([], chart, DEFAULT_PANELS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::marchenko_pastur;
    use crate::transforms::s_transform;
    use proptest::prelude::*;

    #[test]
    fn s_values() {
        assert_eq!(s_transform_xmk(1, 0, -0.5f64).unwrap(), 2.0);
        assert_eq!(s_transform_xmk(1, 1, -0.5f64).unwrap(), 1.0);
        assert_eq!(s_transform_xmk(2, 3, -0.5f64).unwrap(), 0.5);
        assert!(s_transform_xmk(1, 1, 0.0f64).is_err());
    }

    #[test]
    fn radial_values() {
        assert!((radial_cdf_xmk(1, 0, 0.5f64) - 0.25).abs() < 1e-15);
        assert!((radial_cdf_xmk(1, 1, 1.0f64) - 0.5).abs() < 1e-15);
        assert!((radial_cdf_xmk(2, 1, 1.0f64) - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        assert_eq!(radial_cdf_xmk(1, 0, 1.5f64), 1.0);
    }

    #[test]
    fn w_values() {
        assert!((w_of_s(1, 1, 1.0f64) - 0.5).abs() < 1e-15);
        assert!((w_of_s(1, 0, 1.0f64) - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!(w_of_s(2, 3, 1e-3f64) < w_of_s(2, 3, 1e-2f64));
    }

    #[test]
    fn lp_values() {
        assert!((lp_moment_xmk(1, 1, 0.5).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(lp_moment_xmk(1, 1, 1.0), Err(Error::ThresholdExceeded { .. })));
        assert!(matches!(lp_moment_xmk(1, 1, 0.0), Err(Error::ThresholdExceeded { .. })));
        // quarter-circle law of |c|: τ|c| = 8/(3π)
        assert!((lp_moment_xmk(1, 0, 1.0).unwrap() - 8.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-12);
        let q = lp_moment_xmk_quadrature(1, 1, 0.5, 1.0 / 64.0).unwrap();
        assert!((q - 2f64.sqrt()).abs() < 1e-10, "{q}");
    }

    #[test]
    fn materialized_laws_have_unit_mass_and_right_s() {
        for m in 1..=MAX_MATERIALIZED {
            for k in 0..=(MAX_MATERIALIZED - m) {
                let mu = match xmk_modulus_sq_law::<f64>(m, k) {
                    Ok(mu) => mu,
                    Err(e) => panic!("({m},{k}): {e}"),
                };
                assert!((mu.total_mass() - 1.0).abs() < 1e-10, "({m},{k})");
                for &u in &[-0.8, -0.5, -0.2] {
                    let s = s_transform(&mu, u).unwrap();
                    let exact = s_transform_xmk(m, k, u).unwrap();
                    assert!((s - exact).abs() < 1e-8 * exact, "({m},{k}) u={u}: {s} vs {exact}");
                }
            }
        }
        assert!(matches!(xmk_modulus_sq_law::<f64>(3, 4), Err(Error::Unsupported(_))));
    }

    #[test]
    fn x10_is_marchenko_pastur() {
        let a = xmk_modulus_sq_law::<f64>(1, 0).unwrap();
        let b = marchenko_pastur::<f64>();
        for x in [0.01, 0.5, 2.0, 3.9] {
            assert!((a.cdf(x) - b.cdf(x)).abs() < 1e-10, "{x}");
        }
    }

    proptest! {
        #[test]
        fn product_law(m1 in 1u32..4, k1 in 0u32..4, m2 in 1u32..4, k2 in 0u32..4, u in -0.999f64..-0.001) {
            let lhs = s_transform_xmk(m1 + m2, k1 + k2, u).unwrap();
            let rhs = s_transform_xmk(m1, k1, u).unwrap() * s_transform_xmk(m2, k2, u).unwrap();
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * lhs);
        }

        #[test]
        fn radial_round_trip(m in 1u32..4, k in 0u32..4, f in 0.001f64..0.999) {
            let r = (f.powi(m as i32) / (1.0 - f).powi(k as i32)).sqrt();
            prop_assert!((radial_cdf_xmk(m, k, r) - f).abs() < 1e-12);
        }

        #[test]
        fn radial_monotone(m in 1u32..4, k in 0u32..4, r in 0.01f64..10.0) {
            prop_assert!(radial_cdf_xmk(m, k, r) <= radial_cdf_xmk(m, k, r * 1.01));
        }
    }
}
