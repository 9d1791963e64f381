use crate::error::{Error, Result};
use crate::measure::{ExtendedReal, PositiveMeasure};
use crate::numerics::divergence::{GROWTH_RATIO, GROWTH_STEPS};
use crate::numerics::roots::{bisect, Tolerance};
use crate::scalar::{c, Real};

/// `S`-transform data of a law `μ` on `[0, ∞)` (typically `μ_{|X|²}`).
pub trait STransform<T: Real> {
    /// `μ({0})`.
    fn atom0(&self) -> T;

    /// `S(u)` for `μ({0}) − 1 < u < 0`.
    fn s(&self, u: T) -> Result<T>;

    /// `∫ x dμ`, i.e. `𝔪₂` of the operator.
    fn m2(&self) -> ExtendedReal<T>;

    /// `∫ x⁻¹ dμ`, i.e. `𝔪₋₂` of the operator.
    fn m_neg2(&self) -> ExtendedReal<T>;

    /// `1 + u` where `S(u) = target`; `target` must lie strictly between
    /// `1/𝔪₂` and `𝔪₋₂`.
    fn one_plus_s_inverse(&self, target: T) -> Result<T>;
}

fn check_u<T: Real>(atom0: T, u: T) -> Result<()> {
    if !(u < T::zero() && u > atom0 - T::one()) {
        return Err(Error::domain(format!("S-transform argument u = {u} outside ({}, 0)", atom0 - T::one())));
    }
    Ok(())
}

/// `(a(τ), b(τ)) = (∫ τx/(1+τx) dμ, ∫ 1/(1+τx) dμ)`; `ψ(−τ) = −a` and `a + b = 1`.
fn ab<T: Real>(mu: &PositiveMeasure<T>, tau: T) -> (T, T) {
    let mut a = T::zero();
    let mut b = mu.atom0();
    for &(x, m) in mu.atoms() {
        let d = T::one() + tau * x;
        a += m * (tau * x) / d;
        b += m / d;
    }
    for n in mu.nodes() {
        let d = T::one() + tau * n.x;
        let m = n.mass();
        a += m * (tau * n.x) / d;
        b += m / d;
    }
    (a, b)
}

/// Root in `ℓ = log τ` of an increasing function, bracket grown from `ℓ = 0`.
fn solve_log_tau<T: Real>(mut h: impl FnMut(T) -> T) -> Result<T> {
    let limit: T = c(700.0);
    let mut lo = -T::one();
    while h(lo) > T::zero() {
        lo = lo + lo;
        if lo < -limit {
            return Err(Error::domain("S-transform argument outside the attainable range"));
        }
    }
    let mut hi = T::one();
    while h(hi) < T::zero() {
        hi = hi + hi;
        if hi > limit {
            return Err(Error::domain("S-transform argument outside the attainable range"));
        }
    }
    let tol = Tolerance { rel: c(1e-16), abs: c(1e-15), max_iter: 200 };
    bisect(h, lo, hi, tol)
}

impl<T: Real> STransform<T> for PositiveMeasure<T> {
    fn atom0(&self) -> T {
        PositiveMeasure::atom0(self)
    }

    fn s(&self, u: T) -> Result<T> {
        s_transform(self, u)
    }

    fn m2(&self) -> ExtendedReal<T> {
        self.moment_p(T::one())
    }

    fn m_neg2(&self) -> ExtendedReal<T> {
        self.moment_p(-T::one())
    }

    fn one_plus_s_inverse(&self, target: T) -> Result<T> {
        if self.point_mass_location().is_some() {
            return Err(Error::DegenerateMeasure("S-transform of a point mass is constant".into()));
        }
        if !(target > T::zero()) {
            return Err(Error::domain("S-transform values are positive"));
        }
        // S(τ) = τ b(τ)/a(τ) increases with τ.
        let lt = target.ln();
        let l = solve_log_tau(|l: T| {
            let tau = l.exp();
            let (a, b) = ab(self, tau);
            l + b.ln() - a.ln() - lt
        })?;
        Ok(ab(self, l.exp()).1)
    }
}

/// `S_μ(u) = ((1+u)/u)·χ_μ(u)`, computed as `τ(1+u)/(−u)` with `a(τ) = −u`.
pub fn s_transform<T: Real>(mu: &PositiveMeasure<T>, u: T) -> Result<T> {
    if mu.point_mass_location() == Some(T::zero()) {
        return Err(Error::DegenerateMeasure("S-transform of delta at 0 is undefined".into()));
    }
    check_u(mu.atom0(), u)?;
    let one_plus = T::one() + u;
    let l = if -u <= c(0.5) {
        let target = (-u).ln();
        solve_log_tau(|l: T| ab(mu, l.exp()).0.ln() - target)?
    } else {
        let target = one_plus.ln();
        solve_log_tau(|l: T| target - ab(mu, l.exp()).1.ln())?
    };
    Ok(l.exp() * one_plus / -u)
}

/// `lim_{u → −1} S_μ(u)` from `u = −1 + 2^{−j}`, `j = 4..=20`, with linear
/// extrapolation in `1 + u` when the sequence settles.
pub fn s_limit_at_minus_one<T: Real, S: STransform<T> + ?Sized>(law: &S) -> Result<ExtendedReal<T>> {
    if law.atom0() > T::zero() {
        return Err(Error::domain("S-transform limit at -1 requires no atom at 0"));
    }
    let mut vals = Vec::with_capacity(17);
    let mut growth = 0;
    let ratio: T = c(GROWTH_RATIO);
    for j in 4..=20 {
        let u = -T::one() + c::<T>(2f64.powi(-j));
        let v = law.s(u)?;
        if let Some(&prev) = vals.last() {
            if v >= ratio * prev {
                growth += 1;
                if growth >= GROWTH_STEPS && j == 20 {
                    return Ok(ExtendedReal::PosInfinity);
                }
            } else {
                growth = 0;
            }
        }
        vals.push(v);
    }
    if growth >= GROWTH_STEPS {
        return Ok(ExtendedReal::PosInfinity);
    }
    let n = vals.len();
    Ok(ExtendedReal::Finite(vals[n - 1] + vals[n - 1] - vals[n - 2]))
}
