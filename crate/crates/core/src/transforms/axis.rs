use crate::error::{Error, Result};
use crate::measure::{PositiveMeasure, SymmetricMeasure};
use crate::numerics::roots::{bisect, expand_down, Tolerance};
use crate::scalar::{c, Real};

use super::{CauchyTransform, ClosedLaw};

/// Voiculescu transform of a symmetric law restricted to the imaginary axis:
/// `φ(iv) = i·φ̂(v)` and `𝖱(y) = Im R(iy) = −φ̂(1/y)`.
pub trait VoiculescuAxis<T: Real> {
    fn phi_hat(&self, v: T) -> Result<T>;

    fn r_imag(&self, y: T) -> Result<T> {
        if !(y > T::zero()) {
            return Err(Error::domain(format!("R on the imaginary axis needs y > 0, got {y}")));
        }
        Ok(-self.phi_hat(T::one() / y)?)
    }
}

/// `𝖦(y) = y ∫ dμ(t)/(y² + t)` for the law `μ = μ_{|A|²}`, which equals
/// `−Im G(iy)` of the symmetrized law of `|A|`.
pub fn g_imag_modulus<T: Real>(mu_abs_sq: &PositiveMeasure<T>, y: T) -> Result<T> {
    if !(y > T::zero()) {
        return Err(Error::domain(format!("imaginary-axis Cauchy transform needs y > 0, got {y}")));
    }
    let y2 = y * y;
    Ok(mu_abs_sq.integrate(|t| y / (y2 + t)))
}

/// `φ̂(v)` for a symmetric law by inverting `f(y) = 1/𝖦(y)` on `(0, v]`.
pub fn phi_imag_axis<T: Real, M: CauchyTransform<T> + ?Sized>(mu: &M, v: T) -> Result<T> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(Error::domain(format!("phi on the imaginary axis needs v > 0, got {v}")));
    }
    // y + (f(y) − y) − v avoids the mass-rounding bias of 1/𝖦(y) at large y.
    let h = |y: T| y + mu.f_excess(y) - v;
    // f(y) ≥ y, so v itself bounds the solution from above.
    let floor = v * c(1e-200);
    let lo = expand_down(v * c(0.5), c(8.0), floor, |y| h(y) <= T::zero())
        .ok_or_else(|| Error::domain(format!("v = {v} lies below the range of F on the imaginary axis")))?;
    let hi = v;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let tol = Tolerance { rel: c(1e-15), abs: c(1e-15), max_iter: 200 };
    let l = bisect(|l: T| h(if l >= lhi { hi } else { l.exp() }), llo, lhi, tol)
        .map_err(|_| Error::convergence("imaginary-axis inversion of F", 200))?;
    Ok(-mu.f_excess(if l >= lhi { hi } else { l.exp() }))
}

/// `𝖱(y)` through any imaginary-axis Voiculescu transform.
pub fn r_imag<T: Real, V: VoiculescuAxis<T> + ?Sized>(law: &V, y: T) -> Result<T> {
    law.r_imag(y)
}

impl<T: Real> VoiculescuAxis<T> for SymmetricMeasure<T> {
    fn phi_hat(&self, v: T) -> Result<T> {
        phi_imag_axis(self, v)
    }
}

impl<T: Real> VoiculescuAxis<T> for ClosedLaw<T> {
    fn phi_hat(&self, v: T) -> Result<T> {
        if !(v > T::zero()) {
            return Err(Error::domain(format!("phi on the imaginary axis needs v > 0, got {v}")));
        }
        match *self {
            ClosedLaw::Semicircle(t) => Ok(-t / v),
            ClosedLaw::Cauchy(t) => Ok(-t),
            ClosedLaw::PointMass(a) if a == T::zero() => Ok(T::zero()),
            _ => phi_imag_axis(self, v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{marchenko_pastur, quarter_circle, PositiveMeasure};

    #[test]
    fn semicircle_phi_numerical() {
        let sc = quarter_circle::<f64>().symmetrize();
        let p = sc.phi_hat(2.0).unwrap();
        assert!((p + 0.5).abs() < 1e-10, "{p}");
        for &v in &[1.5, 3.0, 10.0, 100.0] {
            assert!((sc.phi_hat(v).unwrap() + 1.0 / v).abs() < 1e-9 / v);
        }
        assert!((sc.r_imag(0.5).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn bernoulli_phi_by_hand() {
        let b = SymmetricMeasure::bernoulli(1.0f64).unwrap();
        assert!((b.phi_hat(2.0).unwrap() + 1.0).abs() < 1e-13);
        // f(y) = (y² + 1)/y has minimum 2 at y = 1; range starts there.
        assert!(matches!(b.phi_hat(1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_law_generic_inversion_matches() {
        let p = phi_imag_axis(&ClosedLaw::Cauchy(1.0f64), 3.0).unwrap();
        assert!((p + 1.0).abs() < 1e-13);
        let p = phi_imag_axis(&ClosedLaw::Semicircle(2.0f64), 5.0).unwrap();
        assert!((p + 0.4).abs() < 1e-13);
    }

    #[test]
    fn g_imag_modulus_routes_agree() {
        let mp = marchenko_pastur::<f64>();
        let sym = mp.sqrt_pushforward().symmetrize();
        for &y in &[0.05, 1.0, 7.0] {
            let a = g_imag_modulus(&mp, y).unwrap();
            let b = -sym.cauchy(crate::Complex::new(0.0, y)).im;
            assert!((a - b).abs() < 1e-10, "{y}");
        }
        let d = PositiveMeasure::point_mass(1.0).unwrap();
        assert_eq!(g_imag_modulus(&d, 1.0).unwrap(), 0.5);
        assert!(g_imag_modulus(&d, 0.0).is_err());
        let mut prev = f64::INFINITY;
        for &y in &[10.0, 100.0, 1000.0] {
            let g = g_imag_modulus(&mp, y).unwrap();
            assert!(g < prev);
            prev = g;
        }
        assert!((100.0 * g_imag_modulus(&mp, 100.0).unwrap() - 1.0).abs() < 1e-3);
    }
}
