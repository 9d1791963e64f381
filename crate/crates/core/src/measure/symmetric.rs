use crate::error::Result;
use crate::scalar::{Complex, Real};

use super::{ExtendedReal, PositiveMeasure};

/// Symmetric probability measure on `ℝ`, stored as the law of `|X|`.
///
/// The mass at `0` is kept whole; every other atom and every density node of
/// `half` is split evenly between `x` and `−x`.
#[derive(Debug, Clone)]
pub struct SymmetricMeasure<T: Real> {
    half: PositiveMeasure<T>,
}

impl<T: Real> SymmetricMeasure<T> {
    pub fn from_half(half: PositiveMeasure<T>) -> Self {
        SymmetricMeasure { half }
    }

    /// `½δ_a + ½δ_{−a}`, which is `δ₀` for `a = 0`.
    pub fn bernoulli(a: T) -> Result<Self> {
        Ok(Self::from_half(PositiveMeasure::point_mass(a.abs())?))
    }

    pub fn half(&self) -> &PositiveMeasure<T> {
        &self.half
    }

    pub fn into_half(self) -> PositiveMeasure<T> {
        self.half
    }

    pub fn total_mass(&self) -> T {
        self.half.total_mass()
    }

    pub fn atom0(&self) -> T {
        self.half.atom0()
    }

    pub fn is_point_mass(&self) -> bool {
        self.half.point_mass_location() == Some(T::zero())
    }

    /// `∫ g dμ̃`; odd parts cancel pairwise by construction.
    pub fn integrate<F: Fn(T) -> T>(&self, g: F) -> T {
        let half: T = T::one() / (T::one() + T::one());
        let mut s = self.half.atom0() * g(T::zero());
        for &(x, m) in self.half.atoms() {
            s += m * half * (g(x) + g(-x));
        }
        for n in self.half.nodes() {
            s += n.mass() * half * (g(n.x) + g(-n.x));
        }
        s
    }

    /// `∫ |x|^p dμ̃`.
    pub fn abs_moment(&self, p: T) -> ExtendedReal<T> {
        self.half.moment_p(p)
    }

    /// `μ̃((−∞, x])`.
    pub fn cdf(&self, x: T) -> T {
        let half: T = T::one() / (T::one() + T::one());
        if x >= T::zero() {
            let above = T::one() - self.half.cdf(x);
            T::one() - half * above
        } else {
            let below = T::one() - self.half.cdf((-x).prev_down());
            half * below
        }
    }

    /// `G(z) = ∫ dμ̃(t)/(z − t) = ∫ z/(z² − t²) d|μ|(t)`.
    pub fn cauchy(&self, z: Complex<T>) -> Complex<T> {
        let z2 = z * z;
        let mut s = Complex::new(self.half.atom0(), T::zero()) / z;
        for &(x, m) in self.half.atoms() {
            s += z * m / (z2 - x * x);
        }
        for n in self.half.nodes() {
            s += z * n.mass() / (z2 - n.x * n.x);
        }
        s
    }

    /// `𝖦(y) = −Im G(iy) = y ∫ d|μ|(t)/(y² + t²)`.
    pub fn g_imag(&self, y: T) -> T {
        let y2 = y * y;
        self.half.integrate(|t| y / (y2 + t * t))
    }

    /// Mirror-symmetric node list `(x, mass)` in ascending order, atoms included.
    pub fn signed_masses(&self) -> Vec<(T, T)> {
        let half: T = T::one() / (T::one() + T::one());
        let mut pos: Vec<(T, T)> = self.half.atoms().iter().map(|&(x, m)| (x, m * half)).collect();
        pos.extend(self.half.nodes().iter().map(|n| (n.x, n.mass() * half)));
        pos.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut out: Vec<(T, T)> = pos.iter().rev().map(|&(x, m)| (-x, m)).collect();
        if self.half.atom0() > T::zero() {
            out.push((T::zero(), self.half.atom0()));
        }
        out.extend(pos);
        out
    }

    pub fn to_json(&self) -> String {
        self.half.to_json()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(Self::from_half(PositiveMeasure::from_json(s)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::quarter_circle;

    #[test]
    fn bernoulli_basics() {
        let b = SymmetricMeasure::bernoulli(1.0f64).unwrap();
        assert_eq!(b.cdf(-1.5), 0.0);
        assert_eq!(b.cdf(-1.0), 0.5);
        assert_eq!(b.cdf(0.0), 0.5);
        assert_eq!(b.cdf(1.0), 1.0);
        let g = b.cauchy(Complex::new(0.0, 1.0));
        assert!((g - Complex::new(0.0, -0.5)).norm() < 1e-16);
        let d0 = SymmetricMeasure::bernoulli(0.0f64).unwrap();
        assert!(d0.is_point_mass());
        assert_eq!(d0.cdf(-1e-300), 0.0);
        assert_eq!(d0.cdf(0.0), 1.0);
    }

    #[test]
    fn odd_integrands_vanish() {
        let sc = quarter_circle::<f64>().symmetrize();
        assert_eq!(sc.integrate(|x| x * x * x + x.sin()), 0.0);
        assert!((sc.integrate(|x| x * x) - 1.0).abs() < 1e-12);
    }
}
