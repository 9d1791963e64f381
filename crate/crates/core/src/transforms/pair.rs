use crate::error::{Error, Result};
use crate::measure::{PositiveMeasure, SymmetricMeasure};
use crate::numerics::quad::GradedMap;
use crate::scalar::{c, Complex, Real};

use super::VoiculescuAxis;

/// Free generating pair `(γ, σ)`: `φ(z) = γ + ∫ (1 + sz)/(z − s) dσ(s)`.
///
/// `σ` is symmetric and stored as `mass · σ₁` with `σ₁` a probability
/// measure; `mass = 0` is the zero measure.
#[derive(Debug, Clone)]
pub struct GeneratingPair<T: Real> {
    pub gamma: T,
    pub mass: T,
    pub sigma: Option<SymmetricMeasure<T>>,
}

/// `(1 + s²)/(z² − s²)`, evaluated without forming `s²` when `|s|` is large.
fn kernel<T: Real>(z: Complex<T>, s: T) -> Complex<T> {
    if s.abs() > z.norm().max(T::one()) {
        let r = T::one() / s;
        (Complex::new(r * r + T::one(), T::zero())) / ((z * r) * (z * r) - T::one())
    } else {
        Complex::new(T::one() + s * s, T::zero()) / (z * z - s * s)
    }
}

/// `(1 + s²)/(v² + s²)` for real `v`, overflow-safe.
fn axis_kernel<T: Real>(v: T, s: T) -> T {
    let s = s.abs();
    if s > v.max(T::one()) {
        let r = T::one() / s;
        let q = v * r;
        (r * r + T::one()) / (q * q + T::one())
    } else if v > T::one() {
        let r = T::one() / v;
        let q = s * r;
        (r * r + q * q) / (T::one() + q * q)
    } else {
        (T::one() + s * s) / (v * v + s * s)
    }
}

impl<T: Real> GeneratingPair<T> {
    pub fn new(gamma: T, mass: T, sigma: SymmetricMeasure<T>) -> Result<Self> {
        if !(mass >= T::zero()) || !mass.is_finite() {
            return Err(Error::domain("generating measure needs finite non-negative mass"));
        }
        Ok(GeneratingPair { gamma, mass, sigma: Some(sigma) })
    }

    pub fn zero() -> Self {
        GeneratingPair { gamma: T::zero(), mass: T::zero(), sigma: None }
    }

    pub fn constant(gamma: T) -> Self {
        GeneratingPair { gamma, mass: T::zero(), sigma: None }
    }

    /// `(0, t·δ₀)`: semicircle of variance `t`.
    pub fn semicircle(t: T) -> Self {
        let d0 = SymmetricMeasure::bernoulli(T::zero()).expect("delta at zero");
        GeneratingPair { gamma: T::zero(), mass: t, sigma: Some(d0) }
    }

    /// `(0, t·(standard Cauchy law))`: symmetric Cauchy law of scale `t`.
    pub fn cauchy(t: T) -> Self {
        let half = PositiveMeasure::from_density(
            |s: T| c::<T>(2.0) / (T::PI() * (T::one() + s * s)),
            GradedMap::half_line(T::zero(), T::one(), 1, 1),
        )
        .expect("half-Cauchy density has unit mass");
        GeneratingPair { gamma: T::zero(), mass: t, sigma: Some(half.symmetrize()) }
    }

    /// `(tγ, tσ)`, the pair of the `t`-th convolution power.
    pub fn scaled(&self, t: T) -> Self {
        GeneratingPair { gamma: self.gamma * t, mass: self.mass * t, sigma: self.sigma.clone() }
    }

    pub fn is_symmetric(&self) -> bool {
        self.gamma == T::zero()
    }

    /// `φ(z)` for `Im z > 0`.
    pub fn phi(&self, z: Complex<T>) -> Result<Complex<T>> {
        if !(z.im > T::zero()) {
            return Err(Error::domain(format!("phi needs Im z > 0, got {z}")));
        }
        let mut s = Complex::new(self.gamma, T::zero());
        if let Some(sigma) = self.sigma.as_ref().filter(|_| self.mass > T::zero()) {
            let h = sigma.half();
            let mut acc = z.inv() * h.atom0();
            for &(x, m) in h.atoms() {
                acc += z * kernel(z, x) * m;
            }
            for n in h.nodes() {
                acc += z * kernel(z, n.x) * n.mass();
            }
            s += acc * self.mass;
        }
        Ok(s)
    }

    /// `∫ g dσ` over the full (unnormalized) generating measure.
    pub fn integrate_sigma<F: Fn(T) -> T>(&self, g: F) -> T {
        match &self.sigma {
            Some(sigma) if self.mass > T::zero() => self.mass * sigma.integrate(g),
            _ => T::zero(),
        }
    }
}

impl<T: Real> VoiculescuAxis<T> for GeneratingPair<T> {
    fn phi_hat(&self, v: T) -> Result<T> {
        if !(v > T::zero()) {
            return Err(Error::domain(format!("phi on the imaginary axis needs v > 0, got {v}")));
        }
        if self.gamma != T::zero() {
            return Err(Error::domain("imaginary-axis phi needs a symmetric pair (gamma = 0)"));
        }
        let sigma = match &self.sigma {
            Some(s) if self.mass > T::zero() => s,
            _ => return Ok(T::zero()),
        };
        let h = sigma.half();
        let mut acc = h.atom0() / v;
        for &(x, m) in h.atoms() {
            acc += v * m * axis_kernel(v, x);
        }
        for n in h.nodes() {
            acc += v * n.mass() * axis_kernel(v, n.x);
        }
        Ok(-self.mass * acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn simple_pairs() {
        let z = Complex::new(0.4, 1.3);
        let sc = GeneratingPair::semicircle(1.0f64);
        assert!((sc.phi(z).unwrap() - z.inv()).norm() < 1e-15);
        assert_eq!(GeneratingPair::constant(3.0f64).phi(z).unwrap(), Complex::new(3.0, 0.0));
        assert!(sc.phi(Complex::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn cauchy_pair_is_constant() {
        let p = GeneratingPair::cauchy(1.0f64);
        let v = p.phi(Complex::new(0.0, 2.0)).unwrap();
        assert!((v - Complex::new(0.0, -1.0)).norm() < 1e-8, "{v}");
        assert!((p.phi_hat(2.0).unwrap() + 1.0).abs() < 1e-8);
        assert!((GeneratingPair::cauchy(2.5f64).r_imag(0.7).unwrap() - 2.5).abs() < 1e-8);
    }

    #[test]
    fn huge_atoms_do_not_overflow() {
        let atoms: Vec<(f64, f64)> = (1..=9).map(|n| ((2f64.powi(n)).exp(), 2f64.powi(-n))).collect();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let half = PositiveMeasure::from_atoms(atoms.iter().map(|&(x, m)| (x, m / total))).unwrap();
        let p = GeneratingPair::new(0.0, total, half.symmetrize()).unwrap();
        let v = p.phi_hat(1e100).unwrap();
        assert!(v.is_finite() && v < 0.0);
        let z = p.phi(Complex::new(1.0, 1e3)).unwrap();
        assert!(z.re.is_finite() && z.im.is_finite());
    }

    proptest! {
        #[test]
        fn nevanlinna(x in -10.0f64..10.0, y in 0.01f64..10.0) {
            let z = Complex::new(x, y);
            for p in [GeneratingPair::semicircle(0.7), GeneratingPair::cauchy(1.2)] {
                prop_assert!(p.phi(z).unwrap().im <= 1e-10);
            }
        }

        #[test]
        fn axis_matches_full_plane(v in 0.1f64..50.0) {
            for p in [GeneratingPair::semicircle(0.7), GeneratingPair::cauchy(1.2)] {
                let full = p.phi(Complex::new(0.0, v)).unwrap();
                let axis = p.phi_hat(v).unwrap();
                prop_assert!(full.re.abs() < 1e-12);
                prop_assert!((full.im - axis).abs() < 1e-8 * (1.0 + axis.abs()));
            }
        }
    }
}
