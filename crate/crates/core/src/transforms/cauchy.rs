use crate::error::{Error, Result};
use crate::measure::{LineMeasure, SymmetricMeasure};
use crate::scalar::{c, Complex, Real};

/// Measures on `ℝ` whose Cauchy transform can be evaluated in `ℂ⁺`.
pub trait CauchyTransform<T: Real>: Send + Sync {
    /// `G(z) = ∫ dμ(t)/(z − t)`, `Im z > 0`.
    fn cauchy(&self, z: Complex<T>) -> Complex<T>;

    /// Location of the atom when the measure is a point mass.
    fn point_mass(&self) -> Option<T>;

    /// `F = 1/G`.
    fn reciprocal(&self, z: Complex<T>) -> Complex<T> {
        self.cauchy(z).inv()
    }

    /// `𝖦(y) = −Im G(iy)`.
    fn g_imag(&self, y: T) -> T {
        -self.cauchy(Complex::new(T::zero(), y)).im
    }

    /// `(1 − y𝖦(y)) / 𝖦(y) = f(y) − y` for symmetric measures, where `F(iy) = i f(y)`.
    /// The default subtracts; measures override it to avoid cancellation.
    fn f_excess(&self, y: T) -> T {
        let g = self.g_imag(y);
        T::one() / g - y
    }
}

/// `(G(z), F(z))` with a domain check on `Im z`.
pub fn transform_gf<T: Real, M: CauchyTransform<T> + ?Sized>(mu: &M, z: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
    if !(z.im > T::zero()) {
        return Err(Error::domain(format!("Cauchy transform needs Im z > 0, got {z}")));
    }
    let g = mu.cauchy(z);
    Ok((g, g.inv()))
}

impl<T: Real> CauchyTransform<T> for SymmetricMeasure<T> {
    fn cauchy(&self, z: Complex<T>) -> Complex<T> {
        SymmetricMeasure::cauchy(self, z)
    }

    fn point_mass(&self) -> Option<T> {
        self.is_point_mass().then(T::zero)
    }

    fn g_imag(&self, y: T) -> T {
        SymmetricMeasure::g_imag(self, y)
    }

    fn f_excess(&self, y: T) -> T {
        let y2 = y * y;
        let k = self.half().integrate(|t| {
            let t2 = t * t;
            t2 / (y2 + t2)
        });
        k / SymmetricMeasure::g_imag(self, y)
    }
}

impl<T: Real> CauchyTransform<T> for LineMeasure<T> {
    fn cauchy(&self, z: Complex<T>) -> Complex<T> {
        LineMeasure::cauchy(self, z)
    }

    fn point_mass(&self) -> Option<T> {
        self.point_mass_location()
    }
}

/// Laws with closed-form Cauchy transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedLaw<T> {
    /// Centered semicircle of variance `t`.
    Semicircle(T),
    /// Symmetric Cauchy law of scale `t`.
    Cauchy(T),
    /// Arcsine law on `[−2, 2]`.
    Arcsine,
    /// `δ_a`.
    PointMass(T),
}

fn principal_product<T: Real>(z: Complex<T>, a: T) -> Complex<T> {
    // √(z − a)·√(z + a) with principal roots behaves like z at infinity in ℂ⁺.
    (z - a).sqrt() * (z + a).sqrt()
}

impl<T: Real> ClosedLaw<T> {
    pub fn density(&self, x: T) -> T {
        match *self {
            ClosedLaw::Semicircle(t) => {
                let r2 = c::<T>(4.0) * t - x * x;
                if r2 > T::zero() {
                    r2.sqrt() / (T::TAU() * t)
                } else {
                    T::zero()
                }
            }
            ClosedLaw::Cauchy(t) => t / (T::PI() * (t * t + x * x)),
            ClosedLaw::Arcsine => {
                let r2 = c::<T>(4.0) - x * x;
                if r2 > T::zero() {
                    T::one() / (T::PI() * r2.sqrt())
                } else {
                    T::zero()
                }
            }
            ClosedLaw::PointMass(_) => T::zero(),
        }
    }

    pub fn cdf(&self, x: T) -> T {
        let half: T = c(0.5);
        match *self {
            ClosedLaw::Semicircle(t) => {
                let r = c::<T>(2.0) * t.sqrt();
                let u = (x / r).max(-T::one()).min(T::one());
                half + (u * (T::one() - u * u).sqrt() + u.asin()) / T::PI()
            }
            ClosedLaw::Cauchy(t) => half + (x / t).atan() / T::PI(),
            ClosedLaw::Arcsine => {
                let u = (x * half).max(-T::one()).min(T::one());
                half + u.asin() / T::PI()
            }
            ClosedLaw::PointMass(a) => {
                if x >= a {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

impl<T: Real> CauchyTransform<T> for ClosedLaw<T> {
    fn cauchy(&self, z: Complex<T>) -> Complex<T> {
        match *self {
            ClosedLaw::Semicircle(t) => {
                let e = c::<T>(2.0) * t.sqrt();
                (z - principal_product(z, e)) / (t + t)
            }
            ClosedLaw::Cauchy(t) => (z + Complex::new(T::zero(), t)).inv(),
            ClosedLaw::Arcsine => principal_product(z, c(2.0)).inv(),
            ClosedLaw::PointMass(a) => (z - a).inv(),
        }
    }

    fn point_mass(&self) -> Option<T> {
        match *self {
            ClosedLaw::PointMass(a) => Some(a),
            _ => None,
        }
    }

    fn f_excess(&self, y: T) -> T {
        match *self {
            ClosedLaw::Semicircle(t) => {
                // f(y) = (y + √(y² + 4t))/2, so f − y = 2t/(y + √(y² + 4t)).
                (t + t) / (y + (y * y + c::<T>(4.0) * t).sqrt())
            }
            ClosedLaw::Cauchy(t) => t,
            ClosedLaw::Arcsine => c::<T>(4.0) / (y + (y * y + c::<T>(4.0)).sqrt()),
            ClosedLaw::PointMass(_) => {
                let g = self.g_imag(y);
                T::one() / g - y
            }
        }
    }
}
