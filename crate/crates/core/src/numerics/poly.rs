//! Simultaneous polynomial root finding (Aberth–Ehrlich).

use crate::error::{Error, Result};
use crate::scalar::{c, Complex, Real};

/// Evaluates `Σ coeffs[j] z^j` and its derivative.
pub fn horner<T: Real>(coeffs: &[Complex<T>], z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut p = Complex::new(T::zero(), T::zero());
    let mut dp = p;
    for a in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + *a;
    }
    (p, dp)
}

/// All roots of the polynomial with ascending coefficients `coeffs`.
/// Trailing zero coefficients are stripped; the leading one must then be non-zero.
pub fn roots<T: Real>(coeffs: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1].norm() == T::zero() {
        n -= 1;
    }
    if n < 2 {
        return Ok(Vec::new());
    }
    let a = &coeffs[..n];
    let deg = n - 1;
    let lead = a[deg];
    // Cauchy bound on root moduli.
    let bound = T::one() + a[..deg].iter().map(|x| (*x / lead).norm()).fold(T::zero(), T::max);
    let r0 = bound * c(0.5);
    let z: Vec<Complex<T>> = (0..deg)
        .map(|j| {
            let ang = T::TAU() * T::from_count(j) / T::from_count(deg) + c(0.4);
            Complex::from_polar(r0, ang)
        })
        .collect();
    aberth(a, z)
}

/// Roots refined from the starting points `init`, one per root.
pub fn roots_from<T: Real>(coeffs: &[Complex<T>], init: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1].norm() == T::zero() {
        n -= 1;
    }
    if n < 2 {
        return Ok(Vec::new());
    }
    if init.len() != n - 1 {
        return roots(coeffs);
    }
    // Starting points on a common line (e.g. the real axis for real
    // coefficients) cannot leave it; tilt them, alternating direction, and
    // separate coincident ones.
    let mut z = init.to_vec();
    for (i, zi) in z.iter_mut().enumerate() {
        let tilt = if i % 2 == 0 { c::<T>(1e-7) } else { c::<T>(-1e-7) };
        *zi += Complex::new(T::zero(), tilt * (zi.norm() + T::min_positive_value()));
    }
    for i in 1..z.len() {
        for j in 0..i {
            if z[i] == z[j] {
                z[i] = z[i] * Complex::new(T::one(), c(1e-7)) + Complex::new(c(1e-12), T::zero());
            }
        }
    }
    aberth(&coeffs[..n], z)
}

fn aberth<T: Real>(a: &[Complex<T>], mut z: Vec<Complex<T>>) -> Result<Vec<Complex<T>>> {
    let deg = z.len();
    let tol = T::epsilon() * c(4.0);
    let mut loose = false;
    for _ in 0..500 {
        let mut done = true;
        loose = true;
        for i in 0..deg {
            let (p, dp) = horner(a, z[i]);
            // Below the rounding level of the evaluation the iterate cannot improve.
            let r = z[i].norm();
            let bound = a.iter().rev().fold(T::zero(), |acc, x| acc * r + x.norm());
            if p.norm() <= c::<T>(8.0) * T::epsilon() * bound {
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex::new(T::zero(), T::zero());
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    s += (z[i] - *zj).inv();
                }
            }
            let step = ratio / (Complex::new(T::one(), T::zero()) - ratio * s);
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            z[i] -= step;
            // Relative criterion so tiny roots are resolved to full precision.
            if step.norm() > tol * z[i].norm() {
                done = false;
            }
            if step.norm() > tol * (T::one() + z[i].norm()) {
                loose = false;
            }
        }
        if done {
            return Ok(z);
        }
    }
    if loose {
        return Ok(z);
    }
    Err(Error::convergence("Aberth iteration", 500))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn recovers_known_roots() {
        // (z-1)(z+2)(z-i) = z^3 + (1-i) z^2 + (-2-i) z + 2i
        let coeffs = [cx(0.0, 2.0), cx(-2.0, -1.0), cx(1.0, -1.0), cx(1.0, 0.0)];
        let mut r = roots(&coeffs).unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((r[0] - cx(-2.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - cx(0.0, 1.0)).norm() < 1e-12);
        assert!((r[2] - cx(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn tiny_roots_keep_relative_accuracy() {
        // v² + 1e-40 (1 - v)²: roots ≈ ±1e-20 i
        let x = 1e-40;
        let coeffs = [cx(x, 0.0), cx(-2.0 * x, 0.0), cx(1.0 + x, 0.0)];
        for r in roots(&coeffs).unwrap() {
            assert!((r.norm() - 1e-20).abs() < 1e-33, "{r}");
        }
    }

    #[test]
    fn residuals_vanish_for_wide_coefficients() {
        // (1+u)^3 + 1e6 u^2
        let coeffs = [cx(1.0, 0.0), cx(3.0, 0.0), cx(3.0 + 1e6, 0.0), cx(1.0, 0.0)];
        for z in roots(&coeffs).unwrap() {
            let (p, _) = horner(&coeffs, z);
            assert!(p.norm() < 1e-6 * (1.0 + z.norm().powi(3)), "{z} {p}");
        }
    }
}
