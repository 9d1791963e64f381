//! Free additive convolution through the subordination functions.
//!
//! For laws `μ₁`, `μ₂` on `ℝ`, neither a point mass, there are analytic
//! self-maps `ω₁`, `ω₂` of `ℂ⁺` with
//! `F_{μ₁⊞μ₂} = F₁∘ω₁ = F₂∘ω₂` and `ω₁ + ω₂ = z + F_{μ₁⊞μ₂}`.
//! `ω₁(z)` is the attracting fixed point of `w ↦ h₂(h₁(w) + z) + z` with
//! `h_j = F_j − id`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{LineMeasure, Node};
use crate::numerics::roots::{bisect, expand_up, Tolerance};
use crate::scalar::{c, Complex, Real};
use crate::transforms::{CauchyTransform, GeneratingPair};

/// Iteration cap of the fixed-point solver.
pub const MAX_ITER: usize = 100_000;
/// Relative step size at which the fixed-point iteration stops.
pub const STEP_TOL: f64 = 1e-12;
/// Largest mass defect that [`convolve_density`] silently renormalizes.
pub const DENSITY_MASS_TOL: f64 = 1e-3;

/// Subordination data at one point `z ∈ ℂ⁺`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinationPoint<T> {
    pub z: Complex<T>,
    pub omega1: Complex<T>,
    pub omega2: Complex<T>,
    /// `F_{μ₁⊞μ₂}(z)`.
    pub f_value: Complex<T>,
    /// `|F₁(ω₁) − F₂(ω₂)|`.
    pub residual_f: T,
    /// `|F + z − ω₁ − ω₂|`.
    pub residual_sum: T,
}

impl<T: Real> SubordinationPoint<T> {
    /// `G_{μ₁⊞μ₂}(z)`.
    pub fn g_value(&self) -> Complex<T> {
        self.f_value.inv()
    }
}

fn check_upper<T: Real>(z: Complex<T>) -> Result<()> {
    if z.im > T::zero() && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("subordination needs Im z > 0, got {z}")))
    }
}

/// Solves for `ω₁(z)`, `ω₂(z)` and `F_{μ₁⊞μ₂}(z)`.
///
/// Picard steps are interleaved with Newton steps on `T(w) − w` (derivative by
/// a real finite difference, since `T` is analytic); a Newton step is kept only
/// if it stays in `ℂ⁺` and lowers `|T(w) − w|`. Since the fixed point in `ℂ⁺`
/// is unique, the accelerated iteration has the same limit as the plain one.
pub fn subordinate<T, A, B>(mu1: &A, mu2: &B, z: Complex<T>) -> Result<SubordinationPoint<T>>
where
    T: Real,
    A: CauchyTransform<T> + ?Sized,
    B: CauchyTransform<T> + ?Sized,
{
    check_upper(z)?;
    if mu1.point_mass().is_some() || mu2.point_mass().is_some() {
        return Err(Error::DegenerateMeasure("point mass in free convolution; translate instead".into()));
    }
    let map = |w: Complex<T>| {
        let a = mu1.reciprocal(w) - w + z;
        mu2.reciprocal(a) - a + z
    };
    let step_tol: T = c(STEP_TOL);
    let half: T = c(0.5);
    let mut w = z;
    let mut tw = map(w);
    let mut best = T::infinity();
    let mut stalled = 0usize;
    let mut damped = false;
    for iter in 0..MAX_ITER {
        let g = tw - w;
        let gn = g.norm();
        if !gn.is_finite() {
            return Err(Error::convergence("subordination fixed point (non-finite iterate)", iter));
        }
        if gn < best {
            best = gn;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 50 {
                damped = true;
            }
        }
        let mut next = if damped { w + g * half } else { tw };
        let mut t_next = None;
        if iter >= 4 {
            let d = c::<T>(1e-7) * (T::one() + w.norm());
            let slope = (map(w + d) - tw) / d - T::one();
            let cand = w - g / slope;
            if cand.im > T::zero() && cand.re.is_finite() && cand.im.is_finite() {
                let tc = map(cand);
                if (tc - cand).norm() < gn {
                    next = cand;
                    t_next = Some(tc);
                }
            }
        }
        let step = (next - w).norm();
        let scale = T::one() + w.norm();
        w = next;
        tw = t_next.unwrap_or_else(|| map(w));
        if step <= step_tol * scale {
            return Ok(finish(mu1, mu2, z, w));
        }
    }
    Err(Error::convergence("subordination fixed point", MAX_ITER))
}

fn finish<T, A, B>(mu1: &A, mu2: &B, z: Complex<T>, omega1: Complex<T>) -> SubordinationPoint<T>
where
    T: Real,
    A: CauchyTransform<T> + ?Sized,
    B: CauchyTransform<T> + ?Sized,
{
    let f1 = mu1.reciprocal(omega1);
    let omega2 = f1 - omega1 + z;
    let f2 = mu2.reciprocal(omega2);
    SubordinationPoint {
        z,
        omega1,
        omega2,
        f_value: f1,
        residual_f: (f1 - f2).norm(),
        residual_sum: (f1 + z - omega1 - omega2).norm(),
    }
}

/// `G_{μ₁⊞μ₂}(z)`, with point masses handled as translations.
pub fn cauchy_of_sum<T, A, B>(mu1: &A, mu2: &B, z: Complex<T>) -> Result<Complex<T>>
where
    T: Real,
    A: CauchyTransform<T> + ?Sized,
    B: CauchyTransform<T> + ?Sized,
{
    check_upper(z)?;
    match (mu1.point_mass(), mu2.point_mass()) {
        (Some(a), Some(b)) => Ok((z - (a + b)).inv()),
        (Some(a), None) => Ok(mu2.cauchy(z - a)),
        (None, Some(b)) => Ok(mu1.cauchy(z - b)),
        (None, None) => Ok(subordinate(mu1, mu2, z)?.g_value()),
    }
}

/// Imaginary-axis subordination for symmetric laws.
///
/// Returns `(W₁, W₂, 𝖦)` with `ω_j(iε) = iW_j`, `𝖦 = −Im G_{μ₁⊞μ₂}(iε)` and
/// `1/𝖦 = W₁ + W₂ − ε`. `W₁` is the root of `T(W) − W` where
/// `T(W) = ε + e₂(ε + e₁(W))` and `e_j(y) = f_j(y) − y ≥ 0`; one Picard step is
/// applied to the bracketed root, which makes constant `e₂` exact.
/// Point masses at `0` are admitted: `e ≡ 0` there.
pub fn subordinate_imag_symmetric<T, A, B>(mu1: &A, mu2: &B, eps: T) -> Result<(T, T, T)>
where
    T: Real,
    A: CauchyTransform<T> + ?Sized,
    B: CauchyTransform<T> + ?Sized,
{
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(Error::domain(format!("imaginary-axis subordination needs eps > 0, got {eps}")));
    }
    let t_map = |w: T| eps + mu2.f_excess(eps + mu1.f_excess(w));
    // T(ε) ≥ ε, and T stays bounded while W grows.
    let hi = expand_up(eps + eps, c(4.0), T::max_value().sqrt(), |w| t_map(w) < w)
        .ok_or_else(|| Error::convergence("imaginary-axis subordination bracket", 0))?;
    let tol = Tolerance { rel: c(1e-15), abs: T::zero(), max_iter: 400 };
    let root = bisect(|w| t_map(w) - w, eps, hi, tol)?;
    let w1 = t_map(root);
    let e1 = mu1.f_excess(w1);
    let w2 = eps + e1;
    Ok((w1, w2, T::one() / (w1 + e1)))
}

/// Density of `μ₁⊞μ₂` on an increasing grid by Stieltjes inversion.
///
/// `ρ(x) ≈ 2ρ_{η/2}(x) − ρ_η(x)` with `ρ_η(x) = −Im G(x + iη)/π`, clipped at
/// zero. Trapezoid weights on the grid carry the mass; defects below
/// [`DENSITY_MASS_TOL`] are renormalized away.
pub fn convolve_density<T, A, B>(mu1: &A, mu2: &B, grid: &[T], eta: T) -> Result<LineMeasure<T>>
where
    T: Real,
    A: CauchyTransform<T> + ?Sized,
    B: CauchyTransform<T> + ?Sized,
{
    if let (Some(a), Some(b)) = (mu1.point_mass(), mu2.point_mass()) {
        return LineMeasure::from_atoms([(a + b, T::one())]);
    }
    if !(eta > T::zero()) {
        return Err(Error::domain(format!("Stieltjes inversion needs eta > 0, got {eta}")));
    }
    if grid.len() < 2 || grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::domain("density grid must be strictly increasing with at least two points"));
    }
    let half: T = c(0.5);
    let rho = |x: T, h: T| -> Result<T> { Ok(-cauchy_of_sum(mu1, mu2, Complex::new(x, h))?.im / T::PI()) };
    let values: Vec<T> = grid
        .par_iter()
        .map(|&x| Ok((rho(x, eta * half)? * c(2.0) - rho(x, eta)?).max(T::zero())))
        .collect::<Result<_>>()?;
    let n = grid.len();
    let weights: Vec<T> = (0..n)
        .map(|i| {
            let l = if i == 0 { grid[0] } else { grid[i - 1] };
            let r = if i + 1 == n { grid[n - 1] } else { grid[i + 1] };
            (r - l) * half
        })
        .collect();
    let mass: T = values.iter().zip(&weights).map(|(f, w)| *f * *w).sum();
    let defect = (mass - T::one()).abs();
    if !(defect < c(DENSITY_MASS_TOL)) {
        return Err(Error::MassDefect { defect: defect.as_f64() });
    }
    let nodes = grid
        .iter()
        .zip(values)
        .zip(weights)
        .map(|((&x, f), w)| Node { x, f: f / mass, w })
        .collect();
    LineMeasure::new(Vec::new(), nodes)
}

/// `η = 10⁻³ × scale`, the default Stieltjes-inversion height.
pub fn default_eta<T: Real>(support_scale: T) -> T {
    c::<T>(1e-3) * support_scale
}

/// `H(z) = z + φ(F_{μ₀}(z))` for the generating pair of the perturbation.
pub fn fid_h_map<T, M>(mu0: &M, pair: &GeneratingPair<T>, z: Complex<T>) -> Result<Complex<T>>
where
    T: Real,
    M: CauchyTransform<T> + ?Sized,
{
    check_upper(z)?;
    Ok(z + pair.phi(mu0.reciprocal(z))?)
}

/// Membership in `Ω_H = {z ∈ ℂ⁺ : Im H(z) > 0}`.
pub fn in_omega_h<T, M>(mu0: &M, pair: &GeneratingPair<T>, z: Complex<T>) -> Result<bool>
where
    T: Real,
    M: CauchyTransform<T> + ?Sized,
{
    Ok(fid_h_map(mu0, pair, z)?.im > T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{quarter_circle, SymmetricMeasure};
    use crate::transforms::ClosedLaw;
    use proptest::prelude::*;

    fn i() -> Complex<f64> {
        Complex::new(0.0, 1.0)
    }

    fn bern() -> SymmetricMeasure<f64> {
        SymmetricMeasure::bernoulli(1.0).unwrap()
    }

    #[test]
    fn semicircles_add_variances() {
        let sc = ClosedLaw::Semicircle(1.0);
        let p = subordinate(&sc, &sc, i()).unwrap();
        assert!((p.g_value() - Complex::new(0.0, -0.5)).norm() < 1e-9);
        assert!(p.residual_f < 1e-9 && p.residual_sum < 1e-9);
    }

    #[test]
    fn bernoulli_pair_is_arcsine() {
        let p = subordinate(&bern(), &bern(), i()).unwrap();
        assert!((p.g_value() - Complex::new(0.0, -1.0 / 5f64.sqrt())).norm() < 1e-9);
        let z = Complex::new(0.7, 0.01);
        let g = cauchy_of_sum(&bern(), &bern(), z).unwrap();
        assert!((g - ClosedLaw::Arcsine.cauchy(z)).norm() < 1e-8 * ClosedLaw::Arcsine.cauchy(z).norm());
    }

    #[test]
    fn cauchy_shifts_vertically() {
        let mu = quarter_circle::<f64>().symmetrize();
        for &(x, y) in &[(0.0, 1.0), (1.5, 0.2), (-3.0, 0.05)] {
            let z = Complex::new(x, y);
            let p = subordinate(&mu, &ClosedLaw::Cauchy(0.7), z).unwrap();
            let want = mu.reciprocal(z + Complex::new(0.0, 0.7));
            assert!((p.f_value - want).norm() < 1e-9, "{z}");
        }
    }

    #[test]
    fn point_masses_are_rejected_and_translated() {
        let d = ClosedLaw::PointMass(2.0);
        let sc = ClosedLaw::Semicircle(1.0);
        assert!(matches!(subordinate(&d, &sc, i()), Err(Error::DegenerateMeasure(_))));
        let z = Complex::new(0.4, 0.3);
        assert_eq!(cauchy_of_sum(&d, &sc, z).unwrap(), sc.cauchy(z - 2.0));
        assert!(subordinate(&sc, &sc, Complex::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn imaginary_axis_matches_plane() {
        for eps in [1.0, 0.3, 0.01, 5.0] {
            let (w1, w2, g) = subordinate_imag_symmetric(&bern(), &ClosedLaw::Semicircle(1.0), eps).unwrap();
            let p = subordinate(&bern(), &ClosedLaw::Semicircle(1.0), Complex::new(0.0, eps)).unwrap();
            assert!((p.omega1 - Complex::new(0.0, w1)).norm() < 1e-9);
            assert!((p.omega2 - Complex::new(0.0, w2)).norm() < 1e-9);
            assert!((p.g_value() - Complex::new(0.0, -g)).norm() < 1e-9);
            assert!((1.0 / g - (w1 + w2 - eps)).abs() < 1e-10 * (1.0 + 1.0 / g));
        }
    }

    #[test]
    fn imaginary_axis_special_cases() {
        let (w1, _, _) = subordinate_imag_symmetric(&bern(), &ClosedLaw::Cauchy(0.5), 0.25).unwrap();
        assert_eq!(w1, 0.75);
        let sc = ClosedLaw::Semicircle(1.0f64);
        let (w1, w2, g) = subordinate_imag_symmetric(&sc, &sc, 1.0).unwrap();
        assert!((w1 - w2).abs() < 1e-12);
        assert!((g - 0.5).abs() < 1e-12);
    }

    #[test]
    fn semicircle_density_recovered() {
        let grid: Vec<f64> = (0..=1600).map(|j| -4.0 + 0.005 * j as f64).collect();
        let sc = ClosedLaw::Semicircle(1.0);
        let m = convolve_density(&sc, &sc, &grid, default_eta(2.0)).unwrap();
        let want = ClosedLaw::Semicircle(2.0);
        let err = m.nodes().iter().filter(|n| n.x.abs() <= 2.5).map(|n| (n.f - want.density(n.x)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn arcsine_density_recovered() {
        let grid: Vec<f64> = (0..=6000).map(|j| -3.0 + 0.001 * j as f64).collect();
        let m = convolve_density(&bern(), &bern(), &grid, default_eta(2.0)).unwrap();
        let err = m.nodes().iter().filter(|n| n.x.abs() <= 1.9).map(|n| (n.f - ClosedLaw::Arcsine.density(n.x)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn translation_shortcut_in_density() {
        let grid: Vec<f64> = (0..=1000).map(|j| -2.0 + 0.006 * j as f64).collect();
        let sc = ClosedLaw::Semicircle(0.25);
        let m = convolve_density(&sc, &ClosedLaw::PointMass(1.0), &grid, 1e-3).unwrap();
        let err = m.nodes().iter().map(|n| (n.f - sc.density(n.x - 1.0)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-2, "{err}");
        let both = convolve_density(&ClosedLaw::PointMass(1.0), &ClosedLaw::PointMass(-0.5), &grid, 1e-3).unwrap();
        assert_eq!(both.atoms(), &[(0.5, 1.0)]);
    }

    #[test]
    fn h_map_examples() {
        let d0 = ClosedLaw::PointMass(0.0);
        let q = 3.0;
        let h = fid_h_map(&d0, &GeneratingPair::semicircle(1.0), Complex::new(0.0, q)).unwrap();
        assert!((h - Complex::new(0.0, q * (1.0 - 1.0 / (q * q)))).norm() < 1e-14);
        let z = Complex::new(0.3, 0.8);
        assert_eq!(fid_h_map(&bern(), &GeneratingPair::zero(), z).unwrap(), z);
        let h = fid_h_map(&bern(), &GeneratingPair::cauchy(1.0), Complex::new(0.0, 2.0)).unwrap();
        assert!((h - i()).norm() < 1e-8);
        assert!(in_omega_h(&bern(), &GeneratingPair::cauchy(1.0), Complex::new(0.0, 2.0)).unwrap());
        assert!(!in_omega_h(&d0, &GeneratingPair::semicircle(1.0), Complex::new(0.0, 0.5)).unwrap());
    }

    type LawPair = (Box<dyn CauchyTransform<f64>>, Box<dyn CauchyTransform<f64>>);

    fn catalog() -> Vec<LawPair> {
        vec![
            (Box::new(ClosedLaw::Semicircle(1.0)), Box::new(ClosedLaw::Semicircle(2.0))),
            (Box::new(bern()), Box::new(bern())),
            (Box::new(bern()), Box::new(ClosedLaw::Semicircle(0.5))),
            (Box::new(quarter_circle::<f64>().symmetrize()), Box::new(ClosedLaw::Arcsine)),
            (Box::new(LineMeasure::from_atoms([(-1.0, 0.25), (0.5, 0.5), (2.0, 0.25)]).unwrap()), Box::new(ClosedLaw::Cauchy(0.3))),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn residuals_hold(x in -4.0f64..4.0, ly in -4.0f64..1.0, k in 0usize..5) {
            let pairs = catalog();
            let (a, b) = &pairs[k];
            let z = Complex::new(x, 10f64.powf(ly));
            let p = subordinate(a.as_ref(), b.as_ref(), z).unwrap();
            prop_assert!(p.omega1.im > 0.0 && p.omega2.im > 0.0);
            prop_assert!(p.residual_f <= 1e-9 * (1.0 + p.f_value.norm()));
            prop_assert!(p.residual_sum <= 1e-9 * (1.0 + z.norm()));
        }

        #[test]
        fn exchange_symmetry(x in -3.0f64..3.0, y in 0.01f64..2.0) {
            let a = bern();
            let b = ClosedLaw::Semicircle(0.5);
            let z = Complex::new(x, y);
            let p = subordinate(&a, &b, z).unwrap();
            let q = subordinate(&b, &a, z).unwrap();
            prop_assert!((p.omega1 - q.omega2).norm() < 1e-9);
        }

        #[test]
        fn semicircle_semigroup(s in 0.1f64..3.0, t in 0.1f64..3.0, x in -4.0f64..4.0, y in 0.01f64..3.0) {
            let z = Complex::new(x, y);
            let p = subordinate(&ClosedLaw::Semicircle(s), &ClosedLaw::Semicircle(t), z).unwrap();
            let want = ClosedLaw::Semicircle(s + t).cauchy(z);
            prop_assert!((p.g_value() - want).norm() < 1e-8);
        }
    }
}
