//! Brown measures of R-diagonal elements and of R-diagonal perturbations.
//!
//! The radial law of an R-diagonal `X` comes from the `S`-transform of
//! `μ_{|X|²}` or, for freely infinitely divisible `X`, from the imaginary-axis
//! Voiculescu transform through `θ(q) = 1 + φ̂(q)/q` and
//! `r(q)² = q²θ(q)(1 − θ(q))`.
//!
//! The support region of `X₀ + Y` is `Ω = ℂ \ (S ∪ F₁ ∪ F₂)`; the statement
//! of that region is taken as given from a result announced for a revised
//! version of its source and is not re-derived here.

use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::freeconv::subordinate_imag_symmetric;
use crate::measure::{ExtendedReal, LineMeasure, SymmetricMeasure};
use crate::models::X0Spec;
use crate::numerics::divergence;
use crate::numerics::roots::{bisect, Tolerance};
use crate::scalar::{c, Complex, Real};
use crate::transforms::{s_limit_at_minus_one, CauchyTransform, ClosedLaw, STransform, VoiculescuAxis};

/// Closed-set tolerance for the `S`, `F₁`, `F₂` inequalities.
pub const REGION_TOL: f64 = 1e-12;
/// Kernel mass treated as zero by [`property_h_predicate`].
pub const KERNEL_TOL: f64 = 1e-12;
/// `y = 2^{−j}` ladder used for `𝔪₋₂` of an R-diagonal `X₀ − λ`.
pub const M_NEG2_LADDER: std::ops::RangeInclusive<i32> = 10..=24;

/// Radial distribution `F(r) = μ_X(|z| ≤ r)` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialCDF<T> {
    pub radii: Vec<T>,
    pub mass: Vec<T>,
    /// `𝔪₋₂^{−1/2}`, zero when `𝔪₋₂ = ∞`.
    pub inner_radius: T,
    /// `𝔪₂^{1/2}`.
    pub outer_radius: ExtendedReal<T>,
    pub atom0: T,
}

impl<T: Real> RadialCDF<T> {
    /// CSV with header `r,F`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,F\n");
        for (r, f) in self.radii.iter().zip(&self.mass) {
            let _ = writeln!(s, "{r},{f}");
        }
        s
    }

    /// `max |F − G|` over a shared grid.
    pub fn sup_distance(&self, other: &RadialCDF<T>) -> Result<T> {
        if self.radii != other.radii {
            return Err(Error::domain("radial CDFs are sampled on different grids"));
        }
        Ok(self.mass.iter().zip(&other.mass).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max))
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.mass.windows(2).all(|w| w[1] >= w[0])
    }
}

fn check_grid<T: Real>(radii: &[T]) -> Result<()> {
    if radii.iter().any(|r| !(*r >= T::zero())) || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("radial grid must be increasing and non-negative"));
    }
    Ok(())
}

/// Rejects laws of `|X|²` that are point masses: by Cauchy–Schwarz
/// `𝔪₂·𝔪₋₂ ≥ 1` with equality exactly for point masses.
fn check_nondegenerate<T: Real, S: STransform<T> + ?Sized>(law: &S) -> Result<(ExtendedReal<T>, ExtendedReal<T>)> {
    let (m2, mn2) = (law.m2(), law.m_neg2());
    let degenerate = law.atom0() >= T::one() - c(KERNEL_TOL)
        || match (m2, mn2) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => a * b <= T::one() + c(REGION_TOL),
            _ => false,
        };
    if degenerate {
        return Err(Error::DegenerateMeasure("law of |X|^2 is a point mass".into()));
    }
    Ok((m2, mn2))
}

fn inner_of<T: Real>(mn2: ExtendedReal<T>) -> T {
    match mn2 {
        ExtendedReal::Finite(v) => T::one() / v.sqrt(),
        ExtendedReal::PosInfinity => T::zero(),
    }
}

fn outer_of<T: Real>(m2: ExtendedReal<T>) -> ExtendedReal<T> {
    match m2 {
        ExtendedReal::Finite(v) => ExtendedReal::Finite(v.sqrt()),
        ExtendedReal::PosInfinity => ExtendedReal::PosInfinity,
    }
}

/// `(𝔪₋₂^{−1/2}, 𝔪₂^{1/2})`, the annulus carrying the Brown measure.
pub fn support_annulus<T: Real, S: STransform<T> + ?Sized>(mu_sq: &S) -> Result<(T, ExtendedReal<T>)> {
    let (m2, mn2) = check_nondegenerate(mu_sq)?;
    Ok((inner_of(mn2), outer_of(m2)))
}

/// Radial CDF `F(r) = 1 + S^{⟨−1⟩}(r^{−2})` between the annulus radii, `μ({0})`
/// inside and `1` outside.
pub fn radial_cdf_from_s<T: Real, S: STransform<T> + Sync + ?Sized>(mu_sq: &S, radii: &[T]) -> Result<RadialCDF<T>> {
    check_grid(radii)?;
    let (m2, mn2) = check_nondegenerate(mu_sq)?;
    let inner = inner_of(mn2);
    let outer = outer_of(m2);
    let atom0 = mu_sq.atom0();
    let mass = radii
        .par_iter()
        .map(|&r| {
            if r <= inner {
                return Ok(atom0);
            }
            if let ExtendedReal::Finite(o) = outer {
                if r >= o {
                    return Ok(T::one());
                }
            }
            mu_sq.one_plus_s_inverse(T::one() / (r * r))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(RadialCDF { radii: radii.to_vec(), mass, inner_radius: inner, outer_radius: outer, atom0 })
}

/// Imaginary-axis `φ̂` supplied as a closure.
pub struct AxisFn<F>(pub F);

impl<T: Real, F: Fn(T) -> Result<T>> VoiculescuAxis<T> for AxisFn<F> {
    fn phi_hat(&self, v: T) -> Result<T> {
        (self.0)(v)
    }
}

/// `(θ(q), 1 − θ(q))`, the second computed as `−φ̂(q)/q` without cancellation.
fn theta_pair<T: Real, V: VoiculescuAxis<T> + ?Sized>(law: &V, q: T) -> Result<(T, T)> {
    let one_minus = -law.phi_hat(q)? / q;
    Ok((T::one() - one_minus, one_minus))
}

/// `r(q)`, continued by `0` where `θ(q) ≤ 0`.
fn radius_at<T: Real, V: VoiculescuAxis<T> + ?Sized>(law: &V, q: T) -> Result<(T, T)> {
    let (th, om) = theta_pair(law, q)?;
    if th <= T::zero() {
        return Ok((T::zero(), th));
    }
    Ok((q * (th * om.max(T::zero())).sqrt(), th))
}

/// Raw parametrized curve `(r(q), θ(q))` over the `q` with `0 < θ(q) < 1`.
pub fn theta_curve<T: Real, V: VoiculescuAxis<T> + ?Sized>(law: &V, q_grid: &[T]) -> Result<Vec<(T, T)>> {
    let mut out = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        if !(q > T::zero()) {
            return Err(Error::domain(format!("theta needs q > 0, got {q}")));
        }
        let (r, th) = radius_at(law, q)?;
        if th > T::zero() && th < T::one() {
            out.push((r, th));
        }
    }
    if out.is_empty() {
        return Err(Error::domain("theta(q) is never in (0, 1) on the q grid"));
    }
    Ok(out)
}

/// Radial CDF of a freely infinitely divisible R-diagonal element from the
/// imaginary-axis Voiculescu transform of `μ̃_{|X|}` (a pair with `γ = 0`).
///
/// `r(q)` is increasing on `{θ > 0}`, so each requested radius is matched by
/// bisection in `log q` and `F(r) = θ(q)` is returned at that exact `q`.
pub fn radial_cdf_via_theta<T: Real, V: VoiculescuAxis<T> + Sync + ?Sized>(law: &V, radii: &[T]) -> Result<RadialCDF<T>> {
    check_grid(radii)?;
    let limit: T = c(300.0 * std::f64::consts::LN_2);
    let tol = Tolerance { rel: T::zero(), abs: c(1e-13), max_iter: 200 };
    let mass = radii
        .par_iter()
        .map(|&r| -> Result<T> {
            if r == T::zero() {
                return Ok(T::zero());
            }
            let g = |l: T| -> Result<T> { Ok(radius_at(law, l.exp())?.0 - r) };
            let mut hi = T::zero();
            while g(hi)? < T::zero() {
                hi += c(2.0);
                if hi > limit {
                    return Ok(T::one());
                }
            }
            let mut lo = hi - c(2.0);
            while g(lo)? > T::zero() {
                lo -= c(2.0);
                if lo < -limit {
                    return Err(Error::convergence("theta-route bracket near q = 0", 0));
                }
            }
            let mut err = None;
            let l = bisect(
                |l| match g(l) {
                    Ok(v) => v,
                    Err(e) => {
                        err.get_or_insert(e);
                        T::zero()
                    }
                },
                lo,
                hi,
                tol,
            )?;
            if let Some(e) = err {
                return Err(e);
            }
            let (th, _) = theta_pair(law, l.exp())?;
            Ok(th.max(T::zero()).min(T::one()))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(RadialCDF {
        radii: radii.to_vec(),
        mass,
        inner_radius: T::zero(),
        outer_radius: ExtendedReal::PosInfinity,
        atom0: T::zero(),
    })
}

/// `lim_{u→−1} S(u)`, which equals `𝔪₋₂`; infinite for every freely
/// infinitely divisible R-diagonal element.
pub fn fid_m_neg2_check<T: Real, S: STransform<T> + ?Sized>(mu_sq: &S) -> Result<ExtendedReal<T>> {
    s_limit_at_minus_one(mu_sq)
}

/// Property (H) for a freely infinitely divisible R-diagonal `Y`: trivial
/// kernel and `𝔪₂(Y) = ∞`.
pub fn property_h_predicate<T: Real, S: STransform<T> + ?Sized>(kernel_mass: T, mu_sq: &S) -> bool {
    kernel_mass.abs() <= c(KERNEL_TOL) && !mu_sq.m2().is_finite()
}

/// Region of `λ` relative to `Ω = ℂ \ (S ∪ F₁ ∪ F₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionLabel {
    S,
    F1,
    F2,
    Omega,
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegionLabel::S => "S",
            RegionLabel::F1 => "F1",
            RegionLabel::F2 => "F2",
            RegionLabel::Omega => "Omega",
        };
        f.write_str(s)
    }
}

/// `τ(ker(X₀ − λ))`, `𝔪₂(X₀ − λ)`, `𝔪₋₂(X₀ − λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedMoments<T> {
    pub kernel: T,
    pub m2: ExtendedReal<T>,
    pub m_neg2: ExtendedReal<T>,
}

fn self_adjoint_moments<T: Real>(nu: &LineMeasure<T>, lambda: Complex<T>) -> ShiftedMoments<T> {
    let real = lambda.im == T::zero();
    let kernel = if real {
        nu.atoms().iter().filter(|a| a.0 == lambda.re).map(|a| a.1).sum()
    } else {
        T::zero()
    };
    let m2 = ExtendedReal::Finite(nu.integrate_abs_sq(lambda, |d| d));
    // A density that is positive on both sides of a real λ makes ∫|x − λ|⁻² diverge.
    let through_density = real && {
        let nodes = nu.nodes();
        let i = nodes.partition_point(|n| n.x < lambda.re);
        i > 0 && i < nodes.len() && nodes[i - 1].f > T::zero() && nodes[i].f > T::zero()
    };
    let m_neg2 = if kernel > T::zero() || through_density {
        ExtendedReal::PosInfinity
    } else {
        ExtendedReal::Finite(nu.integrate_abs_sq(lambda, |d| T::one() / d))
    };
    ShiftedMoments { kernel, m2, m_neg2 }
}

/// `𝔪₋₂ = lim_{y→0} 𝖦(y)/y` for `μ̃_{|X₀−λ|} = μ̃_{|X₀|} ⊞ ½(δ_{|λ|} + δ_{−|λ|})`.
fn rdiag_m_neg2<T: Real>(sym: &SymmetricMeasure<T>, lambda: Complex<T>) -> Result<ExtendedReal<T>> {
    let a = lambda.norm();
    if a == T::zero() {
        return Ok(sym.abs_moment(c(-2.0)));
    }
    let bern = SymmetricMeasure::bernoulli(a)?;
    let ladder: Vec<i32> = M_NEG2_LADDER.collect();
    let mut err = None;
    let res = divergence::classify(
        |level| {
            let y: T = c(2f64.powi(-ladder[level]));
            match subordinate_imag_symmetric(sym, &bern, y) {
                Ok((_, _, g)) => g / y,
                Err(e) => {
                    err.get_or_insert(e);
                    T::zero()
                }
            }
        },
        ladder.len(),
        c(1e-9),
    );
    match err {
        Some(e) => Err(e),
        None => Ok(res),
    }
}

/// Moments of `X₀ − λ` from the initial-condition descriptor.
pub fn shifted_moments<T: Real>(x0: &X0Spec<T>, lambda: Complex<T>) -> Result<ShiftedMoments<T>> {
    match x0 {
        X0Spec::Scalar(_) => Err(Error::ScalarOperand("X0 is a scalar".into())),
        X0Spec::SelfAdjoint(nu) => Ok(self_adjoint_moments(nu, lambda)),
        X0Spec::RDiagonalRadial(rho) => {
            let kernel = if lambda == Complex::new(T::zero(), T::zero()) { rho.atom0() } else { T::zero() };
            let m2 = rho.moment_p(c(2.0)).plus(lambda.norm_sqr());
            let m_neg2 = if kernel > T::zero() { ExtendedReal::PosInfinity } else { rdiag_m_neg2(&rho.symmetrize(), lambda)? };
            Ok(ShiftedMoments { kernel, m2, m_neg2 })
        }
    }
}

fn reciprocal<T: Real>(v: ExtendedReal<T>) -> T {
    match v {
        ExtendedReal::Finite(x) => T::one() / x,
        ExtendedReal::PosInfinity => T::zero(),
    }
}

/// `a ≤ b` within [`REGION_TOL`]; `+∞` on the left never holds.
fn closed_le<T: Real>(a: ExtendedReal<T>, b: T) -> bool {
    match a {
        ExtendedReal::Finite(a) => a <= b + c::<T>(REGION_TOL) * (T::one() + b.abs()),
        ExtendedReal::PosInfinity => false,
    }
}

/// Labels `λ` for `X₀ + Y`, `Y` R-diagonal with `μ_{|Y|²}` described by `y_sq`.
pub fn classify_support_point<T: Real, S: STransform<T> + ?Sized>(
    x0: &X0Spec<T>,
    y_sq: &S,
    lambda: Complex<T>,
) -> Result<RegionLabel> {
    if x0.is_scalar() {
        return Err(Error::ScalarOperand("X0 is a scalar".into()));
    }
    let ker_y = y_sq.atom0();
    if ker_y >= T::one() - c(KERNEL_TOL) {
        return Err(Error::ScalarOperand("Y is zero".into()));
    }
    let x = shifted_moments(x0, lambda)?;
    let tol: T = c(REGION_TOL);
    if x.kernel + ker_y >= T::one() - tol {
        return Ok(RegionLabel::S);
    }
    if closed_le(y_sq.m2(), reciprocal(x.m_neg2)) {
        return Ok(RegionLabel::F1);
    }
    if closed_le(x.m2, reciprocal(y_sq.m_neg2())) {
        return Ok(RegionLabel::F2);
    }
    Ok(RegionLabel::Omega)
}

/// Labels a grid of points; output order follows the input.
pub fn classify_grid<T: Real, S: STransform<T> + Sync + ?Sized>(
    x0: &X0Spec<T>,
    y_sq: &S,
    lambdas: &[Complex<T>],
) -> Result<Vec<RegionLabel>> {
    lambdas.par_iter().map(|&l| classify_support_point(x0, y_sq, l)).collect()
}

/// `½∫ log(t² + w²) dμ(t)` for laws on `ℝ`, `w > 0`.
pub trait HalfLogMoment<T: Real> {
    fn half_log_moment(&self, w: T) -> T;
}

impl<T: Real> HalfLogMoment<T> for SymmetricMeasure<T> {
    fn half_log_moment(&self, w: T) -> T {
        let w2 = w * w;
        self.half().integrate(|t| (t * t + w2).ln()) * c(0.5)
    }
}

impl<T: Real> HalfLogMoment<T> for LineMeasure<T> {
    fn half_log_moment(&self, w: T) -> T {
        let w2 = w * w;
        self.integrate(|t| (t * t + w2).ln()) * c(0.5)
    }
}

impl<T: Real> HalfLogMoment<T> for ClosedLaw<T> {
    fn half_log_moment(&self, w: T) -> T {
        let half: T = c(0.5);
        let four: T = c(4.0);
        match *self {
            ClosedLaw::Semicircle(t) => {
                // ∫ log|iv − x| dsc₁ = v/(v + √(v² + 4)) + log((v + √(v² + 4))/2) − 1/2 at v = w/√t.
                let v = w / t.sqrt();
                let root = (v * v + four).sqrt();
                half * t.ln() + v / (v + root) + ((v + root) * half).ln() - half
            }
            ClosedLaw::Cauchy(t) => (w + t).ln(),
            ClosedLaw::Arcsine => ((w + (w * w + four).sqrt()) * half).ln(),
            ClosedLaw::PointMass(a) => half * (a * a + w * w).ln(),
        }
    }
}

/// Terms of the regularized log-potential of `X₁ + X₂ − λ` at height `y`:
/// `½τlog(|X₁−λ|² + W₁²)`, `½τlog(|X₂|² + W₂²)`, `−log(W₁ + W₂ − y)` and their
/// sum `½τlog(|X₁+X₂−λ|² + y²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPotentialTerms<T> {
    pub term1: T,
    pub term2: T,
    pub term3: T,
    pub total: T,
}

/// `x1_at_lambda` is `μ̃_{|X₁−λ|}`, `y_symm` is `μ̃_{|X₂|}` with `X₂` R-diagonal.
pub fn log_potential_decomposition<T, A, B>(x1_at_lambda: &A, y_symm: &B, y: T) -> Result<LogPotentialTerms<T>>
where
    T: Real,
    A: CauchyTransform<T> + HalfLogMoment<T> + ?Sized,
    B: CauchyTransform<T> + HalfLogMoment<T> + ?Sized,
{
    let (w1, w2, g) = subordinate_imag_symmetric(x1_at_lambda, y_symm, y)?;
    let term1 = x1_at_lambda.half_log_moment(w1);
    let term2 = y_symm.half_log_moment(w2);
    let term3 = g.ln();
    Ok(LogPotentialTerms { term1, term2, term3, total: term1 + term2 + term3 })
}

/// `τ log(|X₀ − λ|² + w²)`: direct for scalar and self-adjoint `X₀`, through
/// the decomposition with `X₁ = −λ` for R-diagonal `X₀`.
pub fn log_det_regularized<T: Real>(x0: &X0Spec<T>, lambda: Complex<T>, w: T) -> Result<T> {
    if !(w > T::zero()) {
        return Err(Error::domain(format!("regularization needs w > 0, got {w}")));
    }
    let w2 = w * w;
    match x0 {
        X0Spec::Scalar(a) => Ok(((*a - lambda).norm_sqr() + w2).ln()),
        X0Spec::SelfAdjoint(nu) => Ok(nu.integrate_abs_sq(lambda, |d| (d + w2).ln())),
        X0Spec::RDiagonalRadial(rho) => {
            let sym = rho.symmetrize();
            let a = lambda.norm();
            if a == T::zero() {
                return Ok(sym.half_log_moment(w) * c(2.0));
            }
            // The scalar `−λ` has symmetrized modulus ½(δ_{|λ|} + δ_{−|λ|}).
            let bern = SymmetricMeasure::bernoulli(a)?;
            Ok(log_potential_decomposition(&bern, &sym, w)?.total * c(2.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{inverse_marchenko_pastur, marchenko_pastur, uniform, PositiveMeasure};
    use crate::models::{radial_cdf_xmk, xmk_modulus_sq_law, ModelSpec};
    use crate::transforms::GeneratingPair;
    use proptest::prelude::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn circular_law_from_s() {
        let f = radial_cdf_from_s(&marchenko_pastur::<f64>(), &grid(0.0, 1.0, 200)).unwrap();
        let err = f.radii.iter().zip(&f.mass).map(|(r, m)| (m - r * r).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!(f.is_nondecreasing());
        assert!((f.outer_radius.to_real() - 1.0).abs() < 1e-12);
        assert!(f.to_csv().starts_with("r,F\n0,0\n"));
    }

    #[test]
    fn circular_cauchy_from_s() {
        let mu = xmk_modulus_sq_law::<f64>(1, 1).unwrap();
        let f = radial_cdf_from_s(&mu, &[0.5, 1.0, 2.0]).unwrap();
        for (r, m) in f.radii.iter().zip(&f.mass) {
            assert!((m - r * r / (1.0 + r * r)).abs() < 1e-8, "{r}: {m}");
        }
    }

    #[test]
    fn inner_hole_of_uniform() {
        let mu = uniform(1.0f64, 2.0).unwrap();
        let (inner, outer) = support_annulus(&mu).unwrap();
        assert!((inner - 1.0 / 2f64.ln().sqrt()).abs() < 1e-10);
        assert!((outer.to_real() - 1.5f64.sqrt()).abs() < 1e-10);
        let f = radial_cdf_from_s(&mu, &[0.5, 1.21, 1.22, 1.23]).unwrap();
        assert_eq!(f.mass[0], 0.0);
        assert!(f.mass[1] > 0.0 && f.mass[2] > f.mass[1] && f.mass[2] < 1.0);
        assert_eq!(f.mass[3], 1.0);
    }

    #[test]
    fn annulus_examples() {
        let (inner, outer) = support_annulus(&marchenko_pastur::<f64>()).unwrap();
        assert_eq!(inner, 0.0);
        assert!((outer.to_real() - 1.0).abs() < 1e-10);
        let (inner, outer) = support_annulus(&xmk_modulus_sq_law::<f64>(1, 1).unwrap()).unwrap();
        assert_eq!((inner, outer), (0.0, ExtendedReal::PosInfinity));
        let d4 = PositiveMeasure::point_mass(4.0f64).unwrap();
        assert!(matches!(support_annulus(&d4), Err(Error::DegenerateMeasure(_))));
        assert!(matches!(radial_cdf_from_s(&d4, &[1.0]), Err(Error::DegenerateMeasure(_))));
    }

    #[test]
    fn theta_route_closed_forms() {
        let sc = GeneratingPair::semicircle(1.0f64);
        let q = 2f64.sqrt();
        let (th, _) = theta_pair(&sc, q).unwrap();
        assert!((th - 0.5).abs() < 1e-15);
        assert!((radius_at(&sc, q).unwrap().0 - 0.5f64.sqrt()).abs() < 1e-15);
        let f = radial_cdf_via_theta(&sc, &[0.3, 0.5f64.sqrt(), 0.9, 1.0, 1.5]).unwrap();
        assert!((f.mass[0] - 0.09).abs() < 1e-12);
        assert!((f.mass[1] - 0.5).abs() < 1e-12);
        assert!((f.mass[3] - 1.0).abs() < 1e-12);
        assert_eq!(f.mass[4], 1.0);

        let t = 0.7;
        let cauchy = AxisFn(move |_q: f64| Ok(-t));
        let f = radial_cdf_via_theta(&cauchy, &[0.2, 1.0, 3.0]).unwrap();
        for (r, m) in f.radii.iter().zip(&f.mass) {
            assert!((m - r * r / (t * t + r * r)).abs() < 1e-12);
        }

        let stable = ModelSpec::SymFreeStable { k: 3, t: 1.0f64 };
        let f = radial_cdf_via_theta(&stable, &[0.2, 1.0, 3.0]).unwrap();
        for (r, m) in f.radii.iter().zip(&f.mass) {
            assert!((m - radial_cdf_xmk(1, 3, *r)).abs() < 1e-11, "{r}");
        }
    }

    #[test]
    fn theta_curve_filters_range() {
        let sc = GeneratingPair::semicircle(1.0f64);
        let pts = theta_curve(&sc, &[0.5, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(theta_curve(&sc, &[0.5, 0.9]).is_err());
    }

    #[test]
    fn routes_agree() {
        let radii = grid(0.0, 3.0, 61);
        let models = [
            (ModelSpec::Xmk { m: 1, k: 0 }, xmk_modulus_sq_law::<f64>(1, 0).unwrap()),
            (ModelSpec::Xmk { m: 1, k: 1 }, xmk_modulus_sq_law(1, 1).unwrap()),
            (ModelSpec::Xmk { m: 1, k: 2 }, xmk_modulus_sq_law(1, 2).unwrap()),
            (ModelSpec::Semicircle { t: 1.0 }, marchenko_pastur()),
        ];
        for (spec, mu) in models {
            let pair = spec.pair().unwrap();
            let a = radial_cdf_from_s(&mu, &radii).unwrap();
            let b = radial_cdf_via_theta(&pair, &radii).unwrap();
            let d = a.sup_distance(&b).unwrap();
            assert!(d < 1e-6, "{spec:?}: {d}");
        }
    }

    #[test]
    fn m_neg2_divergence() {
        assert_eq!(fid_m_neg2_check(&marchenko_pastur::<f64>()).unwrap(), ExtendedReal::PosInfinity);
        assert_eq!(fid_m_neg2_check(&ModelSpec::<f64>::Xmk { m: 2, k: 3 }).unwrap(), ExtendedReal::PosInfinity);
        assert_eq!(fid_m_neg2_check(&xmk_modulus_sq_law::<f64>(2, 3).unwrap()).unwrap(), ExtendedReal::PosInfinity);
        let inv = inverse_marchenko_pastur::<f64>();
        let v = fid_m_neg2_check(&inv).unwrap().to_real();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn property_h_examples() {
        assert!(!property_h_predicate(0.0, &marchenko_pastur::<f64>()));
        assert!(property_h_predicate(0.0, &xmk_modulus_sq_law::<f64>(1, 1).unwrap()));
        assert!(!property_h_predicate(0.3, &xmk_modulus_sq_law::<f64>(1, 1).unwrap()));
    }

    fn bernoulli_x0() -> X0Spec<f64> {
        X0Spec::SelfAdjoint(LineMeasure::from_atoms([(-1.0, 0.5), (1.0, 0.5)]).unwrap())
    }

    #[test]
    fn hand_computed_labels() {
        let mp = marchenko_pastur::<f64>();
        let x0 = bernoulli_x0();
        let at = |re: f64| classify_support_point(&x0, &mp, Complex::new(re, 0.0)).unwrap();
        assert_eq!(at(3.0), RegionLabel::F1);
        assert_eq!(at(1.0), RegionLabel::Omega);
        assert_eq!(at(0.0), RegionLabel::F1);
        assert_eq!(classify_support_point(&x0, &ModelSpec::MarchenkoPastur1, Complex::new(0.0, 0.0)).unwrap(), RegionLabel::F1);
        let m = shifted_moments(&x0, Complex::new(3.0, 0.0)).unwrap();
        assert!((m.m_neg2.to_real() - 0.5 * (0.25 + 1.0 / 16.0)).abs() < 1e-15);
        assert!(matches!(
            classify_support_point(&X0Spec::Scalar(Complex::new(1.0, 0.0)), &mp, Complex::new(0.0, 0.0)),
            Err(Error::ScalarOperand(_))
        ));
    }

    #[test]
    fn heavy_tailed_perturbation_fills_plane() {
        let y = xmk_modulus_sq_law::<f64>(1, 1).unwrap();
        for re in [0.0, 1.0, 3.0, 10.0] {
            assert_eq!(classify_support_point(&bernoulli_x0(), &y, Complex::new(re, 0.5)).unwrap(), RegionLabel::Omega);
        }
    }

    #[test]
    fn rdiagonal_initial_condition() {
        // X₀ circular: 𝔪₋₂(X₀ − λ) is finite outside the unit disk and infinite inside.
        let x0 = X0Spec::RDiagonalRadial(marchenko_pastur::<f64>().sqrt_pushforward());
        let outside = shifted_moments(&x0, Complex::new(2.0, 0.0)).unwrap();
        assert!(outside.m_neg2.is_finite());
        assert!((outside.m2.to_real() - 5.0).abs() < 1e-9);
        let inside = shifted_moments(&x0, Complex::new(0.5, 0.0)).unwrap();
        assert_eq!(inside.m_neg2, ExtendedReal::PosInfinity);
    }

    #[test]
    fn log_potential_of_circular() {
        let sc = ClosedLaw::Semicircle(1.0f64);
        let lp = log_potential_decomposition(&ClosedLaw::PointMass(0.0), &sc, 1e-6).unwrap();
        assert!((lp.total + 0.5).abs() < 1e-6, "{}", lp.total);
        assert!((lp.term1 + lp.term2 + lp.term3 - lp.total).abs() < 1e-15);
    }

    #[test]
    fn log_potential_cauchy_shift() {
        let x1 = SymmetricMeasure::bernoulli(1.5f64).unwrap();
        for y in [0.1, 1.0, 3.0] {
            let lp = log_potential_decomposition(&x1, &ClosedLaw::Cauchy(1.0), y).unwrap();
            let want = x1.half_log_moment(y + 1.0);
            assert!((lp.total - want).abs() < 1e-12, "{y}");
        }
    }

    #[test]
    fn log_potential_matches_recovered_density() {
        let sc = ClosedLaw::Semicircle(1.0f64);
        let lp = log_potential_decomposition(&sc, &sc, 1.0).unwrap();
        let grid = grid(-3.5, 3.5, 3501);
        let dens = crate::freeconv::convolve_density(&sc, &sc, &grid, 2e-3).unwrap();
        let direct = dens.half_log_moment(1.0);
        assert!((lp.total - direct).abs() < 1e-6, "{} vs {direct}", lp.total);
        assert!((lp.total - ClosedLaw::Semicircle(2.0).half_log_moment(1.0)).abs() < 1e-12);
    }

    #[test]
    fn closed_half_log_moments_match_quadrature() {
        let sc = marchenko_pastur::<f64>().sqrt_pushforward().symmetrize();
        for w in [0.01, 0.5, 2.0] {
            assert!((ClosedLaw::Semicircle(1.0).half_log_moment(w) - sc.half_log_moment(w)).abs() < 1e-10);
            let sc3 = marchenko_pastur::<f64>().dilate(3.0).sqrt_pushforward().symmetrize();
            assert!((ClosedLaw::Semicircle(3.0).half_log_moment(w) - sc3.half_log_moment(w)).abs() < 1e-10);
        }
    }

    #[test]
    fn log_det_routes() {
        let x0 = X0Spec::RDiagonalRadial(marchenko_pastur::<f64>().sqrt_pushforward());
        let lam = Complex::new(0.6, 0.8);
        // |c − λ|² + w² for circular c: compare with a self-adjoint-free route through
        // the decomposition in the other order.
        let a = log_det_regularized(&x0, lam, 0.5).unwrap();
        let sym = marchenko_pastur::<f64>().sqrt_pushforward().symmetrize();
        let b = 2.0 * log_potential_decomposition(&sym, &SymmetricMeasure::bernoulli(1.0).unwrap(), 0.5).unwrap().total;
        assert!((a - b).abs() < 1e-10);
        let s = log_det_regularized(&X0Spec::Scalar(Complex::new(1.0, 0.0)), lam, 0.5).unwrap();
        assert!((s - ((0.4f64 * 0.4 + 0.64) + 0.25).ln()).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn exchange_invariance(y in 0.05f64..4.0, a in 0.1f64..3.0) {
            let x1 = SymmetricMeasure::bernoulli(a).unwrap();
            let x2 = ClosedLaw::Semicircle(1.0);
            let p = log_potential_decomposition(&x1, &x2, y).unwrap();
            let q = log_potential_decomposition(&x2, &x1, y).unwrap();
            prop_assert!((p.total - q.total).abs() < 1e-9);
        }

        #[test]
        fn labels_stable_under_tiny_moves(re in -4.0f64..4.0, im in -2.0f64..2.0) {
            let mp = marchenko_pastur::<f64>();
            let x0 = bernoulli_x0();
            let l = Complex::new(re, im);
            let a = classify_support_point(&x0, &mp, l).unwrap();
            let b = classify_support_point(&x0, &mp, l + Complex::new(1e-14, 1e-14)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn radial_cdf_monotone(k in 0u32..3) {
            let mu = xmk_modulus_sq_law::<f64>(1, k).unwrap();
            let f = radial_cdf_from_s(&mu, &grid(0.0, 4.0, 41)).unwrap();
            prop_assert!(f.is_nondecreasing());
            prop_assert!(f.mass.iter().all(|m| (0.0..=1.0).contains(m)));
        }
    }
}
