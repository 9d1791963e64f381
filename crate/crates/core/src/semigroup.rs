//! The semigroup `X_t = X₀ + Y_t` with `Y_t` R-diagonal and
//! `μ̃_{|Y_t|} = μ^{⊞t}` for a freely infinitely divisible symmetric `μ`.
//!
//! Everything is evaluated at `iε` on the imaginary axis, where the
//! subordination functions, `𝖦` and `𝖱` are real and positive. With
//! `𝖦₀(W) = W·τ((|X₀−λ|² + W²)⁻¹)` the state at `(t, λ, ε)` is
//!
//! ```text
//! W₁ = ε + t·𝖱_μ(𝖦₀(W₁)),   𝖦 = 𝖦₀(W₁),   1/𝖦 = W₁ + W₂ − ε,
//! S  = τ log(|X₀−λ|² + W₁²) + t·I_μ(𝖦),   I_μ(y) = 2H_μ(y) − 2y𝖱_μ(y),
//! ```
//!
//! and `S = τ log(|X_t − λ|² + ε²)` solves `∂ₜS = 2H_μ(∂_εS / 2)`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::freeconv::subordinate_imag_symmetric;
use crate::measure::{ExtendedReal, LineMeasure, SymmetricMeasure};
use crate::models::{ModelSpec, X0Spec};
use crate::numerics::divergence;
use crate::numerics::quad::{integrate_adaptive, integrate_interval, GradedMap};
use crate::numerics::roots::{bisect, expand_up, Tolerance};
use crate::rdiag::{log_det_regularized, radial_cdf_via_theta, AxisFn};
use crate::scalar::{c, Complex, Real};
use crate::transforms::{CauchyTransform, GeneratingPair, VoiculescuAxis};

/// Slack allowed by [`det_monotonicity_scan`] before a decrease is reported.
pub const MONOTONE_SLACK: f64 = 1e-10;
/// Relative finite-difference step, multiplied by the natural scale.
pub const FD_STEP: f64 = 1e-3;
/// Exponents `k` of the `ε = 10^{−k}` ladder used by [`w1_at_zero`].
pub const EPS_LADDER: std::ops::RangeInclusive<i32> = 4..=8;

/// A law `μ` driving the semigroup: `𝖱_μ` from [`VoiculescuAxis`] and
/// `H_μ(y) = ∫₀^y 𝖱_μ`.
pub trait SemigroupLaw<T: Real>: VoiculescuAxis<T> + Sync {
    fn hamiltonian_h(&self, y: T) -> Result<T> {
        hamiltonian_quadrature(self, y)
    }
}

/// `∫₀^y 𝖱` by graded Gauss–Legendre; the grading absorbs `𝖱(r) ~ r^{−β}`, `β < 1`.
pub fn hamiltonian_quadrature<T: Real, L: VoiculescuAxis<T> + ?Sized>(law: &L, y: T) -> Result<T> {
    if y < T::zero() {
        return Err(Error::domain(format!("H needs y >= 0, got {y}")));
    }
    if y == T::zero() {
        return Ok(T::zero());
    }
    let failed = std::cell::Cell::new(false);
    let f = |r: T| match law.r_imag(r) {
        Ok(v) => v,
        Err(_) => {
            failed.set(true);
            T::zero()
        }
    };
    let map = GradedMap::bounded(T::zero(), y, 4, 1);
    let (v, _) = integrate_adaptive(&f, &map, 2, 64, c(1e-13));
    if failed.get() {
        return Err(Error::domain("R transform failed inside the H quadrature"));
    }
    Ok(v)
}

impl<T: Real> SemigroupLaw<T> for ModelSpec<T> {
    fn hamiltonian_h(&self, y: T) -> Result<T> {
        if y < T::zero() {
            return Err(Error::domain(format!("H needs y >= 0, got {y}")));
        }
        match self.hamiltonian_integral(y) {
            Some(h) => Ok(h),
            None => hamiltonian_quadrature(self, y),
        }
    }
}

impl<T: Real> SemigroupLaw<T> for SymmetricMeasure<T> {}
impl<T: Real> SemigroupLaw<T> for GeneratingPair<T> {}

/// `(H_μ(y), I_μ(y))` with `I_μ(y) = 2H_μ(y) − 2y𝖱_μ(y)`; both vanish at `y = 0`.
pub fn hamiltonian<T: Real, L: SemigroupLaw<T> + ?Sized>(law: &L, y: T) -> Result<(T, T)> {
    if y == T::zero() {
        return Ok((T::zero(), T::zero()));
    }
    let h = law.hamiltonian_h(y)?;
    let two: T = c(2.0);
    Ok((h, two * h - two * y * law.r_imag(y)?))
}

/// `H_μ` and `I_μ` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTable<T> {
    pub y: Vec<T>,
    pub h: Vec<T>,
    pub i: Vec<T>,
}

impl<T: Real> HamiltonianTable<T> {
    pub fn new<L: SemigroupLaw<T> + ?Sized>(law: &L, y: &[T]) -> Result<Self> {
        let rows = y.par_iter().map(|&v| hamiltonian(law, v)).collect::<Result<Vec<_>>>()?;
        let (h, i) = rows.into_iter().unzip();
        Ok(HamiltonianTable { y: y.to_vec(), h, i })
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.h.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Solution at one `(t, λ, ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupState<T> {
    pub t: T,
    pub lambda: Complex<T>,
    pub eps: T,
    pub w1: T,
    pub w2: T,
    pub gval: T,
    pub s_value: T,
}

impl<T: Real> SemigroupState<T> {
    /// `|W₁ − ε − t𝖱(𝖦)|`.
    pub fn fixed_point_residual<L: SemigroupLaw<T> + ?Sized>(&self, law: &L) -> Result<T> {
        let r = if self.t == T::zero() { T::zero() } else { self.t * law.r_imag(self.gval)? };
        Ok((self.w1 - self.eps - r).abs())
    }

    /// `|1/𝖦 − (W₁ + W₂ − ε)|`.
    pub fn inverse_residual(&self) -> T {
        (T::one() / self.gval - (self.w1 + self.w2 - self.eps)).abs()
    }
}

/// CSV with header `t,lambda_re,lambda_im,eps,W1,W2,G,S`.
pub fn states_to_csv<T: Real>(states: &[SemigroupState<T>]) -> String {
    let mut s = String::from("t,lambda_re,lambda_im,eps,W1,W2,G,S\n");
    for st in states {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            st.t, st.lambda.re, st.lambda.im, st.eps, st.w1, st.w2, st.gval, st.s_value
        );
    }
    s
}

/// `X₀ − λ` prepared for repeated evaluation of `𝖦₀`.
enum Shifted<'a, T: Real> {
    Scalar(T),
    Line(&'a LineMeasure<T>, Complex<T>),
    Centered(SymmetricMeasure<T>),
    Sum(SymmetricMeasure<T>, SymmetricMeasure<T>),
}

impl<'a, T: Real> Shifted<'a, T> {
    fn new(x0: &'a X0Spec<T>, lambda: Complex<T>) -> Result<Self> {
        Ok(match x0 {
            X0Spec::Scalar(a) => Shifted::Scalar((*a - lambda).norm_sqr()),
            X0Spec::SelfAdjoint(nu) => Shifted::Line(nu, lambda),
            X0Spec::RDiagonalRadial(rho) => {
                let a = lambda.norm();
                if a == T::zero() {
                    Shifted::Centered(rho.symmetrize())
                } else {
                    Shifted::Sum(SymmetricMeasure::bernoulli(a)?, rho.symmetrize())
                }
            }
        })
    }

    /// `𝖦₀(w) = w·τ((|X₀−λ|² + w²)⁻¹)`.
    fn g(&self, w: T) -> Result<T> {
        let w2 = w * w;
        Ok(match self {
            Shifted::Scalar(d) => w / (*d + w2),
            Shifted::Line(nu, lambda) => nu.integrate_abs_sq(*lambda, |d| w / (d + w2)),
            Shifted::Centered(sym) => sym.g_imag(w),
            Shifted::Sum(bern, sym) => subordinate_imag_symmetric(bern, sym, w)?.2,
        })
    }
}

/// `𝖦₀(w)` for `X₀ − λ`.
pub fn g0<T: Real>(x0: &X0Spec<T>, lambda: Complex<T>, w: T) -> Result<T> {
    if !(w > T::zero()) {
        return Err(Error::domain(format!("G0 needs w > 0, got {w}")));
    }
    Shifted::new(x0, lambda)?.g(w)
}

/// Bisection for a fallible `f`; the first error aborts the search.
fn bisect_fallible<T: Real>(mut f: impl FnMut(T) -> Result<T>, lo: T, hi: T, tol: Tolerance<T>) -> Result<T> {
    let mut err = None;
    let x = bisect(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                T::zero()
            }
        },
        lo,
        hi,
        tol,
    );
    match err {
        Some(e) => Err(e),
        None => x,
    }
}

fn check_params<T: Real>(t: T, eps: T) -> Result<()> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::domain(format!("semigroup time must be finite and >= 0, got {t}")));
    }
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(Error::domain(format!("regularization must be finite and > 0, got {eps}")));
    }
    Ok(())
}

/// Solves `W = ε + t𝖱_μ(𝖦₀(W))` and fills the rest of the state.
///
/// `Φ(W) = ε + t𝖱(𝖦₀(W)) − W` is non-negative at `W = ε` and negative for
/// large `W`; its zero is unique, although `Φ` need not be monotone, so the
/// upper end of the bracket is grown until `Φ < 0`. One fixed-point step after
/// the bisection makes the Cauchy case (`𝖱` constant) exact.
pub fn solve_w1<T: Real, L: SemigroupLaw<T> + ?Sized>(
    x0: &X0Spec<T>,
    lambda: Complex<T>,
    law: &L,
    t: T,
    eps: T,
) -> Result<SemigroupState<T>> {
    check_params(t, eps)?;
    let shifted = Shifted::new(x0, lambda)?;
    let step = |w: T| -> Result<T> {
        if t == T::zero() {
            return Ok(eps);
        }
        Ok(eps + t * law.r_imag(shifted.g(w)?)?)
    };
    let start = step(eps)?;
    let root = if start == eps {
        eps
    } else {
        let mut err = None;
        let hi = expand_up(start, c(2.0), T::max_value() / c(4.0), |w| match step(w) {
            Ok(v) => v <= w,
            Err(e) => {
                err.get_or_insert(e);
                true
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        let hi = hi.ok_or_else(|| Error::convergence("bracket for W1", 0))?;
        bisect_fallible(|w| Ok(step(w)? - w), eps, hi, Tolerance::default())?
    };
    let w1 = step(root)?;
    let gval = shifted.g(w1)?;
    let w2 = T::one() / gval - w1 + eps;
    let i_term = if t == T::zero() { T::zero() } else { t * hamiltonian(law, gval)?.1 };
    let s_value = log_det_regularized(x0, lambda, w1)? + i_term;
    Ok(SemigroupState { t, lambda, eps, w1, w2, gval, s_value })
}

/// `S(t, λ, ε) = τ log(|X_t − λ|² + ε²)`.
pub fn potential_s<T: Real, L: SemigroupLaw<T> + ?Sized>(
    x0: &X0Spec<T>,
    lambda: Complex<T>,
    law: &L,
    t: T,
    eps: T,
) -> Result<T> {
    Ok(solve_w1(x0, lambda, law, t, eps)?.s_value)
}

/// States over a list of `(t, λ, ε)`; output order follows the input.
pub fn state_grid<T: Real, L: SemigroupLaw<T> + ?Sized>(
    x0: &X0Spec<T>,
    law: &L,
    points: &[(T, Complex<T>, T)],
) -> Result<Vec<SemigroupState<T>>> {
    points.par_iter().map(|&(t, l, e)| solve_w1(x0, l, law, t, e)).collect()
}

/// Hamilton–Jacobi residuals at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjResidual<T> {
    pub h: T,
    /// `|∂ₜS − 2H(∂_εS/2)|`, both partials by central differences of step `h`.
    pub fd: T,
    /// The same at step `h/2`.
    pub fd_half: T,
    /// The same after one Richardson halving of both partials.
    pub richardson: T,
    /// `|∂ₜS − 2H(𝖦)|` with `∂ₜS` by central differences and `∂_εS = 2𝖦` exact.
    pub exact_eps: T,
    /// Central-difference `∂_εS` minus `2𝖦`.
    pub eps_identity: T,
}

/// Default step `FD_STEP·max(t, ε)`.
pub fn default_step<T: Real>(t: T, eps: T) -> T {
    c::<T>(FD_STEP) * t.max(eps)
}

pub fn hj_residual<T: Real, L: SemigroupLaw<T> + ?Sized>(
    x0: &X0Spec<T>,
    lambda: Complex<T>,
    law: &L,
    t: T,
    eps: T,
    h: Option<T>,
) -> Result<HjResidual<T>> {
    check_params(t, eps)?;
    let h = h.unwrap_or_else(|| default_step(t, eps));
    if !(h > T::zero()) || h >= t || h >= eps {
        return Err(Error::domain(format!("step h = {h} must be positive and below t = {t} and eps = {eps}")));
    }
    let s = |tt: T, ee: T| potential_s(x0, lambda, law, tt, ee);
    let two: T = c(2.0);
    let partials = |h: T| -> Result<(T, T)> {
        let dt = (s(t + h, eps)? - s(t - h, eps)?) / (two * h);
        let de = (s(t, eps + h)? - s(t, eps - h)?) / (two * h);
        Ok((dt, de))
    };
    let (dt1, de1) = partials(h)?;
    let (dt2, de2) = partials(h * c(0.5))?;
    let hj = |dt: T, de: T| -> Result<T> { Ok((dt - two * law.hamiltonian_h(de * c(0.5))?).abs()) };
    let three: T = c(3.0);
    let four: T = c(4.0);
    let dtr = (four * dt2 - dt1) / three;
    let der = (four * de2 - de1) / three;
    let gval = solve_w1(x0, lambda, law, t, eps)?.gval;
    Ok(HjResidual {
        h,
        fd: hj(dt1, de1)?,
        fd_half: hj(dt2, de2)?,
        richardson: hj(dtr, der)?,
        exact_eps: (dt1 - two * law.hamiltonian_h(gval)?).abs(),
        eps_identity: de1 - two * gval,
    })
}

/// `S` and `∂ₜS = 2H_μ(𝖦)` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonePoint<T> {
    pub t: T,
    pub s_value: T,
    pub ds_dt: T,
}

/// `t ↦ S(t, λ, ε)` on an increasing grid; a drop beyond [`MONOTONE_SLACK`]
/// is an error since `∂ₜS = 2H_μ(𝖦) ≥ 0`.
pub fn det_monotonicity_scan<T: Real, L: SemigroupLaw<T> + ?Sized>(
    x0: &X0Spec<T>,
    lambda: Complex<T>,
    law: &L,
    t_grid: &[T],
    eps: T,
) -> Result<Vec<MonotonePoint<T>>> {
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("time grid must be strictly increasing"));
    }
    let pts = t_grid
        .par_iter()
        .map(|&t| {
            let st = solve_w1(x0, lambda, law, t, eps)?;
            let ds_dt = if t == T::zero() && st.gval == T::zero() { T::zero() } else { c::<T>(2.0) * law.hamiltonian_h(st.gval)? };
            Ok(MonotonePoint { t, s_value: st.s_value, ds_dt })
        })
        .collect::<Result<Vec<_>>>()?;
    let slack: T = c(MONOTONE_SLACK);
    for w in pts.windows(2) {
        if w[1].s_value < w[0].s_value - slack {
            return Err(Error::MonotonicityViolation {
                t_prev: w[0].t.as_f64(),
                t_next: w[1].t.as_f64(),
                drop: (w[0].s_value - w[1].s_value).as_f64(),
            });
        }
    }
    Ok(pts)
}

/// `lim_{ε→0} W₁` by linear extrapolation from the smallest two rungs of
/// [`EPS_LADDER`], with the residual of `W = t𝖱(𝖦₀(W))` when the limit is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsZeroLimit<T> {
    pub w1: T,
    pub fixed_point_residual: Option<T>,
}

pub fn w1_at_zero<T: Real, L: SemigroupLaw<T> + ?Sized>(
    x0: &X0Spec<T>,
    lambda: Complex<T>,
    law: &L,
    t: T,
) -> Result<EpsZeroLimit<T>> {
    let ladder: Vec<T> = EPS_LADDER.map(|k| c(10f64.powi(-k))).collect();
    let ws = ladder
        .iter()
        .map(|&e| Ok(solve_w1(x0, lambda, law, t, e)?.w1))
        .collect::<Result<Vec<T>>>()?;
    let n = ws.len();
    let (e1, e2) = (ladder[n - 2], ladder[n - 1]);
    let (w1, w2) = (ws[n - 2], ws[n - 1]);
    let w0 = w2 - e2 * (w1 - w2) / (e1 - e2);
    // Limits below the smallest rung are indistinguishable from zero.
    if w0 <= e2 {
        return Ok(EpsZeroLimit { w1: w0.max(T::zero()), fixed_point_residual: None });
    }
    let res = (w0 - t * law.r_imag(g0(x0, lambda, w0)?)?).abs();
    Ok(EpsZeroLimit { w1: w0, fixed_point_residual: Some(res) })
}

/// Brown density of `X_t` at `λ`: five-point Laplacian of `S/2` divided by `2π`,
/// at regularization `ε` and stencil width `h`.
pub fn brown_density<T: Real, L: SemigroupLaw<T> + ?Sized>(
    x0: &X0Spec<T>,
    lambda: Complex<T>,
    law: &L,
    t: T,
    eps: T,
    h: T,
) -> Result<T> {
    let s = |l: Complex<T>| potential_s(x0, l, law, t, eps);
    let dx = Complex::new(h, T::zero());
    let dy = Complex::new(T::zero(), h);
    let lap = (s(lambda + dx)? + s(lambda - dx)? + s(lambda + dy)? + s(lambda - dy)? - c::<T>(4.0) * s(lambda)?) / (h * h);
    Ok(lap / (c::<T>(4.0) * T::PI()))
}

/// `θ_t(q) = 1 + tφ̂(q)/q`.
pub fn theta_t<T: Real, V: VoiculescuAxis<T> + ?Sized>(law: &V, t: T, q: T) -> Result<T> {
    if !(q > T::zero()) {
        return Err(Error::domain(format!("theta needs q > 0, got {q}")));
    }
    Ok(T::one() + t * law.phi_hat(q)? / q)
}

/// `F(t, r) = μ_{Y_t}(|z| ≤ r)` through `θ_t`.
pub fn radial_cdf_at<T: Real, V: VoiculescuAxis<T> + Sync + ?Sized>(law: &V, t: T, r: T) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::domain(format!("radial CDF needs t > 0, got {t}")));
    }
    let scaled = AxisFn(|q: T| Ok(t * law.phi_hat(q)?));
    Ok(radial_cdf_via_theta(&scaled, &[r])?.mass[0])
}

/// One evaluation of the radial PDE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPdePoint<T> {
    pub t: T,
    pub r: T,
    pub f: T,
    pub residual: T,
}

/// CSV with header `t,r,F,residual`.
pub fn pde_points_to_csv<T: Real>(points: &[RadialPdePoint<T>]) -> String {
    let mut s = String::from("t,r,F,residual\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", p.t, p.r, p.f, p.residual);
    }
    s
}

/// Central differences of `g` in both arguments, with one Richardson halving.
/// Every stencil value must lie strictly inside `(0, 1)`.
fn radial_partials<T: Real>(g: impl Fn(T, T) -> Result<T>, t: T, r: T) -> Result<(T, T, T)> {
    let f = g(t, r)?;
    let inside = |v: T| v > T::zero() && v < T::one();
    let (ht, hr) = (c::<T>(FD_STEP) * t, c::<T>(FD_STEP) * r);
    let two: T = c(2.0);
    let diff = |k: T| -> Result<(T, T)> {
        let vals = [g(t + ht * k, r)?, g(t - ht * k, r)?, g(t, r + hr * k)?, g(t, r - hr * k)?];
        if !vals.iter().all(|v| inside(*v)) {
            return Err(Error::domain(format!("(t, r) = ({t}, {r}) is outside the interior radial range")));
        }
        Ok(((vals[0] - vals[1]) / (two * ht * k), (vals[2] - vals[3]) / (two * hr * k)))
    };
    if !inside(f) || !(r > T::zero()) {
        return Err(Error::domain(format!("(t, r) = ({t}, {r}) is outside the interior radial range")));
    }
    let (dt1, dr1) = diff(T::one())?;
    let (dt2, dr2) = diff(c(0.5))?;
    let three: T = c(3.0);
    let four: T = c(4.0);
    Ok((f, (four * dt2 - dt1) / three, (four * dr2 - dr1) / three))
}

/// `|t∂ₜF + r(2F−1)/(2F)·∂ᵣF + 1 − F|` at `(t, r)`.
pub fn radial_pde_residual<T: Real, V: VoiculescuAxis<T> + Sync + ?Sized>(law: &V, t: T, r: T) -> Result<RadialPdePoint<T>> {
    let (f, ft, fr) = radial_partials(|tt, rr| radial_cdf_at(law, tt, rr), t, r)?;
    let two: T = c(2.0);
    let residual = (t * ft + r * (two * f - T::one()) / (two * f) * fr + T::one() - f).abs();
    Ok(RadialPdePoint { t, r, f, residual })
}

/// `|t∂ₜF̂ − r∂ᵣF̂/(2F̂) + 1 − F̂|` for `F̂(t, r) = F(t, tr)`.
pub fn radial_pde_residual_scaled<T: Real, V: VoiculescuAxis<T> + Sync + ?Sized>(
    law: &V,
    t: T,
    r: T,
) -> Result<RadialPdePoint<T>> {
    let (f, ft, fr) = radial_partials(|tt, rr| radial_cdf_at(law, tt, tt * rr), t, r)?;
    let two: T = c(2.0);
    let residual = (t * ft - r * fr / (two * f) + T::one() - f).abs();
    Ok(RadialPdePoint { t, r, f, residual })
}

pub fn radial_pde_scan<T: Real, V: VoiculescuAxis<T> + Sync + ?Sized>(
    law: &V,
    points: &[(T, T)],
) -> Result<Vec<RadialPdePoint<T>>> {
    points.par_iter().map(|&(t, r)| radial_pde_residual(law, t, r)).collect()
}

/// The five log-integrability diagnostics of a symmetric freely infinitely
/// divisible law with generating pair `(0, σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegrabilityReport<T> {
    /// `∫ log(1 + x²) dμ`, as `2∫₁^∞ (1/y − 𝖦(y)) dy`.
    pub mu_log: ExtendedReal<T>,
    /// `∫ log(1 + x²) dσ`.
    pub sigma_log: ExtendedReal<T>,
    /// `∫_T^∞ −φ̂(y)/y² dy`.
    pub phi_tail: ExtendedReal<T>,
    /// `∫₀^{1/T} 𝖱(y) dy`.
    pub r_head: ExtendedReal<T>,
    /// `∫_T^∞ (f(y) − y)/y² dy` with `F(iy) = i f(y)`.
    pub f_tail: ExtendedReal<T>,
}

impl<T: Real> LogIntegrabilityReport<T> {
    pub fn values(&self) -> [ExtendedReal<T>; 5] {
        [self.mu_log, self.sigma_log, self.phi_tail, self.r_head, self.f_tail]
    }

    /// All five finite or all five infinite.
    pub fn agree(&self) -> bool {
        let v = self.values();
        v.iter().all(|x| x.is_finite()) || v.iter().all(|x| !x.is_finite())
    }
}

/// `log(1 + x²)` without overflow.
fn log1p_sq<T: Real>(x: T) -> T {
    let x = x.abs();
    if x > T::one() {
        let r = T::one() / x;
        c::<T>(2.0) * x.ln() + (r * r).ln_1p()
    } else {
        (x * x).ln_1p()
    }
}

/// Cutoffs `L_j = 2^{j+2}` in `log y`, the last one clipped to what the
/// scalar type can exponentiate.
fn log_cutoffs<T: Real>() -> Vec<T> {
    let cap = (T::max_value().ln() * c(0.98)).min(c(700.0));
    let mut out: Vec<T> = Vec::new();
    let mut j = 0;
    loop {
        let l: T = c(2f64.powi(j + 2));
        if l >= cap {
            out.push(cap);
            return out;
        }
        out.push(l);
        j += 1;
    }
}

/// `∫_{u₀}^{∞} g(u) du` for a non-negative `g`, as partial integrals over the
/// cutoff ladder fed to divergence detection.
fn ladder_integral<T: Real>(g: impl Fn(T) -> Result<T>, u0: T) -> Result<ExtendedReal<T>> {
    let cuts: Vec<T> = log_cutoffs::<T>().into_iter().filter(|&l| l > u0).collect();
    let err = std::cell::RefCell::new(None);
    let mut partial = Vec::with_capacity(cuts.len());
    let mut acc = T::zero();
    let mut lo = u0;
    for &hi in &cuts {
        acc += integrate_interval(
            |u| match g(u) {
                Ok(v) => v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    T::zero()
                }
            },
            lo,
            hi,
        );
        partial.push(acc);
        lo = hi;
    }
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    if partial.is_empty() {
        return Ok(ExtendedReal::Finite(T::zero()));
    }
    Ok(divergence::classify(|j| partial[j.min(partial.len() - 1)], partial.len(), c(1e-10)))
}

/// `f(y) − y = −φ̂(f(y))`, solving `f + φ̂(f) = y` for `f ≥ y` in `log f`.
fn f_excess_from_pair<T: Real, V: VoiculescuAxis<T> + ?Sized>(law: &V, y: T) -> Result<T> {
    let g = |l: T| -> Result<T> {
        let q = l.exp();
        Ok(q + law.phi_hat(q)? - y)
    };
    let lo = y.ln();
    let mut hi = lo;
    let mut step: T = c(1.0 / 1024.0);
    while g(hi)? < T::zero() {
        hi += step;
        step *= c(2.0);
        if !hi.exp().is_finite() {
            return Err(Error::convergence("inversion of F on the imaginary axis", 0));
        }
    }
    let tol = Tolerance { rel: c(1e-15), abs: c(1e-15), max_iter: 200 };
    let l = bisect_fallible(g, lo, hi, tol)?;
    Ok(-law.phi_hat(l.exp())?)
}

/// `∫ log(1 + x²) dσ` with atoms accumulated over the cutoffs `log|x| ≤ 2^{j+1}`.
fn sigma_log_integral<T: Real>(pair: &GeneratingPair<T>) -> ExtendedReal<T> {
    let sigma = match &pair.sigma {
        Some(s) if pair.mass > T::zero() => s,
        _ => return ExtendedReal::Finite(T::zero()),
    };
    let half = sigma.half();
    let dens = half.refined_density_integral(&|x: T| log1p_sq(x));
    if !dens.is_finite() {
        return ExtendedReal::PosInfinity;
    }
    let atoms = half.atoms();
    let atoms_part = divergence::classify(
        |j| {
            let cut: T = c(2f64.powi(j as i32 + 1));
            atoms.iter().filter(|a| a.0.abs().ln() <= cut).map(|&(x, m)| m * log1p_sq(x)).sum::<T>()
        },
        12,
        c(1e-14),
    );
    match atoms_part {
        ExtendedReal::Finite(_) => {
            let all: T = atoms.iter().map(|&(x, m)| m * log1p_sq(x)).sum();
            match dens {
                ExtendedReal::Finite(d) => ExtendedReal::from_real(pair.mass * (d + all)),
                inf => inf,
            }
        }
        inf => inf,
    }
}

/// Estimates the five quantities whose finiteness is equivalent for a
/// symmetric freely infinitely divisible law `μ` with pair `(0, σ)`.
///
/// When `mu` is absent `F_μ` on the imaginary axis is recovered from the pair
/// by inverting `f + φ̂(f) = y`.
pub fn log_integrability_report<T: Real>(
    pair: &GeneratingPair<T>,
    mu: Option<&dyn CauchyTransform<T>>,
    big_t: T,
) -> Result<LogIntegrabilityReport<T>> {
    if !(big_t > T::zero()) {
        return Err(Error::domain(format!("T must be positive, got {big_t}")));
    }
    if !pair.is_symmetric() {
        return Err(Error::domain("log-integrability report needs a symmetric pair"));
    }
    let excess = |y: T| -> Result<T> {
        match mu {
            Some(m) => Ok(m.f_excess(y)),
            None => f_excess_from_pair(pair, y),
        }
    };
    let two: T = c(2.0);
    let log_t = big_t.ln();
    // 1/y − 𝖦(y) = e/(y(y + e)); in u = log y the weight y du cancels one y.
    let mu_log = ladder_integral(
        |u| {
            let y = u.exp();
            let e = excess(y)?;
            Ok(two * e / (y + e))
        },
        T::zero(),
    )?;
    let phi_tail = ladder_integral(
        |u| {
            let y = u.exp();
            Ok(-pair.phi_hat(y)? / y)
        },
        log_t,
    )?;
    // y = e^{−u}: ∫_{e^{−L}}^{1/T} 𝖱(y) dy = ∫_{log T}^{L} 𝖱(e^{−u}) e^{−u} du.
    let r_head = ladder_integral(
        |u| {
            let y = (-u).exp();
            Ok(pair.r_imag(y)? * y)
        },
        log_t,
    )?;
    let f_tail = ladder_integral(
        |u| {
            let y = u.exp();
            Ok(excess(y)? / y)
        },
        log_t,
    )?;
    Ok(LogIntegrabilityReport { mu_log, sigma_log: sigma_log_integral(pair), phi_tail, r_head, f_tail })
}
