//! Closed-form model catalog: semicircle, symmetric Cauchy, symmetric free
//! stable laws, Marchenko–Pastur, and the `X_{m,k}` family.

mod x0;
mod xmk;

use std::fmt;
use std::str::FromStr;

pub use x0::X0Spec;
pub use xmk::{
    lp_moment_xmk, lp_moment_xmk_quadrature, radial_cdf_xmk, s_transform_xmk, support_edge, w_of_log_s, w_of_s,
    xmk_density, xmk_map, xmk_modulus_sq_law, MAX_MATERIALIZED,
};

use crate::error::{Error, Result};
use crate::measure::{marchenko_pastur, ExtendedReal, PositiveMeasure, SymmetricMeasure};
use crate::numerics::quad::GradedMap;
use crate::scalar::{c, Real};
use crate::transforms::{phi_imag_axis, GeneratingPair, STransform, VoiculescuAxis};

/// Catalog entry. Each model names an R-diagonal element `Y` through the
/// symmetrized law `μ̃_{|Y|}` (or equivalently `μ_{|Y|²}`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec<T> {
    /// `μ̃_{|Y|}` semicircle of variance `t` (circular element scaled by `√t`).
    Semicircle { t: T },
    /// `μ̃_{|Y|}` symmetric Cauchy of scale `t`.
    SymCauchy { t: T },
    /// `μ̃_{|Y|}` symmetric free stable with `𝖱(y) = t·y^{(1−k)/(k+1)}`.
    SymFreeStable { k: u32, t: T },
    /// `μ_{|Y|²} = Π₁`, the circular element.
    MarchenkoPastur1,
    /// `Y = X_{m,k}`.
    Xmk { m: u32, k: u32 },
}

impl<T: Real> ModelSpec<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Semicircle { t } | ModelSpec::SymCauchy { t } | ModelSpec::SymFreeStable { t, .. } => {
                if !(t > T::zero()) || !t.is_finite() {
                    return Err(Error::domain(format!("model parameter t must be positive, got {t}")));
                }
            }
            ModelSpec::Xmk { m: 0, .. } => return Err(Error::domain("X_{m,k} needs m >= 1")),
            _ => {}
        }
        Ok(())
    }

    /// `(k, t)` when `μ̃_{|Y|}` is symmetric free stable with `𝖱(y) = t·y^{(1−k)/(k+1)}`.
    pub fn free_stable_form(&self) -> Option<(u32, T)> {
        match *self {
            ModelSpec::Semicircle { t } => Some((0, t)),
            ModelSpec::SymCauchy { t } => Some((1, t)),
            ModelSpec::SymFreeStable { k, t } => Some((k, t)),
            ModelSpec::MarchenkoPastur1 => Some((0, T::one())),
            ModelSpec::Xmk { m: 1, k } => Some((k, T::one())),
            ModelSpec::Xmk { .. } => None,
        }
    }

    /// `(m, k, σ)` with `S_{μ_{|Y|²}}(u) = (−u)^k / ((1+u)^m σ)`.
    pub fn s_params(&self) -> (u32, u32, T) {
        match *self {
            ModelSpec::Xmk { m, k } => (m, k, T::one()),
            _ => {
                let (k, t) = self.free_stable_form().expect("free stable model");
                (1, k, t.powi(k as i32 + 1))
            }
        }
    }

    /// Law `μ_{|Y|²}`; free stable entries are dilations of `X_{1,k}`.
    pub fn mu_sq(&self) -> Result<PositiveMeasure<T>> {
        self.validate()?;
        match *self {
            ModelSpec::MarchenkoPastur1 => Ok(marchenko_pastur()),
            ModelSpec::Xmk { m, k } => xmk_modulus_sq_law(m, k),
            _ => {
                let (_, k, sigma) = self.s_params();
                if k == 0 {
                    Ok(marchenko_pastur().dilate(sigma))
                } else {
                    Ok(xmk_modulus_sq_law(1, k)?.dilate(sigma))
                }
            }
        }
    }

    /// `μ̃_{|Y|}`.
    pub fn symmetrized_modulus(&self) -> Result<SymmetricMeasure<T>> {
        Ok(self.mu_sq()?.sqrt_pushforward().symmetrize())
    }

    /// Free generating pair of `μ̃_{|Y|}` when `Y` is free stable.
    pub fn pair(&self) -> Option<GeneratingPair<T>> {
        let (k, t) = self.free_stable_form()?;
        Some(match k {
            0 => GeneratingPair::semicircle(t),
            1 => GeneratingPair::cauchy(t),
            _ => stable_pair(k, t),
        })
    }

    /// `H_μ(y) = ∫₀^y 𝖱_μ`, closed form for free stable models.
    pub fn hamiltonian_integral(&self, y: T) -> Option<T> {
        let (k, t) = self.free_stable_form()?;
        let kp1 = T::from_u32(k + 1).unwrap();
        Some(t * kp1 * c(0.5) * y.powf(c::<T>(2.0) / kp1))
    }

    /// `d𝖱/dy`, closed form for free stable models.
    pub fn r_imag_derivative(&self, y: T) -> Option<T> {
        let (k, t) = self.free_stable_form()?;
        let kp1 = T::from_u32(k + 1).unwrap();
        let e = (T::one() - T::from_u32(k).unwrap()) / kp1;
        Some(t * e * y.powf(e - T::one()))
    }
}

/// Pair of the symmetric free stable law of index `α = 2/(k+1)`:
/// `σ(ds) = t·(sin(πα/2)/π)·|s|^{1−α}/(1+s²) ds`, a measure of mass `t`.
fn stable_pair<T: Real>(k: u32, t: T) -> GeneratingPair<T> {
    let alpha = c::<T>(2.0) / T::from_u32(k + 1).unwrap();
    let norm = c::<T>(2.0) * (T::FRAC_PI_2() * alpha).sin() / T::PI();
    let e = T::one() - alpha;
    let half = PositiveMeasure::from_density(
        move |s: T| norm * s.powf(e) / (T::one() + s * s),
        GradedMap::half_line(T::zero(), T::one(), k as i32 + 1, k as i32 + 1),
    )
    .expect("free stable generating density has unit mass");
    GeneratingPair::new(T::zero(), t, half.symmetrize()).expect("valid pair")
}

impl<T: Real> VoiculescuAxis<T> for ModelSpec<T> {
    fn phi_hat(&self, v: T) -> Result<T> {
        if !(v > T::zero()) {
            return Err(Error::domain(format!("phi on the imaginary axis needs v > 0, got {v}")));
        }
        match self.free_stable_form() {
            Some((k, t)) => {
                let kp1 = T::from_u32(k + 1).unwrap();
                let e = (T::from_u32(k).unwrap() - T::one()) / kp1;
                Ok(-t * v.powf(e))
            }
            None => phi_imag_axis(&self.symmetrized_modulus()?, v),
        }
    }

    fn r_imag(&self, y: T) -> Result<T> {
        if !(y > T::zero()) {
            return Err(Error::domain(format!("R on the imaginary axis needs y > 0, got {y}")));
        }
        match self.free_stable_form() {
            Some((k, t)) => {
                let kp1 = T::from_u32(k + 1).unwrap();
                let e = (T::one() - T::from_u32(k).unwrap()) / kp1;
                Ok(t * y.powf(e))
            }
            None => Ok(-self.phi_hat(T::one() / y)?),
        }
    }
}

impl<T: Real> STransform<T> for ModelSpec<T> {
    fn atom0(&self) -> T {
        T::zero()
    }

    fn s(&self, u: T) -> Result<T> {
        let (m, k, sigma) = self.s_params();
        Ok(s_transform_xmk(m, k, u)? / sigma)
    }

    fn m2(&self) -> ExtendedReal<T> {
        let (_, k, sigma) = self.s_params();
        if k == 0 {
            ExtendedReal::Finite(sigma)
        } else {
            ExtendedReal::PosInfinity
        }
    }

    fn m_neg2(&self) -> ExtendedReal<T> {
        ExtendedReal::PosInfinity
    }

    fn one_plus_s_inverse(&self, target: T) -> Result<T> {
        if !(target > T::zero()) {
            return Err(Error::domain("S-transform values are positive"));
        }
        let (m, k, sigma) = self.s_params();
        Ok(radial_cdf_xmk(m, k, (sigma * target).sqrt().recip()))
    }
}

fn parse_params(body: &str) -> Result<Vec<(String, String)>> {
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got '{kv}'")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn take<P: FromStr>(params: &[(String, String)], key: &str) -> Result<P> {
    let raw = params
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v)
        .ok_or_else(|| Error::Parse(format!("missing parameter '{key}'")))?;
    raw.parse().map_err(|_| Error::Parse(format!("bad value '{raw}' for '{key}'")))
}

fn only(params: &[(String, String)], keys: &[&str]) -> Result<()> {
    match params.iter().find(|(k, _)| !keys.contains(&k.as_str())) {
        Some((k, _)) => Err(Error::Parse(format!("unknown parameter '{k}'"))),
        None => Ok(()),
    }
}

impl<T: Real> FromStr for ModelSpec<T> {
    type Err = Error;

    /// `semicircle:t=1`, `cauchy:t=2`, `fstable:k=2,t=1`, `xmk:m=2,k=1`, `mp1`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        let params = parse_params(body)?;
        let t = |p: &[(String, String)]| take::<f64>(p, "t").map(T::lit);
        let spec = match name.trim() {
            "semicircle" => {
                only(&params, &["t"])?;
                ModelSpec::Semicircle { t: t(&params)? }
            }
            "cauchy" => {
                only(&params, &["t"])?;
                ModelSpec::SymCauchy { t: t(&params)? }
            }
            "fstable" => {
                only(&params, &["k", "t"])?;
                ModelSpec::SymFreeStable { k: take(&params, "k")?, t: t(&params)? }
            }
            "mp1" => {
                only(&params, &[])?;
                ModelSpec::MarchenkoPastur1
            }
            "xmk" => {
                only(&params, &["m", "k"])?;
                ModelSpec::Xmk { m: take(&params, "m")?, k: take(&params, "k")? }
            }
            other => return Err(Error::Parse(format!("unknown model '{other}'"))),
        };
        spec.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(spec)
    }
}

impl<T: Real> fmt::Display for ModelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Semicircle { t } => write!(f, "semicircle:t={t}"),
            ModelSpec::SymCauchy { t } => write!(f, "cauchy:t={t}"),
            ModelSpec::SymFreeStable { k, t } => write!(f, "fstable:k={k},t={t}"),
            ModelSpec::MarchenkoPastur1 => write!(f, "mp1"),
            ModelSpec::Xmk { m, k } => write!(f, "xmk:m={m},k={k}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Complex;
    use crate::transforms::CauchyTransform;

    #[test]
    fn parse_and_print() {
        for s in ["semicircle:t=1", "cauchy:t=2", "fstable:k=2,t=1", "xmk:m=2,k=1", "mp1"] {
            let m: ModelSpec<f64> = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("semicircle:t=-1".parse::<ModelSpec<f64>>().is_err());
        assert!("semicircle:s=1".parse::<ModelSpec<f64>>().is_err());
        assert!("xmk:m=0,k=1".parse::<ModelSpec<f64>>().is_err());
        assert!("banana".parse::<ModelSpec<f64>>().is_err());
    }

    #[test]
    fn closed_r_transforms() {
        let sc = ModelSpec::Semicircle { t: 1.0f64 };
        assert!((sc.r_imag(3.0).unwrap() - 3.0).abs() < 1e-15);
        assert!((ModelSpec::SymCauchy { t: 1.0f64 }.r_imag(0.3).unwrap() - 1.0).abs() < 1e-15);
        let fs = ModelSpec::SymFreeStable { k: 3, t: 1.0f64 };
        assert!((fs.r_imag(4.0).unwrap() - 0.5).abs() < 1e-15);
        let fs1 = ModelSpec::SymFreeStable { k: 1, t: 1.0f64 };
        for y in [0.1, 1.0, 7.0] {
            assert_eq!(fs1.r_imag(y).unwrap(), 1.0);
        }
    }

    #[test]
    fn pairs_match_closed_phi() {
        for spec in [
            ModelSpec::Semicircle { t: 1.5f64 },
            ModelSpec::SymCauchy { t: 0.7 },
            ModelSpec::SymFreeStable { k: 2, t: 1.0 },
            ModelSpec::SymFreeStable { k: 3, t: 2.0 },
        ] {
            let pair = spec.pair().unwrap();
            for v in [0.5, 2.0, 10.0] {
                let a = spec.phi_hat(v).unwrap();
                let b = pair.phi_hat(v).unwrap();
                assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{spec} v={v}: {a} vs {b}");
                let full = pair.phi(Complex::new(0.0, v)).unwrap();
                assert!((full.im - a).abs() < 1e-8 * (1.0 + a.abs()));
            }
        }
        let p = ModelSpec::SymCauchy { t: 1.0f64 }.pair().unwrap();
        assert!((p.phi(Complex::new(0.0, 2.0)).unwrap() - Complex::new(0.0, -1.0)).norm() < 1e-8);
    }

    #[test]
    fn materialized_phi_matches_closed() {
        for spec in [ModelSpec::Semicircle { t: 1.0f64 }, ModelSpec::SymCauchy { t: 1.0 }] {
            let sym = spec.symmetrized_modulus().unwrap();
            for v in [2.5, 5.0, 20.0] {
                let a = spec.phi_hat(v).unwrap();
                let b = phi_imag_axis(&sym, v).unwrap();
                assert!((a - b).abs() < 1e-8, "{spec} v={v}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn cauchy_model_modulus_is_cauchy() {
        let sym = ModelSpec::SymCauchy { t: 2.0f64 }.symmetrized_modulus().unwrap();
        let z = Complex::new(0.3, 1.1);
        let exact = crate::transforms::ClosedLaw::Cauchy(2.0).cauchy(z);
        assert!((sym.cauchy(z) - exact).norm() < 1e-9);
    }

    #[test]
    fn closed_s_inverse() {
        let x11 = ModelSpec::<f64>::Xmk { m: 1, k: 1 };
        assert!((x11.one_plus_s_inverse(1.0).unwrap() - 0.5).abs() < 1e-15);
        let sc = ModelSpec::Semicircle { t: 2.0f64 };
        // circular law of radius √2: F(r) = r²/2
        assert!((sc.one_plus_s_inverse(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(sc.m2(), ExtendedReal::Finite(2.0));
    }
}
