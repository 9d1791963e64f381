use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measure::{LineMeasure, PositiveMeasure};
use crate::scalar::{Complex, Real};

use super::ModelSpec;

/// Initial condition `X₀` of a perturbation problem.
#[derive(Debug, Clone)]
pub enum X0Spec<T: Real> {
    /// `X₀ = c·1`.
    Scalar(Complex<T>),
    /// Self-adjoint `X₀` with the given spectral law.
    SelfAdjoint(LineMeasure<T>),
    /// R-diagonal `X₀` with `μ_{|X₀|}` given.
    RDiagonalRadial(PositiveMeasure<T>),
}

impl<T: Real> X0Spec<T> {
    pub fn is_scalar(&self) -> bool {
        match self {
            X0Spec::Scalar(_) => true,
            X0Spec::SelfAdjoint(m) => m.point_mass_location().is_some(),
            X0Spec::RDiagonalRadial(m) => m.point_mass_location() == Some(T::zero()),
        }
    }
}

fn num<T: Real>(s: &str) -> Result<T> {
    s.trim().parse::<f64>().map(T::lit).map_err(|_| Error::Parse(format!("bad number '{s}'")))
}

impl<T: Real> FromStr for X0Spec<T> {
    type Err = Error;

    /// `scalar:re[,im]`, `atoms:x@m,...` (self-adjoint), `rdiag:<model>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s.split_once(':').ok_or_else(|| Error::Parse(format!("bad X0 spec '{s}'")))?;
        match kind.trim() {
            "scalar" => {
                let parts: Vec<&str> = body.split(',').collect();
                let re = num(parts[0])?;
                let im = match parts.get(1) {
                    Some(p) => num(p)?,
                    None => T::zero(),
                };
                if parts.len() > 2 {
                    return Err(Error::Parse("scalar takes at most two components".into()));
                }
                Ok(X0Spec::Scalar(Complex::new(re, im)))
            }
            "atoms" => {
                let atoms = body
                    .split(',')
                    .map(|a| {
                        let (x, m) = a.split_once('@').ok_or_else(|| Error::Parse(format!("expected x@m, got '{a}'")))?;
                        Ok((num(x)?, num(m)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(X0Spec::SelfAdjoint(LineMeasure::from_atoms(atoms)?))
            }
            "rdiag" => {
                let model: ModelSpec<T> = body.parse()?;
                Ok(X0Spec::RDiagonalRadial(model.mu_sq()?.sqrt_pushforward()))
            }
            other => Err(Error::Parse(format!("unknown X0 kind '{other}'"))),
        }
    }
}
