//! Analytic transforms: Cauchy `G`, reciprocal `F`, the `S`-transform,
//! and the Voiculescu transform on the imaginary axis or through a
//! generating pair.

mod axis;
mod cauchy;
mod pair;
mod stransform;

pub use axis::{g_imag_modulus, phi_imag_axis, r_imag, VoiculescuAxis};
pub use cauchy::{transform_gf, CauchyTransform, ClosedLaw};
pub use pair::GeneratingPair;
pub use stransform::{s_limit_at_minus_one, s_transform, STransform};
