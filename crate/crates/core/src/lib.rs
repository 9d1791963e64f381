//! Brown measures of R-diagonal operators, free additive convolution by
//! subordination, and the free-convolution semigroup of freely infinitely
//! divisible perturbations.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the `*F64`
//! aliases at the crate root fix the scalar to `f64`.

// `!(x > 0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod freeconv;
pub mod measure;
pub mod models;
pub mod numerics;
pub mod rdiag;
pub mod scalar;
pub mod semigroup;
pub mod transforms;

pub use error::{Error, Result};
pub use scalar::{Complex, Real};

pub type PositiveMeasureF64 = measure::PositiveMeasure<f64>;
pub type SymmetricMeasureF64 = measure::SymmetricMeasure<f64>;
pub type LineMeasureF64 = measure::LineMeasure<f64>;
