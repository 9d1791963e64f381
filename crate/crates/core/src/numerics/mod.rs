//! Numerical building blocks: bracketed root finding, Gauss–Legendre
//! quadrature on graded panels, polynomial roots, divergence detection.

pub mod divergence;
pub mod poly;
pub mod quad;
pub mod roots;
