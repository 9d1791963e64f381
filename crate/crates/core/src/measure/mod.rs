//! Probability measures on `[0, ∞)` and symmetric measures on `ℝ`.
//!
//! A measure is a finite atomic part plus a density sampled on quadrature
//! nodes `(x, f(x), w)`. When the density is known as a function, the measure
//! also keeps its [`DensityChart`] so integrals can be refined (and divergent
//! ones detected) instead of trusting a single node set.

mod chart;
mod json;
mod line;
mod symmetric;

use std::fmt;

pub use chart::{DensityChart, DensityFn};
pub use line::LineMeasure;
pub use symmetric::SymmetricMeasure;

use crate::error::{Error, Result};
use crate::numerics::divergence;
use crate::numerics::quad::GradedMap;
use crate::scalar::{c, Real};

/// Default number of panels (64 nodes each) for density grids.
pub const DEFAULT_PANELS: usize = 64;
/// Tolerance on the total mass of a probability measure.
pub const MASS_TOL: f64 = 1e-10;
/// Mass tolerance for the scalar type: [`MASS_TOL`] or a few hundred ulps, whichever is larger.
pub fn mass_tol<T: Real>() -> T {
    T::lit(MASS_TOL).max(T::epsilon() * c(256.0))
}

/// Relative agreement between refinements that counts as converged.
pub const REFINE_TOL: f64 = 1e-10;
/// Panel doublings attempted by refinement-based integrals.
pub const REFINE_LEVELS: usize = 7;

/// Non-negative real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal<T> {
    Finite(T),
    PosInfinity,
}

impl<T: Real> ExtendedReal<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::PosInfinity => None,
        }
    }

    /// The value as a float, `+∞` included.
    pub fn to_real(self) -> T {
        self.finite().unwrap_or_else(T::infinity)
    }

    pub fn from_real(v: T) -> Self {
        if v.is_infinite() && v > T::zero() {
            ExtendedReal::PosInfinity
        } else {
            ExtendedReal::Finite(v)
        }
    }

    pub fn plus(self, v: T) -> Self {
        match self {
            ExtendedReal::Finite(a) => ExtendedReal::from_real(a + v),
            ExtendedReal::PosInfinity => ExtendedReal::PosInfinity,
        }
    }
}

impl<T: Real> fmt::Display for ExtendedReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{:.16e}", v),
            ExtendedReal::PosInfinity => write!(f, "inf"),
        }
    }
}

/// Density node: location, density value, quadrature weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node<T> {
    pub x: T,
    pub f: T,
    pub w: T,
}

impl<T: Real> Node<T> {
    #[inline]
    pub fn mass(&self) -> T {
        self.f * self.w
    }
}

/// Probability measure on `[0, ∞)`.
#[derive(Clone)]
pub struct PositiveMeasure<T: Real> {
    atom0: T,
    atoms: Vec<(T, T)>,
    nodes: Vec<Node<T>>,
    chart: Option<DensityChart<T>>,
    panels: usize,
}

impl<T: Real> fmt::Debug for PositiveMeasure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PositiveMeasure")
            .field("atom0", &self.atom0)
            .field("atoms", &self.atoms)
            .field("nodes", &self.nodes.len())
            .field("refinable", &self.chart.is_some())
            .finish()
    }
}

fn sort_atoms<T: Real>(atoms: impl IntoIterator<Item = (T, T)>) -> Result<(T, Vec<(T, T)>)> {
    let mut zero = T::zero();
    let mut out: Vec<(T, T)> = Vec::new();
    for (x, m) in atoms {
        if !(x >= T::zero()) || !x.is_finite() || !(m >= T::zero()) {
            return Err(Error::domain(format!("invalid atom ({x}, {m}) for a measure on [0, inf)")));
        }
        if m == T::zero() {
            continue;
        }
        if x == T::zero() {
            zero += m;
        } else {
            out.push((x, m));
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut merged: Vec<(T, T)> = Vec::with_capacity(out.len());
    for (x, m) in out {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 += m,
            _ => merged.push((x, m)),
        }
    }
    Ok((zero, merged))
}

impl<T: Real> PositiveMeasure<T> {
    /// `δ_x`.
    pub fn point_mass(x: T) -> Result<Self> {
        Self::from_atoms([(x, T::one())])
    }

    /// Purely atomic measure; an atom at `0` goes to the kernel mass.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let (atom0, atoms) = sort_atoms(atoms)?;
        Self::assemble(atom0, atoms, Vec::new(), None, DEFAULT_PANELS)
    }

    /// Atomic part plus a density described by `chart`, sampled with `panels` panels.
    pub fn with_density(
        atoms: impl IntoIterator<Item = (T, T)>,
        chart: DensityChart<T>,
        panels: usize,
    ) -> Result<Self> {
        let (atom0, atoms) = sort_atoms(atoms)?;
        let nodes = chart.nodes(panels);
        Self::assemble(atom0, atoms, nodes, Some(chart), panels)
    }

    /// Pointwise density on a graded map, default resolution.
    pub fn from_density<F>(density: F, map: GradedMap<T>) -> Result<Self>
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        Self::with_density([], DensityChart::pointwise(density, map), DEFAULT_PANELS)
    }

    /// Raw constructor from explicit nodes (no refinement possible).
    pub fn from_nodes(atom0: T, atoms: Vec<(T, T)>, nodes: Vec<Node<T>>) -> Result<Self> {
        let (z, atoms) = sort_atoms(atoms)?;
        let mut nodes = nodes;
        nodes.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        Self::assemble(atom0 + z, atoms, nodes, None, 0)
    }

    fn assemble(
        atom0: T,
        atoms: Vec<(T, T)>,
        nodes: Vec<Node<T>>,
        chart: Option<DensityChart<T>>,
        panels: usize,
    ) -> Result<Self> {
        if !(atom0 >= T::zero()) {
            return Err(Error::domain("negative mass at zero"));
        }
        for pair in nodes.windows(2) {
            if !(pair[0].x < pair[1].x) {
                return Err(Error::domain("density nodes not strictly increasing"));
            }
        }
        for n in &nodes {
            if !(n.x > T::zero()) || !(n.f >= T::zero()) || !(n.w >= T::zero()) {
                return Err(Error::domain(format!("invalid density node ({}, {}, {})", n.x, n.f, n.w)));
            }
        }
        let m = PositiveMeasure { atom0, atoms, nodes, chart, panels };
        let defect = (m.total_mass() - T::one()).abs();
        if defect > mass_tol::<T>() {
            return Err(Error::MassDefect { defect: defect.as_f64() });
        }
        Ok(m)
    }

    pub fn atom0(&self) -> T {
        self.atom0
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn chart(&self) -> Option<&DensityChart<T>> {
        self.chart.as_ref()
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn total_mass(&self) -> T {
        self.atom0 + self.atoms.iter().map(|a| a.1).sum::<T>() + self.nodes.iter().map(Node::mass).sum::<T>()
    }

    /// True when the measure is a single atom (including `δ₀`).
    pub fn is_point_mass(&self) -> bool {
        let tol: T = mass_tol();
        self.nodes.iter().map(Node::mass).sum::<T>() <= tol
            && (self.atom0 >= T::one() - tol || self.atoms.iter().any(|a| a.1 >= T::one() - tol))
    }

    /// Location of the atom carrying all the mass, if any.
    pub fn point_mass_location(&self) -> Option<T> {
        if !self.is_point_mass() {
            return None;
        }
        if self.atom0 >= T::one() - mass_tol::<T>() {
            return Some(T::zero());
        }
        self.atoms.iter().find(|a| a.1 >= T::one() - mass_tol::<T>()).map(|a| a.0)
    }

    /// `∫ g dμ` on the stored nodes.
    pub fn integrate<F: Fn(T) -> T>(&self, g: F) -> T {
        let mut s = if self.atom0 > T::zero() { self.atom0 * g(T::zero()) } else { T::zero() };
        for &(x, m) in &self.atoms {
            s += m * g(x);
        }
        for n in &self.nodes {
            s += n.mass() * g(n.x);
        }
        s
    }

    /// `∫ g dμ` over the atoms and the continuous part separately.
    fn split_integral<F: Fn(T) -> T>(&self, g: &F) -> (T, T) {
        let atoms = self.atoms.iter().map(|&(x, m)| m * g(x)).sum::<T>();
        let dens = self.nodes.iter().map(|n| n.mass() * g(n.x)).sum::<T>();
        (atoms, dens)
    }

    /// Continuous-part integral of a non-negative `g`, refined with divergence detection.
    pub fn refined_density_integral<F: Fn(T) -> T>(&self, g: &F) -> ExtendedReal<T> {
        let base = self.split_integral(g).1;
        match &self.chart {
            None => ExtendedReal::from_real(base),
            Some(chart) => divergence::classify(
                |level| {
                    if level == 0 {
                        base
                    } else {
                        chart.nodes(self.panels << level).iter().map(|n| n.mass() * g(n.x)).sum()
                    }
                },
                REFINE_LEVELS,
                c(REFINE_TOL),
            ),
        }
    }

    /// `𝔪_p = ∫ t^p dμ(t)`, possibly `+∞`.
    pub fn moment_p(&self, p: T) -> ExtendedReal<T> {
        if p < T::zero() && self.atom0 > T::zero() {
            return ExtendedReal::PosInfinity;
        }
        let zero_part = if p == T::zero() { self.atom0 } else { T::zero() };
        let g = |x: T| x.powf(p);
        let atoms: T = self.atoms.iter().map(|&(x, m)| m * x.powf(p)).sum();
        self.refined_density_integral(&g).plus(zero_part + atoms)
    }

    /// `∫ log⁺ t dμ(t)`. Atoms and density are accumulated over the log-scale
    /// cutoffs `log t ≤ 2^j`, so an unbounded atomic tail is detected as
    /// divergent even though each cutoff sum is finite.
    pub fn log_plus_integral(&self) -> ExtendedReal<T> {
        let log_plus = |x: T| if x > T::one() { x.ln() } else { T::zero() };
        let dens = self.refined_density_integral(&log_plus);
        if !dens.is_finite() {
            return dens;
        }
        let atoms = &self.atoms;
        let res = divergence::classify(
            |j| {
                let cut: T = c(2f64.powi(j as i32 + 1));
                atoms.iter().filter(|a| log_plus(a.0) <= cut).map(|&(x, m)| m * log_plus(x)).sum::<T>()
            },
            12,
            c(1e-14),
        );
        match res {
            ExtendedReal::Finite(_) => {
                let all: T = atoms.iter().map(|&(x, m)| m * log_plus(x)).sum();
                dens.plus(all)
            }
            inf => inf,
        }
    }

    /// `μ([0, x])`.
    pub fn cdf(&self, x: T) -> T {
        if x < T::zero() {
            return T::zero();
        }
        let mut s = self.atom0;
        for &(a, m) in &self.atoms {
            if a <= x {
                s += m;
            }
        }
        s + match &self.chart {
            Some(chart) => chart.mass_below(x),
            None => self.nodes.iter().filter(|n| n.x <= x).map(Node::mass).sum(),
        }
    }

    /// Image measure under `t ↦ t²`.
    pub fn square_pushforward(&self) -> PositiveMeasure<T> {
        self.map_nodes(true, |x| x * x, |n| Node { x: n.x * n.x, f: n.f / (n.x + n.x), w: n.w * (n.x + n.x) })
    }

    /// Image measure under `t ↦ √t`; left inverse of [`Self::square_pushforward`].
    pub fn sqrt_pushforward(&self) -> PositiveMeasure<T> {
        self.map_nodes(
            false,
            |x| x.sqrt(),
            |n| {
                let y = n.x.sqrt();
                Node { x: y, f: n.f * (y + y), w: n.w / (y + y) }
            },
        )
    }

    fn map_nodes(
        &self,
        square: bool,
        point: impl Fn(T) -> T,
        node: impl Fn(&Node<T>) -> Node<T>,
    ) -> PositiveMeasure<T> {
        PositiveMeasure {
            atom0: self.atom0,
            atoms: self.atoms.iter().map(|&(x, m)| (point(x), m)).collect(),
            nodes: self.nodes.iter().map(node).collect(),
            chart: self.chart.as_ref().map(|ch| if square { ch.squared() } else { ch.sqrt() }),
            panels: self.panels,
        }
    }

    /// Image measure under `t ↦ a·t`, `a > 0`.
    pub fn dilate(&self, a: T) -> PositiveMeasure<T> {
        assert!(a > T::zero(), "dilation factor must be positive");
        PositiveMeasure {
            atom0: self.atom0,
            atoms: self.atoms.iter().map(|&(x, m)| (a * x, m)).collect(),
            nodes: self.nodes.iter().map(|n| Node { x: a * n.x, f: n.f / a, w: n.w * a }).collect(),
            chart: self.chart.as_ref().map(|ch| ch.dilated(a)),
            panels: self.panels,
        }
    }

    /// Symmetrization `μ̃(B) = ½(μ(B) + μ(−B))`.
    pub fn symmetrize(&self) -> SymmetricMeasure<T> {
        SymmetricMeasure::from_half(self.clone())
    }

    /// Nodes regenerated at `panels` panels; the stored set when not refinable.
    pub fn nodes_at(&self, panels: usize) -> Vec<Node<T>> {
        match &self.chart {
            Some(ch) => ch.nodes(panels),
            None => self.nodes.clone(),
        }
    }

    /// Same measure resampled at another panel count.
    pub fn resampled(&self, panels: usize) -> PositiveMeasure<T> {
        match &self.chart {
            Some(ch) => PositiveMeasure { nodes: ch.nodes(panels), panels, ..self.clone() },
            None => self.clone(),
        }
    }

    /// Largest point of the support that the representation can see.
    pub fn support_max(&self) -> T {
        let a = self.atoms.last().map(|a| a.0).unwrap_or(T::zero());
        let n = self.nodes.last().map(|n| n.x).unwrap_or(T::zero());
        a.max(n)
    }

    pub fn to_json(&self) -> String {
        json::positive_to_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        json::positive_from_json(s)
    }
}

/// `𝔪_p` as a free function.
pub fn moment_p<T: Real>(mu: &PositiveMeasure<T>, p: T) -> ExtendedReal<T> {
    mu.moment_p(p)
}

/// Symmetrization as a free function.
pub fn symmetrize<T: Real>(mu: &PositiveMeasure<T>) -> SymmetricMeasure<T> {
    mu.symmetrize()
}

/// `∫ log⁺ dμ` as a free function.
pub fn log_plus_integral<T: Real>(mu: &PositiveMeasure<T>) -> ExtendedReal<T> {
    mu.log_plus_integral()
}

/// Marchenko–Pastur law `Π₁` with density `(1/2π)√((4−x)/x)` on `(0, 4]`.
pub fn marchenko_pastur<T: Real>() -> PositiveMeasure<T> {
    let density = |x: T| {
        if x <= T::zero() || x >= c(4.0) {
            T::zero()
        } else {
            ((c::<T>(4.0) - x) / x).sqrt() / T::TAU()
        }
    };
    PositiveMeasure::from_density(density, GradedMap::bounded(T::zero(), c(4.0), 4, 2))
        .expect("Marchenko-Pastur density has unit mass")
}

/// Law of `|c⁻¹|²`, the image of `Π₁` under `x ↦ 1/x`: density
/// `√(4y − 1)/(2πy²)` on `[1/4, ∞)`. Its `S`-transform is `−u`.
pub fn inverse_marchenko_pastur<T: Real>() -> PositiveMeasure<T> {
    let lo: T = c(0.25);
    let density = move |y: T| {
        if y <= lo {
            T::zero()
        } else {
            (c::<T>(4.0) * y - T::one()).sqrt() / (T::TAU() * y * y)
        }
    };
    PositiveMeasure::from_density(density, GradedMap::half_line(lo, T::one(), 2, 4))
        .expect("inverse Marchenko-Pastur density has unit mass")
}

/// Quarter-circle law of `|c|`: density `(1/π)√(4−x²)` on `[0, 2]`.
pub fn quarter_circle<T: Real>() -> PositiveMeasure<T> {
    let density = |x: T| {
        if x <= T::zero() || x >= c(2.0) {
            T::zero()
        } else {
            (c::<T>(4.0) - x * x).sqrt() / T::PI()
        }
    };
    PositiveMeasure::from_density(density, GradedMap::bounded(T::zero(), c(2.0), 1, 2))
        .expect("quarter-circle density has unit mass")
}

/// Uniform law on `[a, b] ⊂ [0, ∞)`.
pub fn uniform<T: Real>(a: T, b: T) -> Result<PositiveMeasure<T>> {
    if !(a >= T::zero() && b > a) {
        return Err(Error::domain("uniform law needs 0 <= a < b"));
    }
    let h = T::one() / (b - a);
    PositiveMeasure::from_density(move |_| h, GradedMap::uniform(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn marchenko_pastur_moments() {
        let mp = marchenko_pastur::<f64>();
        assert!((mp.total_mass() - 1.0).abs() < 1e-12);
        assert!((mp.moment_p(1.0).to_real() - 1.0).abs() < 1e-10);
        assert!((mp.moment_p(2.0).to_real() - 2.0).abs() < 1e-10);
        assert_eq!(mp.moment_p(-1.0), ExtendedReal::PosInfinity);
        // 𝔪_{-1/4} = 4^{3/4} B(1/4, 3/2) / 2π
        use statrs::function::gamma::gamma;
        let beta = gamma(0.25) * gamma(1.5) / gamma(1.75);
        let exact = 4f64.powf(0.75) * beta / std::f64::consts::TAU;
        assert!((mp.moment_p(-0.25).to_real() - exact).abs() < 1e-9 * exact);
        assert_eq!(mp.moment_p(-0.5), ExtendedReal::PosInfinity);
    }

    #[test]
    fn negative_moment_of_unit_atom() {
        let d = PositiveMeasure::point_mass(1.0f64).unwrap();
        assert_eq!(d.moment_p(-2.0), ExtendedReal::Finite(1.0));
        let z = PositiveMeasure::point_mass(0.0f64).unwrap();
        assert_eq!(z.moment_p(-0.5), ExtendedReal::PosInfinity);
        assert_eq!(z.moment_p(0.0), ExtendedReal::Finite(1.0));
    }

    #[test]
    fn symmetrized_sqrt_of_mp_is_semicircle() {
        let sym = marchenko_pastur::<f64>().sqrt_pushforward().symmetrize();
        for i in 0..1000 {
            let x = -2.2 + 4.4 * i as f64 / 999.0;
            let xc = x.clamp(-2.0, 2.0);
            let sc = 0.5 + (xc * (4.0 - xc * xc).sqrt() / 4.0 + (xc / 2.0).asin()) / std::f64::consts::PI;
            assert!((sym.cdf(x) - sc).abs() < 1e-9, "x={x}: {} vs {sc}", sym.cdf(x));
        }
    }

    #[test]
    fn quarter_circle_squares_to_mp() {
        let sq = quarter_circle::<f64>().square_pushforward();
        let mp = marchenko_pastur::<f64>();
        for i in 0..=100 {
            let x = 4.0 * i as f64 / 100.0;
            assert!((sq.cdf(x) - mp.cdf(x)).abs() < 1e-8, "{x}");
        }
    }

    #[test]
    fn square_sqrt_round_trip_is_nodewise() {
        let mp = marchenko_pastur::<f64>();
        let back = mp.square_pushforward().sqrt_pushforward();
        for (a, b) in mp.nodes().iter().zip(back.nodes()) {
            assert_eq!(a.x, b.x);
            assert!((a.mass() - b.mass()).abs() <= 1e-15 * a.mass());
        }
        let d = PositiveMeasure::point_mass(2.0f64).unwrap().square_pushforward();
        assert_eq!(d.atoms(), &[(4.0, 1.0)]);
    }

    #[test]
    fn log_plus_examples() {
        let one = PositiveMeasure::point_mass(1.0f64).unwrap();
        assert_eq!(one.log_plus_integral(), ExtendedReal::Finite(0.0));
        let e = PositiveMeasure::point_mass(std::f64::consts::E).unwrap();
        assert!((e.log_plus_integral().to_real() - 1.0).abs() < 1e-15);
        let mut atoms: Vec<(f64, f64)> = (1..=9).map(|n| ((2f64.powi(n)).exp(), 2f64.powi(-n))).collect();
        atoms.push((1.0, 2f64.powi(-9)));
        let heavy = PositiveMeasure::from_atoms(atoms).unwrap();
        assert_eq!(heavy.log_plus_integral(), ExtendedReal::PosInfinity);
    }

    #[test]
    fn uniform_moments() {
        let u = uniform(1.0f64, 2.0).unwrap();
        assert!((u.moment_p(-1.0).to_real() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn f32_measure() {
        let mp = marchenko_pastur::<f32>();
        assert!((mp.moment_p(1.0).to_real() - 1.0).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn mass_conserved(xs in proptest::collection::vec((0.0f64..10.0, 0.01f64..1.0), 1..8)) {
            let total: f64 = xs.iter().map(|a| a.1).sum();
            let mu = PositiveMeasure::from_atoms(xs.iter().map(|&(x, m)| (x, m / total))).unwrap();
            prop_assert!((mu.square_pushforward().total_mass() - 1.0).abs() < 1e-10);
            prop_assert!((mu.sqrt_pushforward().total_mass() - 1.0).abs() < 1e-10);
            prop_assert!((mu.symmetrize().total_mass() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn even_moments_survive_symmetrization(p in 0.5f64..4.0) {
            let mp = marchenko_pastur::<f64>();
            let sym = mp.symmetrize();
            prop_assert_eq!(sym.abs_moment(p), mp.moment_p(p));
        }

        #[test]
        fn moments_monotone_in_stochastic_order(p in 0.1f64..5.0) {
            let a = PositiveMeasure::point_mass(1.0f64).unwrap().moment_p(p).to_real();
            let b = PositiveMeasure::point_mass(2.0f64).unwrap().moment_p(p).to_real();
            prop_assert!(a < b);
        }
    }
}
