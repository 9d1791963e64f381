use crate::error::{Error, Result};
use crate::scalar::{c, Complex, Real};

use super::{mass_tol, Node, SymmetricMeasure};

/// Probability measure on `ℝ`: atoms plus a density sampled on nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LineMeasure<T: Real> {
    atoms: Vec<(T, T)>,
    nodes: Vec<Node<T>>,
}

impl<T: Real> LineMeasure<T> {
    pub fn new(mut atoms: Vec<(T, T)>, mut nodes: Vec<Node<T>>) -> Result<Self> {
        atoms.retain(|a| a.1 != T::zero());
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        nodes.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        if atoms.iter().any(|a| !a.0.is_finite() || !(a.1 > T::zero())) {
            return Err(Error::domain("invalid atom"));
        }
        if nodes.iter().any(|n| !(n.f >= T::zero() && n.w >= T::zero())) {
            return Err(Error::domain("invalid density node"));
        }
        let m = LineMeasure { atoms, nodes };
        let defect = (m.total_mass() - T::one()).abs();
        if defect > mass_tol::<T>() {
            return Err(Error::MassDefect { defect: defect.as_f64() });
        }
        Ok(m)
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        Self::new(atoms.into_iter().collect(), Vec::new())
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn total_mass(&self) -> T {
        self.atoms.iter().map(|a| a.1).sum::<T>() + self.nodes.iter().map(Node::mass).sum::<T>()
    }

    pub fn integrate<F: Fn(T) -> T>(&self, g: F) -> T {
        self.atoms.iter().map(|&(x, m)| m * g(x)).sum::<T>() + self.nodes.iter().map(|n| n.mass() * g(n.x)).sum::<T>()
    }

    /// Location of an atom carrying all the mass.
    pub fn point_mass_location(&self) -> Option<T> {
        let tol: T = mass_tol();
        if self.nodes.iter().map(Node::mass).sum::<T>() > tol {
            return None;
        }
        self.atoms.iter().find(|a| a.1 >= T::one() - tol).map(|a| a.0)
    }

    pub fn cauchy(&self, z: Complex<T>) -> Complex<T> {
        let mut s = Complex::new(T::zero(), T::zero());
        for &(x, m) in &self.atoms {
            s += (z - x).inv() * m;
        }
        for n in &self.nodes {
            s += (z - n.x).inv() * n.mass();
        }
        s
    }

    pub fn cdf(&self, x: T) -> T {
        self.atoms.iter().filter(|a| a.0 <= x).map(|a| a.1).sum::<T>()
            + self.nodes.iter().filter(|n| n.x <= x).map(Node::mass).sum::<T>()
    }

    /// Image under `t ↦ t + a`.
    pub fn translate(&self, a: T) -> Self {
        LineMeasure {
            atoms: self.atoms.iter().map(|&(x, m)| (x + a, m)).collect(),
            nodes: self.nodes.iter().map(|n| Node { x: n.x + a, ..*n }).collect(),
        }
    }

    /// `∫ g(|t − λ|²) dμ(t)`.
    pub fn integrate_abs_sq<F: Fn(T) -> T>(&self, lambda: Complex<T>, g: F) -> T {
        let b2 = lambda.im * lambda.im;
        self.integrate(|t| {
            let d = t - lambda.re;
            g(d * d + b2)
        })
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.atoms.len();
        (0..n).all(|i| self.atoms[i].0 == -self.atoms[n - 1 - i].0 && self.atoms[i].1 == self.atoms[n - 1 - i].1)
            && {
                let k = self.nodes.len();
                (0..k).all(|i| self.nodes[i].x == -self.nodes[k - 1 - i].x && self.nodes[i].mass() == self.nodes[k - 1 - i].mass())
            }
    }
}

impl<T: Real> From<&SymmetricMeasure<T>> for LineMeasure<T> {
    fn from(m: &SymmetricMeasure<T>) -> Self {
        let half: T = c(0.5);
        let h = m.half();
        let mut atoms: Vec<(T, T)> = Vec::new();
        for &(x, w) in h.atoms() {
            atoms.push((x, w * half));
            atoms.push((-x, w * half));
        }
        if h.atom0() > T::zero() {
            atoms.push((T::zero(), h.atom0()));
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut nodes: Vec<Node<T>> =
            h.nodes().iter().rev().map(|n| Node { x: -n.x, f: n.f * half, w: n.w }).collect();
        nodes.extend(h.nodes().iter().map(|n| Node { x: n.x, f: n.f * half, w: n.w }));
        LineMeasure { atoms, nodes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translate_and_cauchy() {
        let m = LineMeasure::from_atoms([(-1.0f64, 0.5), (1.0, 0.5)]).unwrap();
        assert!(m.is_symmetric());
        let z = Complex::new(0.3, 0.7);
        let g = m.translate(2.0).cauchy(z + 2.0);
        assert!((g - m.cauchy(z)).norm() < 1e-15);
        assert!(LineMeasure::from_atoms([(1.0f64, 0.5)]).is_err());
    }

    #[test]
    fn symmetric_conversion() {
        let s = crate::measure::quarter_circle::<f64>().symmetrize();
        let l = LineMeasure::from(&s);
        assert!(l.is_symmetric());
        assert!((l.total_mass() - 1.0).abs() < 1e-12);
        let z = Complex::new(0.4, 0.9);
        assert!((l.cauchy(z) - s.cauchy(z)).norm() < 1e-13);
    }
}
