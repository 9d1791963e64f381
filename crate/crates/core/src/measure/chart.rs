use std::sync::Arc;

use crate::numerics::quad::{gauss_legendre, GradedMap, PANEL_NODES};
use crate::numerics::roots::{bisect, Tolerance};
use crate::scalar::{c, Real};

use super::Node;

/// Batch density evaluator. Inputs arrive in ascending order.
pub type DensityFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
type MapFn<T> = Arc<dyn Fn(T) -> (T, T) + Send + Sync>;

/// A density together with the chart `s ∈ (0, 1) ↦ x(s)` used to place
/// quadrature nodes. `x(s)` is strictly increasing.
#[derive(Clone)]
pub struct DensityChart<T> {
    map: MapFn<T>,
    density: DensityFn<T>,
}

impl<T: Real> DensityChart<T> {
    pub fn new(map: GradedMap<T>, density: DensityFn<T>) -> Self {
        DensityChart { map: Arc::new(move |s| map.eval(s)), density }
    }

    pub fn pointwise<F>(f: F, map: GradedMap<T>) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        Self::new(map, Arc::new(move |xs: &[T]| xs.iter().map(|&x| f(x)).collect()))
    }

    /// Evaluates the density at ascending points.
    pub fn density(&self, xs: &[T]) -> Vec<T> {
        (self.density)(xs)
    }

    pub fn point(&self, s: T) -> T {
        (self.map)(s).0
    }

    /// Nodes on `s ∈ [s0, s1]` split into `panels` equal panels.
    pub fn nodes_between(&self, s0: T, s1: T, panels: usize) -> Vec<Node<T>> {
        let (gx, gw) = gauss_legendre::<T>(PANEL_NODES);
        let h = (s1 - s0) / T::from_count(panels);
        let half = h * c(0.5);
        let mut xs = Vec::with_capacity(panels * PANEL_NODES);
        let mut ws = Vec::with_capacity(panels * PANEL_NODES);
        for p in 0..panels {
            let mid = s0 + (T::from_count(p) + c(0.5)) * h;
            for (xi, wi) in gx.iter().zip(&gw) {
                let (x, dx) = (self.map)(mid + half * *xi);
                let w = *wi * half * dx;
                let ok = x > T::zero() && x.is_finite() && w > T::zero() && w.is_finite();
                if ok && xs.last().is_none_or(|&last| x > last) {
                    xs.push(x);
                    ws.push(w);
                }
            }
        }
        let fs = self.density(&xs);
        xs.into_iter()
            .zip(fs)
            .zip(ws)
            .map(|((x, f), w)| Node { x, f: if f.is_finite() && f > T::zero() { f } else { T::zero() }, w })
            .collect()
    }

    pub fn nodes(&self, panels: usize) -> Vec<Node<T>> {
        self.nodes_between(T::zero(), T::one(), panels)
    }

    /// Mass of the density on `(0, x]`.
    pub fn mass_below(&self, x: T) -> T {
        let s_x = if self.point(T::one().prev_down()) <= x {
            T::one()
        } else if self.point(T::min_positive_value()) >= x {
            return T::zero();
        } else {
            bisect(|s| self.point(s) - x, T::zero(), T::one(), Tolerance::rel(c(1e-15)))
                .unwrap_or(T::one())
        };
        let mut panels = 8usize;
        let mass = |p| self.nodes_between(T::zero(), s_x, p).iter().map(Node::mass).sum::<T>();
        let mut prev = mass(panels);
        while panels < 4096 {
            panels *= 2;
            let next = mass(panels);
            if (next - prev).abs() <= c::<T>(1e-13) * next.abs() + c(1e-15) {
                return next;
            }
            prev = next;
        }
        prev
    }

    /// Chart of the image density under `t ↦ a·t`.
    pub fn dilated(&self, a: T) -> Self {
        let map = self.map.clone();
        let dens = self.density.clone();
        DensityChart {
            map: Arc::new(move |s| {
                let (x, dx) = map(s);
                (a * x, a * dx)
            }),
            density: Arc::new(move |ys: &[T]| {
                let xs: Vec<T> = ys.iter().map(|&y| y / a).collect();
                dens(&xs).into_iter().map(|f| f / a).collect()
            }),
        }
    }

    /// Chart of the image density under `t ↦ t²`.
    pub fn squared(&self) -> Self {
        let map = self.map.clone();
        let dens = self.density.clone();
        DensityChart {
            map: Arc::new(move |s| {
                let (x, dx) = map(s);
                (x * x, (x + x) * dx)
            }),
            density: Arc::new(move |ys: &[T]| {
                let xs: Vec<T> = ys.iter().map(|y| y.sqrt()).collect();
                dens(&xs).into_iter().zip(&xs).map(|(f, &x)| f / (x + x)).collect()
            }),
        }
    }

    /// Chart of the image density under `t ↦ √t`.
    pub fn sqrt(&self) -> Self {
        let map = self.map.clone();
        let dens = self.density.clone();
        DensityChart {
            map: Arc::new(move |s| {
                let (x, dx) = map(s);
                let y = x.sqrt();
                (y, dx / (y + y))
            }),
            density: Arc::new(move |ys: &[T]| {
                let xs: Vec<T> = ys.iter().map(|&y| y * y).collect();
                dens(&xs).into_iter().zip(ys).map(|(f, &y)| f * (y + y)).collect()
            }),
        }
    }
}
