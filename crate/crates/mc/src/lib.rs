//! Finite-`N` random-matrix checks for the Brown-measure and free-convolution
//! routines of `frdiag`.
//!
//! Ginibre factors have independent complex Gaussian entries of variance
//! `1/N`. Trial `i` draws from a ChaCha8 stream seeded with `seed ^ i`, so the
//! pooled sample does not depend on how trials are scheduled.

// `!(x > 0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;

use faer::{c64, Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use frdiag::freeconv::{convolve_density, default_eta};
use frdiag::measure::{LineMeasure, SymmetricMeasure};
use frdiag::models::ModelSpec;

/// Condition number above which an inverse factor is redrawn.
pub const MAX_CONDITION: f64 = 1e12;
/// Redraws allowed per trial before giving up.
pub const MAX_REDRAWS: usize = 10;
/// Quadrature panels behind [`TabulatedCdf`].
pub const CDF_TABLE_PANELS: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("matrix dimension must be at least 2 and trials at least 1 (N = {n}, trials = {trials})")]
    Config { n: usize, trials: usize },
    #[error("inverse factor stayed singular after {0} redraws")]
    SingularDraw(usize),
    #[error("eigen or singular value decomposition failed")]
    Decomposition,
    #[error("empty sample")]
    EmptySample,
    #[error(transparent)]
    Core(#[from] frdiag::Error),
}

pub type Result<T, E = McError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(n: usize, trials: usize, seed: u64) -> Result<Self> {
        if n < 2 || trials < 1 {
            return Err(McError::Config { n, trials });
        }
        Ok(McConfig { n, trials, seed })
    }

    fn rng(&self, trial: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ trial as u64)
    }

    /// Runs `f` once per trial and concatenates the outputs in trial order.
    fn pooled<R: Send>(&self, f: impl Fn(&mut ChaCha8Rng) -> Result<Vec<R>> + Sync) -> Result<Vec<R>> {
        faer::set_global_parallelism(faer::Par::Seq);
        let parts = (0..self.trials)
            .into_par_iter()
            .map(|i| f(&mut self.rng(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.into_iter().flatten().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    EigenModuli,
    SymmetrizedSingular,
}

/// Pooled sample, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    pub values: Vec<f64>,
    pub kind: SampleKind,
}

impl EmpiricalLaw {
    pub fn new(mut values: Vec<f64>, kind: SampleKind) -> Self {
        values.sort_by(f64::total_cmp);
        EmpiricalLaw { values, kind }
    }

    /// `±s` for every singular value `s`.
    pub fn symmetrized(singular: Vec<f64>) -> Self {
        let both = singular.iter().flat_map(|&s| [s, -s]).collect();
        Self::new(both, SampleKind::SymmetrizedSingular)
    }

    /// Single column `value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("value\n");
        for v in &self.values {
            let _ = writeln!(s, "{v:.16e}");
        }
        s
    }
}

/// Kolmogorov–Smirnov distance between a sorted sample and a CDF, taken over
/// sample points in `domain`. Both one-sided limits are compared, with
/// `cdf(x⁻)` read as `cdf` at the next float below `x`.
pub fn ks_distance(sample: &EmpiricalLaw, cdf: impl Fn(f64) -> f64, domain: Option<(f64, f64)>) -> Result<f64> {
    let v = &sample.values;
    if v.is_empty() {
        return Err(McError::EmptySample);
    }
    let n = v.len() as f64;
    let (lo, hi) = domain.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        let mut j = i;
        while j < v.len() && v[j] == x {
            j += 1;
        }
        if x >= lo && x <= hi {
            let below = i as f64 / n;
            let upto = j as f64 / n;
            d = d.max((upto - cdf(x)).abs()).max((below - cdf(x.next_down())).abs());
        }
        i = j;
    }
    Ok(d)
}

fn ginibre(n: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
    let sd = (0.5 / n as f64).sqrt();
    let mut m = Mat::<c64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            m[(i, j)] = c64::new(sd * re, sd * im);
        }
    }
    m
}

/// `σ_max/σ_min`.
fn condition(m: &Mat<c64>) -> Result<f64> {
    let s = m.singular_values().map_err(|_| McError::Decomposition)?;
    let (max, min) = (s[0], s[s.len() - 1]);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

/// A Ginibre draw whose condition number stays below [`MAX_CONDITION`].
fn invertible_ginibre(n: usize, rng: &mut ChaCha8Rng) -> Result<Mat<c64>> {
    for _ in 0..=MAX_REDRAWS {
        let g = ginibre(n, rng);
        if condition(&g)? <= MAX_CONDITION {
            return Ok(g);
        }
    }
    Err(McError::SingularDraw(MAX_REDRAWS))
}

/// `G₁⋯G_m·(G_{m+1}⋯G_{m+k})⁻¹`, the inverse applied through an LU solve.
fn xmk_matrix(n: usize, m: u32, k: u32, rng: &mut ChaCha8Rng) -> Result<Mat<c64>> {
    use faer::linalg::solvers::Solve;
    let mut num = Mat::<c64>::identity(n, n);
    for _ in 0..m {
        num = &num * ginibre(n, rng);
    }
    if k == 0 {
        return Ok(num);
    }
    let mut den = Mat::<c64>::identity(n, n);
    for _ in 0..k {
        den = &den * invertible_ginibre(n, rng)?;
    }
    // X = N·D⁻¹ ⇔ Dᴴ Xᴴ = Nᴴ.
    let xh = den.adjoint().to_owned().partial_piv_lu().solve(num.adjoint().to_owned());
    Ok(xh.adjoint().to_owned())
}

fn eigenvalues(m: &Mat<c64>) -> Result<Vec<c64>> {
    m.eigenvalues().map_err(|_| McError::Decomposition)
}

/// Singular values as square roots of the eigenvalues of `AᴴA`.
fn singular_values(a: &Mat<c64>) -> Result<Vec<f64>> {
    let g = a.adjoint() * a;
    let ev = g.self_adjoint_eigenvalues(Side::Lower).map_err(|_| McError::Decomposition)?;
    Ok(ev.into_iter().map(|x| x.max(0.0).sqrt()).collect())
}

/// Eigenvalues of `X_{m,k}` pooled over trials.
pub fn sample_xmk_eigenvalues(cfg: &McConfig, m: u32, k: u32) -> Result<Vec<c64>> {
    if m == 0 {
        return Err(McError::Core(frdiag::Error::Domain("X_{m,k} needs m >= 1".into())));
    }
    cfg.pooled(|rng| eigenvalues(&xmk_matrix(cfg.n, m, k, rng)?))
}

/// Eigenvalue moduli of `X_{m,k}`.
pub fn sample_xmk_eigen(cfg: &McConfig, m: u32, k: u32) -> Result<EmpiricalLaw> {
    let ev = sample_xmk_eigenvalues(cfg, m, k)?;
    Ok(EmpiricalLaw::new(ev.iter().map(|z| z.norm()).collect(), SampleKind::EigenModuli))
}

/// Deterministic self-adjoint `A` of the free-sum oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiagSpec {
    Zero,
    /// `a·I`.
    Scalar(f64),
    /// Half the diagonal `+a`, half `−a`.
    PlusMinus(f64),
}

impl DiagSpec {
    fn entry(&self, i: usize, n: usize) -> f64 {
        match *self {
            DiagSpec::Zero => 0.0,
            DiagSpec::Scalar(a) => a,
            DiagSpec::PlusMinus(a) => {
                if 2 * i < n {
                    a
                } else {
                    -a
                }
            }
        }
    }

    /// `μ̃_{|A|}` in the large-`N` limit.
    pub fn symmetrized_law(&self) -> Result<SymmetricMeasure<f64>> {
        let a = match *self {
            DiagSpec::Zero => 0.0,
            DiagSpec::Scalar(a) | DiagSpec::PlusMinus(a) => a,
        };
        Ok(SymmetricMeasure::bernoulli(a)?)
    }
}

/// Symmetrized singular values of `A + B` with `B` Ginibre. A Ginibre matrix
/// is already invariant under independent unitary rotations on both sides, so
/// no extra Haar factor is drawn.
pub fn free_add_oracle(a: DiagSpec, cfg: &McConfig) -> Result<EmpiricalLaw> {
    let n = cfg.n;
    let s = cfg.pooled(|rng| {
        let mut x = ginibre(n, rng);
        for i in 0..n {
            x[(i, i)] += c64::new(a.entry(i, n), 0.0);
        }
        singular_values(&x)
    })?;
    Ok(EmpiricalLaw::symmetrized(s))
}

/// `μ̃_{|A|} ⊞ μ̃_{|c|}` on a grid, for comparison with [`free_add_oracle`].
pub fn free_add_reference(a: DiagSpec, grid: &[f64]) -> Result<LineMeasure<f64>> {
    let circ = ModelSpec::<f64>::MarchenkoPastur1.symmetrized_modulus()?;
    let sym = a.symmetrized_law()?;
    Ok(convolve_density(&sym, &circ, grid, default_eta(2.0))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bracket {
    /// `G₁G₂ − G₂G₁`.
    Commutator,
    /// `G₁G₂ + G₂G₁`.
    Anticommutator,
    /// `G₁G₂`.
    Product,
}

/// Symmetrized singular values of a bracket of two Ginibre matrices.
pub fn bracket_sample(kind: Bracket, cfg: &McConfig) -> Result<EmpiricalLaw> {
    let n = cfg.n;
    let s = cfg.pooled(|rng| {
        let g1 = ginibre(n, rng);
        let g2 = ginibre(n, rng);
        let ab = &g1 * &g2;
        let z = match kind {
            Bracket::Product => ab,
            Bracket::Commutator => ab - &g2 * &g1,
            Bracket::Anticommutator => ab + &g2 * &g1,
        };
        singular_values(&z)
    })?;
    Ok(EmpiricalLaw::symmetrized(s))
}

/// `μ̃_{|c₁c₂|}`, from the catalog law of `|X_{2,0}|²`.
pub fn product_reference() -> Result<SymmetricMeasure<f64>> {
    Ok(ModelSpec::<f64>::Xmk { m: 2, k: 0 }.symmetrized_modulus()?)
}

/// `μ̃_{|c₁c₂|}^{⊞2}` on a grid.
pub fn commutator_reference(grid: &[f64]) -> Result<LineMeasure<f64>> {
    let p = product_reference()?;
    Ok(convolve_density(&p, &p, grid, default_eta(4.0))?)
}

/// Sample of `G₁G₂ ∓ G₂G₁`, the reference `μ̃_{|c₁c₂|}^{⊞2}`, and their KS distance.
pub fn commutator_oracle(kind: Bracket, cfg: &McConfig) -> Result<(EmpiricalLaw, LineMeasure<f64>, f64)> {
    if kind == Bracket::Product {
        return Err(McError::Core(frdiag::Error::Domain("use product_oracle for G1 G2".into())));
    }
    let sample = bracket_sample(kind, cfg)?;
    let reference = commutator_reference(&uniform_grid(-6.0, 6.0, 2401))?;
    let ks = ks_distance(&sample, |x| reference.cdf(x), None)?;
    Ok((sample, reference, ks))
}

/// CDF of a symmetric law, accumulated once over its quadrature nodes and
/// interpolated linearly. Each node's mass is centred on the node, so the
/// table is accurate to about one node mass. [`SymmetricMeasure::cdf`]
/// refines adaptively per call and is far too slow for whole samples.
#[derive(Debug, Clone)]
pub struct TabulatedCdf {
    /// `(x, μ([0, x]))` for the half law, nondecreasing in both.
    knots: Vec<(f64, f64)>,
}

impl TabulatedCdf {
    pub fn new(law: &SymmetricMeasure<f64>, panels: usize) -> Self {
        let half = law.half();
        let mut events: Vec<(f64, f64, bool)> = half.atoms().iter().map(|&(x, m)| (x, m, true)).collect();
        events.extend(half.nodes_at(panels).iter().map(|n| (n.x, n.mass(), false)));
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = half.atom0();
        let mut knots = vec![(0.0, acc)];
        for (x, m, atom) in events {
            if atom {
                knots.push((x, acc));
                acc += m;
                knots.push((x, acc));
            } else {
                knots.push((x, acc + 0.5 * m));
                acc += m;
            }
        }
        Self { knots }
    }

    fn half_cdf(&self, x: f64) -> f64 {
        // Last knot at or below x; atoms sit at the upper of their two knots.
        let i = self.knots.partition_point(|k| k.0 <= x);
        if i == 0 {
            return 0.0;
        }
        let (x0, c0) = self.knots[i - 1];
        match self.knots.get(i) {
            Some(&(x1, c1)) if x1 > x0 => c0 + (c1 - c0) * (x - x0) / (x1 - x0),
            Some(_) => c0,
            None => self.knots.last().map_or(0.0, |k| k.1),
        }
    }

    /// `μ̃((−∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x >= 0.0 {
            1.0 - 0.5 * (1.0 - self.half_cdf(x))
        } else {
            0.5 * (1.0 - self.half_cdf((-x).next_down()))
        }
    }
}

/// Sample of `G₁G₂`, the reference `μ̃_{|c₁c₂|}`, and their KS distance.
pub fn product_oracle(cfg: &McConfig) -> Result<(EmpiricalLaw, SymmetricMeasure<f64>, f64)> {
    let sample = bracket_sample(Bracket::Product, cfg)?;
    let reference = product_reference()?;
    let table = TabulatedCdf::new(&reference, CDF_TABLE_PANELS);
    let ks = ks_distance(&sample, |x| table.cdf(x), None)?;
    Ok((sample, reference, ks))
}

/// `n` equispaced points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Pearson χ² statistic and p-value of the arguments of `z` against the
/// uniform law on `[0, 2π)` with `bins` equal bins.
pub fn argument_chi2(z: &[c64], bins: usize) -> (f64, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let mut counts = vec![0usize; bins];
    for w in z {
        let a = w.im.atan2(w.re).rem_euclid(std::f64::consts::TAU);
        let b = ((a / std::f64::consts::TAU) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let expected = z.len() as f64 / bins as f64;
    let stat = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum::<f64>();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).expect("positive degrees of freedom").cdf(stat);
    (stat, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(v: Vec<f64>) -> EmpiricalLaw {
        EmpiricalLaw::new(v, SampleKind::EigenModuli)
    }

    #[test]
    fn tabulated_cdf_tracks_exact_cdf() {
        let law = product_reference().unwrap();
        let table = TabulatedCdf::new(&law, CDF_TABLE_PANELS);
        for x in [-2.5, -1.0, -0.3, -1e-3, 0.0, 1e-3, 0.2, 0.9, 1.7, 2.59, 3.0] {
            let (a, b) = (table.cdf(x), law.cdf(x));
            assert!((a - b).abs() < 1e-4, "{x}: {a} vs {b}");
        }
        let bern = SymmetricMeasure::bernoulli(1.0).unwrap();
        let t = TabulatedCdf::new(&bern, 8);
        assert_eq!([t.cdf(-1.5), t.cdf(-1.0), t.cdf(0.0), t.cdf(0.99), t.cdf(1.0)], [0.0, 0.5, 0.5, 0.5, 1.0]);
    }

    #[test]
    fn ks_edge_cases() {
        assert_eq!(ks_distance(&law(vec![]), |_| 0.0, None), Err(McError::EmptySample));
        let atom = law(vec![2.0; 10]);
        let step = |x: f64| if x >= 2.0 { 1.0 } else { 0.0 };
        assert_eq!(ks_distance(&atom, step, None).unwrap(), 0.0);
        let low = law(vec![0.1, 0.2, 0.3]);
        assert_eq!(ks_distance(&low, |x| (x - 5.0).clamp(0.0, 1.0), None).unwrap(), 1.0);
        let high = law(vec![7.0, 8.0]);
        assert_eq!(ks_distance(&high, |x| x.clamp(0.0, 1.0), None).unwrap(), 1.0);
    }

    #[test]
    fn ks_inverse_cdf_sample() {
        // Stratified inverse-CDF draws of F(r) = r² on [0, 1].
        let n = 100_000;
        let v = (0..n).map(|i| ((i as f64 + 0.5) / n as f64).sqrt()).collect();
        let d = ks_distance(&law(v), |r| (r * r).clamp(0.0, 1.0), None).unwrap();
        assert!(d < 0.01, "{d}");
    }

    #[test]
    fn ks_domain_restriction() {
        let s = law(vec![0.5, 1.5, 2.5]);
        let d_all = ks_distance(&s, |x| (x / 3.0).clamp(0.0, 1.0), None).unwrap();
        let d_part = ks_distance(&s, |x| (x / 3.0).clamp(0.0, 1.0), Some((1.0, 2.0))).unwrap();
        assert!(d_part <= d_all);
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::new(1, 1, 0).is_err());
        assert!(McConfig::new(2, 0, 0).is_err());
    }

    #[test]
    fn csv_and_symmetrization() {
        let l = EmpiricalLaw::symmetrized(vec![1.0, 2.0]);
        assert_eq!(l.values, vec![-2.0, -1.0, 1.0, 2.0]);
        assert!(l.to_csv().starts_with("value\n-2.0000000000000000e0\n"));
    }

    #[test]
    fn ginibre_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = ginibre(200, &mut rng);
        let mean_sq = (0..200).flat_map(|i| (0..200).map(move |j| (i, j))).map(|(i, j)| g[(i, j)].norm_sqr()).sum::<f64>() / 40_000.0;
        assert!((mean_sq - 1.0 / 200.0).abs() < 1e-4, "{mean_sq}");
    }

    #[test]
    fn inverse_factor_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = xmk_matrix(8, 1, 1, &mut rng).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g1 = ginibre(8, &mut rng);
        let g2 = invertible_ginibre(8, &mut rng).unwrap();
        let back = &x * &g2 - &g1;
        let err = (0..8).flat_map(|i| (0..8).map(move |j| (i, j))).map(|(i, j)| back[(i, j)].norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn singular_values_match_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = ginibre(16, &mut rng);
        let mut a = singular_values(&g).unwrap();
        a.sort_by(|x, y| y.total_cmp(x));
        let b = g.singular_values().unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
