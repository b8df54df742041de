//! Density, measure, tangent and varifold estimators.
//!
//! Notation follows the usual kernel-estimation conventions: `δ` is the
//! density bandwidth, `r` the covariance radius, and `τ` the threshold of
//! the truncated inverse `Φ`.

use crate::error::{Error, Result};
use crate::kernels::{add_psi_r, KernelKind, KernelProfile, NormalizedKernel};
use crate::linalg::{check_symmetric, projector_from, SymMatrix};
use crate::measure::{DiscreteMeasure, DiscreteVarifold};
use crate::sampling::{SampleBatch, SplitSample};
use crate::spatial::SpatialIndex;

const SYMMETRY_TOL: f64 = 1e-8;
const GAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub delta: f64,
    pub r: f64,
    pub tau: f64,
    pub d: usize,
    pub eta: NormalizedKernel,
    pub phi: NormalizedKernel,
    /// Use independent parts for weights, density and covariance.
    pub splitting: bool,
}

impl EstimatorConfig {
    /// Triangular `η` and `φ` for intrinsic dimension `d`.
    pub fn triangular(d: usize, delta: f64, r: f64, tau: f64) -> Result<Self> {
        let cfg = Self {
            delta,
            r,
            tau,
            d,
            eta: NormalizedKernel::density(KernelProfile::triangular(KernelKind::Density), d)?,
            phi: NormalizedKernel::covariance(KernelProfile::triangular(KernelKind::Covariance), d)?,
            splitting: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.r > 0.0) {
            return Err(Error::Argument(format!("δ = {} and r = {} must be positive", self.delta, self.r)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Argument(format!("τ = {} outside (0, 1]", self.tau)));
        }
        if self.eta.dimension() != self.d || self.phi.dimension() != self.d {
            return Err(Error::Argument("kernel dimensions do not match d".into()));
        }
        Ok(())
    }
}

/// Sample points bundled with their spatial index.
#[derive(Debug, Clone)]
pub struct IndexedSample {
    index: SpatialIndex,
}

impl IndexedSample {
    pub fn new(batch: &SampleBatch) -> Self {
        Self { index: SpatialIndex::new(batch.dim(), batch.points()) }
    }

    pub fn from_points(dim: usize, points: &[f64]) -> Self {
        Self { index: SpatialIndex::new(dim, points) }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn index(&self) -> &SpatialIndex {
        &self.index
    }
}

/// `θ_{δ,N}(x) = (N C_η δ^d)^{-1} Σ_i η(|x − X_i|/δ)`.
pub fn density_estimate(sample: &IndexedSample, x: &[f64], cfg: &EstimatorConfig) -> f64 {
    let n = sample.len();
    if n == 0 {
        return 0.0;
    }
    let profile = cfg.eta.profile();
    let delta = cfg.delta;
    let mut acc = 0.0;
    sample.index.for_each_in_ball(x, delta, |_, d2| {
        acc += profile.eval(d2.sqrt() / delta);
    });
    acc / (n as f64 * cfg.eta.constant() * delta.powi(cfg.d as i32))
}

/// Truncated inverse `Φ(t) = χ_τ(t)/t`, with `χ_τ` vanishing below `τ/2`,
/// linear on `[τ/2, τ]` and equal to one above `τ`.
#[inline]
pub fn phi_truncation(t: f64, tau: f64) -> f64 {
    if t < 0.5 * tau {
        0.0
    } else if t <= tau {
        (2.0 * t / tau - 1.0) / t
    } else {
        1.0 / t
    }
}

/// `ν_{δ,N} = (1/N) Σ_i Φ(θ_{δ,N}(X_i)) δ_{X_i}`.
pub fn measure_estimate(batch: &SampleBatch, cfg: &EstimatorConfig) -> DiscreteMeasure {
    let indexed = IndexedSample::new(batch);
    weighted_by_density(batch, &indexed, cfg)
}

/// Weights `Φ(θ^{density}(X_i))/N` on the points of `support`, with the
/// density estimated from a possibly different sample.
pub fn weighted_by_density(
    support: &SampleBatch,
    density: &IndexedSample,
    cfg: &EstimatorConfig,
) -> DiscreteMeasure {
    let n = support.len();
    if n == 0 {
        return DiscreteMeasure::empty(support.dim());
    }
    let inv_n = 1.0 / n as f64;
    let weights: Vec<f64> = support
        .iter()
        .map(|x| phi_truncation(density_estimate(density, x, cfg), cfg.tau) * inv_n)
        .collect();
    DiscreteMeasure::new(support.dim(), support.points().to_vec(), weights).expect("weights are nonnegative")
}

/// `Σ_r(x, λ) = (C_φ r^d)^{-1} Σ_i w_i ψ_r(p_i − x)`.
pub fn covariance_matrix(measure: &DiscreteMeasure, x: &[f64], r: f64, cfg: &EstimatorConfig) -> SymMatrix {
    let n = measure.dim();
    let mut acc = SymMatrix::zeros(n);
    let mut z = vec![0.0; n];
    for i in 0..measure.len() {
        let w = measure.weight(i);
        if w == 0.0 {
            continue;
        }
        for (zk, (pk, xk)) in z.iter_mut().zip(measure.point(i).iter().zip(x)) {
            *zk = pk - xk;
        }
        add_psi_r(&mut acc, cfg.phi.profile(), &z, r, w);
    }
    acc.scaled(1.0 / (cfg.phi.constant() * r.powi(cfg.d as i32)))
}

/// `Σ_r(x, μ_N)` for the empirical measure of an indexed sample, visiting
/// only the points of `B(x, r)`.
pub fn empirical_covariance(sample: &IndexedSample, x: &[f64], r: f64, cfg: &EstimatorConfig) -> SymMatrix {
    let n = sample.index.dim();
    let mut acc = SymMatrix::zeros(n);
    if sample.is_empty() {
        return acc;
    }
    let mut z = vec![0.0; n];
    let profile = cfg.phi.profile();
    sample.index.for_each_in_ball(x, r, |i, _| {
        for (zk, (pk, xk)) in z.iter_mut().zip(sample.index.point(i).iter().zip(x)) {
            *zk = pk - xk;
        }
        add_psi_r(&mut acc, profile, &z, r, 1.0);
    });
    acc.scaled(1.0 / (sample.len() as f64 * cfg.phi.constant() * r.powi(cfg.d as i32)))
}

/// `σ_{r,δ,N}(x) = Φ(θ^A_{δ,N}(x)) Σ_r(x, μ^B_N)`; pass the same sample
/// twice for the unsplit estimator.
pub fn tangent_sigma(
    density_sample: &IndexedSample,
    covariance_sample: &IndexedSample,
    x: &[f64],
    cfg: &EstimatorConfig,
) -> SymMatrix {
    let factor = phi_truncation(density_estimate(density_sample, x, cfg), cfg.tau);
    if factor == 0.0 {
        return SymMatrix::zeros(x.len());
    }
    empirical_covariance(covariance_sample, x, cfg.r, cfg).scaled(factor)
}

/// Orthogonal projector onto the top-`d` eigenspace of `sigma`. Among all
/// rank-`d` projectors it is closest to `sigma` in operator norm.
pub fn projector_truncate(sigma: &SymMatrix, d: usize) -> Result<SymMatrix> {
    check_rank(sigma, d)?;
    check_symmetric(sigma, SYMMETRY_TOL)?;
    Ok(projector_from(&sigma.eigh(), d))
}

/// Same map as [`projector_truncate`], restricted to inputs with a
/// nondegenerate gap `λ_d − λ_{d+1}`, where it is locally Lipschitz.
pub fn snap_to_projector(a: &SymMatrix, d: usize) -> Result<SymMatrix> {
    check_rank(a, d)?;
    check_symmetric(a, SYMMETRY_TOL)?;
    let eig = a.eigh();
    if d < a.dim() {
        let gap = eig.values[d - 1] - eig.values[d];
        if gap < GAP_TOL {
            return Err(Error::DegenerateGap { gap });
        }
    }
    Ok(projector_from(&eig, d))
}

fn check_rank(m: &SymMatrix, d: usize) -> Result<()> {
    if d == 0 || d > m.dim() {
        return Err(Error::Argument(format!("rank {d} outside 1..={}", m.dim())));
    }
    Ok(())
}

/// Which matrices the varifold estimator attaches to its atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum VarifoldVariant {
    /// `W_{r,δ,N} = ν_{δ,N} ⊗ δ_{σ_{r,δ,N}}`.
    W,
    /// `W̃_{r,δ,N} = ν_{δ,N} ⊗ δ_{Σ_r(·, ν_{δ,N})}`.
    WTilde,
    /// `V_{r,δ,N} = ν_{δ,N} ⊗ δ_{π_{r,δ,N}}`, projectors of `σ_{r,δ,N}`.
    V,
}

/// The roles a sample plays in the varifold estimator. Without splitting
/// all four are the same batch.
#[derive(Debug, Clone, Copy)]
pub struct SampleRoles<'a> {
    /// Support of the estimated measure.
    pub support: &'a SampleBatch,
    /// Density estimate used for the weights.
    pub weight_density: &'a SampleBatch,
    /// Density estimate used for the scale of `σ`.
    pub tangent_density: &'a SampleBatch,
    /// Empirical measure in the covariance.
    pub covariance: &'a SampleBatch,
}

impl<'a> SampleRoles<'a> {
    pub fn unsplit(batch: &'a SampleBatch) -> Self {
        Self { support: batch, weight_density: batch, tangent_density: batch, covariance: batch }
    }

    pub fn split(parts: &'a SplitSample) -> Self {
        Self {
            support: &parts.x,
            weight_density: &parts.y,
            tangent_density: &parts.y_tilde,
            covariance: &parts.z,
        }
    }
}

/// Builds `W`, `W̃` or `V` from the given sample roles.
pub fn varifold_estimate(
    roles: SampleRoles<'_>,
    cfg: &EstimatorConfig,
    variant: VarifoldVariant,
) -> Result<DiscreteVarifold> {
    cfg.validate()?;
    let n = roles.support.dim();
    let rank = (variant == VarifoldVariant::V).then_some(cfg.d);
    if roles.support.is_empty() {
        return Ok(DiscreteVarifold::empty(n, rank));
    }
    let weight_idx = IndexedSample::new(roles.weight_density);
    let nu = weighted_by_density(roles.support, &weight_idx, cfg);

    let mut matrices = Vec::with_capacity(roles.support.len() * n * n);
    match variant {
        VarifoldVariant::W | VarifoldVariant::V => {
            let same = std::ptr::eq(roles.tangent_density, roles.weight_density);
            let tangent_idx = if same { None } else { Some(IndexedSample::new(roles.tangent_density)) };
            let tangent_idx = tangent_idx.as_ref().unwrap_or(&weight_idx);
            let cov_idx = if std::ptr::eq(roles.covariance, roles.weight_density) {
                None
            } else {
                Some(IndexedSample::new(roles.covariance))
            };
            let cov_idx = cov_idx.as_ref().unwrap_or(&weight_idx);
            for x in roles.support.iter() {
                let sigma = tangent_sigma(tangent_idx, cov_idx, x, cfg);
                let m = if variant == VarifoldVariant::V { projector_truncate(&sigma, cfg.d)? } else { sigma };
                matrices.extend_from_slice(m.as_slice());
            }
        }
        VarifoldVariant::WTilde => {
            let support_idx = IndexedSample::new(roles.support);
            for x in roles.support.iter() {
                let m = weighted_covariance(&nu, &support_idx, x, cfg);
                matrices.extend_from_slice(m.as_slice());
            }
        }
    }
    let weights = nu.weights().to_vec();
    Ok(DiscreteVarifold::from_parts_unchecked(n, roles.support.points().to_vec(), weights, matrices, rank))
}

/// `Σ_r(x, ν)` where `ν` is supported on the indexed points.
fn weighted_covariance(nu: &DiscreteMeasure, support: &IndexedSample, x: &[f64], cfg: &EstimatorConfig) -> SymMatrix {
    let n = nu.dim();
    let mut acc = SymMatrix::zeros(n);
    let mut z = vec![0.0; n];
    let r = cfg.r;
    support.index.for_each_in_ball(x, r, |i, _| {
        for (zk, (pk, xk)) in z.iter_mut().zip(nu.point(i).iter().zip(x)) {
            *zk = pk - xk;
        }
        add_psi_r(&mut acc, cfg.phi.profile(), &z, r, nu.weight(i));
    });
    acc.scaled(1.0 / (cfg.phi.constant() * r.powi(cfg.d as i32)))
}

/// Bandwidth rule `δ_N = N^{-1/(d + 2 min(a, b))}`.
pub fn bandwidth_rule(n: usize, d: usize, a: f64, b: f64) -> Result<f64> {
    check_exponents(a, b)?;
    if n == 0 || d == 0 {
        return Err(Error::Argument("N and d must be positive".into()));
    }
    let s = a.min(b);
    Ok((n as f64).powf(-1.0 / (d as f64 + 2.0 * s)))
}

fn check_exponents(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a <= 1.0 && b > 0.0 && b <= 1.0) {
        return Err(Error::Argument(format!("Hölder exponents a = {a}, b = {b} must lie in (0, 1]")));
    }
    Ok(())
}

/// The split varifold estimator `V̂_{δ_N,N}` with `δ = r = δ_N`.
///
/// Weights use the density of `Y` at the points of `X`; the matrix at
/// `X_i` is the projector of `Φ(θ^{Ỹ}(X_i)) Σ_δ(X_i, μ^Z)`.
pub fn split_varifold_estimate(
    parts: &SplitSample,
    d: usize,
    a: f64,
    b: f64,
    tau: f64,
) -> Result<DiscreteVarifold> {
    check_exponents(a, b)?;
    if parts.part_size() == 0 {
        return Err(Error::Argument("split parts are empty".into()));
    }
    let delta = bandwidth_rule(parts.part_size(), d, a, b)?;
    let mut cfg = EstimatorConfig::triangular(d, delta, delta, tau)?;
    cfg.splitting = true;
    varifold_estimate(SampleRoles::split(parts), &cfg, VarifoldVariant::V)
}

/// Default `τ = ½ · 2^{-d} · m_η / (C_η C₀)`, half of the lower bound on
/// `θ_δ` implied by Ahlfors regularity with constant `C₀`.
pub fn default_tau(eta: &NormalizedKernel, ahlfors_c0: f64) -> f64 {
    let d = eta.dimension() as i32;
    (0.5 * 2f64.powi(-d) * eta.profile().positivity_floor() / (eta.constant() * ahlfors_c0)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ShapeModel;
    use crate::sampling::{sample, split};

    fn cfg1(delta: f64, tau: f64) -> EstimatorConfig {
        EstimatorConfig::triangular(1, delta, delta, tau).unwrap()
    }

    #[test]
    fn density_single_point() {
        let s = IndexedSample::from_points(2, &[0.3, 0.4]);
        assert_eq!(density_estimate(&s, &[0.3, 0.4], &cfg1(1.0, 0.5)), 1.0);
        assert_eq!(density_estimate(&s, &[5.0, 0.4], &cfg1(1.0, 0.5)), 0.0);
    }

    #[test]
    fn density_on_dense_line() {
        // equal-weight cloud approximating H¹ on the x-axis: N points spaced
        // 1/N over [-L, L] have mass 2L, so θ·2L should be ≈ 1 at the center
        let l = 2.0;
        let count = 40_000;
        let pts: Vec<f64> = (0..count)
            .flat_map(|i| [-l + (i as f64 + 0.5) * 2.0 * l / count as f64, 0.0])
            .collect();
        let s = IndexedSample::from_points(2, &pts);
        let theta = density_estimate(&s, &[0.0, 0.0], &cfg1(0.1, 0.5)) * 2.0 * l;
        assert!((theta - 1.0).abs() < 0.02, "{theta}");
    }

    #[test]
    fn phi_branches() {
        let tau = 0.4;
        assert_eq!(phi_truncation(tau / 4.0, tau), 0.0);
        assert!((phi_truncation(2.0 * tau, tau) - 1.0 / (2.0 * tau)).abs() < 1e-15);
        assert!((phi_truncation(0.75 * tau, tau) - 2.0 / (3.0 * tau)).abs() < 1e-14);
        assert_eq!(phi_truncation(0.0, tau), 0.0);
    }

    #[test]
    fn measure_two_identical_points() {
        let b = SampleBatch::from_points(2, vec![0.0, 0.0, 0.0, 0.0], 0, "t").unwrap();
        let nu = measure_estimate(&b, &cfg1(1.0, 0.5));
        assert_eq!(nu.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn measure_outlier_suppressed() {
        let mut pts: Vec<f64> = (0..100).flat_map(|i| [i as f64 * 0.001, 0.0]).collect();
        pts.extend_from_slice(&[50.0, 50.0]);
        let b = SampleBatch::from_points(2, pts, 0, "t").unwrap();
        let nu = measure_estimate(&b, &cfg1(0.2, 0.5));
        assert_eq!(nu.weight(100), 0.0);
        let theta = density_estimate(&IndexedSample::new(&b), b.point(0), &cfg1(0.2, 0.5));
        assert!((nu.weight(0) - 1.0 / (101.0 * theta)).abs() < 1e-15);
    }

    #[test]
    fn covariance_single_atom() {
        let r = 0.8;
        let w = 0.3;
        let m = DiscreteMeasure::new(2, vec![r / 2.0, 0.0], vec![w]).unwrap();
        let sigma = covariance_matrix(&m, &[0.0, 0.0], r, &cfg1(r, 0.5));
        let want = SymMatrix::from_rows(&[&[3.0 * w / (4.0 * r), 0.0], &[0.0, 0.0]]);
        assert!(sigma.max_abs_diff(&want) < 1e-14);
        let empty = covariance_matrix(&m, &[10.0, 0.0], r, &cfg1(r, 0.5));
        assert_eq!(empty, SymMatrix::zeros(2));
    }

    #[test]
    fn sigma_on_axis_cloud() {
        let pts: Vec<f64> = (0..20_000).flat_map(|i| [-1.0 + i as f64 * 1e-4, 0.0]).collect();
        let s = IndexedSample::from_points(2, &pts);
        let sigma = tangent_sigma(&s, &s, &[0.0, 0.0], &cfg1(0.05, 0.1));
        let top = sigma.eigh();
        assert!(top.values[0] > 0.0);
        assert!((top.vector(0)[0].abs() - 1.0).abs() < 1e-2);
        // sparse: nothing within δ → Φ = 0
        let far = tangent_sigma(&s, &s, &[0.0, 5.0], &cfg1(0.05, 0.1));
        assert_eq!(far, SymMatrix::zeros(2));
    }

    #[test]
    fn truncation_examples() {
        let p = projector_truncate(&SymMatrix::diag(&[3.0, 1.0, 0.1]), 2).unwrap();
        assert!(p.max_abs_diff(&SymMatrix::diag(&[1.0, 1.0, 0.0])) < 1e-15);
        let q = SymMatrix::from_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(projector_truncate(&q, 1).unwrap().max_abs_diff(&q) < 1e-14);
        let iso = projector_truncate(&SymMatrix::identity(3), 2).unwrap();
        assert!(iso.is_projector(2, 1e-12));
        let skew = SymMatrix::from_rows(&[&[1.0, 0.1], &[0.0, 1.0]]);
        assert!(projector_truncate(&skew, 1).is_err());
    }

    #[test]
    fn snap_examples() {
        let mut a = SymMatrix::diag(&[1.0, 1.0, 0.0]);
        a.add_scaled(&SymMatrix::identity(3), 0.2);
        let p = snap_to_projector(&a, 2).unwrap();
        assert!(p.max_abs_diff(&SymMatrix::diag(&[1.0, 1.0, 0.0])) < 1e-14);
        assert!(matches!(
            snap_to_projector(&SymMatrix::identity(3), 2),
            Err(Error::DegenerateGap { .. })
        ));
    }

    #[test]
    fn bandwidths() {
        assert!((bandwidth_rule(1000, 1, 1.0, 1.0).unwrap() - 0.1).abs() < 1e-12);
        assert!((bandwidth_rule(1_000_000, 2, 0.5, 1.0).unwrap() - 0.01).abs() < 1e-12);
        assert!(bandwidth_rule(10, 1, 0.0, 1.0).is_err());
        assert!(bandwidth_rule(10, 1, 1.0, 1.5).is_err());
    }

    #[test]
    fn empty_sample_gives_empty_varifold() {
        let b = SampleBatch::from_points(2, Vec::new(), 0, "t").unwrap();
        let v = varifold_estimate(SampleRoles::unsplit(&b), &cfg1(0.1, 0.1), VarifoldVariant::V).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn circle_tangents_mostly_accurate() {
        let shape = ShapeModel::from_names("circle", "uniform").unwrap();
        let b = sample(&shape, 20_000, 3).unwrap();
        let cfg = cfg1(0.05, default_tau(&cfg1(0.05, 0.1).eta, shape.regularity().ahlfors_c0));
        let v = varifold_estimate(SampleRoles::unsplit(&b), &cfg, VarifoldVariant::V).unwrap();
        let good = (0..v.len())
            .filter(|&i| {
                let truth = shape.tangent_at(v.point(i)).unwrap();
                v.matrix(i).sub(&truth).op_norm() <= 0.1
            })
            .count();
        assert!(good as f64 >= 0.9 * v.len() as f64);
        for i in 0..v.len() {
            assert!(v.matrix(i).is_projector(1, 1e-10));
        }
    }

    #[test]
    fn split_estimator_permutation_invariant() {
        let shape = ShapeModel::from_names("circle", "uniform").unwrap();
        let b = sample(&shape, 4 * 500, 9).unwrap();
        let parts = split(&b).unwrap();
        let tau = 0.04;
        let v1 = split_varifold_estimate(&parts, 1, 1.0, 1.0, tau).unwrap();
        let mut shuffled = parts.clone();
        let mut pts: Vec<Vec<f64>> = shuffled.z.iter().map(|p| p.to_vec()).collect();
        pts.reverse();
        shuffled.z = SampleBatch::from_points(2, pts.concat(), 0, "t").unwrap();
        let v2 = split_varifold_estimate(&shuffled, 1, 1.0, 1.0, tau).unwrap();
        assert_eq!(v1.weights(), v2.weights());
        for i in 0..v1.len() {
            assert!(v1.matrix(i).max_abs_diff(&v2.matrix(i)) < 1e-12);
        }
    }
}
