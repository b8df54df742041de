//! Radial kernel profiles and their normalization constants.
//!
//! A profile is an even, nonnegative, Lipschitz function supported in
//! `(−1, 1)`. The density kernel `η` is used for `θ_{δ,N}` and needs to stay
//! positive on `[0, 1/2]`; the covariance kernel `φ` builds the local
//! covariance matrices through `ψ(z) = φ(|z|) z ⊗ z`.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

const SIMPSON_TOL: f64 = 1e-12;
const SIMPSON_MAX_DEPTH: u32 = 50;

/// Volume of the unit ball of `R^d`, for `1 ≤ d ≤ 16`.
///
/// Even dimensions use `π^k / k!`, odd ones `2^(k+1) π^k / (2k+1)!!`.
pub fn unit_ball_volume(d: usize) -> Result<f64> {
    if !(1..=16).contains(&d) {
        return Err(Error::Argument(format!("unit ball dimension {d} outside 1..=16")));
    }
    let k = d / 2;
    let pi_k = PI.powi(k as i32);
    let v = if d % 2 == 0 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        pi_k / fact
    } else {
        let double_fact: f64 = (0..=k).map(|i| (2 * i + 1) as f64).product();
        2f64.powi(k as i32 + 1) * pi_k / double_fact
    };
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Density,
    Covariance,
}

/// The radial shape of a profile on `[0, 1]`, extended evenly and by zero
/// outside the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileShape {
    /// `(1 − |t|)₊`
    Triangular,
    /// `(1 − t²)₊`
    Epanechnikov,
    /// Indicator of `[0, 1)`. Not Lipschitz, only useful to cross-check
    /// quadrature against `ω_d`.
    Indicator,
    /// Piecewise-linear interpolation of `(t, value)` knots covering `[0, 1]`.
    Table(Vec<(f64, f64)>),
}

impl ProfileShape {
    /// Coefficients `c_j` of `Σ c_j t^j` on `[0, 1]` when the profile is a
    /// polynomial there.
    fn polynomial(&self) -> Option<&'static [f64]> {
        match self {
            ProfileShape::Triangular => Some(&[1.0, -1.0]),
            ProfileShape::Epanechnikov => Some(&[1.0, 0.0, -1.0]),
            ProfileShape::Indicator => Some(&[1.0]),
            ProfileShape::Table(_) => None,
        }
    }

    #[inline]
    fn eval_unit(&self, t: f64) -> f64 {
        match self {
            ProfileShape::Triangular => 1.0 - t,
            ProfileShape::Epanechnikov => 1.0 - t * t,
            ProfileShape::Indicator => 1.0,
            ProfileShape::Table(knots) => {
                let idx = knots.partition_point(|(k, _)| *k <= t);
                if idx == 0 {
                    return knots[0].1;
                }
                if idx == knots.len() {
                    return knots[knots.len() - 1].1;
                }
                let (t0, v0) = knots[idx - 1];
                let (t1, v1) = knots[idx];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Points in `(0, 1)` where the profile may have a kink.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            ProfileShape::Table(knots) => knots
                .iter()
                .map(|(t, _)| *t)
                .filter(|t| *t > 0.0 && *t < 1.0)
                .collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelProfile {
    shape: ProfileShape,
    kind: KernelKind,
    sup_bound: f64,
    lip_bound: f64,
    positivity_floor: f64,
}

impl KernelProfile {
    pub fn new(shape: ProfileShape, kind: KernelKind) -> Result<Self> {
        let (sup_bound, lip_bound, positivity_floor) = match &shape {
            ProfileShape::Triangular => (1.0, 1.0, 0.5),
            ProfileShape::Epanechnikov => (1.0, 2.0, 0.75),
            ProfileShape::Indicator => (1.0, f64::INFINITY, 1.0),
            ProfileShape::Table(knots) => table_bounds(knots)?,
        };
        if kind == KernelKind::Density && positivity_floor <= 0.0 {
            return Err(Error::InvalidKernel(
                "density profile must be positive on [0, 1/2]".into(),
            ));
        }
        Ok(Self { shape, kind, sup_bound, lip_bound, positivity_floor })
    }

    pub fn triangular(kind: KernelKind) -> Self {
        Self::new(ProfileShape::Triangular, kind).expect("triangular profile is admissible")
    }

    pub fn epanechnikov(kind: KernelKind) -> Self {
        Self::new(ProfileShape::Epanechnikov, kind).expect("epanechnikov profile is admissible")
    }

    /// Reads a whitespace- or comma-separated two-column table `t value`.
    /// Lines starting with `#` are skipped.
    pub fn from_table_file(path: &Path, kind: KernelKind) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut knots = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> =
                line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::Parse(format!(
                    "{}:{}: expected two columns",
                    path.display(),
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| {
                    Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1))
                })
            };
            knots.push((parse(cols[0])?, parse(cols[1])?));
        }
        Self::new(ProfileShape::Table(knots), kind)
    }

    /// Resolves `triangular`, `epanechnikov` or `custom:<table-file>`.
    pub fn by_name(name: &str, kind: KernelKind) -> Result<Self> {
        match name {
            "triangular" => Ok(Self::triangular(kind)),
            "epanechnikov" => Ok(Self::epanechnikov(kind)),
            other => match other.strip_prefix("custom:") {
                Some(path) => Self::from_table_file(Path::new(path), kind),
                None => Err(Error::Argument(format!("unknown kernel profile '{other}'"))),
            },
        }
    }

    pub fn shape(&self) -> &ProfileShape {
        &self.shape
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn lip_bound(&self) -> f64 {
        self.lip_bound
    }

    pub fn positivity_floor(&self) -> f64 {
        self.positivity_floor
    }

    pub fn is_lipschitz(&self) -> bool {
        self.lip_bound.is_finite()
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        if t >= 1.0 {
            0.0
        } else {
            self.shape.eval_unit(t)
        }
    }

    /// `∫₀¹ profile(r) r^k dr`, closed form for polynomial shapes.
    pub fn radial_moment(&self, k: u32) -> f64 {
        match self.shape.polynomial() {
            Some(coeffs) => coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c / (j as f64 + k as f64 + 1.0))
                .sum(),
            None => self.radial_moment_quadrature(k),
        }
    }

    /// Same moment by adaptive Simpson, split at the profile's kinks.
    pub fn radial_moment_quadrature(&self, k: u32) -> f64 {
        let f = |r: f64| self.eval(r) * r.powi(k as i32);
        let mut cuts = vec![0.0];
        cuts.extend(self.shape.breakpoints());
        cuts.push(1.0);
        cuts.windows(2).map(|w| adaptive_simpson(&f, w[0], w[1], SIMPSON_TOL)).sum()
    }
}

fn table_bounds(knots: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if knots.len() < 2 {
        return Err(Error::InvalidKernel("profile table needs at least two knots".into()));
    }
    if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
        return Err(Error::InvalidKernel("profile table must span t = 0 to t = 1".into()));
    }
    if knots[knots.len() - 1].1 != 0.0 {
        return Err(Error::InvalidKernel("profile must vanish at t = 1".into()));
    }
    let mut sup = 0.0f64;
    let mut lip = 0.0f64;
    for w in knots.windows(2) {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        if t1 <= t0 {
            return Err(Error::InvalidKernel("profile knots must be strictly increasing".into()));
        }
        lip = lip.max(((v1 - v0) / (t1 - t0)).abs());
    }
    for &(_, v) in knots {
        if v < 0.0 || !v.is_finite() {
            return Err(Error::InvalidKernel("profile values must be finite and nonnegative".into()));
        }
        sup = sup.max(v);
    }
    // piecewise linear: the minimum over [0, 1/2] sits at a knot or at 1/2
    let shape = ProfileShape::Table(knots.to_vec());
    let floor = knots
        .iter()
        .filter(|(t, _)| *t <= 0.5)
        .map(|(_, v)| *v)
        .fold(shape.eval_unit(0.5), f64::min);
    Ok((sup, lip, floor))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, SIMPSON_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `C_η = d ω_d ∫₀¹ η(r) r^(d−1) dr`.
pub fn normalization_eta(profile: &KernelProfile, d: usize) -> Result<f64> {
    expect_kind(profile, KernelKind::Density)?;
    let c = d as f64 * unit_ball_volume(d)? * profile.radial_moment(d as u32 - 1);
    nondegenerate(c)
}

/// `C_φ = ω_d ∫₀¹ φ(t) t^(d+1) dt`.
pub fn normalization_phi(profile: &KernelProfile, d: usize) -> Result<f64> {
    expect_kind(profile, KernelKind::Covariance)?;
    let c = unit_ball_volume(d)? * profile.radial_moment(d as u32 + 1);
    nondegenerate(c)
}

/// `C_η` computed by quadrature even for polynomial profiles.
pub fn normalization_eta_quadrature(profile: &KernelProfile, d: usize) -> Result<f64> {
    expect_kind(profile, KernelKind::Density)?;
    let c = d as f64 * unit_ball_volume(d)? * profile.radial_moment_quadrature(d as u32 - 1);
    nondegenerate(c)
}

/// `C_φ` computed by quadrature even for polynomial profiles.
pub fn normalization_phi_quadrature(profile: &KernelProfile, d: usize) -> Result<f64> {
    expect_kind(profile, KernelKind::Covariance)?;
    let c = unit_ball_volume(d)? * profile.radial_moment_quadrature(d as u32 + 1);
    nondegenerate(c)
}

fn expect_kind(profile: &KernelProfile, kind: KernelKind) -> Result<()> {
    if profile.kind != kind {
        return Err(Error::InvalidKernel(format!(
            "expected a {kind:?} profile, got {:?}",
            profile.kind
        )));
    }
    Ok(())
}

fn nondegenerate(c: f64) -> Result<f64> {
    if c > 0.0 && c.is_finite() {
        Ok(c)
    } else {
        Err(Error::InvalidKernel(format!("normalization constant is {c}")))
    }
}

/// A profile bound to an intrinsic dimension, with its normalization cached.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedKernel {
    profile: KernelProfile,
    dimension: usize,
    constant: f64,
}

impl NormalizedKernel {
    /// Density kernel `η` with `C_η`.
    pub fn density(profile: KernelProfile, d: usize) -> Result<Self> {
        let constant = normalization_eta(&profile, d)?;
        Ok(Self { profile, dimension: d, constant })
    }

    /// Covariance kernel `φ` with `C_φ`.
    pub fn covariance(profile: KernelProfile, d: usize) -> Result<Self> {
        let constant = normalization_phi(&profile, d)?;
        Ok(Self { profile, dimension: d, constant })
    }

    pub fn profile(&self) -> &KernelProfile {
        &self.profile
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `C_η` or `C_φ` depending on the profile kind.
    pub fn constant(&self) -> f64 {
        self.constant
    }
}

/// `η(|z|/δ)`; zero once `|z| ≥ δ`.
#[inline]
pub fn eval_eta_delta(kernel: &NormalizedKernel, z: &[f64], delta: f64) -> f64 {
    let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    kernel.profile.eval(r / delta)
}

/// `ψ_r(z) = φ(|z|/r) (z/r) ⊗ (z/r)`.
pub fn eval_psi_r(kernel: &NormalizedKernel, z: &[f64], r: f64) -> SymMatrix {
    let mut m = SymMatrix::zeros(z.len());
    add_psi_r(&mut m, kernel.profile(), z, r, 1.0);
    m
}

/// Accumulates `weight · ψ_r(z)` into `acc`.
#[inline]
pub(crate) fn add_psi_r(acc: &mut SymMatrix, profile: &KernelProfile, z: &[f64], r: f64, weight: f64) {
    let r2 = z.iter().map(|v| v * v).sum::<f64>();
    let t = r2.sqrt() / r;
    let phi = profile.eval(t);
    if phi == 0.0 {
        return;
    }
    acc.add_outer(z, weight * phi / (r * r));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1).unwrap(), 2.0);
        assert!((unit_ball_volume(2).unwrap() - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3).unwrap() - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4).unwrap() - PI * PI / 2.0).abs() < 1e-14);
        assert!(unit_ball_volume(0).is_err());
        assert!(unit_ball_volume(17).is_err());
    }

    #[test]
    fn triangular_constants() {
        let eta = KernelProfile::triangular(KernelKind::Density);
        let phi = KernelProfile::triangular(KernelKind::Covariance);
        assert!(close(normalization_eta(&eta, 1).unwrap(), 1.0, 1e-14));
        assert!(close(normalization_eta(&eta, 2).unwrap(), PI / 3.0, 1e-14));
        assert!(close(normalization_phi(&phi, 1).unwrap(), 1.0 / 6.0, 1e-14));
        assert!(close(normalization_phi(&phi, 2).unwrap(), PI / 20.0, 1e-14));
        let epa = KernelProfile::epanechnikov(KernelKind::Covariance);
        assert!(close(normalization_phi(&epa, 1).unwrap(), 4.0 / 15.0, 1e-14));
    }

    #[test]
    fn indicator_cross_check() {
        let ind = KernelProfile::new(ProfileShape::Indicator, KernelKind::Density).unwrap();
        assert!(!ind.is_lipschitz());
        for d in 1..=5 {
            let q = normalization_eta_quadrature(&ind, d).unwrap();
            assert!(close(q, unit_ball_volume(d).unwrap(), 1e-10));
        }
    }

    #[test]
    fn kind_mismatch_and_degenerate() {
        let phi = KernelProfile::triangular(KernelKind::Covariance);
        assert!(matches!(normalization_eta(&phi, 1), Err(Error::InvalidKernel(_))));
        let zero = KernelProfile::new(
            ProfileShape::Table(vec![(0.0, 0.0), (1.0, 0.0)]),
            KernelKind::Covariance,
        )
        .unwrap();
        assert!(matches!(normalization_phi(&zero, 2), Err(Error::InvalidKernel(_))));
        let not_positive = KernelProfile::new(
            ProfileShape::Table(vec![(0.0, 1.0), (0.25, 0.0), (1.0, 0.0)]),
            KernelKind::Density,
        );
        assert!(not_positive.is_err());
    }

    #[test]
    fn table_profile_matches_triangular() {
        let table = KernelProfile::new(
            ProfileShape::Table(vec![(0.0, 1.0), (0.3, 0.7), (1.0, 0.0)]),
            KernelKind::Density,
        )
        .unwrap();
        assert!((table.lip_bound() - 1.0).abs() < 1e-12);
        assert_eq!(table.positivity_floor(), 0.5);
        for d in 1..=4 {
            let tri = normalization_eta(&KernelProfile::triangular(KernelKind::Density), d).unwrap();
            assert!(close(normalization_eta(&table, d).unwrap(), tri, 1e-10));
        }
    }

    #[test]
    fn eta_and_psi_examples() {
        let eta = NormalizedKernel::density(KernelProfile::triangular(KernelKind::Density), 1).unwrap();
        let delta = 0.4;
        assert_eq!(eval_eta_delta(&eta, &[0.0, 0.0], delta), 1.0);
        assert!((eval_eta_delta(&eta, &[0.2, 0.0], delta) - 0.5).abs() < 1e-15);
        assert_eq!(eval_eta_delta(&eta, &[0.0, 0.8], delta), 0.0);

        let phi =
            NormalizedKernel::covariance(KernelProfile::triangular(KernelKind::Covariance), 1).unwrap();
        let r = 0.7;
        assert_eq!(eval_psi_r(&phi, &[0.0, 0.0], r), SymMatrix::zeros(2));
        assert_eq!(eval_psi_r(&phi, &[r, 0.0], r), SymMatrix::zeros(2));
        let m = eval_psi_r(&phi, &[r / 2.0, 0.0], r);
        let want = SymMatrix::from_rows(&[&[0.125, 0.0], &[0.0, 0.0]]);
        assert!(m.max_abs_diff(&want) < 1e-15);
    }
}
