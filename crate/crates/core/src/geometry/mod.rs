//! Ground-truth shapes `μ = θ H^d|_S` with closed-form oracles.

mod quadrature;
mod shapes;

use std::fmt;

pub use quadrature::{integrate, integrate_panels};
pub use shapes::{Cell, Geometry, HolderGraph, Piece, Stratum};

use crate::error::{Error, Result};
use crate::linalg::{dist, SymMatrix};
use crate::measure::{DiscreteMeasure, DiscreteVarifold};

const NORMALIZATION_TOL: f64 = 1e-13;
const SINGULAR_EPS: f64 = 1e-12;

/// Unnormalized density profile `g`; the model density is `θ = g / ∫_S g`.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityProfile {
    Uniform,
    /// `2 + x₁`.
    Tilt,
    /// `1 + |x − center|^exponent`, Hölder with that exponent.
    HolderBump { exponent: f64, center: Vec<f64> },
    /// `1` where `x₁ < threshold`, `ratio` where `x₁ ≥ threshold`.
    Jump { threshold: f64, ratio: f64 },
}

impl DensityProfile {
    #[inline]
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            DensityProfile::Uniform => 1.0,
            DensityProfile::Tilt => 2.0 + x[0],
            DensityProfile::HolderBump { exponent, center } => 1.0 + dist(x, center).powf(*exponent),
            DensityProfile::Jump { threshold, ratio } => {
                if x[0] >= *threshold {
                    *ratio
                } else {
                    1.0
                }
            }
        }
    }

    fn holder_exponent(&self) -> f64 {
        match self {
            DensityProfile::HolderBump { exponent, .. } => *exponent,
            _ => 1.0,
        }
    }

    /// `(min, max)` of the profile over a shape.
    fn range(&self, geometry: &Geometry) -> (f64, f64) {
        match self {
            DensityProfile::Uniform => (1.0, 1.0),
            DensityProfile::Tilt => {
                let (lo, hi) = geometry.first_coordinate_range();
                (2.0 + lo, 2.0 + hi)
            }
            DensityProfile::HolderBump { exponent, .. } => {
                (1.0, 1.0 + geometry.diameter().powf(*exponent))
            }
            DensityProfile::Jump { ratio, .. } => (ratio.min(1.0), ratio.max(1.0)),
        }
    }
}

/// Regularity metadata of a shape model.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Regularity {
    /// Hölder exponent of the tangent field (`C^{1,a}` pieces).
    pub a: f64,
    /// Hölder exponent of the density off its jump set.
    pub b: f64,
    /// Ahlfors constant `C₀ ≥ 1` of `μ`.
    pub ahlfors_c0: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// `(l, H^l)` per singular stratum.
    pub singular_strata: Vec<(usize, f64)>,
}

/// A ground-truth shape with its sampling density.
#[derive(Debug, Clone)]
pub struct ShapeModel {
    name: String,
    geometry: Geometry,
    density: DensityProfile,
    normalization: f64,
    regularity: Regularity,
    strata: Vec<Stratum>,
}

impl fmt::Display for ShapeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl ShapeModel {
    pub fn new(name: impl Into<String>, geometry: Geometry, density: DensityProfile) -> Result<Self> {
        if let DensityProfile::HolderBump { exponent, center } = &density {
            if !(*exponent > 0.0 && *exponent <= 1.0) {
                return Err(Error::Argument(format!("bump exponent {exponent} outside (0, 1]")));
            }
            if center.len() != geometry.ambient_dim() {
                return Err(Error::Argument("bump center has the wrong dimension".into()));
            }
        }
        if let DensityProfile::Jump { ratio, .. } = &density {
            if !(*ratio > 0.0 && ratio.is_finite()) {
                return Err(Error::Argument(format!("jump ratio {ratio} must be positive")));
            }
        }
        let normalization = geometry.integrate(|x| density.eval(x), NORMALIZATION_TOL);
        let (gmin, gmax) = density.range(&geometry);
        let theta_min = gmin / normalization;
        let theta_max = gmax / normalization;
        let (lower, upper) = geometry.ahlfors_bounds();
        let ahlfors_c0 = (upper * theta_max).max(1.0 / (lower * theta_min)).max(1.0);

        let mut strata = geometry.singular_strata();
        if let DensityProfile::Jump { threshold, .. } = &density {
            strata.extend(geometry.level_set(*threshold));
        }
        let regularity = Regularity {
            a: geometry.tangent_holder_exponent(),
            b: density.holder_exponent(),
            ahlfors_c0,
            theta_min,
            theta_max,
            singular_strata: strata.iter().map(|s| (s.dimension(), s.measure())).collect(),
        };
        Ok(Self { name: name.into(), geometry, density, normalization, regularity, strata })
    }

    /// Parses a shape spec (`circle`, `sphere`, `segment`,
    /// `stadium:radius=1,length=2`, `square`, `cross`, `disk`,
    /// `weier:s=0.3,t=4,J=12`, with the long names `square_boundary`,
    /// `cross_segments`, `disk_with_boundary`, `holder_graph` accepted as
    /// aliases) and a density spec (`uniform`, `tilt`,
    /// `bump:b=0.5`, `jump:c=0,ratio=2`).
    pub fn from_names(shape: &str, density: &str) -> Result<Self> {
        let (kind, params) = split_spec(shape)?;
        let geometry = match kind.as_str() {
            "circle" => Geometry::circle(params.get("radius", 1.0)?),
            "sphere" => Geometry::Sphere { radius: params.get("radius", 1.0)? },
            "segment" => Geometry::segment(params.get("length", 1.0)?),
            "stadium" => Geometry::stadium(params.get("radius", 1.0)?, 0.5 * params.get("length", 2.0)?),
            "square" | "square_boundary" => Geometry::square(params.get("side", 1.0)?),
            "cross" | "cross_segments" => Geometry::cross(params.get("half_length", 1.0)?),
            "disk" | "disk_with_boundary" => Geometry::Disk { radius: params.get("radius", 1.0)? },
            "weier" | "holder_graph" => {
                let g = HolderGraph {
                    s: params.get("s", 0.3)?,
                    t: params.get("t", 4.0)?,
                    terms: params.get("J", 12.0)? as usize,
                };
                if !(g.s > 0.0 && g.s < 1.0 && g.t > 1.0 && g.terms >= 1) {
                    return Err(Error::Argument("weier needs 0 < s < 1, t > 1, J ≥ 1".into()));
                }
                Geometry::Graph(g)
            }
            other => return Err(Error::Argument(format!("unknown shape '{other}'"))),
        };
        params.reject_unused(shape)?;

        let (dkind, dparams) = split_spec(density)?;
        let profile = match dkind.as_str() {
            "uniform" => DensityProfile::Uniform,
            "tilt" => DensityProfile::Tilt,
            "bump" => DensityProfile::HolderBump {
                exponent: dparams.get("b", 0.5)?,
                center: anchor_point(&geometry),
            },
            "jump" => DensityProfile::Jump {
                threshold: dparams.get("c", 0.0)?,
                ratio: dparams.get("ratio", 2.0)?,
            },
            other => return Err(Error::Argument(format!("unknown density '{other}'"))),
        };
        dparams.reject_unused(density)?;
        Self::new(format!("{shape}/{density}"), geometry, profile)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn density_profile(&self) -> &DensityProfile {
        &self.density
    }

    pub fn ambient_dim(&self) -> usize {
        self.geometry.ambient_dim()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.geometry.intrinsic_dim()
    }

    pub fn regularity(&self) -> &Regularity {
        &self.regularity
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    /// `H^d(S)`.
    pub fn hausdorff_measure(&self) -> f64 {
        self.geometry.measure()
    }

    pub fn diameter(&self) -> f64 {
        self.geometry.diameter()
    }

    /// `θ(x)` for `x` on the shape. Off the shape the value is meaningless.
    pub fn density_at(&self, x: &[f64]) -> f64 {
        self.density.eval(x) / self.normalization
    }

    /// Unnormalized density and its upper bound, used by the sampler.
    pub(crate) fn acceptance_ratio(&self, x: &[f64]) -> f64 {
        let (_, gmax) = self.density.range(&self.geometry);
        self.density.eval(x) / gmax
    }

    /// Tangent projector at `x ∈ S \ 𝔖`.
    pub fn tangent_at(&self, x: &[f64]) -> Result<SymMatrix> {
        let distance = self.singular_distance(x);
        if distance <= SINGULAR_EPS {
            return Err(Error::SingularPoint { distance });
        }
        Ok(self.geometry.tangent(x))
    }

    /// Distance to the union of singular strata, `+∞` when there are none.
    pub fn singular_distance(&self, x: &[f64]) -> f64 {
        self.strata.iter().map(|s| s.distance(x)).fold(f64::INFINITY, f64::min)
    }

    /// Quadrature of `W_S = H^d|_S ⊗ δ_{Π_{T_x S}}` with cells of diameter
    /// at most `h`.
    pub fn quadrature_varifold(&self, h: f64) -> Result<DiscreteVarifold> {
        if !(h > 0.0) || h > self.diameter() / 10.0 {
            return Err(Error::Argument(format!(
                "quadrature resolution {h} must lie in (0, diam/10 = {}]",
                self.diameter() / 10.0
            )));
        }
        let cells = self.geometry.cells(h);
        let n = self.ambient_dim();
        let mut points = Vec::with_capacity(cells.len() * n);
        let mut weights = Vec::with_capacity(cells.len());
        let mut matrices = Vec::with_capacity(cells.len() * n * n);
        for c in cells {
            points.extend_from_slice(&c.point);
            weights.push(c.weight);
            matrices.extend_from_slice(c.tangent.as_slice());
        }
        Ok(DiscreteVarifold::from_parts_unchecked(n, points, weights, matrices, Some(self.intrinsic_dim())))
    }

    /// Quadrature of `μ = θ H^d|_S`.
    pub fn quadrature_law(&self, h: f64) -> Result<DiscreteMeasure> {
        let v = self.quadrature_varifold(h)?;
        let weights: Vec<f64> = (0..v.len()).map(|i| v.weights()[i] * self.density_at(v.point(i))).collect();
        DiscreteMeasure::new(v.dim(), v.points().to_vec(), weights)
    }
}

/// A point on the shape away from its singular set, used as the default
/// bump center.
fn anchor_point(geometry: &Geometry) -> Vec<f64> {
    match geometry {
        Geometry::Curve(_) => {
            let cells = geometry.cells(geometry.diameter() / 64.0);
            cells[cells.len() / 8].point.clone()
        }
        Geometry::Sphere { radius } => vec![0.0, 0.0, *radius],
        Geometry::Disk { .. } => vec![0.0, 0.0, 0.0],
        Geometry::Graph(g) => vec![0.5, g.height(0.5)],
    }
}

struct SpecParams {
    pairs: Vec<(String, f64)>,
    used: std::cell::RefCell<Vec<bool>>,
}

impl SpecParams {
    fn get(&self, key: &str, default: f64) -> Result<f64> {
        match self.pairs.iter().position(|(k, _)| k == key) {
            Some(i) => {
                self.used.borrow_mut()[i] = true;
                Ok(self.pairs[i].1)
            }
            None => Ok(default),
        }
    }

    fn reject_unused(&self, spec: &str) -> Result<()> {
        let used = self.used.borrow();
        match self.pairs.iter().zip(used.iter()).find(|(_, u)| !**u) {
            Some(((k, _), _)) => Err(Error::Argument(format!("unknown parameter '{k}' in '{spec}'"))),
            None => Ok(()),
        }
    }
}

fn split_spec(spec: &str) -> Result<(String, SpecParams)> {
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k, r),
        None => (spec, ""),
    };
    let mut pairs = Vec::new();
    for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value in '{spec}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("'{item}' in '{spec}': {e}")))?;
        pairs.push((k.trim().to_string(), v));
    }
    let used = std::cell::RefCell::new(vec![false; pairs.len()]);
    Ok((kind.trim().to_string(), SpecParams { pairs, used }))
}

/// Quadrature of `H^d` on the affine plane `x + range(P)`, on a grid of
/// spacing at most `h` covering the cube of half-width `extent`.
pub fn flat_plane_quadrature(
    d: usize,
    x: &[f64],
    projector: &SymMatrix,
    extent: f64,
    h: f64,
) -> Result<DiscreteMeasure> {
    let n = x.len();
    if projector.dim() != n || d == 0 || d > n {
        return Err(Error::Argument("projector does not match the point dimension".into()));
    }
    if !(extent > 0.0 && h > 0.0) {
        return Err(Error::Argument("extent and h must be positive".into()));
    }
    let eig = projector.eigh();
    let basis: Vec<&[f64]> = (0..d).map(|k| eig.vector(k)).collect();
    let per_axis = (2.0 * extent / h - 1e-9).ceil() as usize;
    let step = 2.0 * extent / per_axis as f64;
    let total = per_axis.pow(d as u32);
    let mut points = Vec::with_capacity(total * n);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let mut p = x.to_vec();
        for (k, u) in basis.iter().enumerate() {
            let c = -extent + (idx[k] as f64 + 0.5) * step;
            for (pi, ui) in p.iter_mut().zip(u.iter()) {
                *pi += c * ui;
            }
        }
        points.extend_from_slice(&p);
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
        }
    }
    DiscreteMeasure::new(n, points, vec![step.powi(d as i32); total])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn density_examples() {
        let c = ShapeModel::from_names("circle", "uniform").unwrap();
        assert!((c.density_at(&[1.0, 0.0]) - 1.0 / TAU).abs() < 1e-14);
        let t = ShapeModel::from_names("circle", "tilt").unwrap();
        assert!((t.density_at(&[1.0, 0.0]) - 3.0 / (4.0 * PI)).abs() < 1e-12);
        let sq = ShapeModel::from_names("square", "uniform").unwrap();
        assert!((sq.density_at(&[0.5, 0.1]) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn tangent_examples() {
        let c = ShapeModel::from_names("circle", "uniform").unwrap();
        let p = c.tangent_at(&[1.0, 0.0]).unwrap();
        assert!(p.max_abs_diff(&SymMatrix::diag(&[0.0, 1.0])) < 1e-15);
        let s = ShapeModel::from_names("sphere", "uniform").unwrap();
        let p = s.tangent_at(&[0.0, 0.0, 1.0]).unwrap();
        assert!(p.max_abs_diff(&SymMatrix::diag(&[1.0, 1.0, 0.0])) < 1e-15);
        let x = ShapeModel::from_names("cross", "uniform").unwrap();
        let p = x.tangent_at(&[0.5, 0.0]).unwrap();
        assert!(p.max_abs_diff(&SymMatrix::diag(&[1.0, 0.0])) < 1e-15);
        assert!(matches!(x.tangent_at(&[0.0, 0.0]), Err(Error::SingularPoint { .. })));
    }

    #[test]
    fn singular_distance_examples() {
        let c = ShapeModel::from_names("circle", "uniform").unwrap();
        assert_eq!(c.singular_distance(&[1.0, 0.0]), f64::INFINITY);
        let st = ShapeModel::from_names("stadium:radius=1,length=2", "uniform").unwrap();
        assert!((st.singular_distance(&[0.0, -1.0]) - 1.0).abs() < 1e-15);
        let sq = ShapeModel::from_names("square", "uniform").unwrap();
        assert!((sq.singular_distance(&[0.5, 0.0]) - 0.5).abs() < 1e-15);
        let jump = ShapeModel::from_names("circle", "jump:c=0,ratio=2").unwrap();
        assert!((jump.singular_distance(&[0.0, 1.0])).abs() < 1e-15);
        let disk = ShapeModel::from_names("disk", "uniform").unwrap();
        assert!((disk.singular_distance(&[0.25, 0.0, 0.0]) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn total_mass_is_one() {
        for (shape, density) in [
            ("circle", "uniform"),
            ("circle", "tilt"),
            ("circle", "bump:b=0.5"),
            ("circle", "jump:c=0.3,ratio=3"),
            ("stadium:radius=1,length=2", "tilt"),
            ("square", "jump:c=0,ratio=2"),
            ("cross", "bump:b=0.7"),
            ("sphere", "tilt"),
            ("disk", "tilt"),
            ("weier:s=0.3,t=4,J=4", "uniform"),
        ] {
            let m = ShapeModel::from_names(shape, density).unwrap();
            let mass = m.geometry().integrate(|x| m.density_at(x), 1e-13);
            assert!((mass - 1.0).abs() < 1e-10, "{shape}/{density}: {mass}");
        }
    }

    #[test]
    fn spec_parse_errors() {
        assert!(ShapeModel::from_names("torus", "uniform").is_err());
        assert!(ShapeModel::from_names("circle", "uniform:x=1").is_err());
        assert!(ShapeModel::from_names("circle:radius", "uniform").is_err());
        assert!(ShapeModel::from_names("weier:s=2", "uniform").is_err());
    }

    #[test]
    fn quadrature_rejects_coarse_h() {
        let c = ShapeModel::from_names("circle", "uniform").unwrap();
        assert!(c.quadrature_varifold(0.5).is_err());
        assert_eq!(c.quadrature_varifold(TAU / 1000.0).unwrap().len(), 1000);
    }

    #[test]
    fn plane_quadrature() {
        let q = flat_plane_quadrature(1, &[0.0, 0.0], &SymMatrix::diag(&[1.0, 0.0]), 1.0, 0.001).unwrap();
        assert_eq!(q.len(), 2000);
        assert!((q.total_mass() - 2.0).abs() < 1e-12);
        assert!(q.points().chunks(2).all(|p| p[1] == 0.0));
        let q = flat_plane_quadrature(2, &[0.0, 0.0, 1.0], &SymMatrix::diag(&[1.0, 1.0, 0.0]), 0.5, 0.01).unwrap();
        assert_eq!(q.len(), 100 * 100);
        assert!((q.total_mass() - 1.0).abs() < 1e-12);
    }
}
