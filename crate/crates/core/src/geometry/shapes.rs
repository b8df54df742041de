//! The shape catalog. Every shape is parametrized explicitly so that its
//! tangent, singular set, Hausdorff measure and cell partitions are closed
//! form (up to one-dimensional quadrature for the Hölder graph).

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;

use super::quadrature::integrate_panels;
use crate::linalg::{dist, SymMatrix};

/// A lower-dimensional piece of the singular set.
#[derive(Debug, Clone, PartialEq)]
pub enum Stratum {
    Point(Vec<f64>),
    Segment { a: Vec<f64>, b: Vec<f64> },
    /// `{x : x[axis] = offset, |x with x[axis] removed| = radius}`.
    Circle { axis: usize, offset: f64, radius: f64 },
}

impl Stratum {
    pub fn dimension(&self) -> usize {
        match self {
            Stratum::Point(_) => 0,
            Stratum::Segment { .. } | Stratum::Circle { .. } => 1,
        }
    }

    /// `H^l` measure of the stratum, `l = dimension()`.
    pub fn measure(&self) -> f64 {
        match self {
            Stratum::Point(_) => 1.0,
            Stratum::Segment { a, b } => dist(a, b),
            Stratum::Circle { radius, .. } => TAU * radius,
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Stratum::Point(p) => dist(p, x),
            Stratum::Segment { a, b } => segment_distance(a, b, x),
            Stratum::Circle { axis, offset, radius } => {
                let along = x[*axis] - offset;
                let perp = x
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i != axis)
                    .map(|(_, v)| v * v)
                    .sum::<f64>()
                    .sqrt();
                (along * along + (perp - radius) * (perp - radius)).sqrt()
            }
        }
    }
}

fn segment_distance(a: &[f64], b: &[f64], x: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(p, q)| q - p).collect();
    let ax: Vec<f64> = a.iter().zip(x).map(|(p, q)| q - p).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 == 0.0 {
        0.0
    } else {
        (ab.iter().zip(&ax).map(|(u, v)| u * v).sum::<f64>() / len2).clamp(0.0, 1.0)
    };
    a.iter()
        .zip(&ab)
        .zip(x)
        .map(|((p, u), q)| {
            let c = p + t * u;
            (c - q) * (c - q)
        })
        .sum::<f64>()
        .sqrt()
}

/// A smooth piece of a planar curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Piece {
    Line { a: [f64; 2], b: [f64; 2] },
    /// Arc of the circle `center + radius·(cos α, sin α)`, `α ∈ [start, start + sweep]`.
    Arc { center: [f64; 2], radius: f64, start: f64, sweep: f64 },
}

impl Piece {
    fn length(&self) -> f64 {
        match self {
            Piece::Line { a, b } => dist(a, b),
            Piece::Arc { radius, sweep, .. } => radius * sweep,
        }
    }

    /// Point at arc-length fraction `u ∈ [0, 1]`.
    fn at(&self, u: f64) -> [f64; 2] {
        match self {
            Piece::Line { a, b } => [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])],
            Piece::Arc { center, radius, start, sweep } => {
                let ang = start + u * sweep;
                [center[0] + radius * ang.cos(), center[1] + radius * ang.sin()]
            }
        }
    }

    fn unit_tangent(&self, x: &[f64]) -> [f64; 2] {
        match self {
            Piece::Line { a, b } => {
                let l = dist(a, b);
                [(b[0] - a[0]) / l, (b[1] - a[1]) / l]
            }
            Piece::Arc { center, .. } => {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                let l = (dx * dx + dy * dy).sqrt();
                [-dy / l, dx / l]
            }
        }
    }

    /// Distance from `x` to the piece.
    fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Piece::Line { a, b } => segment_distance(a, b, x),
            Piece::Arc { center, radius, start, sweep } => {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                let ang = dy.atan2(dx);
                if angle_in_sweep(ang, *start, *sweep) {
                    ((dx * dx + dy * dy).sqrt() - radius).abs()
                } else {
                    dist(&self.at(0.0), x).min(dist(&self.at(1.0), x))
                }
            }
        }
    }

    /// Points of the piece with first coordinate equal to `c`.
    fn crossings(&self, c: f64) -> Vec<Vec<f64>> {
        match self {
            Piece::Line { a, b } => {
                if a[0] == b[0] {
                    // a line contained in the hyperplane would make the jump
                    // set one-dimensional; treat its endpoints as the stratum
                    if a[0] == c {
                        return vec![a.to_vec(), b.to_vec()];
                    }
                    return Vec::new();
                }
                let u = (c - a[0]) / (b[0] - a[0]);
                if (0.0..=1.0).contains(&u) {
                    vec![self.at(u).to_vec()]
                } else {
                    Vec::new()
                }
            }
            Piece::Arc { center, radius, start, sweep } => {
                let cosv = (c - center[0]) / radius;
                if cosv.abs() > 1.0 {
                    return Vec::new();
                }
                let base = cosv.acos();
                [base, -base]
                    .iter()
                    .filter(|a| angle_in_sweep(**a, *start, *sweep))
                    .map(|a| vec![center[0] + radius * a.cos(), center[1] + radius * a.sin()])
                    .collect()
            }
        }
    }
}

fn angle_in_sweep(ang: f64, start: f64, sweep: f64) -> bool {
    let rel = (ang - start).rem_euclid(TAU);
    rel <= sweep + 1e-15 || sweep >= TAU
}

/// One cell of a quadrature partition: representative point, `H^d` measure,
/// and tangent projector at the representative.
#[derive(Debug, Clone)]
pub struct Cell {
    pub point: Vec<f64>,
    pub weight: f64,
    pub tangent: SymMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseCurve {
    pieces: Vec<Piece>,
    cumulative: Vec<f64>,
    singular_points: Vec<[f64; 2]>,
}

impl PiecewiseCurve {
    fn new(pieces: Vec<Piece>, singular_points: Vec<[f64; 2]>) -> Self {
        let mut cumulative = Vec::with_capacity(pieces.len() + 1);
        cumulative.push(0.0);
        for p in &pieces {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + p.length());
        }
        Self { pieces, cumulative, singular_points }
    }

    fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn nearest_piece(&self, x: &[f64]) -> &Piece {
        self.pieces
            .iter()
            .min_by(|p, q| p.distance(x).total_cmp(&q.distance(x)))
            .expect("curve has pieces")
    }
}

/// Weierstrass-type graph `y = F(x)`, `x ∈ [0, 1]`, whose slope is
/// `W(x) = Σ_{j<J} s^j cos(2π t^j x)`, a `C^{0,a}` function with
/// `a = −ln s / ln t` in the limit `J → ∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderGraph {
    pub s: f64,
    pub t: f64,
    pub terms: usize,
}

impl HolderGraph {
    pub fn height(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        let mut amp = 1.0;
        let mut freq = 1.0;
        for _ in 0..self.terms {
            acc += amp * (TAU * freq * x).sin() / (TAU * freq);
            amp *= self.s;
            freq *= self.t;
        }
        acc
    }

    pub fn slope(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        let mut amp = 1.0;
        let mut freq = 1.0;
        for _ in 0..self.terms {
            acc += amp * (TAU * freq * x).cos();
            amp *= self.s;
            freq *= self.t;
        }
        acc
    }

    /// Upper bound on `|W|`.
    pub fn slope_bound(&self) -> f64 {
        (0..self.terms).map(|j| self.s.powi(j as i32)).sum()
    }

    pub fn holder_exponent(&self) -> f64 {
        (-self.s.ln() / self.t.ln()).min(1.0)
    }

    fn speed(&self, x: f64) -> f64 {
        (1.0 + self.slope(x).powi(2)).sqrt()
    }

    /// Panels used when integrating along the graph, enough to resolve the
    /// highest frequency.
    fn panels(&self) -> usize {
        let top = self.t.powi(self.terms.saturating_sub(1) as i32);
        top.ceil().clamp(16.0, 4.0e6) as usize
    }

    fn arc_length(&self, a: f64, b: f64, tol: f64) -> f64 {
        let top = self.t.powi(self.terms.saturating_sub(1) as i32);
        let panels = ((b - a) * top).ceil().max(1.0) as usize;
        integrate_panels(|x| self.speed(x), a, b, panels, tol)
    }
}

/// Geometric part of a shape model.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Curve(PiecewiseCurve),
    /// Sphere of given radius centered at the origin of `R³`.
    Sphere { radius: f64 },
    /// Flat disk `{|x| ≤ R, x₃ = 0}` in `R³`.
    Disk { radius: f64 },
    Graph(HolderGraph),
}

impl Geometry {
    pub fn circle(radius: f64) -> Self {
        Geometry::Curve(PiecewiseCurve::new(
            vec![Piece::Arc { center: [0.0, 0.0], radius, start: 0.0, sweep: TAU }],
            Vec::new(),
        ))
    }

    /// `[0, length] × {0}`.
    pub fn segment(length: f64) -> Self {
        Geometry::Curve(PiecewiseCurve::new(
            vec![Piece::Line { a: [0.0, 0.0], b: [length, 0.0] }],
            vec![[0.0, 0.0], [length, 0.0]],
        ))
    }

    /// Two half circles of radius `radius` glued to two horizontal segments
    /// `[−half_length, half_length] × {±radius}`.
    pub fn stadium(radius: f64, half_length: f64) -> Self {
        let (l, r) = (half_length, radius);
        Geometry::Curve(PiecewiseCurve::new(
            vec![
                Piece::Line { a: [-l, -r], b: [l, -r] },
                Piece::Arc { center: [l, 0.0], radius: r, start: -FRAC_PI_2, sweep: PI },
                Piece::Line { a: [l, r], b: [-l, r] },
                Piece::Arc { center: [-l, 0.0], radius: r, start: FRAC_PI_2, sweep: PI },
            ],
            vec![[-l, -r], [l, -r], [l, r], [-l, r]],
        ))
    }

    /// Boundary of `[−side/2, side/2]²`.
    pub fn square(side: f64) -> Self {
        let h = 0.5 * side;
        let c = [[-h, -h], [h, -h], [h, h], [-h, h]];
        Geometry::Curve(PiecewiseCurve::new(
            (0..4).map(|i| Piece::Line { a: c[i], b: c[(i + 1) % 4] }).collect(),
            c.to_vec(),
        ))
    }

    /// `[−a, a] × {0} ∪ {0} × [−a, a]`.
    pub fn cross(half_length: f64) -> Self {
        let a = half_length;
        Geometry::Curve(PiecewiseCurve::new(
            vec![
                Piece::Line { a: [-a, 0.0], b: [a, 0.0] },
                Piece::Line { a: [0.0, -a], b: [0.0, a] },
            ],
            vec![[0.0, 0.0], [-a, 0.0], [a, 0.0], [0.0, -a], [0.0, a]],
        ))
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Geometry::Curve(_) | Geometry::Graph(_) => 2,
            Geometry::Sphere { .. } | Geometry::Disk { .. } => 3,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Geometry::Curve(_) | Geometry::Graph(_) => 1,
            Geometry::Sphere { .. } | Geometry::Disk { .. } => 2,
        }
    }

    /// Hölder exponent of the tangent field.
    pub fn tangent_holder_exponent(&self) -> f64 {
        match self {
            Geometry::Graph(g) => g.holder_exponent(),
            _ => 1.0,
        }
    }

    /// `H^d(S)`.
    pub fn measure(&self) -> f64 {
        match self {
            Geometry::Curve(c) => c.length(),
            Geometry::Sphere { radius } => 2.0 * TAU * radius * radius,
            Geometry::Disk { radius } => PI * radius * radius,
            Geometry::Graph(g) => g.arc_length(0.0, 1.0, 1e-12),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Geometry::Curve(c) => {
                let pts: Vec<[f64; 2]> = c
                    .pieces
                    .iter()
                    .flat_map(|p| (0..=64).map(move |k| p.at(k as f64 / 64.0)))
                    .collect();
                max_pairwise(&pts)
            }
            Geometry::Sphere { radius } | Geometry::Disk { radius } => 2.0 * radius,
            Geometry::Graph(g) => {
                let pts: Vec<[f64; 2]> =
                    (0..=256).map(|k| k as f64 / 256.0).map(|x| [x, g.height(x)]).collect();
                max_pairwise(&pts)
            }
        }
    }

    /// Range of the first coordinate over the shape.
    pub fn first_coordinate_range(&self) -> (f64, f64) {
        match self {
            Geometry::Curve(c) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for p in &c.pieces {
                    match p {
                        Piece::Line { a, b } => {
                            lo = lo.min(a[0]).min(b[0]);
                            hi = hi.max(a[0]).max(b[0]);
                        }
                        Piece::Arc { center, radius, start, sweep } => {
                            lo = lo.min(p.at(0.0)[0]).min(p.at(1.0)[0]);
                            hi = hi.max(p.at(0.0)[0]).max(p.at(1.0)[0]);
                            if angle_in_sweep(0.0, *start, *sweep) {
                                hi = hi.max(center[0] + radius);
                            }
                            if angle_in_sweep(PI, *start, *sweep) {
                                lo = lo.min(center[0] - radius);
                            }
                        }
                    }
                }
                (lo, hi)
            }
            Geometry::Sphere { radius } | Geometry::Disk { radius } => (-radius, *radius),
            Geometry::Graph(_) => (0.0, 1.0),
        }
    }

    /// Constants `(L, U)` with `L r^d ≤ H^d(S ∩ B(x, r)) ≤ U r^d` for
    /// `x ∈ S`, `0 < r ≤ diam S`.
    pub fn ahlfors_bounds(&self) -> (f64, f64) {
        match self {
            Geometry::Curve(c) => {
                // connected curves exit the ball, so each contains an arc of
                // length r; every piece contributes at most π r (arcs) or 2r
                let upper: f64 = c
                    .pieces
                    .iter()
                    .map(|p| match p {
                        Piece::Line { .. } => 2.0,
                        Piece::Arc { .. } => PI,
                    })
                    .sum();
                (1.0, upper)
            }
            // cap area is exactly π r² for chord radius r ≤ 2R
            Geometry::Sphere { .. } => (PI, PI),
            // boundary points see at least a quarter disk at r = 2R
            Geometry::Disk { .. } => (PI / 4.0, PI),
            Geometry::Graph(g) => (1.0, 2.0 * (1.0 + g.slope_bound().powi(2)).sqrt()),
        }
    }

    /// Geometric singular strata (corners, gluing points, endpoints, boundary).
    pub fn singular_strata(&self) -> Vec<Stratum> {
        match self {
            Geometry::Curve(c) => c.singular_points.iter().map(|p| Stratum::Point(p.to_vec())).collect(),
            Geometry::Sphere { .. } => Vec::new(),
            Geometry::Disk { radius } => vec![Stratum::Circle { axis: 2, offset: 0.0, radius: *radius }],
            Geometry::Graph(g) => vec![
                Stratum::Point(vec![0.0, g.height(0.0)]),
                Stratum::Point(vec![1.0, g.height(1.0)]),
            ],
        }
    }

    /// The part of the shape lying in the hyperplane `x₁ = c`.
    pub fn level_set(&self, c: f64) -> Vec<Stratum> {
        match self {
            Geometry::Curve(curve) => {
                let mut pts: Vec<Vec<f64>> = Vec::new();
                for p in &curve.pieces {
                    for q in p.crossings(c) {
                        if !pts.iter().any(|e| dist(e, &q) < 1e-12) {
                            pts.push(q);
                        }
                    }
                }
                pts.into_iter().map(Stratum::Point).collect()
            }
            Geometry::Sphere { radius } => {
                if c.abs() >= *radius {
                    Vec::new()
                } else {
                    vec![Stratum::Circle { axis: 0, offset: c, radius: (radius * radius - c * c).sqrt() }]
                }
            }
            Geometry::Disk { radius } => {
                if c.abs() >= *radius {
                    Vec::new()
                } else {
                    let h = (radius * radius - c * c).sqrt();
                    vec![Stratum::Segment { a: vec![c, -h, 0.0], b: vec![c, h, 0.0] }]
                }
            }
            Geometry::Graph(g) => {
                if (0.0..=1.0).contains(&c) {
                    vec![Stratum::Point(vec![c, g.height(c)])]
                } else {
                    Vec::new()
                }
            }
        }
    }

    /// Tangent projector at a point of the shape (no singularity check).
    pub fn tangent(&self, x: &[f64]) -> SymMatrix {
        match self {
            Geometry::Curve(c) => SymMatrix::outer(&c.nearest_piece(x).unit_tangent(x)),
            Geometry::Sphere { .. } => {
                let r = crate::linalg::norm(x);
                let u: Vec<f64> = x.iter().map(|v| v / r).collect();
                let mut p = SymMatrix::identity(3);
                p.add_outer(&u, -1.0);
                p
            }
            Geometry::Disk { .. } => SymMatrix::diag(&[1.0, 1.0, 0.0]),
            Geometry::Graph(g) => {
                let w = g.slope(x[0]);
                let l = (1.0 + w * w).sqrt();
                SymMatrix::outer(&[1.0 / l, w / l])
            }
        }
    }

    /// Draws a point and returns an acceptance factor in `[0, 1]`; accepting
    /// with that probability yields a point distributed as the normalized
    /// `H^d` on the shape.
    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> f64 {
        match self {
            Geometry::Curve(c) => {
                let u: f64 = rng.random::<f64>() * c.length();
                let k = c.cumulative.partition_point(|s| *s <= u).clamp(1, c.pieces.len()) - 1;
                let piece = &c.pieces[k];
                let frac = ((u - c.cumulative[k]) / piece.length()).clamp(0.0, 1.0);
                out.copy_from_slice(&piece.at(frac));
                1.0
            }
            Geometry::Sphere { radius } => {
                let z: f64 = radius * (2.0 * rng.random::<f64>() - 1.0);
                let phi: f64 = TAU * rng.random::<f64>();
                let rho = (radius * radius - z * z).max(0.0).sqrt();
                out.copy_from_slice(&[rho * phi.cos(), rho * phi.sin(), z]);
                1.0
            }
            Geometry::Disk { radius } => {
                let r = radius * rng.random::<f64>().sqrt();
                let phi: f64 = TAU * rng.random::<f64>();
                out.copy_from_slice(&[r * phi.cos(), r * phi.sin(), 0.0]);
                1.0
            }
            Geometry::Graph(g) => {
                let x: f64 = rng.random();
                out.copy_from_slice(&[x, g.height(x)]);
                g.speed(x) / (1.0 + g.slope_bound().powi(2)).sqrt()
            }
        }
    }

    /// `∫_S f dH^d` to roughly absolute tolerance `tol`.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F, tol: f64) -> f64 {
        match self {
            Geometry::Curve(c) => c
                .pieces
                .iter()
                .map(|p| {
                    let len = p.length();
                    integrate_panels(|u| f(&p.at(u)) * len, 0.0, 1.0, 64, tol / c.pieces.len() as f64)
                })
                .sum(),
            Geometry::Sphere { radius } => {
                let r = *radius;
                // Archimedes: dH² = R dz dφ
                integrate_panels(
                    |z| {
                        let rho = (r * r - z * z).max(0.0).sqrt();
                        r * integrate_panels(|phi| f(&[rho * phi.cos(), rho * phi.sin(), z]), 0.0, TAU, 16, tol)
                    },
                    -r,
                    r,
                    16,
                    tol,
                )
            }
            Geometry::Disk { radius } => integrate_panels(
                |rr| {
                    rr * integrate_panels(|phi| f(&[rr * phi.cos(), rr * phi.sin(), 0.0]), 0.0, TAU, 16, tol)
                },
                0.0,
                *radius,
                16,
                tol,
            ),
            Geometry::Graph(g) => integrate_panels(|x| f(&[x, g.height(x)]) * g.speed(x), 0.0, 1.0, g.panels(), tol),
        }
    }

    /// Partition into cells of diameter at most `h`, represented at their
    /// arc/area midpoints.
    pub fn cells(&self, h: f64) -> Vec<Cell> {
        match self {
            Geometry::Curve(c) => {
                let mut cells = Vec::new();
                for p in &c.pieces {
                    let len = p.length();
                    let m = (len / h - 1e-9).ceil().max(1.0) as usize;
                    let w = len / m as f64;
                    for k in 0..m {
                        let pt = p.at((k as f64 + 0.5) / m as f64);
                        cells.push(Cell {
                            point: pt.to_vec(),
                            weight: w,
                            tangent: SymMatrix::outer(&p.unit_tangent(&pt)),
                        });
                    }
                }
                cells
            }
            Geometry::Sphere { radius } => {
                let r = *radius;
                let bands = (PI * r / (0.5 * h)).ceil() as usize;
                let dalpha = PI / bands as f64;
                let mut cells = Vec::new();
                for k in 0..bands {
                    let (a0, a1) = (k as f64 * dalpha, (k + 1) as f64 * dalpha);
                    let widest = if a0 <= FRAC_PI_2 && a1 >= FRAC_PI_2 { 1.0 } else { a0.sin().max(a1.sin()) };
                    let sectors = ((TAU * r * widest) / (0.5 * h)).ceil().max(1.0) as usize;
                    let dphi = TAU / sectors as f64;
                    let area = r * r * (a0.cos() - a1.cos()) * dphi;
                    let ac = (0.5 * (a0.cos() + a1.cos())).acos();
                    for j in 0..sectors {
                        let phi = (j as f64 + 0.5) * dphi;
                        let pt = vec![r * ac.sin() * phi.cos(), r * ac.sin() * phi.sin(), r * ac.cos()];
                        let tangent = self.tangent(&pt);
                        cells.push(Cell { point: pt, weight: area, tangent });
                    }
                }
                cells
            }
            Geometry::Disk { radius } => {
                let r = *radius;
                let rings = (r / (0.5 * h)).ceil() as usize;
                let dr = r / rings as f64;
                let mut cells = Vec::new();
                for k in 0..rings {
                    let (r0, r1) = (k as f64 * dr, (k + 1) as f64 * dr);
                    let sectors = ((TAU * r1) / (0.5 * h)).ceil().max(1.0) as usize;
                    let dphi = TAU / sectors as f64;
                    let area = 0.5 * (r1 * r1 - r0 * r0) * dphi;
                    let rc = (0.5 * (r0 * r0 + r1 * r1)).sqrt();
                    for j in 0..sectors {
                        let phi = (j as f64 + 0.5) * dphi;
                        cells.push(Cell {
                            point: vec![rc * phi.cos(), rc * phi.sin(), 0.0],
                            weight: area,
                            tangent: SymMatrix::diag(&[1.0, 1.0, 0.0]),
                        });
                    }
                }
                cells
            }
            Geometry::Graph(g) => {
                let speed_max = (1.0 + g.slope_bound().powi(2)).sqrt();
                let m = (speed_max / h).ceil() as usize;
                let dx = 1.0 / m as f64;
                (0..m)
                    .map(|k| {
                        let (x0, x1) = (k as f64 * dx, (k + 1) as f64 * dx);
                        let xm = 0.5 * (x0 + x1);
                        let pt = vec![xm, g.height(xm)];
                        let tangent = self.tangent(&pt);
                        Cell { point: pt, weight: g.arc_length(x0, x1, 1e-13 * dx), tangent }
                    })
                    .collect()
            }
        }
    }
}

fn max_pairwise(pts: &[[f64; 2]]) -> f64 {
    let mut best = 0.0f64;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            best = best.max(dist(p, q));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_partition() {
        let g = Geometry::circle(1.0);
        let cells = g.cells(TAU / 1000.0);
        assert_eq!(cells.len(), 1000);
        for c in &cells {
            assert!((c.weight - TAU / 1000.0).abs() < 1e-15);
        }
    }

    #[test]
    fn square_and_segment_partitions() {
        let cells = Geometry::square(1.0).cells(1.0 / 250.0);
        assert_eq!(cells.len(), 1000);
        let corner_cell = &cells[0];
        assert!(corner_cell.tangent.max_abs_diff(&SymMatrix::diag(&[1.0, 0.0])) < 1e-15);
        let seg = Geometry::segment(1.0).cells(0.01);
        assert_eq!(seg.len(), 100);
        assert!(seg.iter().all(|c| (c.weight - 0.01).abs() < 1e-15));
    }

    #[test]
    fn two_dimensional_cells_cover_area() {
        for (g, area) in [(Geometry::Sphere { radius: 1.0 }, 4.0 * PI), (Geometry::Disk { radius: 1.0 }, PI)] {
            let h = 0.05;
            let cells = g.cells(h);
            let total: f64 = cells.iter().map(|c| c.weight).sum();
            assert!((total - area).abs() < 1e-10, "{total} vs {area}");
        }
    }

    #[test]
    fn strata_distances() {
        assert!((Stratum::Circle { axis: 2, offset: 0.0, radius: 1.0 }.distance(&[0.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
        let s = Stratum::Segment { a: vec![0.0, -1.0, 0.0], b: vec![0.0, 1.0, 0.0] };
        assert!((s.distance(&[0.5, 2.0, 0.0]) - (1.25f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn level_sets() {
        let pts = Geometry::circle(1.0).level_set(0.0);
        assert_eq!(pts.len(), 2);
        let sq = Geometry::square(1.0).level_set(0.0);
        assert_eq!(sq.len(), 2);
    }
}
