//! Bounded-Lipschitz distance between discrete measures and varifolds.
//!
//! `β(a, b) = sup { Σ_i f_i c_i : |f_i| ≤ 1, |f_i − f_j| ≤ d(p_i, p_j) }`
//! with `c = a − b` on the merged support. Its dual is a transshipment
//! problem on the support plus a ground node: moving mass between `p_i` and
//! `p_j` costs `d(p_i, p_j)`, creating or destroying it at `p_i` costs
//! `ρ_i`. Globally `ρ_i = 1`, so any transport longer than 2 is replaced by
//! destroy-and-create; for the localized distance `β_B`,
//! `ρ_i = min(1, dist(p_i, B^c))`.
//!
//! Costs and masses are scaled to integers and solved exactly with a
//! network simplex. Pair arcs start from a `k`-nearest-neighbor graph and
//! are completed by pricing: any pair whose dual constraint is violated is
//! added and the solve resumes, so the returned value is the optimum over
//! all pairs.

mod coarsen;
mod oracle;
mod simplex;

pub use coarsen::{coarsen, coarsen_varifold};
pub use oracle::{lp_oracle, ORACLE_MAX_POINTS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, frobenius_diff, op_norm_diff};
use crate::measure::{DiscreteMeasure, DiscreteVarifold};
use simplex::{Arc, NetworkSimplex};

pub const DEFAULT_SIZE_CAP: usize = 4000;
pub const DEFAULT_KNN: usize = 32;
const COST_SCALE: f64 = 1e9;
const MASS_RESOLUTION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixNorm {
    #[default]
    Operator,
    Frobenius,
}

impl MatrixNorm {
    pub fn diff(self, n: usize, a: &[f64], b: &[f64]) -> f64 {
        match self {
            MatrixNorm::Operator => op_norm_diff(n, a, b),
            MatrixNorm::Frobenius => frobenius_diff(a, b),
        }
    }
}

/// `|x − y| + ‖A − B‖_op` on `R^n × Sym(n)`.
pub fn varifold_metric(x: &[f64], a: &[f64], y: &[f64], b: &[f64]) -> f64 {
    varifold_metric_with(MatrixNorm::Operator, x, a, y, b)
}

pub fn varifold_metric_with(norm: MatrixNorm, x: &[f64], a: &[f64], y: &[f64], b: &[f64]) -> f64 {
    dist(x, y) + norm.diff(x.len(), a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Euclidean,
    ProductVarifold(MatrixNorm),
}

/// The merged support of a problem together with its ground metric.
#[derive(Debug, Clone)]
pub struct MetricSpaceView {
    dim: usize,
    kind: SpaceKind,
    points: Vec<f64>,
    matrices: Vec<f64>,
}

impl MetricSpaceView {
    pub fn euclidean(dim: usize, points: Vec<f64>) -> Self {
        Self { dim, kind: SpaceKind::Euclidean, points, matrices: Vec::new() }
    }

    pub fn product(dim: usize, points: Vec<f64>, matrices: Vec<f64>, norm: MatrixNorm) -> Self {
        debug_assert_eq!(points.len() / dim * dim * dim, matrices.len());
        Self { dim, kind: SpaceKind::ProductVarifold(norm), points, matrices }
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn matrix(&self, i: usize) -> &[f64] {
        let m = self.dim * self.dim;
        &self.matrices[i * m..(i + 1) * m]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let spatial = dist(self.point(i), self.point(j));
        match self.kind {
            SpaceKind::Euclidean => spatial,
            SpaceKind::ProductVarifold(norm) => spatial + norm.diff(self.dim, self.matrix(i), self.matrix(j)),
        }
    }
}

/// Open ball `B(center, radius)` localizing the test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || center.is_empty() {
            return Err(Error::Argument(format!("ball radius {radius} must be positive")));
        }
        Ok(Self { center, radius })
    }

    /// Parses `c1,c2,...,R`.
    pub fn parse(s: &str) -> Result<Self> {
        let vals: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("ball `{s}`: {e}"))))
            .collect::<Result<_>>()?;
        if vals.len() < 2 {
            return Err(Error::Parse(format!("ball `{s}` needs a center and a radius")));
        }
        let (center, radius) = vals.split_at(vals.len() - 1);
        Self::new(center.to_vec(), radius[0])
    }

    /// `min(1, dist(x, B^c))`, the largest admissible `|f(x)|`.
    pub fn bound(&self, x: &[f64]) -> f64 {
        (self.radius - dist(x, &self.center)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone)]
pub enum Support {
    Measure(DiscreteMeasure),
    Varifold(DiscreteVarifold),
}

impl Support {
    pub fn len(&self) -> usize {
        match self {
            Support::Measure(m) => m.len(),
            Support::Varifold(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Support::Measure(m) => m.dim(),
            Support::Varifold(v) => v.dim(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Support::Measure(m) => m.total_mass(),
            Support::Varifold(v) => v.total_mass(),
        }
    }

    fn coarsened(&self, grid_h: f64) -> Result<Support> {
        Ok(match self {
            Support::Measure(m) => Support::Measure(coarsen(m, grid_h)?),
            Support::Varifold(v) => Support::Varifold(coarsen_varifold(v, grid_h)?),
        })
    }
}

#[derive(Debug, Clone)]
pub struct FlatMetricProblem {
    pub measure_a: Support,
    pub measure_b: Support,
    pub norm: MatrixNorm,
    pub localization: Option<Ball>,
}

impl FlatMetricProblem {
    pub fn measures(a: DiscreteMeasure, b: DiscreteMeasure) -> Result<Self> {
        Self::new(Support::Measure(a), Support::Measure(b))
    }

    pub fn varifolds(a: DiscreteVarifold, b: DiscreteVarifold) -> Result<Self> {
        Self::new(Support::Varifold(a), Support::Varifold(b))
    }

    pub fn new(a: Support, b: Support) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::Argument(format!("dimension mismatch: {} vs {}", a.dim(), b.dim())));
        }
        if matches!(a, Support::Measure(_)) != matches!(b, Support::Measure(_)) {
            return Err(Error::Argument("cannot compare a measure with a varifold".into()));
        }
        Ok(Self { measure_a: a, measure_b: b, norm: MatrixNorm::Operator, localization: None })
    }

    pub fn with_ball(mut self, ball: Ball) -> Result<Self> {
        if ball.center.len() != self.measure_a.dim() {
            return Err(Error::Argument("ball center has the wrong dimension".into()));
        }
        self.localization = Some(ball);
        Ok(self)
    }

    pub fn with_norm(mut self, norm: MatrixNorm) -> Self {
        self.norm = norm;
        self
    }

    pub fn len(&self) -> usize {
        self.measure_a.len() + self.measure_b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Merged support (points of `a` first) and signed masses `a − b`.
    pub fn space(&self) -> (MetricSpaceView, Vec<f64>) {
        let dim = self.measure_a.dim();
        match (&self.measure_a, &self.measure_b) {
            (Support::Measure(a), Support::Measure(b)) => {
                let points = [a.points(), b.points()].concat();
                let mass = a.weights().iter().copied().chain(b.weights().iter().map(|w| -w)).collect();
                (MetricSpaceView::euclidean(dim, points), mass)
            }
            (Support::Varifold(a), Support::Varifold(b)) => {
                let points = [a.points(), b.points()].concat();
                let matrices = [a.matrices(), b.matrices()].concat();
                let mass = a.weights().iter().copied().chain(b.weights().iter().map(|w| -w)).collect();
                (MetricSpaceView::product(dim, points, matrices, self.norm), mass)
            }
            _ => unreachable!("checked at construction"),
        }
    }

    /// Bound `ρ_i` on `|f_i|` for each support point.
    pub(crate) fn bounds(&self, space: &MetricSpaceView, localized: bool) -> Vec<f64> {
        match (&self.localization, localized) {
            (Some(ball), true) => (0..space.len()).map(|i| ball.bound(space.point(i))).collect(),
            _ => vec![1.0; space.len()],
        }
    }

    fn coarsened(&self, grid_h: f64) -> Result<Self> {
        Ok(Self {
            measure_a: self.measure_a.coarsened(grid_h)?,
            measure_b: self.measure_b.coarsened(grid_h)?,
            norm: self.norm,
            localization: self.localization.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub size_cap: usize,
    /// Nearest neighbors per point in the initial arc set.
    pub knn: usize,
    /// Grid diameter used to coarsen inputs above the size cap.
    pub coarsen_h: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { size_cap: DEFAULT_SIZE_CAP, knn: DEFAULT_KNN, coarsen_h: None }
    }
}

/// Mass moved between two support points; `None` is the ground node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowArc {
    pub from: Option<usize>,
    pub to: Option<usize>,
    pub amount: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatSolution {
    pub value: f64,
    /// Optimal test function on the merged support.
    pub witness: Vec<f64>,
    pub flow: Vec<FlowArc>,
    /// Merged support size actually solved (after coarsening).
    pub support_size: usize,
    pub coarsened: bool,
    pub pricing_rounds: usize,
    pub pivots: usize,
}

impl FlatSolution {
    /// `Σ_i f_i c_i` recomputed from the witness.
    pub fn dual_value(&self, signed_mass: &[f64]) -> f64 {
        self.witness.iter().zip(signed_mass).map(|(f, c)| f * c).sum()
    }
}

/// `β(a, b)`; any localization ball on the problem is ignored.
pub fn bl_distance(problem: &FlatMetricProblem) -> Result<f64> {
    Ok(solve(problem, false, &SolverOptions::default())?.value)
}

/// `β_B(a, b)` for the ball attached to the problem.
pub fn bl_distance_localized(problem: &FlatMetricProblem) -> Result<f64> {
    if problem.localization.is_none() {
        return Err(Error::Argument("localized distance needs a ball".into()));
    }
    Ok(solve(problem, true, &SolverOptions::default())?.value)
}

/// Full solve with witnesses. `localized` selects `β_B` over `β`.
pub fn solve(problem: &FlatMetricProblem, localized: bool, options: &SolverOptions) -> Result<FlatSolution> {
    if localized && problem.localization.is_none() {
        return Err(Error::Argument("localized distance needs a ball".into()));
    }
    if problem.len() > options.size_cap {
        let Some(h) = options.coarsen_h else {
            return Err(Error::ProblemTooLarge { size: problem.len(), cap: options.size_cap });
        };
        let coarse = problem.coarsened(h)?;
        if coarse.len() > options.size_cap {
            return Err(Error::ProblemTooLarge { size: coarse.len(), cap: options.size_cap });
        }
        let mut sol = solve_exact(&coarse, localized, options.knn)?;
        sol.coarsened = true;
        return Ok(sol);
    }
    solve_exact(problem, localized, options.knn)
}

fn solve_exact(problem: &FlatMetricProblem, localized: bool, knn: usize) -> Result<FlatSolution> {
    let (space, mass) = problem.space();
    let rho = problem.bounds(&space, localized);
    let m = space.len();

    // Points with ρ = 0 carry f = 0, and every constraint involving them is
    // implied by the bounds on the others.
    let active: Vec<usize> = (0..m).filter(|&i| rho[i] > 0.0).collect();
    let k = active.len();
    let ground = k;

    let total = problem.measure_a.total_mass().max(problem.measure_b.total_mass()).max(1.0);
    let mass_scale = MASS_RESOLUTION / total;
    let mut supply: Vec<i64> = active.iter().map(|&i| (mass[i] * mass_scale).round() as i64).collect();
    supply.push(-supply.iter().sum::<i64>());
    let cost = |d: f64| (d * COST_SCALE).round() as i64;

    let mut arcs = Vec::with_capacity(2 * k * (knn + 1));
    let mut up = vec![usize::MAX; k + 1];
    let mut down = vec![usize::MAX; k + 1];
    for (a, &i) in active.iter().enumerate() {
        let c = cost(rho[i]);
        up[a] = arcs.len();
        arcs.push(Arc { source: a, target: ground, cost: c });
        down[a] = arcs.len();
        arcs.push(Arc { source: ground, target: a, cost: c });
    }

    let mut pairs = initial_pairs(&space, &active, &rho, knn);
    for &(a, b, d) in &pairs {
        let c = cost(d);
        arcs.push(Arc { source: a, target: b, cost: c });
        arcs.push(Arc { source: b, target: a, cost: c });
    }
    let mut ns = NetworkSimplex::new(&supply, ground, arcs, &up, &down);
    ns.solve();

    let mut rounds = 0;
    loop {
        let pi = ns.potentials();
        let mut violated = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                let gap = (pi[a] - pi[b]).abs();
                if gap == 0 {
                    continue;
                }
                let d = space.distance(active[a], active[b]);
                if cost(d) < gap {
                    violated.push((a, b, d));
                }
            }
        }
        if violated.is_empty() {
            break;
        }
        rounds += 1;
        ns.add_arcs(violated.iter().flat_map(|&(a, b, d)| {
            let c = cost(d);
            [Arc { source: a, target: b, cost: c }, Arc { source: b, target: a, cost: c }]
        }));
        pairs.extend(violated);
        ns.solve();
    }

    let value = ns.objective() as f64 / (COST_SCALE * mass_scale);
    let mut witness = vec![0.0; m];
    for (a, &i) in active.iter().enumerate() {
        witness[i] = -(ns.potentials()[a] as f64) / COST_SCALE;
    }
    let node = |v: usize| (v != ground).then(|| active[v]);
    let flow = ns
        .arcs()
        .iter()
        .zip(ns.flows())
        .filter(|(_, &f)| f > 0)
        .map(|(arc, &f)| FlowArc { from: node(arc.source), to: node(arc.target), amount: f as f64 / mass_scale })
        .collect();
    Ok(FlatSolution {
        value: value.max(0.0),
        witness,
        flow,
        support_size: m,
        coarsened: false,
        pricing_rounds: rounds,
        pivots: ns.pivots,
    })
}

/// Pairs `(a, b, d)` with `a < b` among the `knn` nearest neighbors of each
/// active point, keeping only those cheaper than going through the ground.
fn initial_pairs(space: &MetricSpaceView, active: &[usize], rho: &[f64], knn: usize) -> Vec<(usize, usize, f64)> {
    let k = active.len();
    let mut pairs = Vec::new();
    let mut row: Vec<(f64, usize)> = Vec::with_capacity(k);
    for a in 0..k {
        row.clear();
        for b in 0..k {
            if b != a {
                row.push((space.distance(active[a], active[b]), b));
            }
        }
        let take = knn.min(row.len());
        if take == 0 {
            continue;
        }
        if take < row.len() {
            row.select_nth_unstable_by(take - 1, |x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        }
        for &(d, b) in &row[..take] {
            if d < rho[active[a]] + rho[active[b]] {
                pairs.push((a.min(b), a.max(b), d));
            }
        }
    }
    pairs.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    pairs.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
    pairs
}
