//! Discrete measures and discrete varifolds, plus their CSV encodings.
//!
//! CSV layout: a header row, then one atom per row with columns
//! `x1..xn, weight` followed, for varifolds, by the `n²` matrix entries
//! row-major (`m11, m12, …, mnn`).

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Weighted atoms in `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.len() != dim * weights.len() {
            return Err(Error::Argument(format!(
                "{} coordinates do not match {} weights in dimension {dim}",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::Argument(format!("weight {w} is not a finite nonnegative number")));
        }
        Ok(Self { dim, points, weights })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, points: Vec::new(), weights: Vec::new() }
    }

    /// Equal weights `1/len` on the given points.
    pub fn empirical(dim: usize, points: Vec<f64>) -> Result<Self> {
        let n = points.len() / dim.max(1);
        let w = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        Self::new(dim, points, vec![w; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for w in &mut self.weights {
            *w *= s;
        }
        self
    }

    /// Attaches one matrix per atom.
    pub fn with_matrices(self, matrices: Vec<f64>, projector_rank: Option<usize>) -> Result<DiscreteVarifold> {
        DiscreteVarifold::new(self.dim, self.points, self.weights, matrices, projector_rank)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atoms(path, self.dim, &self.points, &self.weights, None)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let (dim, points, weights, _) = read_atoms(path)?;
        Self::new(dim, points, weights)
    }
}

/// Weighted atoms in `R^n × Sym(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteVarifold {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    matrices: Vec<f64>,
    projector_rank: Option<usize>,
}

impl DiscreteVarifold {
    /// `projector_rank = Some(d)` flags every matrix as a rank-`d`
    /// orthogonal projector; this is checked.
    pub fn new(
        dim: usize,
        points: Vec<f64>,
        weights: Vec<f64>,
        matrices: Vec<f64>,
        projector_rank: Option<usize>,
    ) -> Result<Self> {
        let base = DiscreteMeasure::new(dim, points, weights)?;
        if matrices.len() != dim * dim * base.len() {
            return Err(Error::Argument(format!(
                "expected {} matrix entries, got {}",
                dim * dim * base.len(),
                matrices.len()
            )));
        }
        let v = Self {
            dim,
            points: base.points,
            weights: base.weights,
            matrices,
            projector_rank,
        };
        for i in 0..v.len() {
            let m = v.matrix(i);
            if m.asymmetry() > 1e-12 {
                return Err(Error::Argument(format!("matrix {i} is not symmetric")));
            }
            if let Some(d) = projector_rank {
                if !m.is_projector(d, 1e-10) {
                    return Err(Error::Argument(format!("matrix {i} is not a rank-{d} projector")));
                }
            }
        }
        Ok(v)
    }

    pub fn empty(dim: usize, projector_rank: Option<usize>) -> Self {
        Self {
            dim,
            points: Vec::new(),
            weights: Vec::new(),
            matrices: Vec::new(),
            projector_rank,
        }
    }

    pub(crate) fn from_parts_unchecked(
        dim: usize,
        points: Vec<f64>,
        weights: Vec<f64>,
        matrices: Vec<f64>,
        projector_rank: Option<usize>,
    ) -> Self {
        debug_assert_eq!(points.len(), dim * weights.len());
        debug_assert_eq!(matrices.len(), dim * dim * weights.len());
        Self { dim, points, weights, matrices, projector_rank }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn projector_rank(&self) -> Option<usize> {
        self.projector_rank
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn matrix_entries(&self, i: usize) -> &[f64] {
        let n2 = self.dim * self.dim;
        &self.matrices[i * n2..(i + 1) * n2]
    }

    pub fn matrices(&self) -> &[f64] {
        &self.matrices
    }

    pub fn matrix(&self, i: usize) -> SymMatrix {
        SymMatrix::from_row_major(self.dim, self.matrix_entries(i))
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The spatial marginal (weights and points, matrices dropped).
    pub fn mass(&self) -> DiscreteMeasure {
        DiscreteMeasure {
            dim: self.dim,
            points: self.points.clone(),
            weights: self.weights.clone(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atoms(path, self.dim, &self.points, &self.weights, Some(&self.matrices))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let (dim, points, weights, matrices) = read_atoms(path)?;
        let matrices = matrices.ok_or_else(|| {
            Error::Parse(format!("{}: no matrix columns", path.display()))
        })?;
        Self::new(dim, points, weights, matrices, None)
    }
}

fn header(dim: usize, with_matrices: bool) -> Vec<String> {
    let mut h: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    h.push("weight".into());
    if with_matrices {
        for i in 1..=dim {
            for j in 1..=dim {
                h.push(format!("m{i}{j}"));
            }
        }
    }
    h
}

fn write_atoms(
    path: &Path,
    dim: usize,
    points: &[f64],
    weights: &[f64],
    matrices: Option<&[f64]>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(header(dim, matrices.is_some())).map_err(|e| Error::csv(path, e))?;
    let n2 = dim * dim;
    let mut row = Vec::with_capacity(dim + 1 + n2);
    for (i, wt) in weights.iter().enumerate() {
        row.clear();
        row.extend(points[i * dim..(i + 1) * dim].iter().map(|v| format!("{v:e}")));
        row.push(format!("{wt:e}"));
        if let Some(m) = matrices {
            row.extend(m[i * n2..(i + 1) * n2].iter().map(|v| format!("{v:e}")));
        }
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

type Atoms = (usize, Vec<f64>, Vec<f64>, Option<Vec<f64>>);

fn read_atoms(path: &Path) -> Result<Atoms> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let dim = headers.iter().take_while(|h| h.starts_with('x')).count();
    if dim == 0 || headers.get(dim) != Some("weight") {
        return Err(Error::Parse(format!(
            "{}: expected header x1..xn,weight[,m11..mnn]",
            path.display()
        )));
    }
    let extra = headers.len() - dim - 1;
    let with_matrices = match extra {
        0 => false,
        e if e == dim * dim => true,
        _ => {
            return Err(Error::Parse(format!(
                "{}: {extra} trailing columns, expected 0 or {}",
                path.display(),
                dim * dim
            )))
        }
    };
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut matrices = Vec::new();
    for (lineno, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| {
                    Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 2))
                })
            })
            .collect::<Result<_>>()?;
        points.extend_from_slice(&vals[..dim]);
        weights.push(vals[dim]);
        if with_matrices {
            matrices.extend_from_slice(&vals[dim + 1..]);
        }
    }
    Ok((dim, points, weights, with_matrices.then_some(matrices)))
}

/// Writes a bare point cloud, one point per row with header `x1..xn`.
pub fn write_points_csv(path: &Path, dim: usize, points: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record((1..=dim).map(|i| format!("x{i}"))).map_err(|e| Error::csv(path, e))?;
    for p in points.chunks(dim) {
        w.write_record(p.iter().map(|v| format!("{v:e}"))).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a point cloud written by [`write_points_csv`]; returns `(dim, coords)`.
pub fn read_points_csv(path: &Path) -> Result<(usize, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let dim = r.headers().map_err(|e| Error::csv(path, e))?.len();
    let mut points = Vec::new();
    for (lineno, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        if rec.len() != dim {
            return Err(Error::Parse(format!("{}:{}: wrong column count", path.display(), lineno + 2)));
        }
        for s in rec.iter() {
            points.push(s.trim().parse::<f64>().map_err(|e| {
                Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 2))
            })?);
        }
    }
    Ok((dim, points))
}
