use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::estimators::{projector_truncate, snap_to_projector};
use crate::linalg::SymMatrix;
use crate::measure::{DiscreteMeasure, DiscreteVarifold};

/// Groups atoms by grid cell of diameter `grid_h`; cells are numbered in
/// order of first appearance and atoms of zero weight are dropped.
fn cells(dim: usize, points: &[f64], weights: &[f64], grid_h: f64) -> Result<Vec<Vec<usize>>> {
    if !(grid_h > 0.0 && grid_h.is_finite()) {
        return Err(Error::Argument(format!("grid_h = {grid_h} must be positive")));
    }
    let side = grid_h / (dim as f64).sqrt();
    let mut lookup: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, p) in points.chunks_exact(dim).enumerate() {
        if weights[i] == 0.0 {
            continue;
        }
        let key: Vec<i64> = p.iter().map(|&c| (c / side).floor() as i64).collect();
        let id = *lookup.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[id].push(i);
    }
    Ok(groups)
}

fn centroid(dim: usize, points: &[f64], weights: &[f64], group: &[usize]) -> (Vec<f64>, f64) {
    if let [only] = group {
        return (points[only * dim..(only + 1) * dim].to_vec(), weights[*only]);
    }
    let total: f64 = group.iter().map(|&i| weights[i]).sum();
    let mut c = vec![0.0; dim];
    for &i in group {
        for (ck, pk) in c.iter_mut().zip(&points[i * dim..(i + 1) * dim]) {
            *ck += weights[i] * pk;
        }
    }
    c.iter_mut().for_each(|ck| *ck /= total);
    (c, total)
}

/// Merges the atoms of each grid cell into one atom at their weighted
/// centroid. Every atom moves by less than `grid_h`, so `β` changes by at
/// most `grid_h` times the total mass.
pub fn coarsen(measure: &DiscreteMeasure, grid_h: f64) -> Result<DiscreteMeasure> {
    let dim = measure.dim();
    let groups = cells(dim, measure.points(), measure.weights(), grid_h)?;
    let mut points = Vec::with_capacity(groups.len() * dim);
    let mut weights = Vec::with_capacity(groups.len());
    for g in &groups {
        let (c, w) = centroid(dim, measure.points(), measure.weights(), g);
        points.extend(c);
        weights.push(w);
    }
    DiscreteMeasure::new(dim, points, weights)
}

/// As [`coarsen`], with matrices averaged by weight. Projector varifolds
/// are mapped back to projectors by snapping, falling back to plain
/// truncation when the averaged matrix has no eigen-gap.
pub fn coarsen_varifold(v: &DiscreteVarifold, grid_h: f64) -> Result<DiscreteVarifold> {
    let dim = v.dim();
    let groups = cells(dim, v.points(), v.weights(), grid_h)?;
    let mut points = Vec::with_capacity(groups.len() * dim);
    let mut weights = Vec::with_capacity(groups.len());
    let mut matrices = Vec::with_capacity(groups.len() * dim * dim);
    for g in &groups {
        let (c, w) = centroid(dim, v.points(), v.weights(), g);
        points.extend(c);
        weights.push(w);
        if let [only] = g.as_slice() {
            matrices.extend_from_slice(v.matrix_entries(*only));
            continue;
        }
        let mut avg = SymMatrix::zeros(dim);
        for &i in g {
            avg.add_scaled(&v.matrix(i), v.weights()[i] / w);
        }
        let m = match v.projector_rank() {
            Some(d) => match snap_to_projector(&avg, d) {
                Ok(p) => p,
                Err(Error::DegenerateGap { .. }) => projector_truncate(&avg, d)?,
                Err(e) => return Err(e),
            },
            None => avg,
        };
        matrices.extend_from_slice(m.as_slice());
    }
    DiscreteVarifold::new(dim, points, weights, matrices, v.projector_rank())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fine_grid_is_identity() {
        let m = DiscreteMeasure::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], vec![0.1, 0.2, 0.3]).unwrap();
        let c = coarsen(&m, 0.5).unwrap();
        assert_eq!(c.points(), m.points());
        assert_eq!(c.weights(), m.weights());
    }

    #[test]
    fn merge_two_atoms() {
        let m = DiscreteMeasure::new(1, vec![0.01, 0.02], vec![0.2, 0.3]).unwrap();
        let c = coarsen(&m, 0.1).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c.weight(0) - 0.5).abs() < 1e-15);
        assert!((c.point(0)[0] - 0.016).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_projectors_merge_to_a_projector() {
        let v = DiscreteVarifold::new(
            2,
            vec![0.0, 0.0, 0.001, 0.0],
            vec![0.5, 0.5],
            [SymMatrix::diag(&[1.0, 0.0]).into_vec(), SymMatrix::diag(&[0.0, 1.0]).into_vec()].concat(),
            Some(1),
        )
        .unwrap();
        let c = coarsen_varifold(&v, 0.1).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c.matrix(0).is_projector(1, 1e-12));
    }

    #[test]
    fn rejects_bad_grid() {
        let m = DiscreteMeasure::new(1, vec![0.0], vec![1.0]).unwrap();
        assert!(coarsen(&m, 0.0).is_err());
    }
}
