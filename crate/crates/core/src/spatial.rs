//! Fixed-radius and k-nearest-neighbor queries over a static point set.
//!
//! Balls are open: `range_query(x, r)` returns `{ i : |p_i − x| < r }`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::linalg::dist2;

const LEAF_SIZE: usize = 16;
/// Above this ambient dimension the index falls back to a linear scan.
pub const KD_TREE_MAX_DIM: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    dim: usize,
    points: Vec<f64>,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

impl SpatialIndex {
    pub fn new(dim: usize, points: &[f64]) -> Self {
        assert!(dim > 0 && points.len() % dim == 0);
        let count = points.len() / dim;
        let mut index = Self {
            dim,
            points: points.to_vec(),
            perm: (0..count).collect(),
            nodes: Vec::new(),
        };
        if dim <= KD_TREE_MAX_DIM && count > 0 {
            index.build(0, count);
        }
        index
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end);
        let mid = start + (end - start) / 2;
        let (dim, points) = (self.dim, &self.points);
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * dim + axis].total_cmp(&points[b * dim + axis])
        });
        let value = self.points[self.perm[mid] * dim + axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for axis in 0..self.dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &self.perm[start..end] {
                let v = self.points[i * self.dim + axis];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best.1 {
                best = (axis, hi - lo);
            }
        }
        best.0
    }

    /// Calls `visit(i, |p_i − x|²)` for every point strictly inside `B(x, r)`.
    pub fn for_each_in_ball<F: FnMut(usize, f64)>(&self, x: &[f64], r: f64, mut visit: F) {
        let r2 = r * r;
        if self.nodes.is_empty() {
            for i in 0..self.len() {
                let d2 = dist2(self.point(i), x);
                if d2 < r2 {
                    visit(i, d2);
                }
            }
            return;
        }
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            match self.nodes[id] {
                Node::Leaf { start, end } => {
                    for &i in &self.perm[start..end] {
                        let d2 = dist2(self.point(i), x);
                        if d2 < r2 {
                            visit(i, d2);
                        }
                    }
                }
                Node::Split { axis, value, left, right } => {
                    let c = x[axis];
                    if c - r <= value {
                        stack.push(left);
                    }
                    if c + r >= value {
                        stack.push(right);
                    }
                }
            }
        }
    }

    /// Sorted indices of the points strictly inside `B(x, r)`.
    pub fn range_query(&self, x: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_in_ball(x, r, |i, _| out.push(i));
        out.sort_unstable();
        out
    }

    /// The `k` nearest points as `(index, distance)`, closest first; ties
    /// are broken by index.
    pub fn knn(&self, x: &[f64], k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.is_empty() {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        let mut offer = |heap: &mut BinaryHeap<Candidate>, i: usize, d2: f64| {
            let c = Candidate { d2, index: i };
            if heap.len() < k {
                heap.push(c);
            } else if c < *heap.peek().unwrap() {
                heap.pop();
                heap.push(c);
            }
        };
        if self.nodes.is_empty() {
            for i in 0..self.len() {
                offer(&mut heap, i, dist2(self.point(i), x));
            }
        } else {
            self.knn_node(0, x, k, &mut heap, &mut offer);
        }
        let mut out: Vec<(usize, f64)> = heap.into_iter().map(|c| (c.index, c.d2.sqrt())).collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }

    fn knn_node<F>(&self, id: usize, x: &[f64], k: usize, heap: &mut BinaryHeap<Candidate>, offer: &mut F)
    where
        F: FnMut(&mut BinaryHeap<Candidate>, usize, f64),
    {
        match self.nodes[id] {
            Node::Leaf { start, end } => {
                for &i in &self.perm[start..end] {
                    offer(heap, i, dist2(self.point(i), x));
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = x[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.knn_node(near, x, k, heap, offer);
                let bound = heap.peek().map(|c| c.d2).unwrap_or(f64::INFINITY);
                if heap.len() < k || diff * diff <= bound {
                    self.knn_node(far, x, k, heap, offer);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.index.cmp(&other.index))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[f64], dim: usize, x: &[f64], r: f64) -> Vec<usize> {
        points
            .chunks(dim)
            .enumerate()
            .filter(|(_, p)| dist2(p, x) < r * r)
            .map(|(i, _)| i)
            .collect()
    }

    #[test]
    fn line_examples() {
        let idx = SpatialIndex::new(1, &[0.0, 1.0, 2.0]);
        assert_eq!(idx.range_query(&[0.0], 1.5), vec![0, 1]);
        assert_eq!(idx.range_query(&[0.0], 1.0), vec![0]);
        assert!(idx.range_query(&[0.5], 0.1).is_empty());
    }

    #[test]
    fn random_thousand_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<f64> = (0..3000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let idx = SpatialIndex::new(3, &pts);
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.2..1.2)).collect();
            let r = rng.random_range(0.01..0.8);
            assert_eq!(idx.range_query(&x, r), brute(&pts, 3, &x, r));
        }
    }

    #[test]
    fn knn_matches_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let idx = SpatialIndex::new(2, &pts);
        for _ in 0..50 {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let got = idx.knn(&x, 7);
            let mut all: Vec<(usize, f64)> =
                pts.chunks(2).enumerate().map(|(i, p)| (i, dist2(p, &x).sqrt())).collect();
            all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            assert_eq!(got.iter().map(|g| g.0).collect::<Vec<_>>(), all[..7].iter().map(|g| g.0).collect::<Vec<_>>());
        }
    }

    #[test]
    fn high_dimension_uses_scan() {
        let pts = vec![0.0; 9 * 5];
        let idx = SpatialIndex::new(9, &pts);
        assert_eq!(idx.range_query(&[0.0; 9], 0.1).len(), 5);
    }

    proptest! {
        #[test]
        fn range_query_is_brute_force(
            pts in prop::collection::vec(-2.0f64..2.0, 2..400),
            qx in -2.5f64..2.5, qy in -2.5f64..2.5, r in 0.001f64..3.0,
        ) {
            let len = pts.len() / 2 * 2;
            let pts = &pts[..len];
            let idx = SpatialIndex::new(2, pts);
            prop_assert_eq!(idx.range_query(&[qx, qy], r), brute(pts, 2, &[qx, qy], r));
        }
    }
}
