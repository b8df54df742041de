//! Small dense symmetric matrices and a cyclic Jacobi eigensolver.
//!
//! Every matrix in this crate is `n × n` with `n` the ambient dimension
//! (2 or 3 in practice, at most 16), so a plain row-major `Vec<f64>` and a
//! Jacobi sweep are all that is needed.

use crate::error::{Error, Result};

/// Largest dimension accepted by the eigensolver.
pub const MAX_DIM: usize = 16;

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 64;

/// A dense `n × n` matrix stored row-major. Symmetry is an invariant of the
/// constructors used by the estimators, not of the type itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted in
/// decreasing order. `vectors` holds the matching unit eigenvectors
/// contiguously (vector `k` is `vectors[k*n..(k+1)*n]`).
#[derive(Debug, Clone)]
pub struct Eigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    /// Builds from a row-major slice of length `n²`.
    pub fn from_row_major(n: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), n * n, "expected {} entries", n * n);
        Self { n, data: data.to_vec() }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n);
            data.extend_from_slice(r);
        }
        Self { n, data }
    }

    /// `u ⊗ u`.
    pub fn outer(u: &[f64]) -> Self {
        let mut m = Self::zeros(u.len());
        m.add_outer(u, 1.0);
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// `self += scale · u ⊗ u`.
    pub fn add_outer(&mut self, u: &[f64], scale: f64) {
        let n = self.n;
        debug_assert_eq!(u.len(), n);
        for i in 0..n {
            let si = scale * u[i];
            for j in 0..n {
                self.data[i * n + j] += si * u[j];
            }
        }
    }

    pub fn add_scaled(&mut self, other: &SymMatrix, scale: f64) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.scale(s);
        self
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        debug_assert_eq!(self.n, other.n);
        SymMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn matmul(&self, other: &SymMatrix) -> SymMatrix {
        let n = self.n;
        let mut out = SymMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Largest `|a_ij − a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Spectral decomposition by cyclic Jacobi rotations. Sweeps visit the
    /// pairs `(p, q)`, `p < q`, in lexicographic order, so ties in the
    /// spectrum resolve the same way on every run.
    pub fn eigh(&self) -> Eigen {
        let n = self.n;
        assert!(n <= MAX_DIM, "dimension {n} exceeds {MAX_DIM}");
        let mut a = self.data.clone();
        // symmetrize so round-off asymmetry does not leak into the rotations
        for i in 0..n {
            for j in i + 1..n {
                let m = 0.5 * (a[i * n + j] + a[j * n + i]);
                a[i * n + j] = m;
                a[j * n + i] = m;
            }
        }
        let mut v = SymMatrix::identity(n).data;
        let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();

        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[p * n + q] * a[p * n + q];
                }
            }
            if off.sqrt() <= JACOBI_TOL * scale || off == 0.0 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = if theta.abs() > 1e150 {
                        0.5 / theta
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        // stable: equal eigenvalues keep their sweep order
        order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
        let values = order.iter().map(|&i| a[i * n + i]).collect();
        let mut vectors = Vec::with_capacity(n * n);
        for &i in &order {
            for k in 0..n {
                vectors.push(v[k * n + i]);
            }
        }
        Eigen { n, values, vectors }
    }

    /// Operator (spectral) norm, `max |λ|`.
    pub fn op_norm(&self) -> f64 {
        if self.n == 1 {
            return self.data[0].abs();
        }
        if self.n == 2 {
            let (a, b, c) = (self.data[0], 0.5 * (self.data[1] + self.data[2]), self.data[3]);
            let mean = 0.5 * (a + c);
            let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            return mean.abs() + radius;
        }
        self.eigh().values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Orthogonal projector onto the span of the eigenvectors of the `d`
    /// largest eigenvalues.
    pub fn top_projector(&self, d: usize) -> SymMatrix {
        projector_from(&self.eigh(), d)
    }

    /// Checks `P² = P`, `P = Pᵀ` and `trace P = d` to within `tol`.
    pub fn is_projector(&self, d: usize, tol: f64) -> bool {
        let sq = self.matmul(self);
        sq.max_abs_diff(self) <= tol
            && self.asymmetry() <= tol
            && (self.trace() - d as f64).abs() <= tol
    }
}

pub(crate) fn projector_from(eig: &Eigen, d: usize) -> SymMatrix {
    let mut p = SymMatrix::zeros(eig.n);
    for k in 0..d {
        p.add_outer(eig.vector(k), 1.0);
    }
    p
}

/// Operator norm of `a − b` for row-major symmetric `n × n` slices.
pub fn op_norm_diff(n: usize, a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    SymMatrix { n, data: diff }.op_norm()
}

/// Frobenius norm of `a − b`.
pub fn frobenius_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn check_symmetric(m: &SymMatrix, tol: f64) -> Result<()> {
    let asym = m.asymmetry();
    if asym > tol {
        return Err(Error::Argument(format!(
            "matrix is not symmetric (asymmetry {asym:.3e})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    #[test]
    fn jacobi_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=6 {
            for _ in 0..20 {
                let m = random_sym(&mut rng, n);
                let eig = m.eigh();
                let mut rebuilt = SymMatrix::zeros(n);
                for k in 0..n {
                    rebuilt.add_outer(eig.vector(k), eig.values[k]);
                }
                assert!(rebuilt.max_abs_diff(&m) < 1e-12);
                for w in eig.values.windows(2) {
                    assert!(w[0] >= w[1]);
                }
                for i in 0..n {
                    for j in 0..n {
                        let dot: f64 =
                            eig.vector(i).iter().zip(eig.vector(j)).map(|(a, b)| a * b).sum();
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((dot - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn op_norm_matches_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 3, 4] {
            for _ in 0..50 {
                let m = random_sym(&mut rng, n);
                let want = m.eigh().values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                assert!((m.op_norm() - want).abs() < 1e-12);
            }
        }
        let d = SymMatrix::diag(&[1.0, 0.0]).sub(&SymMatrix::diag(&[0.0, 1.0]));
        assert!((d.op_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_projector() {
        let p = SymMatrix::diag(&[3.0, 1.0, 0.1]).top_projector(2);
        assert!(p.max_abs_diff(&SymMatrix::diag(&[1.0, 1.0, 0.0])) < 1e-15);
        assert!(p.is_projector(2, 1e-12));
    }
}
