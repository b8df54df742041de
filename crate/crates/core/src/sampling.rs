//! Seeded i.i.d. sampling from `μ = θ H^d|_S` and four-way sample splitting.
//!
//! Randomness comes from ChaCha8, a counter-based stream cipher generator:
//! a root seed selects the key and every independent consumer gets its own
//! 64-bit stream id, so draws are reproducible across platforms and
//! parallel schedules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::ShapeModel;
use crate::measure::DiscreteMeasure;

const MAX_TRIALS_PER_POINT: u64 = 1_000_000;

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    dim: usize,
    points: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
    pub shape_id: String,
}

impl SampleBatch {
    pub fn from_points(dim: usize, points: Vec<f64>, seed: u64, shape_id: impl Into<String>) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(Error::Argument("coordinate count is not a multiple of the dimension".into()));
        }
        Ok(Self { dim, points, seed, stream: 0, shape_id: shape_id.into() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim)
    }

    /// Empirical measure `μ_N = (1/N) Σ δ_{X_i}`.
    pub fn empirical_measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::empirical(self.dim, self.points.clone()).expect("batch shape is consistent")
    }
}

/// `N` i.i.d. draws from the shape's law on stream 0 of `seed`.
pub fn sample(shape: &ShapeModel, n: usize, seed: u64) -> Result<SampleBatch> {
    sample_stream(shape, n, seed, 0)
}

/// `N` i.i.d. draws on an explicit stream.
///
/// Points are proposed from the normalized Hausdorff measure (inverse CDF
/// on the arc-length or area parameter) and accepted with probability
/// `θ(x)/θ_max`.
pub fn sample_stream(shape: &ShapeModel, n: usize, seed: u64, stream: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::Argument("sample size must be at least 1".into()));
    }
    let dim = shape.ambient_dim();
    let mut rng = stream_rng(seed, stream);
    let mut points = Vec::with_capacity(n * dim);
    let mut x = vec![0.0; dim];
    let budget = MAX_TRIALS_PER_POINT.saturating_mul(n as u64);
    let mut trials = 0u64;
    while points.len() < n * dim {
        trials += 1;
        if trials > budget {
            return Err(Error::SamplerFailure { trials: budget });
        }
        let geometric = shape.geometry().propose(&mut rng, &mut x);
        let accept = geometric * shape.acceptance_ratio(&x);
        if accept >= 1.0 || rng.random::<f64>() < accept {
            points.extend_from_slice(&x);
        }
    }
    Ok(SampleBatch { dim, points, seed, stream, shape_id: shape.name().to_string() })
}

/// The four independent parts `X, Y, Ỹ, Z` used by the split estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSample {
    pub x: SampleBatch,
    pub y: SampleBatch,
    pub y_tilde: SampleBatch,
    pub z: SampleBatch,
}

impl SplitSample {
    pub fn part_size(&self) -> usize {
        self.x.len()
    }
}

/// Partitions a batch of size `4N` by index modulo 4: part `k` receives
/// indices `k, k+4, k+8, …`.
pub fn split(batch: &SampleBatch) -> Result<SplitSample> {
    let total = batch.len();
    if total == 0 || total % 4 != 0 {
        return Err(Error::Argument(format!("batch size {total} is not a positive multiple of 4")));
    }
    let part = |k: usize| {
        let mut pts = Vec::with_capacity(total / 4 * batch.dim);
        for i in (k..total).step_by(4) {
            pts.extend_from_slice(batch.point(i));
        }
        SampleBatch {
            dim: batch.dim,
            points: pts,
            seed: batch.seed,
            stream: batch.stream,
            shape_id: batch.shape_id.clone(),
        }
    };
    Ok(SplitSample { x: part(0), y: part(1), y_tilde: part(2), z: part(3) })
}
