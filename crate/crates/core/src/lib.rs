//! Varifold estimation from i.i.d. point samples.
//!
//! The crate reconstructs the mass measure and tangent planes of an unknown
//! `d`-dimensional shape `S ⊂ R^n` from samples of `μ = θ H^d|_S`:
//!
//! * [`kernels`]: radial profiles `η`, `φ` and their normalizations;
//! * [`geometry`]: ground-truth shapes with density, tangent, singular-set
//!   and quadrature oracles;
//! * [`sampling`] / [`spatial`]: seeded sampling, sample splitting and
//!   fixed-radius neighbor search;
//! * [`estimators`]: kernel density, measure, covariance/tangent and
//!   varifold estimators, including the four-way split estimator;
//! * [`metrics`]: the exact bounded-Lipschitz (flat) distance between
//!   discrete measures and varifolds.

pub mod error;
pub mod estimators;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod measure;
pub mod metrics;
pub mod sampling;
pub mod spatial;

pub use error::{Error, Result};
pub use geometry::ShapeModel;
pub use kernels::{KernelKind, KernelProfile, NormalizedKernel};
pub use linalg::SymMatrix;
pub use measure::{DiscreteMeasure, DiscreteVarifold};
