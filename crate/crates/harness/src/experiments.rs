//! Monte-Carlo experiments over a grid of sample sizes.
//!
//! Trial `t` at grid index `k` draws from stream `(k << 32) | t` of the
//! configured seed, so results do not depend on scheduling.

use rayon::prelude::*;
use serde::Serialize;
use varifold_core::estimators::{
    default_tau, density_estimate, measure_estimate, projector_truncate, tangent_sigma, varifold_estimate,
    weighted_by_density, EstimatorConfig, IndexedSample, SampleRoles, VarifoldVariant,
};
use varifold_core::metrics::{coarsen, coarsen_varifold, solve, FlatMetricProblem, SolverOptions};
use varifold_core::sampling::{sample_stream, split, SampleBatch};
use varifold_core::{DiscreteMeasure, DiscreteVarifold, ShapeModel};

use crate::config::{ExperimentConfig, TangentMatrix, Variant};
use crate::error::HarnessError;
use crate::stats;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Rate,
    Measure,
    Fluct,
    Tangent,
}

/// Statistic of the per-trial values that the slope is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitTarget {
    Mean,
    Sd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    pub stream: u64,
    pub delta: f64,
    pub value: f64,
    pub aux: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub n: usize,
    pub delta: f64,
    pub trials: usize,
    pub mean: f64,
    pub std_err: f64,
    pub sd: f64,
    pub median: f64,
    pub aux_mean: Option<f64>,
    pub aux_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateResult {
    pub experiment: ExperimentKind,
    pub version: String,
    pub config: ExperimentConfig,
    /// What `value` and `aux` hold in each trial record.
    pub value_label: String,
    pub aux_label: Option<String>,
    pub tau: Option<f64>,
    pub h: Option<f64>,
    pub query_point: Option<Vec<f64>>,
    /// `"n"` or `"delta"`.
    pub slope_axis: String,
    pub fit: FitTarget,
    pub grid: Vec<GridPoint>,
    pub slope: Option<f64>,
    pub slope_ci: Option<(f64, f64)>,
    pub slope_half_width: Option<f64>,
    pub records: Vec<TrialRecord>,
}

impl RateResult {
    pub fn medians(&self) -> Vec<f64> {
        self.grid.iter().map(|g| g.median).collect()
    }

    pub fn aux_medians(&self) -> Vec<f64> {
        self.grid.iter().filter_map(|g| g.aux_median).collect()
    }
}

fn stream_id(k: usize, trial: usize) -> u64 {
    ((k as u64) << 32) | trial as u64
}

fn estimator_config(shape: &ShapeModel, delta: f64, tau: f64, splitting: bool) -> Result<EstimatorConfig, HarnessError> {
    let mut cfg = EstimatorConfig::triangular(shape.intrinsic_dim(), delta, delta, tau)?;
    cfg.splitting = splitting;
    Ok(cfg)
}

fn resolve_tau(cfg: &ExperimentConfig, shape: &ShapeModel) -> Result<f64, HarnessError> {
    if let Some(t) = cfg.tau {
        return Ok(t);
    }
    let probe = estimator_config(shape, 1.0, 1.0, false)?;
    Ok(default_tau(&probe.eta, shape.regularity().ahlfors_c0))
}

/// Runs `trial(k, n, delta, t, stream)` for every grid point and trial in
/// parallel and returns the records in grid-major order.
fn run_trials<F>(
    cfg: &ExperimentConfig,
    grid: &[(usize, f64)],
    trial: F,
) -> Result<Vec<TrialRecord>, HarnessError>
where
    F: Fn(usize, f64, u64) -> Result<(f64, Option<f64>), varifold_core::Error> + Sync,
{
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|k| (0..cfg.trials).map(move |t| (k, t))).collect();
    jobs.par_iter()
        .map(|&(k, t)| {
            let (n, delta) = grid[k];
            let stream = stream_id(k, t);
            let (value, aux) = trial(n, delta, stream)
                .map_err(|source| HarnessError::Trial { n, trial: t, stream, source })?;
            Ok(TrialRecord { n, trial: t, stream, delta, value, aux })
        })
        .collect()
}

struct Summary<'a> {
    kind: ExperimentKind,
    cfg: &'a ExperimentConfig,
    value_label: &'a str,
    aux_label: Option<&'a str>,
    tau: Option<f64>,
    h: Option<f64>,
    query_point: Option<Vec<f64>>,
    axis_is_delta: bool,
    fit: FitTarget,
}

fn aggregate(s: Summary<'_>, grid: &[(usize, f64)], records: Vec<TrialRecord>) -> RateResult {
    let trials = s.cfg.trials;
    let mut points = Vec::with_capacity(grid.len());
    let mut samples = Vec::with_capacity(grid.len());
    for (k, &(n, delta)) in grid.iter().enumerate() {
        let rows = &records[k * trials..(k + 1) * trials];
        let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
        let aux: Vec<f64> = rows.iter().filter_map(|r| r.aux).collect();
        let has_aux = aux.len() == rows.len() && !aux.is_empty();
        points.push(GridPoint {
            n,
            delta,
            trials,
            mean: stats::mean(&values),
            std_err: stats::std_err(&values),
            sd: stats::std_dev(&values),
            median: stats::median(&values),
            aux_mean: has_aux.then(|| stats::mean(&aux)),
            aux_median: has_aux.then(|| stats::median(&aux)),
        });
        samples.push(values);
    }
    let x: Vec<f64> = grid.iter().map(|&(n, d)| if s.axis_is_delta { d } else { n as f64 }).collect();
    let statistic: fn(&[f64]) -> f64 = match s.fit {
        FitTarget::Mean => stats::mean,
        FitTarget::Sd => stats::std_dev,
    };
    let y: Vec<f64> = samples.iter().map(|v| statistic(v)).collect();
    let slope = stats::log_log_slope(&x, &y);
    let ci = slope.and(stats::bootstrap_slope_ci(&x, &samples, statistic, BOOTSTRAP_RESAMPLES, s.cfg.seed));
    RateResult {
        experiment: s.kind,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: s.cfg.clone(),
        value_label: s.value_label.to_string(),
        aux_label: s.aux_label.map(str::to_string),
        tau: s.tau,
        h: s.h,
        query_point: s.query_point,
        slope_axis: if s.axis_is_delta { "delta" } else { "n" }.to_string(),
        fit: s.fit,
        grid: points,
        slope,
        slope_ci: ci,
        slope_half_width: ci.map(|(lo, hi)| 0.5 * (hi - lo)),
        records,
    }
}

fn size_grid(cfg: &ExperimentConfig, shape: &ShapeModel) -> Result<Vec<(usize, f64)>, HarnessError> {
    cfg.n_grid.iter().map(|&n| Ok((n, cfg.bandwidth(shape, n)?))).collect()
}

fn draw(cfg: &ExperimentConfig, shape: &ShapeModel, n: usize, stream: u64) -> varifold_core::Result<SampleBatch> {
    sample_stream(shape, 4 * n, cfg.seed, stream)
}

fn flat_distance(
    cfg: &ExperimentConfig,
    problem: FlatMetricProblem,
    localized: bool,
) -> varifold_core::Result<f64> {
    let options = SolverOptions { size_cap: cfg.size_cap, ..Default::default() };
    Ok(solve(&problem, localized, &options)?.value)
}

/// `β(V̂, W_S)` (or `β_B`) against the ground-truth quadrature varifold.
pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<RateResult, HarnessError> {
    cfg.validate()?;
    let shape = cfg.shape_model()?;
    let tau = resolve_tau(cfg, &shape)?;
    let h = cfg.resolution(&shape)?;
    let ball = cfg.ball()?;
    let truth = shape.quadrature_varifold(h)?;
    let grid = size_grid(cfg, &shape)?;

    let records = run_trials(cfg, &grid, |n, delta, stream| {
        let batch = draw(cfg, &shape, n, stream)?;
        let est = estimate_varifold(cfg, &shape, &batch, delta, tau)?;
        let mass = est.total_mass();
        let mut problem = FlatMetricProblem::varifolds(coarsen_varifold(&est, h)?, truth.clone())?.with_norm(cfg.norm);
        if let Some(b) = &ball {
            problem = problem.with_ball(b.clone())?;
        }
        Ok((flat_distance(cfg, problem, ball.is_some())?, Some(mass)))
    })?;
    let label = if ball.is_some() { "beta_localized" } else { "beta" };
    Ok(aggregate(
        Summary {
            kind: ExperimentKind::Rate,
            cfg,
            value_label: label,
            aux_label: Some("total_mass"),
            tau: Some(tau),
            h: Some(h),
            query_point: None,
            axis_is_delta: false,
            fit: FitTarget::Mean,
        },
        &grid,
        records,
    ))
}

fn estimate_varifold(
    cfg: &ExperimentConfig,
    shape: &ShapeModel,
    batch: &SampleBatch,
    delta: f64,
    tau: f64,
) -> varifold_core::Result<DiscreteVarifold> {
    let splitting = cfg.variant == Variant::Split;
    let ecfg = estimator_config(shape, delta, tau, splitting).map_err(to_core)?;
    match cfg.variant {
        Variant::Split => varifold_estimate(SampleRoles::split(&split(batch)?), &ecfg, VarifoldVariant::V),
        Variant::V => varifold_estimate(SampleRoles::unsplit(batch), &ecfg, VarifoldVariant::V),
        Variant::W => varifold_estimate(SampleRoles::unsplit(batch), &ecfg, VarifoldVariant::W),
    }
}

fn to_core(e: HarnessError) -> varifold_core::Error {
    match e {
        HarnessError::Core(c) => c,
        other => varifold_core::Error::Argument(other.to_string()),
    }
}

fn estimate_measure(
    cfg: &ExperimentConfig,
    shape: &ShapeModel,
    batch: &SampleBatch,
    delta: f64,
    tau: f64,
) -> varifold_core::Result<DiscreteMeasure> {
    let splitting = cfg.variant == Variant::Split;
    let ecfg = estimator_config(shape, delta, tau, splitting).map_err(to_core)?;
    if splitting {
        let parts = split(batch)?;
        Ok(weighted_by_density(&parts.x, &IndexedSample::new(&parts.y), &ecfg))
    } else {
        Ok(measure_estimate(batch, &ecfg))
    }
}

/// `β(ν̂, H^d|_S)` against the quadrature of the Hausdorff measure.
pub fn run_measure_experiment(cfg: &ExperimentConfig) -> Result<RateResult, HarnessError> {
    cfg.validate()?;
    let shape = cfg.shape_model()?;
    let tau = resolve_tau(cfg, &shape)?;
    let h = cfg.resolution(&shape)?;
    let ball = cfg.ball()?;
    let truth = shape.quadrature_varifold(h)?.mass();
    let grid = size_grid(cfg, &shape)?;

    let records = run_trials(cfg, &grid, |n, delta, stream| {
        let batch = draw(cfg, &shape, n, stream)?;
        let nu = estimate_measure(cfg, &shape, &batch, delta, tau)?;
        let mass = nu.total_mass();
        let mut problem = FlatMetricProblem::measures(coarsen(&nu, h)?, truth.clone())?;
        if let Some(b) = &ball {
            problem = problem.with_ball(b.clone())?;
        }
        Ok((flat_distance(cfg, problem, ball.is_some())?, Some(mass)))
    })?;
    let label = if ball.is_some() { "beta_localized" } else { "beta" };
    Ok(aggregate(
        Summary {
            kind: ExperimentKind::Measure,
            cfg,
            value_label: label,
            aux_label: Some("total_mass"),
            tau: Some(tau),
            h: Some(h),
            query_point: None,
            axis_is_delta: false,
            fit: FitTarget::Mean,
        },
        &grid,
        records,
    ))
}

/// A quadrature point of the shape as far as possible from its singular
/// set.
pub fn default_query_point(shape: &ShapeModel) -> Result<Vec<f64>, HarnessError> {
    let law = shape.quadrature_law(shape.diameter() / 100.0)?;
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..law.len() {
        let s = shape.singular_distance(law.point(i));
        if s > best.1 {
            best = (i, s);
        }
    }
    Ok(law.point(best.0).to_vec())
}

/// Spread of `θ_{δ,N}(x)` across seeds, against `N` at fixed `δ`, or
/// against `δ` at fixed `N` when a bandwidth grid is configured.
pub fn run_fluctuation_experiment(cfg: &ExperimentConfig) -> Result<RateResult, HarnessError> {
    cfg.validate()?;
    let shape = cfg.shape_model()?;
    let x = match &cfg.point {
        Some(p) if p.len() == shape.ambient_dim() => p.clone(),
        Some(_) => return Err(HarnessError::Config("point has the wrong dimension".into())),
        None => default_query_point(&shape)?,
    };
    let d = shape.intrinsic_dim();
    let grid: Vec<(usize, f64)> = match &cfg.delta_grid {
        Some(deltas) => deltas.iter().map(|&dl| (cfg.n_grid[0], dl)).collect(),
        None => {
            let reg = shape.regularity();
            cfg.n_grid
                .iter()
                .map(|&n| {
                    let dl = match cfg.delta {
                        Some(dl) => dl,
                        None => varifold_core::estimators::bandwidth_rule(n, d, reg.a, reg.b)?,
                    };
                    Ok((n, dl))
                })
                .collect::<Result<_, HarnessError>>()?
        }
    };
    let excl = cfg.exclusion.unwrap_or(0.0);
    if let Some(&(_, dl)) = grid.iter().find(|&&(_, dl)| shape.singular_distance(&x) < excl * dl) {
        return Err(HarnessError::Config(format!("query point lies within {excl}·δ (δ = {dl}) of the singular set")));
    }
    let tau = cfg.tau.unwrap_or(1.0);

    let records = run_trials(cfg, &grid, |n, delta, stream| {
        let batch = sample_stream(&shape, n, cfg.seed, stream)?;
        let ecfg = estimator_config(&shape, delta, tau, false).map_err(to_core)?;
        Ok((density_estimate(&IndexedSample::new(&batch), &x, &ecfg), None))
    })?;
    Ok(aggregate(
        Summary {
            kind: ExperimentKind::Fluct,
            cfg,
            value_label: "theta",
            aux_label: None,
            tau: None,
            h: None,
            query_point: Some(x),
            axis_is_delta: cfg.delta_grid.is_some(),
            fit: FitTarget::Sd,
        },
        &grid,
        records,
    ))
}

/// Mean over sample points of `‖σ(X_i) − Π_{T_{X_i}S}‖_op` (or of the
/// truncated projector). The value skips points within `exclusion · δ` of
/// the singular set; `aux` always averages over every point.
pub fn run_tangent_experiment(cfg: &ExperimentConfig) -> Result<RateResult, HarnessError> {
    cfg.validate()?;
    let shape = cfg.shape_model()?;
    let tau = resolve_tau(cfg, &shape)?;
    let grid = size_grid(cfg, &shape)?;
    let d = shape.intrinsic_dim();

    let records = run_trials(cfg, &grid, |n, delta, stream| {
        let batch = draw(cfg, &shape, n, stream)?;
        let ecfg = estimator_config(&shape, delta, tau, cfg.variant == Variant::Split).map_err(to_core)?;
        let parts;
        let (points, dens, cov) = if cfg.variant == Variant::Split {
            parts = split(&batch)?;
            (&parts.x, IndexedSample::new(&parts.y_tilde), IndexedSample::new(&parts.z))
        } else {
            let idx = IndexedSample::new(&batch);
            (&batch, idx.clone(), idx)
        };
        let (mut all, mut kept) = ((0.0, 0usize), (0.0, 0usize));
        for x in points.iter() {
            let Ok(truth) = shape.tangent_at(x) else { continue };
            let sigma = tangent_sigma(&dens, &cov, x, &ecfg);
            let m = match cfg.tangent_matrix {
                TangentMatrix::Sigma => sigma,
                TangentMatrix::Pi => projector_truncate(&sigma, d)?,
            };
            let err = m.sub(&truth).op_norm();
            all = (all.0 + err, all.1 + 1);
            if cfg.exclusion.is_none_or(|c| shape.singular_distance(x) >= c * delta) {
                kept = (kept.0 + err, kept.1 + 1);
            }
        }
        let mean = |(s, c): (f64, usize)| if c == 0 { f64::NAN } else { s / c as f64 };
        Ok((mean(kept), Some(mean(all))))
    })?;
    let label = match (cfg.tangent_matrix, cfg.exclusion.is_some()) {
        (TangentMatrix::Sigma, true) => "sigma_error_restricted",
        (TangentMatrix::Sigma, false) => "sigma_error",
        (TangentMatrix::Pi, true) => "pi_error_restricted",
        (TangentMatrix::Pi, false) => "pi_error",
    };
    Ok(aggregate(
        Summary {
            kind: ExperimentKind::Tangent,
            cfg,
            value_label: label,
            aux_label: Some("error_unrestricted"),
            tau: Some(tau),
            h: None,
            query_point: None,
            axis_is_delta: false,
            fit: FitTarget::Mean,
        },
        &grid,
        records,
    ))
}

pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<RateResult, HarnessError> {
    match kind {
        ExperimentKind::Rate => run_rate_experiment(cfg),
        ExperimentKind::Measure => run_measure_experiment(cfg),
        ExperimentKind::Fluct => run_fluctuation_experiment(cfg),
        ExperimentKind::Tangent => run_tangent_experiment(cfg),
    }
}
