use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use varifold_core::estimators::bandwidth_rule;
use varifold_core::metrics::{Ball, MatrixNorm};
use varifold_core::ShapeModel;

use crate::error::HarnessError;

pub const DEFAULT_N_GRID: [usize; 7] = [250, 500, 1000, 2000, 4000, 8000, 16000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
pub enum Variant {
    /// `ν ⊗ δ_σ` from one sample.
    #[value(name = "W")]
    W,
    /// `ν ⊗ δ_π` from one sample.
    #[value(name = "V")]
    V,
    /// The four-way split estimator.
    #[default]
    #[serde(rename = "split")]
    #[value(name = "split")]
    Split,
}

/// Which matrix the tangent experiment compares to the true projector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TangentMatrix {
    #[default]
    Sigma,
    Pi,
}

/// Keys match the CLI flags (`n-grid`, `trials`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub shape: String,
    pub density: String,
    pub variant: Variant,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Overrides the default `τ` derived from the shape's Ahlfors constant.
    pub tau: Option<f64>,
    /// Fixed `δ = r` for every `N`, instead of the `δ_N` rule.
    pub delta: Option<f64>,
    /// Ground-truth quadrature resolution; defaults to the smallest `δ` over
    /// the grid divided by 10.
    pub h: Option<f64>,
    /// `c1,...,cn,R`.
    pub ball: Option<String>,
    pub norm: MatrixNorm,
    pub out: Option<PathBuf>,
    /// Tangent errors skip points within `exclusion · δ` of the singular
    /// set; `None` keeps every point.
    pub exclusion: Option<f64>,
    pub tangent_matrix: TangentMatrix,
    /// Query point of the fluctuation experiment.
    pub point: Option<Vec<f64>>,
    /// Bandwidths of a fluctuation experiment at fixed `N` (the first grid
    /// entry).
    pub delta_grid: Option<Vec<f64>>,
    pub size_cap: usize,
}

/// Support cap of the flat-metric solver in experiments. The largest grid
/// size puts about twice the core default on the support.
pub const DEFAULT_EXPERIMENT_SIZE_CAP: usize = 8000;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            shape: "circle".into(),
            density: "uniform".into(),
            variant: Variant::Split,
            n_grid: DEFAULT_N_GRID.to_vec(),
            trials: 20,
            seed: 1,
            tau: None,
            delta: None,
            h: None,
            ball: None,
            norm: MatrixNorm::Operator,
            out: None,
            exclusion: Some(1.0),
            tangent_matrix: TangentMatrix::Sigma,
            point: None,
            delta_grid: None,
            size_cap: DEFAULT_EXPERIMENT_SIZE_CAP,
        }
    }
}

#[derive(Deserialize)]
struct SummaryEcho {
    config: ExperimentConfig,
}

impl ExperimentConfig {
    /// Loads JSON or TOML by extension. A results summary is accepted too;
    /// its `config` echo is returned.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        if is_toml {
            toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
        } else {
            Self::from_json(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("config").is_some_and(|c| c.is_object()) {
            Ok(serde_json::from_value::<SummaryEcho>(value)?.config)
        } else {
            serde_json::from_value(value)
        }
    }

    pub fn shape_model(&self) -> Result<ShapeModel, HarnessError> {
        Ok(ShapeModel::from_names(&self.shape, &self.density)?)
    }

    pub fn ball(&self) -> Result<Option<Ball>, HarnessError> {
        Ok(self.ball.as_deref().map(Ball::parse).transpose()?)
    }

    /// Points per estimator role: the split estimator draws `4N` and uses
    /// `N` per part; the others use all `4N` draws at once.
    pub fn role_size(&self, n: usize) -> usize {
        match self.variant {
            Variant::Split => n,
            Variant::W | Variant::V => 4 * n,
        }
    }

    /// `δ` used at grid size `n`.
    pub fn bandwidth(&self, shape: &ShapeModel, n: usize) -> Result<f64, HarnessError> {
        if let Some(d) = self.delta {
            return Ok(d);
        }
        let reg = shape.regularity();
        Ok(bandwidth_rule(self.role_size(n), shape.intrinsic_dim(), reg.a, reg.b)?)
    }

    /// Quadrature resolution: explicit `h` or the smallest `δ` over the
    /// grid divided by 10.
    pub fn resolution(&self, shape: &ShapeModel) -> Result<f64, HarnessError> {
        if let Some(h) = self.h {
            return Ok(h);
        }
        let mut smallest = f64::INFINITY;
        for &n in &self.n_grid {
            smallest = smallest.min(self.bandwidth(shape, n)?);
        }
        Ok(smallest / 10.0)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(HarnessError::Config("n-grid must list positive sizes".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Config("n-grid must be strictly increasing".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t <= 1.0) {
                return Err(HarnessError::Config(format!("tau = {t} outside (0, 1]")));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return Err(HarnessError::Config(format!("delta = {d} must be positive")));
            }
        }
        if let Some(grid) = &self.delta_grid {
            if grid.is_empty() || grid.iter().any(|&d| !(d > 0.0)) || grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(HarnessError::Config("delta-grid must be positive and strictly increasing".into()));
            }
        }
        let shape = self.shape_model()?;
        let h = self.resolution(&shape)?;
        if !(h > 0.0) {
            return Err(HarnessError::Config(format!("h = {h} must be positive")));
        }
        if self.h.is_some() {
            let mut smallest = f64::INFINITY;
            for &n in &self.n_grid {
                smallest = smallest.min(self.bandwidth(&shape, n)?);
            }
            if h > smallest / 10.0 * (1.0 + 1e-12) {
                return Err(HarnessError::Config(format!("h = {h} exceeds the smallest δ/10 = {}", smallest / 10.0)));
            }
        }
        if let Some(ball) = self.ball()? {
            if ball.center.len() != shape.ambient_dim() {
                return Err(HarnessError::Config("ball center has the wrong dimension".into()));
            }
        }
        Ok(())
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',').map(|t| t.trim().parse::<T>().map_err(|e| format!("`{t}`: {e}"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_grids() {
        let cfg = ExperimentConfig { n_grid: vec![500, 250], ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { trials: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { h: Some(0.5), ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_and_json_share_keys() {
        let t: ExperimentConfig = toml::from_str("shape = \"square\"\nn-grid = [100, 200]\ntrials = 3\n").unwrap();
        let j = ExperimentConfig::from_json(r#"{"shape": "square", "n-grid": [100, 200], "trials": 3}"#).unwrap();
        assert_eq!(t, j);
        assert!(ExperimentConfig::from_json(r#"{"shpe": "square"}"#).is_err());
    }

    #[test]
    fn default_resolution() {
        let cfg = ExperimentConfig::default();
        let shape = cfg.shape_model().unwrap();
        let h = cfg.resolution(&shape).unwrap();
        assert!((h - 16000f64.powf(-1.0 / 3.0) / 10.0).abs() < 1e-15);
    }
}
