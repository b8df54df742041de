use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("point lies on the singular set (distance {distance:.3e})")]
    SingularPoint { distance: f64 },

    #[error("eigen-gap {gap:.3e} between λ_d and λ_(d+1) is degenerate")]
    DegenerateGap { gap: f64 },

    #[error("sampler exceeded {trials} rejection trials; density upper bound is likely wrong")]
    SamplerFailure { trials: u64 },

    #[error("flat-metric problem has {size} support points, cap is {cap}")]
    ProblemTooLarge { size: usize, cap: usize },

    #[error("LP oracle accepts at most {cap} support points, got {size}")]
    OracleTooLarge { size: usize, cap: usize },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }
}
