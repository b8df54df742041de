use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::HarnessError;
use crate::experiments::RateResult;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub trials_csv: PathBuf,
    pub summary_json: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path, stem: &str) -> Self {
        Self {
            trials_csv: dir.join(format!("{stem}_trials.csv")),
            summary_json: dir.join(format!("{stem}_summary.json")),
        }
    }
}

/// Writes the per-trial table and the JSON summary. The summary holds
/// everything except the trial rows, plus a `generated_at` timestamp; all
/// other content is a function of the configuration alone.
pub fn emit_results(result: &RateResult, paths: &OutputPaths) -> Result<(), HarnessError> {
    for p in [&paths.trials_csv, &paths.summary_json] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
    }
    write_trials(result, &paths.trials_csv)?;
    let text = summary_json(result, true).map_err(|source| HarnessError::Json { path: paths.summary_json.clone(), source })?;
    fs::write(&paths.summary_json, text).map_err(|e| HarnessError::io(&paths.summary_json, e))
}

fn write_trials(result: &RateResult, path: &Path) -> Result<(), HarnessError> {
    let csv_err = |source| HarnessError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in &result.records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn summary_json(result: &RateResult, timestamp: bool) -> Result<String, serde_json::Error> {
    let mut value = serde_json::to_value(result)?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("records");
        if timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            obj.insert("generated_at".into(), secs.into());
        }
    }
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    Ok(text)
}
