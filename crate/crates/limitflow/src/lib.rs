//! Scenario files, the analysis pipeline, and report emission for the
//! `limitflow` command-line tool.

pub mod emit;
pub mod pipeline;
pub mod report;
pub mod scenario;

use std::path::{Path, PathBuf};

pub use emit::{emit_outputs, IoError};
pub use pipeline::{run_scenario, RunOptions};
pub use report::Report;
pub use scenario::{parse_scenario, Scenario, ScenarioError};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "LIMITFLOW_OUT";

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Scenario { path: PathBuf, source: ScenarioError },
}

pub fn load_scenario(path: &Path) -> Result<Scenario, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Read { path: path.to_path_buf(), source })?;
    parse_scenario(&text).map_err(|source| LoadError::Scenario { path: path.to_path_buf(), source })
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub horizon: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) -> Result<(), ScenarioError> {
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(ScenarioError::Validation("--tol must be positive".into()));
            }
            s.tolerances.integrator = tol;
        }
        if let Some(h) = self.horizon {
            match &mut s.sampling {
                scenario::Sampling::Fixed { steps, .. } if h >= 30 => *steps = h,
                scenario::Sampling::Fixed { .. } => return Err(ScenarioError::Validation("--horizon must be at least 30".into())),
                scenario::Sampling::Targets { .. } => return Err(ScenarioError::Validation("--horizon applies to fixed sampling only".into())),
            }
        }
        Ok(())
    }
}

/// `--out`, then the scenario's own `output`, then `$LIMITFLOW_OUT`, then `limitflow-out`.
pub fn resolve_out(cli: Option<&Path>, scenario: Option<&Path>) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| scenario.map(Path::to_path_buf))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("limitflow-out"))
}
