use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{atomic_write, CliError};
use crate::cells::{Arch, CellConfig, InitMode, Network, Params};
use crate::tasks::TaskKind;
use crate::training::{TrainConfig, TrainOutcome};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitMeta {
    pub seed: u64,
    pub mode: InitMode,
}

/// Result of the run that produced the parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMeta {
    pub config: TrainConfig,
    pub episodes: usize,
    pub metric: f64,
    pub solved: bool,
}

/// Saved network. Parameters are row-major JSON numbers that parse back to
/// the same bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub arch: Arch,
    pub task: TaskKind,
    pub config: CellConfig,
    pub init: InitMeta,
    pub training: Option<TrainingMeta>,
    pub params: Params,
}

impl ModelFile {
    pub fn from_outcome(config: &TrainConfig, outcome: &TrainOutcome) -> ModelFile {
        ModelFile {
            format_version: FORMAT_VERSION,
            arch: config.cell.arch(),
            task: config.task.kind,
            config: config.cell,
            init: InitMeta {
                seed: config.seed,
                mode: config.init,
            },
            training: Some(TrainingMeta {
                config: config.clone(),
                episodes: outcome.episodes,
                metric: outcome.metric,
                solved: outcome.solved,
            }),
            params: outcome.network.params.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model files serialize");
        s.push('\n');
        s
    }

    /// Parses and checks a model: version, architecture tag against the
    /// config, and parameter shapes.
    pub fn from_json(text: &str) -> Result<ModelFile, CliError> {
        let m: ModelFile = serde_json::from_str(text)
            .map_err(|e| CliError::Data(format!("invalid model file: {e}")))?;
        if m.format_version != FORMAT_VERSION {
            return Err(CliError::Data(format!(
                "unsupported model format version {}",
                m.format_version
            )));
        }
        if m.arch != m.config.arch() {
            return Err(CliError::Data(format!(
                "architecture tag {} does not match config {}",
                m.arch,
                m.config.arch()
            )));
        }
        if m.config.dims.input != m.task.input_dim() || m.config.dims.output != m.task.output_dim()
        {
            return Err(CliError::Data(format!(
                "model sizes do not fit the {} task",
                m.task
            )));
        }
        m.network()?;
        Ok(m)
    }

    pub fn network(&self) -> Result<Network, CliError> {
        Network::new(self.config, self.params.clone()).map_err(|e| CliError::Data(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ModelFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        ModelFile::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        atomic_write(path, &self.to_json())
    }
}
