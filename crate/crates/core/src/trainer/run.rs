use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::EncoderSpec;
use crate::error::{Error, Result};

use super::config::TrainConfig;
use super::data::{DataConfig, TrainingData};
use super::experiment::ExperimentGrid;

/// A run config file: `[train]` mirrors [`TrainConfig`], `[data]` mirrors
/// [`DataConfig`]. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub data: DataConfig,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&body).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn resolve_encoder(spec: &mut EncoderSpec, base: &Path) {
    if let EncoderSpec::Embeddings { path } = spec {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

impl RunConfig {
    /// Parses `path`; relative paths inside resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: RunConfig = read_toml(path)?;
        cfg.resolve_paths(base_dir(path));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        self.data.resolve_paths(base);
        resolve_encoder(&mut self.train.encoder, base);
    }

    /// Data for this run, split and sampled with the training seed.
    pub fn prepare_data(&self) -> Result<TrainingData> {
        self.data.prepare(self.train.seed, !self.train.validate_on_test)
    }
}

/// Parses an experiment grid file, resolving paths like [`RunConfig::load`].
pub fn load_grid(path: impl AsRef<Path>) -> Result<ExperimentGrid> {
    let path = path.as_ref();
    let mut grid: ExperimentGrid = read_toml(path)?;
    grid.data.resolve_paths(base_dir(path));
    resolve_encoder(&mut grid.base.encoder, base_dir(path));
    Ok(grid)
}
