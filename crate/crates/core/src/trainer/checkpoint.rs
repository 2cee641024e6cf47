use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, TokenizedExample};
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::net::{OptimizerState, TripletNetParams, XentHeadParams};

use super::config::TrainConfig;
use super::eval::{evaluate_1nn, evaluate_xent, LabeledFeatures};
use super::{encode_dataset, BestRecord, MetricRow};

pub const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Triplet(TripletNetParams),
    CrossEntropy(XentHeadParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub params: ModelParams,
    pub optimizer: OptimizerState,
}

/// Full training state. Every random stream is keyed by `(seed, update)`,
/// so `update` doubles as the generator cursor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub config: TrainConfig,
    pub update: u64,
    pub stage_index: usize,
    pub stage_start: u64,
    pub model: ModelState,
    pub best: Option<BestRecord>,
    pub best_model: Option<ModelParams>,
    pub history: Vec<MetricRow>,
    pub mined_triplets: u64,
    pub fallback_triplets: u64,
    pub class_names: Vec<String>,
    /// The 1-NN reference pool.
    pub reference: Vec<TokenizedExample>,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint =
            serde_json::from_str(&body).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unsupported format {} (expected {CHECKPOINT_FORMAT})",
                ckpt.format
            )));
        }
        Ok(ckpt)
    }

    /// The best model if one was recorded, else the latest.
    pub fn best_params(&self) -> &ModelParams {
        self.best_model.as_ref().unwrap_or(&self.model.params)
    }

    /// Top-1 accuracy of the best model on `eval`, whose labels must be a
    /// subset of the checkpoint's classes.
    pub fn evaluate(&self, eval: &Dataset) -> Result<f64> {
        let encoder = Encoder::from_spec(&self.config.encoder)?;
        let eval = encode_dataset(&encoder, &eval.align_to(&self.class_names)?)?;
        match self.best_params() {
            ModelParams::Triplet(p) => {
                let reference = Dataset::new(self.reference.clone(), self.class_names.clone())?;
                let train: LabeledFeatures = encode_dataset(&encoder, &reference)?;
                evaluate_1nn(p, &train, &eval)
            }
            ModelParams::CrossEntropy(h) => evaluate_xent(h, &eval),
        }
    }
}
