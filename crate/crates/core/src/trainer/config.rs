use serde::{Deserialize, Serialize};

use crate::augment::{AugmentOpKind, Temperature, DEFAULT_DROPOUT_P};
use crate::curriculum::{make_schedule, Preset, Schedule, ScheduleBudgets, ScheduleKind, DEFAULT_MIX_ORIGINAL};
use crate::encoder::EncoderSpec;
use crate::error::{Error, Result};
use crate::mining::{SamplerKind, DEFAULT_MAX_ATTEMPTS};
use crate::net::{Margin, DEFAULT_DROPOUT, DEFAULT_EMBED, DEFAULT_HIDDEN, DEFAULT_LR};

pub const DEFAULT_BATCH_SIZE: usize = 64;
pub const DEFAULT_EVAL_EVERY: u64 = 300;
pub const DEFAULT_VAL_TRIPLETS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Triplet,
    /// Softmax classifier on the frozen features.
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauConfig {
    pub patience: usize,
    #[serde(default)]
    pub min_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub schedule: ScheduleKind,
    /// Budget preset; ignored when `budgets` is set. Defaults to `huff`.
    pub preset: Option<Preset>,
    pub budgets: Option<ScheduleBudgets>,
    /// Multiplies every stage budget.
    pub budget_scale: f64,
    /// Makes every stage plateau-triggered, capped at its budget.
    pub plateau: Option<PlateauConfig>,
    pub tau: Temperature,
    pub mix_original_fraction: f64,
    pub model: ModelKind,
    pub sampler: SamplerKind,
    pub technique: AugmentOpKind,
    pub pervasive_dropout_p: f64,
    pub encoder: EncoderSpec,
    pub batch_size: usize,
    pub margin: Margin,
    pub lr: f64,
    /// Defaults to the preset's cadence.
    pub eval_every: Option<u64>,
    pub hidden: usize,
    pub embed: usize,
    pub dropout: f64,
    pub max_attempts: usize,
    pub val_triplets: usize,
    pub validate_on_test: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            schedule: ScheduleKind::Gradual,
            preset: None,
            budgets: None,
            budget_scale: 1.0,
            plateau: None,
            tau: Temperature::tenths(5).expect("grid point"),
            mix_original_fraction: DEFAULT_MIX_ORIGINAL,
            model: ModelKind::Triplet,
            sampler: SamplerKind::Random,
            technique: AugmentOpKind::Eda,
            pervasive_dropout_p: DEFAULT_DROPOUT_P,
            encoder: EncoderSpec::default(),
            batch_size: DEFAULT_BATCH_SIZE,
            margin: Margin::default(),
            lr: DEFAULT_LR,
            eval_every: None,
            hidden: DEFAULT_HIDDEN,
            embed: DEFAULT_EMBED,
            dropout: DEFAULT_DROPOUT,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            val_triplets: DEFAULT_VAL_TRIPLETS,
            validate_on_test: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.eval_every == Some(0) {
            return bad("eval_every must be at least 1");
        }
        if !(self.budget_scale > 0.0 && self.budget_scale.is_finite()) {
            return bad("budget_scale must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if self.hidden == 0 || self.embed == 0 {
            return bad("hidden and embed sizes must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.plateau.is_some_and(|p| p.patience == 0) {
            return bad("plateau patience must be at least 1");
        }
        Ok(())
    }

    pub fn preset_or_default(&self) -> Preset {
        self.preset.unwrap_or(Preset::Huff)
    }

    pub fn eval_every(&self) -> u64 {
        self.eval_every
            .unwrap_or_else(|| self.preset.map_or(DEFAULT_EVAL_EVERY, Preset::eval_every))
    }

    pub fn schedule_budgets(&self) -> ScheduleBudgets {
        let b = self.budgets.unwrap_or_else(|| self.preset_or_default().budgets());
        if self.budget_scale == 1.0 {
            b
        } else {
            b.scaled(self.budget_scale)
        }
    }

    pub fn build_schedule(&self) -> Result<Schedule> {
        let mut s = make_schedule(self.schedule, &self.schedule_budgets(), self.tau, self.seed)?
            .with_mix(self.mix_original_fraction)?;
        if let Some(p) = self.plateau {
            s = s.with_plateau_triggers(p.patience, p.min_delta);
        }
        Ok(s)
    }
}
