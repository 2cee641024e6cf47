//! Training schedules and batch composition.
//!
//! A schedule is an ordered list of stages; each stage runs for an update
//! budget at one augmentation temperature and mixes a fixed fraction of
//! original examples into every batch.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augment::{Augmenter, Temperature};
use crate::corpus::TokenizedExample;
use crate::error::{Error, Result};
use crate::rng::{self, choose_distinct, Draw, Purpose};

/// Fraction of original examples kept in augmented stages (4:1 ratio).
pub const DEFAULT_MIX_ORIGINAL: f64 = 0.2;
/// Control schedules re-draw τ at this cadence.
pub const CONTROL_WINDOW: u64 = 50;
/// Temperatures visited by gradual, anti and control schedules, in tenths.
pub const GRADUAL_STEPS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    SingleNoAug,
    SingleAug,
    TwoStage,
    Gradual,
    Control,
    Anti,
}

impl ScheduleKind {
    pub const ALL: [ScheduleKind; 6] = [
        ScheduleKind::SingleNoAug,
        ScheduleKind::SingleAug,
        ScheduleKind::TwoStage,
        ScheduleKind::Gradual,
        ScheduleKind::Control,
        ScheduleKind::Anti,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::SingleNoAug => "single_no_aug",
            ScheduleKind::SingleAug => "single_aug",
            ScheduleKind::TwoStage => "two_stage",
            ScheduleKind::Gradual => "gradual",
            ScheduleKind::Control => "control",
            ScheduleKind::Anti => "anti",
        }
    }

    pub fn uses_augmentation(self) -> bool {
        self != ScheduleKind::SingleNoAug
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScheduleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown schedule kind {s:?}")))
    }
}

/// How long a stage lasts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Fixed(u64),
    /// Ends once validation loss stops improving, or after `max_updates`.
    Plateau {
        patience: usize,
        min_delta: f64,
        max_updates: u64,
    },
}

impl Budget {
    pub fn max_updates(self) -> u64 {
        match self {
            Budget::Fixed(n) => n,
            Budget::Plateau { max_updates, .. } => max_updates,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    Fixed(Temperature),
    /// Uniform over the gradual grid, re-drawn every [`CONTROL_WINDOW`].
    Control { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub budget: Budget,
    pub tau: TauRule,
    pub augment_enabled: bool,
    pub mix_original_fraction: f64,
}

impl Stage {
    pub fn original_only(budget: Budget) -> Self {
        Stage {
            budget,
            tau: TauRule::Fixed(Temperature::ZERO),
            augment_enabled: false,
            mix_original_fraction: 1.0,
        }
    }

    pub fn augmented(budget: Budget, tau: TauRule) -> Self {
        Stage {
            budget,
            tau,
            augment_enabled: true,
            mix_original_fraction: DEFAULT_MIX_ORIGINAL,
        }
    }

    /// Temperature in force at `update`.
    pub fn tau_at(&self, update: u64) -> Temperature {
        match self.tau {
            TauRule::Fixed(t) => t,
            TauRule::Control { seed } => control_tau(update, seed),
        }
    }

    /// Number of augmented slots in a batch of `batch_size`.
    pub fn augmented_slots(&self, batch_size: usize) -> usize {
        if !self.augment_enabled {
            return 0;
        }
        ((batch_size as f64 * (1.0 - self.mix_original_fraction)).round() as usize).min(batch_size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub stages: Vec<Stage>,
    pub total_updates: u64,
}

/// Update budgets for the single-stage, two-stage and gradual families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBudgets {
    pub single_total: u64,
    pub two_stage: [u64; 2],
    pub gradual_first: u64,
    pub gradual_per_stage: u64,
}

impl ScheduleBudgets {
    /// Every budget multiplied by `factor`, rounded, at least 1.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |n: u64| ((n as f64 * factor).round() as u64).max(1);
        ScheduleBudgets {
            single_total: s(self.single_total),
            two_stage: [s(self.two_stage[0]), s(self.two_stage[1])],
            gradual_first: s(self.gradual_first),
            gradual_per_stage: s(self.gradual_per_stage),
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.single_total,
            self.two_stage[0],
            self.two_stage[1],
            self.gradual_first,
            self.gradual_per_stage,
        ];
        if all.contains(&0) {
            return Err(Error::invalid("schedule budgets must be positive"));
        }
        Ok(())
    }
}

/// Per-dataset settings from the published schedule table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Huff,
    Fewrel,
    Covc,
    Amzn,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Huff, Preset::Fewrel, Preset::Covc, Preset::Amzn];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Huff => "huff",
            Preset::Fewrel => "fewrel",
            Preset::Covc => "covc",
            Preset::Amzn => "amzn",
        }
    }

    pub fn budgets(self) -> ScheduleBudgets {
        let (single_total, two_stage, gradual_first, gradual_per_stage) = match self {
            Preset::Huff => (15_000, [4_000, 11_000], 6_000, 6_000),
            Preset::Fewrel => (15_000, [6_000, 9_000], 6_000, 6_000),
            Preset::Covc => (15_000, [4_000, 11_000], 6_000, 4_000),
            Preset::Amzn => (25_000, [8_000, 17_000], 10_000, 8_000),
        };
        ScheduleBudgets {
            single_total,
            two_stage,
            gradual_first,
            gradual_per_stage,
        }
    }

    pub fn eval_every(self) -> u64 {
        match self {
            Preset::Covc => 200,
            _ => 300,
        }
    }

    /// Examples per class in the few-shot training set.
    pub fn n_c(self) -> usize {
        match self {
            Preset::Huff | Preset::Fewrel => 10,
            Preset::Covc | Preset::Amzn => 3,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// Builds the stage list for `kind`. `tau_final` is the augmented-stage
/// temperature for single-stage and two-stage schedules, and the last grid
/// point (a multiple of 0.1, at most 0.5) for gradual, anti and control.
pub fn make_schedule(
    kind: ScheduleKind,
    budgets: &ScheduleBudgets,
    tau_final: Temperature,
    seed: u64,
) -> Result<Schedule> {
    budgets.validate()?;
    let fixed = Budget::Fixed;
    let stages = match kind {
        ScheduleKind::SingleNoAug => vec![Stage::original_only(fixed(budgets.single_total))],
        ScheduleKind::SingleAug => vec![Stage::augmented(
            fixed(budgets.single_total),
            TauRule::Fixed(tau_final),
        )],
        ScheduleKind::TwoStage => vec![
            Stage::original_only(fixed(budgets.two_stage[0])),
            Stage::augmented(fixed(budgets.two_stage[1]), TauRule::Fixed(tau_final)),
        ],
        ScheduleKind::Gradual | ScheduleKind::Anti | ScheduleKind::Control => {
            let steps = grid_steps(tau_final)?;
            let budget_of = |i: usize| {
                fixed(if i == 0 {
                    budgets.gradual_first
                } else {
                    budgets.gradual_per_stage
                })
            };
            (0..=steps as usize)
                .map(|i| {
                    let tenths = match kind {
                        ScheduleKind::Anti => steps - i as u32,
                        _ => i as u32,
                    };
                    if kind == ScheduleKind::Control {
                        Ok(Stage::augmented(budget_of(i), TauRule::Control { seed }))
                    } else if tenths == 0 {
                        Ok(Stage::original_only(budget_of(i)))
                    } else {
                        Ok(Stage::augmented(budget_of(i), TauRule::Fixed(Temperature::tenths(tenths)?)))
                    }
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let total_updates = stages.iter().map(|s| s.budget.max_updates()).sum();
    Ok(Schedule {
        kind,
        stages,
        total_updates,
    })
}

fn grid_steps(tau_final: Temperature) -> Result<u32> {
    let tenths = tau_final.value() * 10.0;
    let k = tenths.round();
    if (tenths - k).abs() > 1e-9 || !(1.0..=f64::from(GRADUAL_STEPS)).contains(&k) {
        return Err(Error::invalid(format!(
            "gradual schedules need a final temperature in {{0.1, ..., 0.5}}, got {tau_final}"
        )));
    }
    Ok(k as u32)
}

/// Preset schedule by dataset name (`huff`, `fewrel`, `covc`, `amzn`).
pub fn preset_schedule(kind: ScheduleKind, preset: &str, tau_final: Temperature, seed: u64) -> Result<Schedule> {
    let p: Preset = preset.parse()?;
    make_schedule(kind, &p.budgets(), tau_final, seed)
}

impl Schedule {
    /// Cumulative start update of every stage.
    pub fn stage_starts(&self) -> Vec<u64> {
        self.stages
            .iter()
            .scan(0u64, |acc, s| {
                let start = *acc;
                *acc += s.budget.max_updates();
                Some(start)
            })
            .collect()
    }

    /// Stage whose half-open budget interval contains `update`.
    pub fn stage_at(&self, update: u64) -> Result<(usize, &Stage)> {
        if update >= self.total_updates {
            return Err(Error::UpdateOutOfRange {
                update,
                total: self.total_updates,
            });
        }
        let mut end = 0;
        for (i, s) in self.stages.iter().enumerate() {
            end += s.budget.max_updates();
            if update < end {
                return Ok((i, s));
            }
        }
        unreachable!("update below total lies in some stage")
    }

    /// Replaces every stage budget with a plateau trigger capped at the
    /// stage's current budget.
    pub fn with_plateau_triggers(mut self, patience: usize, min_delta: f64) -> Self {
        for s in &mut self.stages {
            s.budget = Budget::Plateau {
                patience,
                min_delta,
                max_updates: s.budget.max_updates(),
            };
        }
        self
    }

    pub fn with_mix(mut self, mix_original_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mix_original_fraction) {
            return Err(Error::invalid(format!("mix fraction {mix_original_fraction} not in [0, 1]")));
        }
        for s in self.stages.iter_mut().filter(|s| s.augment_enabled) {
            s.mix_original_fraction = mix_original_fraction;
        }
        Ok(self)
    }
}

/// Control-schedule temperature: uniform over `{0.0, 0.1, ..., 0.5}`,
/// constant within each 50-update window.
pub fn control_tau(update: u64, seed: u64) -> Temperature {
    let mut rng = rng::stream(seed, Purpose::ControlTau, update / CONTROL_WINDOW);
    Temperature::tenths(rng.below(GRADUAL_STEPS as usize + 1) as u32).expect("grid point")
}

/// Identifies the batch being composed so each slot gets its own stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchKey {
    pub seed: u64,
    pub update: u64,
}

/// Fills `batch_size` slots from `pool` (slot `s` draws on
/// `pool[s % pool.len()]`). In an augmenting stage exactly
/// `round(batch_size · (1 − mix))` randomly chosen slots get a fresh
/// augmentation at `tau`; the rest stay original. Returns each example with
/// its augmented flag.
pub fn compose_batch(
    stage: &Stage,
    tau: Temperature,
    pool: &[TokenizedExample],
    batch_size: usize,
    augmenter: &Augmenter,
    key: BatchKey,
) -> Result<Vec<(TokenizedExample, bool)>> {
    if batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    if pool.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut flags = vec![false; batch_size];
    let n_aug = stage.augmented_slots(batch_size);
    if n_aug > 0 {
        let mut pick = rng::stream(key.seed, Purpose::Compose, key.update);
        for s in choose_distinct(&mut pick, batch_size, n_aug) {
            flags[s] = true;
        }
    }
    Ok(flags
        .into_iter()
        .enumerate()
        .map(|(s, aug)| {
            let src = &pool[s % pool.len()];
            if aug {
                let mut r = rng::stream(key.seed, Purpose::Augment, rng::pair_id(key.update, s as u64));
                (augmenter.augment(src, tau, &mut r), true)
            } else {
                (src.clone(), false)
            }
        })
        .collect())
}

/// True iff the best loss of the last `patience` evaluations fails to beat
/// the best loss before them by more than `min_delta`.
pub fn detect_plateau(history: &[(u64, f64)], patience: usize, min_delta: f64) -> bool {
    let patience = patience.max(1);
    if history.len() <= patience {
        return false;
    }
    let split = history.len() - patience;
    let before = history[..split].iter().map(|h| h.1).fold(f64::INFINITY, f64::min);
    let recent = history[split..].iter().map(|h| h.1).fold(f64::INFINITY, f64::min);
    !(before - recent > min_delta)
}
