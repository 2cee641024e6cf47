//! The training loop, evaluation, checkpoints and the experiment grid.

mod checkpoint;
mod config;
mod data;
mod eval;
mod experiment;
mod run;

use std::io::Write;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{Augmenter, Temperature};
use crate::corpus::Dataset;
use crate::curriculum::{compose_batch, detect_plateau, BatchKey, Budget, Schedule, Stage};
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::mining::{sample_hard_negative_triplets, sample_random_triplets, MinedTriplet, SamplerKind};
use crate::net::{
    adam_step, cosine_distance, loss_and_grad, xent_forward_backward, AdamConfig, DropoutMask, OptimizerState,
    TripletFeatures, TripletMasks, TripletNetParams, XentHeadParams,
};
use crate::rng::{self, choose_distinct, Draw, Purpose};

pub use checkpoint::{Checkpoint, ModelParams, ModelState, CHECKPOINT_FORMAT};
pub use config::{ModelKind, PlateauConfig, TrainConfig, DEFAULT_BATCH_SIZE, DEFAULT_EVAL_EVERY};
pub use data::{DataConfig, TrainingData};
pub use eval::{
    evaluate_1nn, evaluate_xent, nearest_index, nearest_neighbor_predict, xent_predict, LabeledFeatures,
};
pub use experiment::{run_experiment, write_report, CellReport, ExperimentGrid, GridSampler, REPORT_HEADER};
pub use run::{load_grid, RunConfig};

pub const METRICS_HEADER: &str = "update,split,loss,accuracy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub update: u64,
    pub split: String,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub accuracy: f64,
    pub update: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub history: Vec<MetricRow>,
    pub best_accuracy: f64,
    pub best_update: u64,
    /// Test accuracy of the best model, when a test split exists.
    pub test_accuracy: Option<f64>,
    pub total_updates: u64,
    pub mined_triplets: u64,
    pub fallback_triplets: u64,
}

/// What one update did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepStats {
    pub update: u64,
    pub stage_index: usize,
    pub tau: Temperature,
    pub augmented_slots: usize,
    pub loss: f64,
    pub fallbacks: usize,
}

/// Writes `update,split,loss,accuracy` rows.
pub fn write_metrics_csv<W: Write>(history: &[MetricRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in history {
        writeln!(out, "{},{},{},{}", r.update, r.split, r.loss, r.accuracy)?;
    }
    Ok(())
}

pub(crate) fn encode_dataset(encoder: &Encoder, ds: &Dataset) -> Result<LabeledFeatures> {
    let features = ds
        .examples
        .par_iter()
        .map(|e| encoder.encode(&e.tokens).map(|f| f.0))
        .collect::<Result<Vec<_>>>()?;
    let labels = ds.examples.iter().map(|e| e.class_id).collect();
    let augmented = ds.examples.iter().map(|e| e.origin.is_augmented()).collect();
    Ok(LabeledFeatures {
        features,
        labels,
        augmented,
    })
}

/// Fixed evaluation triplets: every anchor comes from the evaluation set,
/// positive and negative from the training originals.
#[derive(Debug, Clone)]
struct EvalTriplet {
    anchor: usize,
    positive: usize,
    negative: usize,
}

fn eval_triplets(train: &LabeledFeatures, eval: &LabeledFeatures, count: usize, seed: u64) -> Vec<EvalTriplet> {
    let mut rng = rng::stream(seed, Purpose::ValTriplets, 0);
    let anchors = choose_distinct(&mut rng, eval.len(), count);
    anchors
        .into_iter()
        .filter_map(|a| {
            let class = eval.labels[a];
            let same: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] == class).collect();
            let other: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] != class).collect();
            if same.is_empty() || other.is_empty() {
                return None;
            }
            Some(EvalTriplet {
                anchor: a,
                positive: same[rng.below(same.len())],
                negative: other[rng.below(other.len())],
            })
        })
        .collect()
}

/// Owns the model and drives the schedule one update at a time.
pub struct Trainer {
    config: TrainConfig,
    schedule: Schedule,
    data: TrainingData,
    encoder: Encoder,
    augmenter: Augmenter,
    train_feats: LabeledFeatures,
    eval_feats: LabeledFeatures,
    eval_split: &'static str,
    eval_triplets: Vec<EvalTriplet>,
    state: ModelState,
    update: u64,
    stage_index: usize,
    stage_start: u64,
    history: Vec<MetricRow>,
    best: Option<BestRecord>,
    best_model: Option<ModelParams>,
    mined_triplets: u64,
    fallback_triplets: u64,
}

impl std::fmt::Debug for Trainer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trainer")
            .field("update", &self.update)
            .field("stage_index", &self.stage_index)
            .field("schedule", &self.schedule.kind)
            .finish()
    }
}

impl Trainer {
    /// Initializes the model and records the update-0 evaluation.
    pub fn new(config: TrainConfig, data: TrainingData) -> Result<Self> {
        let mut t = Trainer::assemble(config, data, None)?;
        t.evaluate_and_record()?;
        Ok(t)
    }

    /// Continues from `ckpt`. `data` must hold the same training set.
    pub fn resume(ckpt: Checkpoint, data: TrainingData) -> Result<Self> {
        if data.train.class_names != ckpt.class_names || data.train.examples != ckpt.reference {
            return Err(Error::Checkpoint("training data differs from the checkpoint's".into()));
        }
        Trainer::assemble(ckpt.config.clone(), data, Some(ckpt))
    }

    fn assemble(config: TrainConfig, data: TrainingData, ckpt: Option<Checkpoint>) -> Result<Self> {
        config.validate()?;
        let schedule = config.build_schedule()?;
        let encoder = Encoder::from_spec(&config.encoder)?;
        let mut augmenter = Augmenter::new(config.technique, data.lexicon.clone(), data.vocab.clone())?
            .with_dropout_p(config.pervasive_dropout_p)?;
        if let Some(t) = &data.translator {
            augmenter = augmenter.with_translator(t.clone());
        }
        let train_feats = encode_dataset(&encoder, &data.train)?;
        let (eval_split, eval_set) = if config.validate_on_test {
            ("test", data.test.as_ref())
        } else {
            ("val", data.val.as_ref())
        };
        let eval_set = eval_set.ok_or_else(|| Error::Config(format!("no {eval_split} split available")))?;
        let eval_feats = encode_dataset(&encoder, eval_set)?;
        if eval_feats.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let eval_triplets = eval_triplets(&train_feats, &eval_feats, config.val_triplets, config.seed);
        let adam = AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        };
        let state = match ckpt {
            Some(ref c) => c.model.clone(),
            None => {
                let mut rng = rng::stream(config.seed, Purpose::Init, 0);
                let params = match config.model {
                    ModelKind::Triplet => ModelParams::Triplet(TripletNetParams::init(
                        encoder.dim(),
                        config.hidden,
                        config.embed,
                        config.dropout,
                        &mut rng,
                    )?),
                    ModelKind::CrossEntropy => {
                        ModelParams::CrossEntropy(XentHeadParams::glorot(data.train.c(), encoder.dim(), &mut rng))
                    }
                };
                let optimizer = match &params {
                    ModelParams::Triplet(p) => OptimizerState::new(&p.weights, adam),
                    ModelParams::CrossEntropy(h) => OptimizerState::new(h, adam),
                };
                ModelState { params, optimizer }
            }
        };
        let mut t = Trainer {
            config,
            schedule,
            data,
            encoder,
            augmenter,
            train_feats,
            eval_feats,
            eval_split,
            eval_triplets,
            state,
            update: 0,
            stage_index: 0,
            stage_start: 0,
            history: Vec::new(),
            best: None,
            best_model: None,
            mined_triplets: 0,
            fallback_triplets: 0,
        };
        if let Some(c) = ckpt {
            t.update = c.update;
            t.stage_index = c.stage_index;
            t.stage_start = c.stage_start;
            t.history = c.history;
            t.best = c.best;
            t.best_model = c.best_model;
            t.mined_triplets = c.mined_triplets;
            t.fallback_triplets = c.fallback_triplets;
        }
        Ok(t)
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn update(&self) -> u64 {
        self.update
    }

    pub fn history(&self) -> &[MetricRow] {
        &self.history
    }

    pub fn is_done(&self) -> bool {
        self.stage_index >= self.schedule.stages.len()
    }

    pub fn model(&self) -> &ModelParams {
        &self.state.params
    }

    fn stage(&self) -> &Stage {
        &self.schedule.stages[self.stage_index]
    }

    /// Runs one update. Errors once the schedule is exhausted.
    pub fn step(&mut self) -> Result<StepStats> {
        if self.is_done() {
            return Err(Error::UpdateOutOfRange {
                update: self.update,
                total: self.update,
            });
        }
        let u = self.update;
        let seed = self.config.seed;
        let stage = *self.stage();
        let tau = stage.tau_at(u);
        let n = self.data.train.len();
        let composed = compose_batch(
            &stage,
            tau,
            &self.data.train.examples,
            n,
            &self.augmenter,
            BatchKey { seed, update: u },
        )?;
        let augmented_slots = composed.iter().filter(|c| c.1).count();
        let aug_feats: Vec<Option<Vec<f64>>> = composed
            .par_iter()
            .map(|(ex, aug)| aug.then(|| self.encoder.encode(&ex.tokens).map(|f| f.0)).transpose())
            .collect::<Result<_>>()?;
        let feats: Vec<&[f64]> = aug_feats
            .iter()
            .enumerate()
            .map(|(s, f)| f.as_deref().unwrap_or(&self.train_feats.features[s % n]))
            .collect();
        let labels: Vec<usize> = composed.iter().map(|c| c.0.class_id).collect();

        let mut trng = rng::stream(seed, Purpose::Triplets, u);
        let (loss, fallbacks) = match &mut self.state.params {
            ModelParams::Triplet(params) => {
                let mined: Vec<MinedTriplet> = match self.config.sampler {
                    SamplerKind::Random => sample_random_triplets(&labels, self.config.batch_size, &mut trng)?
                        .into_iter()
                        .map(|triplet| MinedTriplet {
                            triplet,
                            fallback: false,
                        })
                        .collect(),
                    SamplerKind::HardNegative => sample_hard_negative_triplets(
                        &labels,
                        &feats,
                        self.config.batch_size,
                        params,
                        self.config.margin,
                        self.config.max_attempts,
                        &mut trng,
                    )?,
                };
                let fallbacks = mined.iter().filter(|m| m.fallback).count();
                let batch: Vec<TripletFeatures<'_>> = mined
                    .iter()
                    .map(|m| [feats[m.triplet.anchor], feats[m.triplet.positive], feats[m.triplet.negative]])
                    .collect();
                let masks: Option<Vec<TripletMasks>> = (params.dropout_p > 0.0).then(|| {
                    let mut drng = rng::stream(seed, Purpose::Dropout, u);
                    let h = params.weights.hidden_dim();
                    (0..batch.len())
                        .map(|_| [0, 1, 2].map(|_| Some(DropoutMask::sample(h, params.dropout_p, &mut drng))))
                        .collect()
                });
                let (loss, grads) = loss_and_grad(params, &batch, self.config.margin, masks.as_deref())?;
                check_loss(loss, u)?;
                adam_step(&mut params.weights, &grads, &mut self.state.optimizer)?;
                (loss, fallbacks)
            }
            ModelParams::CrossEntropy(head) => {
                let picks: Vec<usize> = (0..self.config.batch_size).map(|_| trng.below(labels.len())).collect();
                let mut grads = head.zeros_like();
                let mut loss = 0.0;
                for &i in &picks {
                    let (l, g) = xent_forward_backward(head, feats[i], labels[i])?;
                    loss += l;
                    grads.add_assign(&g);
                }
                let k = 1.0 / picks.len() as f64;
                grads.scale(k);
                loss *= k;
                check_loss(loss, u)?;
                adam_step(head, &grads, &mut self.state.optimizer)?;
                (loss, 0)
            }
        };
        if self.config.model == ModelKind::Triplet {
            self.mined_triplets += self.config.batch_size as u64;
            self.fallback_triplets += fallbacks as u64;
        }
        let stats = StepStats {
            update: u,
            stage_index: self.stage_index,
            tau,
            augmented_slots,
            loss,
            fallbacks,
        };
        self.update += 1;
        let evaluated = self.update % self.config.eval_every() == 0;
        if evaluated {
            self.evaluate_and_record()?;
        }
        self.advance_stage(evaluated);
        Ok(stats)
    }

    fn advance_stage(&mut self, evaluated: bool) {
        let stage = *self.stage();
        let elapsed = self.update - self.stage_start;
        let done = elapsed >= stage.budget.max_updates()
            || match stage.budget {
                Budget::Plateau {
                    patience, min_delta, ..
                } if evaluated => {
                    let losses: Vec<(u64, f64)> = self
                        .history
                        .iter()
                        .filter(|r| r.update >= self.stage_start)
                        .map(|r| (r.update, r.loss))
                        .collect();
                    detect_plateau(&losses, patience, min_delta)
                }
                _ => false,
            };
        if done {
            debug!("stage {} finished at update {}", self.stage_index, self.update);
            self.stage_index += 1;
            self.stage_start = self.update;
        }
    }

    /// Evaluates the current model on the evaluation split.
    pub fn evaluate(&self) -> Result<(f64, f64)> {
        match &self.state.params {
            ModelParams::Triplet(p) => {
                let acc = evaluate_1nn(p, &self.train_feats, &self.eval_feats)?;
                let loss = self.eval_loss(p)?;
                Ok((loss, acc))
            }
            ModelParams::CrossEntropy(h) => {
                let acc = evaluate_xent(h, &self.eval_feats)?;
                let losses = self
                    .eval_feats
                    .features
                    .par_iter()
                    .zip(&self.eval_feats.labels)
                    .map(|(x, &y)| xent_forward_backward(h, x, y).map(|r| r.0))
                    .collect::<Result<Vec<_>>>()?;
                Ok((losses.iter().sum::<f64>() / losses.len() as f64, acc))
            }
        }
    }

    fn eval_loss(&self, p: &TripletNetParams) -> Result<f64> {
        if self.eval_triplets.is_empty() {
            return Ok(0.0);
        }
        let emb = |x: &[f64]| crate::net::embed_eval(p, x);
        let losses = self
            .eval_triplets
            .par_iter()
            .map(|t| {
                let a = emb(&self.eval_feats.features[t.anchor])?;
                let pp = emb(&self.train_feats.features[t.positive])?;
                let nn = emb(&self.train_feats.features[t.negative])?;
                Ok((cosine_distance(&a, &pp) - cosine_distance(&a, &nn) + self.config.margin.value()).max(0.0))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(losses.iter().sum::<f64>() / losses.len() as f64)
    }

    fn evaluate_and_record(&mut self) -> Result<()> {
        let (loss, accuracy) = self.evaluate()?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("{} loss at update {}", self.eval_split, self.update)));
        }
        info!(
            "update {} {} loss {:.5} accuracy {:.4}",
            self.update, self.eval_split, loss, accuracy
        );
        self.history.push(MetricRow {
            update: self.update,
            split: self.eval_split.to_string(),
            loss,
            accuracy,
        });
        if self.best.is_none_or(|b| accuracy > b.accuracy) {
            self.best = Some(BestRecord {
                accuracy,
                update: self.update,
            });
            self.best_model = Some(self.state.params.clone());
        }
        Ok(())
    }

    /// Steps until `update` is reached or the schedule ends.
    pub fn run_until(&mut self, update: u64) -> Result<()> {
        while self.update < update && !self.is_done() {
            self.step()?;
        }
        Ok(())
    }

    /// Runs the remaining schedule and reports.
    pub fn run(&mut self) -> Result<TrainResult> {
        self.run_until(u64::MAX)?;
        self.result()
    }

    /// Summary of training so far, with test accuracy of the best model.
    pub fn result(&self) -> Result<TrainResult> {
        let best = self.best.ok_or_else(|| Error::invalid("no evaluation recorded"))?;
        let test_accuracy = if self.config.validate_on_test {
            Some(best.accuracy)
        } else {
            match (&self.data.test, self.best_model.as_ref().unwrap_or(&self.state.params)) {
                (Some(test), ModelParams::Triplet(p)) => {
                    Some(evaluate_1nn(p, &self.train_feats, &encode_dataset(&self.encoder, test)?)?)
                }
                (Some(test), ModelParams::CrossEntropy(h)) => {
                    Some(evaluate_xent(h, &encode_dataset(&self.encoder, test)?)?)
                }
                (None, _) => None,
            }
        };
        Ok(TrainResult {
            history: self.history.clone(),
            best_accuracy: best.accuracy,
            best_update: best.update,
            test_accuracy,
            total_updates: self.update,
            mined_triplets: self.mined_triplets,
            fallback_triplets: self.fallback_triplets,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT,
            config: self.config.clone(),
            update: self.update,
            stage_index: self.stage_index,
            stage_start: self.stage_start,
            model: self.state.clone(),
            best: self.best,
            best_model: self.best_model.clone(),
            history: self.history.clone(),
            mined_triplets: self.mined_triplets,
            fallback_triplets: self.fallback_triplets,
            class_names: self.data.train.class_names.clone(),
            reference: self.data.train.examples.clone(),
        }
    }
}

fn check_loss(loss: f64, update: u64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("training loss {loss} at update {update}")))
    }
}

/// Trains `config` on `data` from scratch.
pub fn train(config: TrainConfig, data: TrainingData) -> Result<TrainResult> {
    Trainer::new(config, data)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SynonymLexicon, TokenizedExample};
    use crate::curriculum::{ScheduleBudgets, ScheduleKind};
    use crate::encoder::EncoderSpec;

    /// Four classes, each marked by its own pair of tokens plus shared noise.
    fn toy(per_class: usize, seed: u64) -> Dataset {
        let mut rng = rng::stream(seed, Purpose::Synth, 0);
        let mut ex = Vec::new();
        for k in 0..4 {
            for _ in 0..per_class {
                let mut t = vec![format!("key{k}"), format!("tag{k}")];
                for _ in 0..3 {
                    t.push(format!("noise{}", rng.below(20)));
                }
                ex.push(TokenizedExample::original(t, k));
            }
        }
        Dataset::new(ex, (0..4).map(|k| format!("c{k}")).collect()).unwrap()
    }

    fn toy_data() -> TrainingData {
        let lex = SynonymLexicon::from_entries((0..4).map(|k| (format!("key{k}"), vec![format!("tag{k}")])));
        TrainingData::new(toy(5, 1), Some(toy(5, 2)), Some(toy(10, 3)), lex).unwrap()
    }

    fn small_config(kind: ScheduleKind) -> TrainConfig {
        TrainConfig {
            schedule: kind,
            budgets: Some(ScheduleBudgets {
                single_total: 60,
                two_stage: [20, 40],
                gradual_first: 10,
                gradual_per_stage: 10,
            }),
            tau: Temperature::new(0.3).unwrap(),
            encoder: EncoderSpec::Hashed { dim: 64, n_gram_max: 1 },
            batch_size: 16,
            hidden: 16,
            embed: 8,
            lr: 1e-2,
            eval_every: Some(7),
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let mut c = small_config(ScheduleKind::SingleNoAug);
        c.budgets = Some(ScheduleBudgets {
            single_total: 2000,
            ..c.budgets.unwrap()
        });
        c.eval_every = Some(100);
        let r = train(c, toy_data()).unwrap();
        assert_eq!(r.best_accuracy, 1.0);
        assert_eq!(r.history.len(), 21);
    }

    #[test]
    fn history_length_and_best() {
        let r = train(small_config(ScheduleKind::TwoStage), toy_data()).unwrap();
        assert_eq!(r.history.len(), 60 / 7 + 1);
        assert_eq!(r.total_updates, 60);
        let max = r.history.iter().map(|h| h.accuracy).fold(0.0, f64::max);
        assert_eq!(r.best_accuracy, max);
        assert!(r.history.windows(2).all(|w| w[0].update < w[1].update));
        assert!(r.test_accuracy.is_some());
    }

    #[test]
    fn two_stage_has_no_augmentation_before_boundary() {
        let mut t = Trainer::new(small_config(ScheduleKind::TwoStage), toy_data()).unwrap();
        while !t.is_done() {
            let s = t.step().unwrap();
            if s.update < 20 {
                assert_eq!(s.augmented_slots, 0);
                assert_eq!(s.stage_index, 0);
            } else {
                assert_eq!(s.augmented_slots, 16);
            }
        }
        assert!(t.step().is_err());
    }

    #[test]
    fn deterministic_and_resumable() {
        for kind in [ScheduleKind::Gradual, ScheduleKind::Control] {
            let mut c = small_config(kind);
            c.sampler = SamplerKind::HardNegative;
            let full = train(c.clone(), toy_data()).unwrap();
            assert_eq!(full, train(c.clone(), toy_data()).unwrap());

            let mut t = Trainer::new(c, toy_data()).unwrap();
            t.run_until(23).unwrap();
            let json = serde_json::to_string(&t.checkpoint()).unwrap();
            let ckpt: Checkpoint = serde_json::from_str(&json).unwrap();
            assert_eq!(ckpt, t.checkpoint());
            let resumed = Trainer::resume(ckpt, toy_data()).unwrap().run().unwrap();
            assert_eq!(resumed, full);
        }
    }

    #[test]
    fn cross_entropy_model_trains() {
        let mut c = small_config(ScheduleKind::SingleAug);
        c.model = ModelKind::CrossEntropy;
        c.lr = 0.05;
        let r = train(c, toy_data()).unwrap();
        assert!(r.best_accuracy > 0.5, "{}", r.best_accuracy);
        assert_eq!(r.mined_triplets, 0);
    }

    #[test]
    fn plateau_stages_end_early() {
        let mut c = small_config(ScheduleKind::Gradual);
        c.budgets = Some(ScheduleBudgets {
            gradual_first: 200,
            gradual_per_stage: 200,
            ..c.budgets.unwrap()
        });
        c.eval_every = Some(5);
        c.lr = 1e-9;
        c.plateau = Some(PlateauConfig {
            patience: 2,
            min_delta: 1e-3,
        });
        let r = train(c, toy_data()).unwrap();
        // tau = 0.3 gives four stages. Every stage sees flat losses and ends
        // at its third evaluation, the first of which it shares with the
        // previous stage.
        assert_eq!(r.total_updates, 4 * 10);
    }

    #[test]
    fn metrics_csv_format() {
        let rows = vec![MetricRow {
            update: 0,
            split: "val".into(),
            loss: 0.25,
            accuracy: 0.5,
        }];
        let mut out = Vec::new();
        write_metrics_csv(&rows, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "update,split,loss,accuracy\n0,val,0.25,0.5\n");
    }

    #[test]
    fn checkpoint_evaluates_standalone() {
        let mut t = Trainer::new(small_config(ScheduleKind::SingleNoAug), toy_data()).unwrap();
        t.run().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        t.checkpoint().save(&path).unwrap();
        let ckpt = Checkpoint::load(&path).unwrap();
        let test = toy(10, 3);
        let acc = ckpt.evaluate(&test).unwrap();
        assert_eq!(Some(acc), t.result().unwrap().test_accuracy);
    }
}
