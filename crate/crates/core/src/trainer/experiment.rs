use std::collections::BTreeMap;
use std::io::Write;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{AugmentOpKind, Temperature};
use crate::curriculum::ScheduleKind;
use crate::error::{Error, Result};
use crate::mining::SamplerKind;

use super::config::{ModelKind, TrainConfig};
use super::data::DataConfig;
use super::train;

pub const REPORT_HEADER: &str =
    "cell_id,schedule,sampler,technique,tau,n_c,seed_count,mean_acc,std_acc,delta_vs_noaug";

/// The sampler column: a triplet sampler or the cross-entropy baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSampler {
    Random,
    HardNegative,
    Xent,
}

impl GridSampler {
    pub fn name(self) -> &'static str {
        match self {
            GridSampler::Random => "random",
            GridSampler::HardNegative => "hard_negative",
            GridSampler::Xent => "xent",
        }
    }
}

/// A grid of cells, each trained once per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    #[serde(default)]
    pub data: DataConfig,
    /// Settings shared by every cell.
    #[serde(default)]
    pub base: TrainConfig,
    pub schedules: Vec<ScheduleKind>,
    #[serde(default = "default_samplers")]
    pub samplers: Vec<GridSampler>,
    #[serde(default = "default_techniques")]
    pub techniques: Vec<AugmentOpKind>,
    /// Defaults to the base temperature.
    #[serde(default)]
    pub taus: Vec<Temperature>,
    /// Defaults to `data.n_c`.
    #[serde(default)]
    pub n_cs: Vec<usize>,
    pub seeds: usize,
    #[serde(default)]
    pub seed_offset: u64,
}

fn default_samplers() -> Vec<GridSampler> {
    vec![GridSampler::Random]
}

fn default_techniques() -> Vec<AugmentOpKind> {
    vec![AugmentOpKind::Eda]
}

/// One row of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub cell_id: usize,
    pub schedule: ScheduleKind,
    pub sampler: GridSampler,
    /// `None` for cells that never augment.
    pub technique: Option<AugmentOpKind>,
    pub tau: Option<Temperature>,
    pub n_c: usize,
    /// Best accuracy per seed, in seed order.
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub delta_vs_noaug: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    schedule: ScheduleKind,
    sampler: GridSampler,
    technique: Option<AugmentOpKind>,
    tau: Option<Temperature>,
    n_c: usize,
}

impl ExperimentGrid {
    fn cells(&self) -> Result<Vec<Cell>> {
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        let taus = if self.taus.is_empty() {
            vec![self.base.tau]
        } else {
            self.taus.clone()
        };
        let n_cs = if self.n_cs.is_empty() {
            vec![self
                .data
                .n_c
                .ok_or_else(|| Error::Config("set n_cs or data.n_c".into()))?]
        } else {
            self.n_cs.clone()
        };
        let mut cells = Vec::new();
        for &n_c in &n_cs {
            for &sampler in &self.samplers {
                for &schedule in &self.schedules {
                    if sampler == GridSampler::Xent
                        && !matches!(schedule, ScheduleKind::SingleNoAug | ScheduleKind::SingleAug)
                    {
                        continue;
                    }
                    if schedule == ScheduleKind::SingleNoAug {
                        cells.push(Cell {
                            schedule,
                            sampler,
                            technique: None,
                            tau: None,
                            n_c,
                        });
                        continue;
                    }
                    for &technique in &self.techniques {
                        for &tau in &taus {
                            cells.push(Cell {
                                schedule,
                                sampler,
                                technique: Some(technique),
                                tau: Some(tau),
                                n_c,
                            });
                        }
                    }
                }
            }
        }
        Ok(cells)
    }

    fn config_for(&self, cell: &Cell, seed: u64) -> TrainConfig {
        let mut c = self.base.clone();
        c.schedule = cell.schedule;
        match cell.sampler {
            GridSampler::Random => c.sampler = SamplerKind::Random,
            GridSampler::HardNegative => c.sampler = SamplerKind::HardNegative,
            GridSampler::Xent => c.model = ModelKind::CrossEntropy,
        }
        if let Some(t) = cell.technique {
            c.technique = t;
        }
        if let Some(t) = cell.tau {
            c.tau = t;
        }
        c.seed = seed;
        c
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Trains every cell on every seed (in parallel) and summarizes each cell
/// by the mean and sample standard deviation of its best accuracies. A
/// failing run marks its cell as failed without stopping the others.
pub fn run_experiment(grid: &ExperimentGrid) -> Result<Vec<CellReport>> {
    let cells = grid.cells()?;
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..grid.seeds as u64).map(move |s| (c, s)))
        .collect();
    info!("experiment: {} cells x {} seeds", cells.len(), grid.seeds);
    let outcomes: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let cell = &cells[c];
            let seed = grid.seed_offset + s;
            let mut data_cfg = grid.data.clone();
            data_cfg.n_c = Some(cell.n_c);
            let config = grid.config_for(cell, seed);
            let data = data_cfg.prepare(seed, !config.validate_on_test)?;
            train(config, data).map(|r| r.best_accuracy)
        })
        .collect();

    let mut per_cell: Vec<(Vec<f64>, Option<String>)> = vec![(Vec::new(), None); cells.len()];
    for (&(c, s), out) in jobs.iter().zip(outcomes) {
        match out {
            Ok(acc) => per_cell[c].0.push(acc),
            Err(e) => {
                warn!("cell {c} seed {s} failed: {e}");
                per_cell[c].1.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let mut reports: Vec<CellReport> = cells
        .iter()
        .zip(per_cell)
        .enumerate()
        .map(|(i, (cell, (accuracies, error)))| {
            let (mean, std) = if error.is_some() {
                (f64::NAN, f64::NAN)
            } else {
                mean_std(&accuracies)
            };
            CellReport {
                cell_id: i,
                schedule: cell.schedule,
                sampler: cell.sampler,
                technique: cell.technique,
                tau: cell.tau,
                n_c: cell.n_c,
                accuracies,
                mean,
                std,
                delta_vs_noaug: None,
                error,
            }
        })
        .collect();
    let baselines: BTreeMap<(GridSampler, usize), f64> = reports
        .iter()
        .filter(|r| r.schedule == ScheduleKind::SingleNoAug && r.error.is_none())
        .map(|r| ((r.sampler, r.n_c), r.mean))
        .collect();
    for r in reports.iter_mut().filter(|r| r.schedule != ScheduleKind::SingleNoAug) {
        r.delta_vs_noaug = baselines.get(&(r.sampler, r.n_c)).map(|b| r.mean - b);
    }
    Ok(reports)
}

/// Writes the report as CSV. Accuracies are fractions in `[0, 1]`.
pub fn write_report<W: Write>(reports: &[CellReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in reports {
        let delta = r.delta_vs_noaug.map(|d| format!("{d:.6}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.6},{:.6},{}",
            r.cell_id,
            r.schedule,
            r.sampler.name(),
            r.technique.map_or("none", |t| t.name()),
            r.tau.map_or(0.0, |t| t.value()),
            r.n_c,
            r.accuracies.len(),
            r.mean,
            r.std,
            delta
        )?;
    }
    Ok(())
}
