use rayon::prelude::*;
use serde::Serialize;

use super::CliError;
use crate::cells::Arch;
use crate::tasks::TaskKind;
use crate::training::{train, TrainConfig, TrainError};

/// Seeds tried per task when none are given: five for repeat copying, whose
/// runs vary the most, three otherwise.
pub fn default_seeds(task: TaskKind) -> usize {
    match task {
        TaskKind::RepeatCopy => 5,
        _ => 3,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixOptions {
    /// Multiplies every preset episode budget.
    pub budget_scale: f64,
    /// Seeds per cell; `None` uses [`default_seeds`].
    pub seeds: Option<usize>,
    pub base_seed: u64,
    pub threads: Option<usize>,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        MatrixOptions {
            budget_scale: 1.0,
            seeds: None,
            base_seed: 0,
            threads: None,
        }
    }
}

/// Outcome of one architecture on one task.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixCell {
    pub arch: Arch,
    pub task: TaskKind,
    pub solved: bool,
    /// Best confirmation metric over the seeds tried.
    pub best: f64,
    /// Confirmation metric of each seed tried, in order; NaN marks divergence.
    pub metrics: Vec<f64>,
    /// Episodes used by the last seed tried.
    pub episodes: usize,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    arch: &'a str,
    task: &'a str,
    solved: bool,
    best: f64,
    seeds_tried: usize,
    seed_metrics: String,
    episodes: usize,
}

pub fn scaled_config(arch: Arch, task: TaskKind, scale: f64, seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig::preset(arch, task).with_seed(seed);
    cfg.budget = (cfg.budget as f64 * scale).round() as usize;
    cfg
}

/// Trains seeds one after another until one confirms success. Later seeds
/// are skipped once a seed succeeds, so the result does not depend on
/// scheduling.
pub fn run_cell(
    arch: Arch,
    task: TaskKind,
    opts: &MatrixOptions,
) -> Result<MatrixCell, TrainError> {
    let k = opts.seeds.unwrap_or_else(|| default_seeds(task)).max(1);
    let mut cell = MatrixCell {
        arch,
        task,
        solved: false,
        best: f64::NAN,
        metrics: Vec::new(),
        episodes: 0,
    };
    for i in 0..k as u64 {
        let cfg = scaled_config(arch, task, opts.budget_scale, opts.base_seed + i);
        let (metric, solved, episodes) = match train(&cfg) {
            Ok(out) => (out.metric, out.solved, out.episodes),
            Err(TrainError::Diverged { episode, .. }) => (f64::NAN, false, episode),
            Err(e) => return Err(e),
        };
        cell.metrics.push(metric);
        cell.episodes = episodes;
        let better = if task.higher_is_better() {
            metric > cell.best
        } else {
            metric < cell.best
        };
        if cell.best.is_nan() || better {
            cell.best = metric;
        }
        if solved {
            cell.solved = true;
            break;
        }
    }
    Ok(cell)
}

/// All sixteen architecture × task cells, rows in architecture order.
pub fn run_matrix(opts: &MatrixOptions) -> Result<Vec<MatrixCell>, CliError> {
    let jobs: Vec<(Arch, TaskKind)> = Arch::ALL
        .into_iter()
        .flat_map(|a| TaskKind::ALL.into_iter().map(move |t| (a, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(a, t)| run_cell(a, t, opts))
            .collect::<Result<Vec<_>, _>>()
    })
    .map_err(|e| CliError::Failed(e.to_string()))
}

pub fn matrix_csv(cells: &[MatrixCell]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in cells {
        let seed_metrics = c
            .metrics
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(";");
        w.serialize(CsvRow {
            arch: c.arch.name(),
            task: c.task.name(),
            solved: c.solved,
            best: c.best,
            seeds_tried: c.metrics.len(),
            seed_metrics,
            episodes: c.episodes,
        })
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn lookup(cells: &[MatrixCell], arch: Arch, task: TaskKind) -> Option<&MatrixCell> {
    cells.iter().find(|c| c.arch == arch && c.task == task)
}

/// True when no task is solved by an architecture while failed by one
/// further out in RNN ⊆ LSTM ⊆ stack ⊆ RAM.
pub fn is_monotone(cells: &[MatrixCell]) -> bool {
    TaskKind::ALL.into_iter().all(|t| {
        let solved: Vec<bool> = Arch::ALL
            .into_iter()
            .map(|a| lookup(cells, a, t).is_some_and(|c| c.solved))
            .collect();
        solved.windows(2).all(|w| !w[0] || w[1])
    })
}
