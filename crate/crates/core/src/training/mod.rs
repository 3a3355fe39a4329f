//! Full-unroll BPTT training, evaluation and gradient checking.

mod gradcheck;
mod optim;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::{
    Activation, AddressingMode, Arch, ArchConfig, CellConfig, CellError, Dims, InitMode, Network,
    Step,
};
use crate::numcore::{NumError, Tape, Tensor};
use crate::tasks::{episode_loss, episode_loss_on_tape, Episode, TaskError, TaskKind, TaskSpec};

pub use gradcheck::{grad_check_cell, grad_check_configs, GRAD_CHECK_TOLERANCE};
pub use optim::{clip_gradients, Optimizer, OptimizerKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("training diverged at episode {episode}: loss {loss}")]
    Diverged { episode: usize, loss: f64 },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub cell: CellConfig,
    pub task: TaskSpec,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    /// Global gradient-norm threshold.
    pub clip: f64,
    /// Maximum number of training episodes.
    pub budget: usize,
    pub eval_every: usize,
    /// Episodes per periodic evaluation.
    pub eval_episodes: usize,
    /// Episodes used to confirm success before stopping early.
    pub confirm_episodes: usize,
    pub threshold: f64,
    pub seed: u64,
    pub init: InitMode,
}

impl TrainConfig {
    /// Settings used for each architecture on each task.
    pub fn preset(arch: Arch, task: TaskKind) -> TrainConfig {
        let io = task.input_dim();
        let (dims, hidden_act, budget, eval_every, lr) = match task {
            TaskKind::Count => (
                Dims::new(io, 3, io, 3, 3),
                Activation::Tanh,
                5_000,
                100,
                1e-2,
            ),
            TaskKind::CountInterf => (
                Dims::new(io, 3, io, 3, 3),
                Activation::Tanh,
                20_000,
                250,
                1e-2,
            ),
            TaskKind::Reverse => (
                Dims::new(io, 64, io, 16, 16),
                Activation::Tanh,
                50_000,
                500,
                1e-3,
            ),
            TaskKind::RepeatCopy => (
                Dims::new(io, 64, io, 16, 16),
                Activation::Tanh,
                100_000,
                1_000,
                1e-3,
            ),
        };
        let hidden_act = match (arch, task) {
            (Arch::Rnn, TaskKind::Count | TaskKind::CountInterf) => Activation::Relu,
            (Arch::Rnn, TaskKind::Reverse | TaskKind::RepeatCopy) => Activation::Sigmoid,
            _ => hidden_act,
        };
        let mut cell = CellConfig::new(arch, dims)
            .with_hidden_act(hidden_act)
            .with_output_act(Activation::Identity);
        if let (ArchConfig::Ram(rc), TaskKind::RepeatCopy) = (&mut cell.cell, task) {
            rc.addressing = AddressingMode::ContentLocation {
                sharpness: 10.0,
                max_shift: 1,
            };
        }
        TrainConfig {
            cell,
            task: TaskSpec::new(task),
            optimizer: OptimizerKind::Adam,
            learning_rate: lr,
            clip: 10.0,
            budget,
            eval_every,
            eval_episodes: 50,
            confirm_episodes: 200,
            threshold: task.default_threshold(),
            seed: 0,
            init: InitMode::Scaled,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if !(self.clip > 0.0) {
            return bad("clip threshold must be positive");
        }
        if self.eval_every == 0 || self.eval_episodes == 0 || self.confirm_episodes == 0 {
            return bad("evaluation sizes must be positive");
        }
        if !(self.threshold > 0.0) {
            return bad("success threshold must be positive");
        }
        let d = self.cell.dims;
        if d.input != self.task.kind.input_dim() || d.output != self.task.kind.output_dim() {
            return bad("cell input/output sizes do not match the task");
        }
        self.task.validate()?;
        self.cell.validate()?;
        Ok(())
    }

    /// Seed of the training episode stream, independent of the init seed.
    fn train_stream(&self) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x7261_696E
    }

    /// Seed of the `k`-th evaluation batch.
    fn eval_stream(&self, k: usize) -> u64 {
        self.seed.wrapping_mul(0xBF58_476D_1CE4_E5B9)
            ^ (k as u64 + 1).wrapping_mul(0x94D0_49BB_1331_11EB)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    /// Mean training loss since the previous point.
    pub loss: f64,
    /// Success metric on fresh episodes.
    pub success: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub network: Network,
    pub curve: Vec<CurvePoint>,
    /// Metric on the final confirmation batch.
    pub metric: f64,
    pub solved: bool,
    pub episodes: usize,
}

/// Forward pass of one episode on a fresh tape.
pub fn run_episode(net: &Network, inputs: &[Tensor]) -> Result<(Tape, Vec<Step>), TrainError> {
    let mut tape = Tape::new();
    let p = net.bind(&mut tape);
    let xs: Vec<_> = inputs.iter().map(|x| tape.leaf(x.clone())).collect();
    let steps = net.unroll(&mut tape, &p, &xs)?;
    Ok((tape, steps))
}

/// Loss and parameter gradients (in parameter name order) of one episode.
pub fn episode_gradients(net: &Network, ep: &Episode) -> Result<(f64, Vec<Tensor>), TrainError> {
    let mut tape = Tape::new();
    let p = net.bind(&mut tape);
    let xs: Vec<_> = ep.inputs.iter().map(|x| tape.leaf(x.clone())).collect();
    let steps = net.unroll(&mut tape, &p, &xs)?;
    let outputs: Vec<_> = steps.iter().map(|s| s.output).collect();
    let loss = episode_loss_on_tape(&mut tape, &outputs, ep)?;
    let grads = tape.backward(loss)?;
    let value = tape.value(loss).item();
    Ok((value, p.iter().map(|(_, &v)| grads.get(v)).collect()))
}

/// Success metric pooled over every masked step of `n` fresh episodes drawn
/// with `seed`, so long episodes weigh more than short ones.
pub fn evaluate(net: &Network, task: &TaskSpec, n: usize, seed: u64) -> Result<f64, TrainError> {
    assert!(n >= 1, "evaluation needs at least one episode");
    let episodes = task.with_seed(seed).episodes(n)?;
    let (mut total, mut steps) = (0.0, 0usize);
    for ep in &episodes {
        let (tape, out) = run_episode(net, &ep.inputs)?;
        let preds: Vec<Tensor> = out.iter().map(|s| tape.value(s.output).clone()).collect();
        let score = episode_loss(&preds, ep)?;
        total += score.metric * score.steps as f64;
        steps += score.steps;
    }
    Ok(total / steps as f64)
}

/// Trains until the success threshold is confirmed or the budget runs out.
pub fn train(config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    let kind = config.task.kind;
    let mut net = Network::init(config.cell, config.init, config.seed)?;
    let mut opt = Optimizer::new(config.optimizer, config.learning_rate, &net.params);
    let stream = config.task.with_seed(config.train_stream());
    let mut rng = ChaCha8Rng::seed_from_u64(stream.seed);
    let mut curve = Vec::new();
    let (mut window, mut window_n) = (0.0, 0usize);
    let mut evals = 0;
    for episode in 1..=config.budget {
        let ep = stream.sample(&mut rng)?;
        let (loss, mut grads) = episode_gradients(&net, &ep)?;
        if !loss.is_finite() || !grads.iter().all(Tensor::all_finite) {
            return Err(TrainError::Diverged { episode, loss });
        }
        clip_gradients(&mut grads, config.clip);
        opt.step(&mut net.params, &grads);
        window += loss;
        window_n += 1;
        if episode % config.eval_every == 0 || episode == config.budget {
            let success = evaluate(
                &net,
                &config.task,
                config.eval_episodes,
                config.eval_stream(evals),
            )?;
            evals += 1;
            curve.push(CurvePoint {
                episode,
                loss: window / window_n as f64,
                success,
            });
            (window, window_n) = (0.0, 0);
            if kind.succeeded(success, config.threshold) {
                let confirm = evaluate(
                    &net,
                    &config.task,
                    config.confirm_episodes,
                    config.eval_stream(evals),
                )?;
                evals += 1;
                if kind.succeeded(confirm, config.threshold) {
                    return Ok(TrainOutcome {
                        network: net,
                        curve,
                        metric: confirm,
                        solved: true,
                        episodes: episode,
                    });
                }
            }
        }
    }
    let metric = evaluate(
        &net,
        &config.task,
        config.confirm_episodes,
        config.eval_stream(evals),
    )?;
    let solved = kind.succeeded(metric, config.threshold);
    Ok(TrainOutcome {
        network: net,
        curve,
        metric,
        solved,
        episodes: config.budget,
    })
}

/// Curve in CSV form with header `episode,loss,success`.
pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("episode,loss,success\n");
    for p in curve {
        out.push_str(&format!("{},{},{}\n", p.episode, p.loss, p.success));
    }
    out
}
