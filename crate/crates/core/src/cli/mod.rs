//! Command-line entry points: training, evaluation, traces, gradient checks,
//! reduction verification and the capability matrix.
//!
//! Exit codes: 0 success, 1 check failed, 2 training budget exhausted,
//! 3 training diverged, 64 bad flags, 65 bad input data, 74 I/O failure.

pub mod matrix;
pub mod model;
pub mod trace;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use thiserror::Error;

use crate::cells::{Arch, InitMode};
use crate::reductions::{verify_equivalence, ReductionPair};
use crate::tasks::TaskKind;
use crate::training::GRAD_CHECK_TOLERANCE;
use crate::training::{
    curve_csv, evaluate, grad_check_cell, grad_check_configs, train, TrainConfig, TrainError,
};
use matrix::{is_monotone, matrix_csv, run_matrix, MatrixOptions};
use model::ModelFile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_IO: i32 = 74;

/// Environment variable capping matrix worker threads.
pub const THREADS_ENV: &str = "MEMTAX_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Diverged(TrainError),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Io { .. } => EXIT_IO,
            CliError::Diverged(_) => EXIT_DIVERGED,
            CliError::Failed(_) => EXIT_CHECK_FAILED,
        }
    }
}

/// Writes `contents` to `path.tmp`, then renames it over `path`.
pub fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

#[derive(Parser, Debug)]
#[command(
    name = "memtax",
    version,
    about = "Train and inspect RNN, LSTM, neural stack and neural RAM cells"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train one architecture on one task.
    Train(TrainArgs),
    /// Score a saved model on fresh episodes.
    Eval(EvalArgs),
    /// Dump every internal quantity of a saved model on one input.
    Trace(TraceArgs),
    /// Check that constrained outer cells reproduce inner cells.
    ReduceVerify(ReduceArgs),
    /// Compare backward gradients with central differences.
    GradCheck(GradCheckArgs),
    /// Train every architecture on every task.
    Matrix(MatrixArgs),
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub arch: Arch,
    #[arg(long)]
    pub task: TaskKind,
    /// JSON object, or a path to one, merged over the preset.
    #[arg(long)]
    pub config: Option<String>,
    #[arg(long)]
    pub out_model: Option<PathBuf>,
    #[arg(long)]
    pub out_curve: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Raw standard normal weights instead of fan-in scaling.
    #[arg(long)]
    pub paper_init: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Symbols in task notation, e.g. `bbacacbabababcc` or `abacdeD------`.
    #[arg(long, allow_hyphen_values = true)]
    pub input: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Accepted for uniformity; traces are deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[arg(long)]
    pub pair: ReductionPair,
    #[arg(long, default_value_t = 20)]
    pub len: usize,
    /// Number of seeds, counted up from `--seed`.
    #[arg(long, default_value_t = 50)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GradCheckArgs {
    #[arg(long)]
    pub arch: Arch,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct MatrixArgs {
    #[arg(long, default_value_t = 1.0)]
    pub budget_scale: f64,
    /// Seeds per cell; defaults to 3, or 5 for repeat copying.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Trace(a) => cmd_trace(&a),
        Command::ReduceVerify(a) => cmd_reduce_verify(&a),
        Command::GradCheck(a) => cmd_grad_check(&a),
        Command::Matrix(a) => cmd_matrix(&a),
    }
}

/// Overlays `patch` on `base`. Objects merge key by key; anything else
/// replaces. A patch object naming a different enum variant through its
/// tag replaces the base value whole.
fn merge(base: &mut Value, patch: Value, path: &str) -> Result<(), CliError> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            let switches_variant = ["arch", "kind", "mode"]
                .iter()
                .any(|tag| matches!((b.get(*tag), p.get(*tag)), (Some(x), Some(y)) if x != y));
            if switches_variant {
                *b = p;
                return Ok(());
            }
            for (k, v) in p {
                let child = format!("{path}.{k}");
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &child)?,
                    None => {
                        return Err(CliError::Usage(format!(
                            "unknown config key `{}`",
                            &child[1..]
                        )))
                    }
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}

/// Preset for `(arch, task)` with the `--config` overlay applied.
pub fn resolve_config(
    arch: Arch,
    task: TaskKind,
    overlay: Option<&str>,
) -> Result<TrainConfig, CliError> {
    let preset = TrainConfig::preset(arch, task);
    let Some(text) = overlay else {
        return Ok(preset);
    };
    let text = if text.trim_start().starts_with(['{', '[']) {
        text.to_string()
    } else {
        let path = Path::new(text);
        std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?
    };
    let patch: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("--config is not JSON: {e}")))?;
    if !patch.is_object() {
        return Err(CliError::Usage("--config must be a JSON object".into()));
    }
    let mut base = serde_json::to_value(&preset).expect("presets serialize");
    merge(&mut base, patch, "")?;
    let cfg: TrainConfig = serde_json::from_value(base)
        .map_err(|e| CliError::Usage(format!("invalid --config: {e}")))?;
    if cfg.cell.arch() != arch || cfg.task.kind != task {
        return Err(CliError::Usage(
            "--config may not change the architecture or task".into(),
        ));
    }
    Ok(cfg)
}

fn cmd_train(a: &TrainArgs) -> Result<i32, CliError> {
    let mut cfg = resolve_config(a.arch, a.task, a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if a.paper_init {
        cfg.init = InitMode::Paper;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let outcome = match train(&cfg) {
        Ok(o) => o,
        Err(e @ TrainError::Diverged { .. }) => return Err(CliError::Diverged(e)),
        Err(e) => return Err(CliError::Failed(e.to_string())),
    };
    if let Some(path) = &a.out_curve {
        atomic_write(path, &curve_csv(&outcome.curve))?;
    }
    if let Some(path) = &a.out_model {
        ModelFile::from_outcome(&cfg, &outcome).save(path)?;
    }
    println!(
        "{} on {}: {} after {} episodes, metric {}",
        a.arch,
        a.task,
        if outcome.solved {
            "solved"
        } else {
            "not solved"
        },
        outcome.episodes,
        outcome.metric
    );
    Ok(if outcome.solved { EXIT_OK } else { EXIT_BUDGET })
}

fn cmd_eval(a: &EvalArgs) -> Result<i32, CliError> {
    if a.episodes == 0 {
        return Err(CliError::Usage("--episodes must be at least 1".into()));
    }
    let m = ModelFile::load(&a.model)?;
    let net = m.network()?;
    let spec = m
        .training
        .as_ref()
        .map(|t| t.config.task)
        .unwrap_or_else(|| crate::tasks::TaskSpec::new(m.task));
    let metric =
        evaluate(&net, &spec, a.episodes, a.seed).map_err(|e| CliError::Failed(e.to_string()))?;
    let solved = m.task.succeeded(metric, m.task.default_threshold());
    println!(
        "{}",
        serde_json::json!({ "task": m.task, "episodes": a.episodes, "metric": metric, "solved": solved })
    );
    Ok(EXIT_OK)
}

fn cmd_trace(a: &TraceArgs) -> Result<i32, CliError> {
    let m = ModelFile::load(&a.model)?;
    let rows = trace::trace_text(&m.network()?, m.task, &a.input)?;
    let csv = trace::trace_csv(&rows);
    match &a.out {
        Some(path) => atomic_write(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}

fn cmd_reduce_verify(a: &ReduceArgs) -> Result<i32, CliError> {
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..a.seeds).map(|i| a.seed + i).collect();
    let report =
        verify_equivalence(a.pair, a.len, &seeds).map_err(|e| CliError::Failed(e.to_string()))?;
    let mut json = serde_json::to_string_pretty(&report).expect("reports serialize");
    json.push('\n');
    match &a.out {
        Some(path) => atomic_write(path, &json)?,
        None => print!("{json}"),
    }
    eprintln!(
        "{}: max deviation {:e} over {} seeds",
        a.pair,
        report.max_deviation,
        seeds.len()
    );
    Ok(if report.equivalent {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn cmd_grad_check(a: &GradCheckArgs) -> Result<i32, CliError> {
    let mut worst: f64 = 0.0;
    for cfg in grad_check_configs(a.arch) {
        let err = grad_check_cell(&cfg, a.seed, a.trials as usize)
            .map_err(|e| CliError::Failed(e.to_string()))?;
        let label = match cfg.cell {
            crate::cells::ArchConfig::Ram(rc) => {
                format!("{} ({})", a.arch, addressing_name(rc.addressing))
            }
            _ => a.arch.to_string(),
        };
        println!("{label}: max relative error {err:e}");
        worst = if err.is_nan() {
            f64::INFINITY
        } else {
            worst.max(err)
        };
    }
    Ok(if worst < GRAD_CHECK_TOLERANCE {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn addressing_name(mode: crate::cells::AddressingMode) -> &'static str {
    match mode {
        crate::cells::AddressingMode::Direct => "direct",
        crate::cells::AddressingMode::ContentLocation { .. } => "content-location",
    }
}

/// Worker cap from [`THREADS_ENV`]; unset means one per core.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn cmd_matrix(a: &MatrixArgs) -> Result<i32, CliError> {
    if !(a.budget_scale >= 0.0 && a.budget_scale.is_finite()) {
        return Err(CliError::Usage(
            "--budget-scale must be a finite non-negative number".into(),
        ));
    }
    if a.seeds == Some(0) {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let opts = MatrixOptions {
        budget_scale: a.budget_scale,
        seeds: a.seeds,
        base_seed: a.seed,
        threads: threads_from_env()?,
    };
    let cells = run_matrix(&opts)?;
    let csv = matrix_csv(&cells);
    match &a.out {
        Some(path) => atomic_write(path, &csv)?,
        None => print!("{csv}"),
    }
    eprintln!(
        "monotone along RNN ⊆ LSTM ⊆ stack ⊆ RAM: {}",
        is_monotone(&cells)
    );
    Ok(EXIT_OK)
}
