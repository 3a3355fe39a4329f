//! The four synthetic sequence tasks: counting, counting with interference,
//! reversing and repeat copying.

mod loss;
mod symbols;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numcore::{NumError, Tensor};

pub use loss::{episode_loss, episode_loss_on_tape, Score};
pub use symbols::{parse_symbols, render_symbols, Symbol};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("unknown symbol `{symbol}` at position {position}")]
    UnknownSymbol { symbol: String, position: usize },
    #[error("symbol `{symbol}` is not used by the {task} task")]
    SymbolNotInAlphabet { symbol: String, task: TaskKind },
    #[error("repeat count {n} outside [{min}, {max}]")]
    RepeatOutOfRange { n: u32, min: u32, max: u32 },
    #[error("malformed {task} episode: {reason}")]
    Malformed { task: TaskKind, reason: String },
    #[error("episode has no masked steps")]
    EmptyMask,
    #[error("{found} predictions for {expected} steps")]
    Misaligned { expected: usize, found: usize },
    #[error("invalid task spec: {0}")]
    InvalidSpec(String),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Count,
    CountInterf,
    Reverse,
    RepeatCopy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    SquaredError,
    CrossEntropy,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::Count,
        TaskKind::CountInterf,
        TaskKind::Reverse,
        TaskKind::RepeatCopy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Count => "count",
            TaskKind::CountInterf => "count-interf",
            TaskKind::Reverse => "reverse",
            TaskKind::RepeatCopy => "repeat-copy",
        }
    }

    pub fn loss_kind(self) -> LossKind {
        match self {
            TaskKind::Count | TaskKind::CountInterf => LossKind::SquaredError,
            TaskKind::Reverse | TaskKind::RepeatCopy => LossKind::CrossEntropy,
        }
    }

    /// Input channels: `[a, b, c]`, `[a..e, D]` or `[a..e, D, E]`.
    pub fn input_dim(self) -> usize {
        match self {
            TaskKind::Count | TaskKind::CountInterf => 3,
            TaskKind::Reverse => 6,
            TaskKind::RepeatCopy => 7,
        }
    }

    pub fn output_dim(self) -> usize {
        self.input_dim()
    }

    /// Success metric is an error (lower is better) for counting and an
    /// accuracy for the classification tasks.
    pub fn higher_is_better(self) -> bool {
        self.loss_kind() == LossKind::CrossEntropy
    }

    pub fn default_threshold(self) -> f64 {
        if self.higher_is_better() {
            0.95
        } else {
            0.1
        }
    }

    pub fn succeeded(self, metric: f64, threshold: f64) -> bool {
        if self.higher_is_better() {
            metric > threshold
        } else {
            metric < threshold
        }
    }

    /// Channel of `sym` in this task's one-hot encoding.
    pub fn channel(self, sym: Symbol) -> Result<Option<usize>, TaskError> {
        let reject = || TaskError::SymbolNotInAlphabet {
            symbol: sym.to_string(),
            task: self,
        };
        match (self, sym) {
            (_, Symbol::DontCare) => Ok(None),
            (TaskKind::Count | TaskKind::CountInterf, Symbol::Letter(i)) if i < 3 => {
                Ok(Some(i as usize))
            }
            (TaskKind::Reverse | TaskKind::RepeatCopy, Symbol::Letter(i)) if i < 5 => {
                Ok(Some(i as usize))
            }
            (TaskKind::Reverse, Symbol::Delim(1)) => Ok(Some(5)),
            (TaskKind::RepeatCopy, Symbol::Delim(_)) => Ok(Some(5)),
            (TaskKind::RepeatCopy, Symbol::Marker) => Ok(Some(6)),
            _ => Err(reject()),
        }
    }

    /// Symbol rendered for an output class.
    pub fn class_symbol(self, class: usize) -> Symbol {
        match class {
            0..=4 => Symbol::Letter(class as u8),
            5 => Symbol::Delim(1),
            _ => Symbol::Marker,
        }
    }

    /// Input vector of one symbol; `D<n>` has on-value `n`.
    pub fn encode(self, sym: Symbol) -> Result<Tensor, TaskError> {
        let mut v = Tensor::zeros(self.input_dim(), 1);
        if let Some(ch) = self.channel(sym)? {
            let on = match sym {
                Symbol::Delim(n) => n as f64,
                _ => 1.0,
            };
            v.set(ch, 0, on);
        }
        Ok(v)
    }

    pub fn encode_all(self, symbols: &[Symbol]) -> Result<Vec<Tensor>, TaskError> {
        symbols.iter().map(|&s| self.encode(s)).collect()
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| TaskError::UnknownTask(s.to_string()))
    }
}

/// One training or evaluation sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub task: TaskKind,
    pub symbols: Vec<Symbol>,
    pub inputs: Vec<Tensor>,
    pub targets: Vec<Tensor>,
    /// Steps that count towards the loss.
    pub mask: Vec<bool>,
    pub loss_kind: LossKind,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Counting with a running count of `a` in channel 0; `b` and `c`
    /// steps also echo their own one-hot.
    pub fn count(body: &[Symbol]) -> Result<Episode, TaskError> {
        Episode::counting(TaskKind::Count, body)
    }

    /// Like [`Episode::count`], but the count is shown only on `a` steps.
    pub fn count_interf(body: &[Symbol]) -> Result<Episode, TaskError> {
        Episode::counting(TaskKind::CountInterf, body)
    }

    fn counting(task: TaskKind, body: &[Symbol]) -> Result<Episode, TaskError> {
        let inputs = task.encode_all(body)?;
        let mut n = 0.0;
        let mut targets = Vec::with_capacity(body.len());
        for (sym, x) in body.iter().zip(&inputs) {
            let is_a = *sym == Symbol::Letter(0);
            if is_a {
                n += 1.0;
            }
            let mut y = Tensor::zeros(3, 1);
            match task {
                TaskKind::Count => {
                    y.set(0, 0, n);
                    y.set(1, 0, x.get(1, 0));
                    y.set(2, 0, x.get(2, 0));
                }
                _ if is_a => y.set(0, 0, n),
                _ => y = x.clone(),
            }
            targets.push(y);
        }
        Ok(Episode {
            task,
            symbols: body.to_vec(),
            inputs,
            mask: vec![true; body.len()],
            targets,
            loss_kind: LossKind::SquaredError,
        })
    }

    /// `body D` followed by `len(body)` don't-care steps whose targets are
    /// the body reversed.
    pub fn reverse(body: &[Symbol]) -> Result<Episode, TaskError> {
        let task = TaskKind::Reverse;
        let letters = letters_only(task, body)?;
        let l = body.len();
        let mut symbols = body.to_vec();
        symbols.push(Symbol::Delim(1));
        symbols.extend(std::iter::repeat_n(Symbol::DontCare, l));
        let outputs: Vec<usize> = letters.iter().rev().copied().collect();
        classification(task, symbols, l + 1, &outputs)
    }

    /// `E body D<n>` followed by `n·len(body) + 1` don't-care steps whose
    /// targets are the body repeated `n` times, then `E`.
    pub fn repeat_copy(body: &[Symbol], n: u32) -> Result<Episode, TaskError> {
        let task = TaskKind::RepeatCopy;
        if n == 0 {
            return Err(TaskError::Malformed {
                task,
                reason: "repeat count must be positive".into(),
            });
        }
        let letters = letters_only(task, body)?;
        let mut symbols = vec![Symbol::Marker];
        symbols.extend_from_slice(body);
        symbols.push(Symbol::Delim(n));
        let mut outputs: Vec<usize> = (0..n).flat_map(|_| letters.iter().copied()).collect();
        outputs.push(6);
        symbols.extend(std::iter::repeat_n(Symbol::DontCare, outputs.len()));
        classification(task, symbols, body.len() + 2, &outputs)
    }

    /// Builds an episode from the symbol notation, e.g. `aabbaca`,
    /// `abacdeD` or `EadbcD3`. Trailing don't-care steps may be written out
    /// or omitted.
    pub fn from_text(task: TaskKind, text: &str) -> Result<Episode, TaskError> {
        let syms = parse_symbols(text)?;
        let malformed = |reason: &str| TaskError::Malformed {
            task,
            reason: reason.to_string(),
        };
        match task {
            TaskKind::Count => Episode::count(&syms),
            TaskKind::CountInterf => Episode::count_interf(&syms),
            TaskKind::Reverse => {
                let d = syms
                    .iter()
                    .position(|s| *s == Symbol::Delim(1))
                    .ok_or_else(|| malformed("missing D"))?;
                check_tail(&syms[d + 1..], d, malformed)?;
                Episode::reverse(&syms[..d])
            }
            TaskKind::RepeatCopy => {
                if syms.first() != Some(&Symbol::Marker) {
                    return Err(malformed("must start with E"));
                }
                let d = syms
                    .iter()
                    .position(|s| matches!(s, Symbol::Delim(_)))
                    .ok_or_else(|| malformed("missing D"))?;
                let Symbol::Delim(n) = syms[d] else {
                    unreachable!()
                };
                let expected = n as usize * (d - 1) + 1;
                check_tail(&syms[d + 1..], expected, malformed)?;
                Episode::repeat_copy(&syms[1..d], n)
            }
        }
    }

    /// Targets in symbol notation: `-` on unmasked steps, the target class
    /// for classification tasks, and the count vector for counting tasks.
    pub fn render_targets(&self) -> String {
        match self.loss_kind {
            LossKind::CrossEntropy => self
                .targets
                .iter()
                .zip(&self.mask)
                .map(|(y, &m)| {
                    if m {
                        self.task.class_symbol(y.argmax()).to_string()
                    } else {
                        "-".into()
                    }
                })
                .collect(),
            LossKind::SquaredError => self
                .targets
                .iter()
                .map(|y| format_vector(y.data()))
                .collect::<Vec<_>>()
                .join(" "),
        }
    }

    /// Running count of the counting tasks, read from target channel 0.
    pub fn counts(&self) -> Vec<f64> {
        self.targets.iter().map(|y| y.get(0, 0)).collect()
    }
}

fn format_vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(" "))
}

fn letters_only(task: TaskKind, body: &[Symbol]) -> Result<Vec<usize>, TaskError> {
    body.iter()
        .map(|&s| match s {
            Symbol::Letter(i) if i < 5 => Ok(i as usize),
            other => Err(TaskError::SymbolNotInAlphabet {
                symbol: other.to_string(),
                task,
            }),
        })
        .collect()
}

fn check_tail(
    tail: &[Symbol],
    expected: usize,
    malformed: impl Fn(&str) -> TaskError,
) -> Result<(), TaskError> {
    if tail.iter().any(|s| *s != Symbol::DontCare) {
        return Err(malformed("only - may follow D"));
    }
    if !tail.is_empty() && tail.len() != expected {
        return Err(malformed(&format!(
            "expected {expected} trailing steps, found {}",
            tail.len()
        )));
    }
    Ok(())
}

/// Classification episode whose targets start at step `start`.
fn classification(
    task: TaskKind,
    symbols: Vec<Symbol>,
    start: usize,
    outputs: &[usize],
) -> Result<Episode, TaskError> {
    let inputs = task.encode_all(&symbols)?;
    let k = task.output_dim();
    let mut targets = vec![Tensor::zeros(k, 1); symbols.len()];
    let mut mask = vec![false; symbols.len()];
    for (j, &class) in outputs.iter().enumerate() {
        targets[start + j].set(class, 0, 1.0);
        mask[start + j] = true;
    }
    Ok(Episode {
        task,
        symbols,
        inputs,
        targets,
        mask,
        loss_kind: LossKind::CrossEntropy,
    })
}

/// Distribution of generated episodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    /// Letters drawn from the first `alphabet` of `a..e`.
    pub alphabet: usize,
    /// Body length is uniform in `[1, max_len]`.
    pub max_len: usize,
    pub min_repeat: u32,
    pub max_repeat: u32,
    pub seed: u64,
}

impl TaskSpec {
    /// Counting bodies up to 20 symbols; reversal bodies up to 9, so the
    /// whole sequence stays within 20 steps; repeat copying with bodies up
    /// to 5 repeated 1 to 4 times.
    pub fn new(kind: TaskKind) -> Self {
        let (alphabet, max_len) = match kind {
            TaskKind::Count | TaskKind::CountInterf => (3, 20),
            TaskKind::Reverse => (5, 9),
            TaskKind::RepeatCopy => (5, 5),
        };
        TaskSpec {
            kind,
            alphabet,
            max_len,
            min_repeat: 1,
            max_repeat: 4,
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        TaskSpec { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        let cap = if matches!(self.kind, TaskKind::Count | TaskKind::CountInterf) {
            3
        } else {
            5
        };
        if self.alphabet == 0 || self.alphabet > cap {
            return Err(TaskError::InvalidSpec(format!(
                "alphabet must be in [1, {cap}]"
            )));
        }
        if self.max_len == 0 {
            return Err(TaskError::InvalidSpec("max_len must be at least 1".into()));
        }
        if self.kind == TaskKind::RepeatCopy
            && (self.min_repeat == 0 || self.min_repeat > self.max_repeat)
        {
            return Err(TaskError::InvalidSpec(
                "repeat range must satisfy 1 <= min <= max".into(),
            ));
        }
        Ok(())
    }

    /// Draws one episode.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Episode, TaskError> {
        self.validate()?;
        let len = rng.gen_range(1..=self.max_len);
        let body: Vec<Symbol> = (0..len)
            .map(|_| Symbol::Letter(rng.gen_range(0..self.alphabet) as u8))
            .collect();
        match self.kind {
            TaskKind::Count => Episode::count(&body),
            TaskKind::CountInterf => Episode::count_interf(&body),
            TaskKind::Reverse => Episode::reverse(&body),
            TaskKind::RepeatCopy => {
                let n = rng.gen_range(self.min_repeat..=self.max_repeat);
                self.repeat_copy(&body, n)
            }
        }
    }

    /// Repeat copying with the repeat count checked against this spec.
    pub fn repeat_copy(&self, body: &[Symbol], n: u32) -> Result<Episode, TaskError> {
        if n < self.min_repeat || n > self.max_repeat {
            return Err(TaskError::RepeatOutOfRange {
                n,
                min: self.min_repeat,
                max: self.max_repeat,
            });
        }
        Episode::repeat_copy(body, n)
    }

    /// The first episode of [`TaskSpec::episodes`].
    pub fn generate(&self) -> Result<Episode, TaskError> {
        self.sample(&mut ChaCha8Rng::seed_from_u64(self.seed))
    }

    /// `count` episodes from a generator seeded with `self.seed`.
    pub fn episodes(&self, count: usize) -> Result<Vec<Episode>, TaskError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}

/// Episode generator for the counting task.
pub fn gen_count(spec: &TaskSpec) -> Result<Episode, TaskError> {
    TaskSpec {
        kind: TaskKind::Count,
        ..*spec
    }
    .generate()
}

pub fn gen_count_interf(spec: &TaskSpec) -> Result<Episode, TaskError> {
    TaskSpec {
        kind: TaskKind::CountInterf,
        ..*spec
    }
    .generate()
}

pub fn gen_reverse(spec: &TaskSpec) -> Result<Episode, TaskError> {
    TaskSpec {
        kind: TaskKind::Reverse,
        ..*spec
    }
    .generate()
}

pub fn gen_repeat_copy(spec: &TaskSpec) -> Result<Episode, TaskError> {
    TaskSpec {
        kind: TaskKind::RepeatCopy,
        ..*spec
    }
    .generate()
}
