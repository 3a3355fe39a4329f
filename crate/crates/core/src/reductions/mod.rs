//! Constraint builders that specialise an outer architecture into an exact
//! copy of the next inner one, and a verifier that runs both side by side.
//!
//! Each builder takes a network of the inner architecture and returns an
//! outer network whose free parameters are the inner network's parameters,
//! unchanged, with the remaining structure pinned by configuration.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::{
    Activation, AddressingMode, Arch, ArchConfig, CellConfig, CellError, Dims, GateMode, InitMode,
    LstmConfig, Network, Params, RamConfig, RamControl, Readout, StackConfig, StackControl,
};
use crate::numcore::Tensor;
use crate::training::{run_episode, TrainError};

/// Deviation below which two trajectories count as identical.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("expected a {expected} network, got {found}")]
    WrongArch { expected: Arch, found: Arch },
    #[error("lstm memory width {width} must equal the rnn hidden size {hidden}")]
    WidthMismatch { width: usize, hidden: usize },
    #[error("{slots} slots cannot hold a stack of depth {depth} plus the sink")]
    DepthOverflow { slots: usize, depth: usize },
    #[error("unsupported network: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("unknown reduction pair `{0}`")]
    UnknownPair(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReductionPair {
    #[serde(rename = "ram-stack")]
    RamToStack,
    #[serde(rename = "stack-lstm")]
    StackToLstm,
    #[serde(rename = "lstm-rnn")]
    LstmToRnn,
    /// RAM → stack → LSTM → RNN composed.
    #[serde(rename = "chain")]
    Chain,
}

impl ReductionPair {
    pub const ALL: [ReductionPair; 4] = [
        ReductionPair::RamToStack,
        ReductionPair::StackToLstm,
        ReductionPair::LstmToRnn,
        ReductionPair::Chain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReductionPair::RamToStack => "ram-stack",
            ReductionPair::StackToLstm => "stack-lstm",
            ReductionPair::LstmToRnn => "lstm-rnn",
            ReductionPair::Chain => "chain",
        }
    }

    pub fn outer(self) -> Arch {
        match self {
            ReductionPair::RamToStack | ReductionPair::Chain => Arch::Ram,
            ReductionPair::StackToLstm => Arch::Stack,
            ReductionPair::LstmToRnn => Arch::Lstm,
        }
    }

    pub fn inner(self) -> Arch {
        match self {
            ReductionPair::RamToStack => Arch::Stack,
            ReductionPair::StackToLstm => Arch::Lstm,
            ReductionPair::LstmToRnn | ReductionPair::Chain => Arch::Rnn,
        }
    }
}

impl fmt::Display for ReductionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReductionPair {
    type Err = ReductionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReductionPair::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ReductionError::UnknownPair(s.into()))
    }
}

fn expect(net: &Network, arch: Arch) -> Result<(), ReductionError> {
    match net.arch() {
        found if found == arch => Ok(()),
        found => Err(ReductionError::WrongArch {
            expected: arch,
            found,
        }),
    }
}

/// A RAM with `slots` slots that behaves as `stack`. The first `slots - 1`
/// slots hold the stack top-down and the last slot is a zero sink, so a
/// stack up to depth `slots - 1` is represented exactly.
pub fn constrain_ram_to_stack(stack: &Network, slots: usize) -> Result<Network, ReductionError> {
    expect(stack, Arch::Stack)?;
    let ArchConfig::Stack(sc) = stack.config.cell else {
        unreachable!()
    };
    if slots < 2 {
        return Err(ReductionError::DepthOverflow { slots, depth: 1 });
    }
    let rc = RamConfig {
        candidate_act: sc.candidate_act,
        addressing: AddressingMode::Direct,
        coupled_gates: false,
        control: RamControl::Stack(sc),
    };
    let config = CellConfig {
        dims: Dims {
            slots,
            ..stack.config.dims
        },
        cell: ArchConfig::Ram(rc),
        ..stack.config
    };
    Ok(Network::new(config, stack.params.clone())?)
}

/// A stack whose push, no-op, read gate and candidate come from the LSTM
/// equations, with pop pinned to zero so only the top element matters.
pub fn constrain_stack_to_lstm(lstm: &Network) -> Result<Network, ReductionError> {
    expect(lstm, Arch::Lstm)?;
    let ArchConfig::Lstm(lc) = lstm.config.cell else {
        unreachable!()
    };
    if lc.readout != Readout::Hidden {
        return Err(ReductionError::Unsupported(
            "stacks read out from the hidden state".into(),
        ));
    }
    let sc = StackConfig {
        candidate_act: lc.candidate_act,
        control: StackControl::Lstm(lc),
        ..StackConfig::default()
    };
    let config = CellConfig {
        cell: ArchConfig::Stack(sc),
        ..lstm.config
    };
    Ok(Network::new(config, lstm.params.clone())?)
}

/// An LSTM with pinned gates (`g_i = 1`, `g_f = 0`, `g_o = 1`), identity
/// candidate `c = I h_{t-1} + 0` and `w_rh = w_hh`, so that `r_t = h_{t-1}`.
pub fn constrain_lstm_to_rnn(rnn: &Network, width: usize) -> Result<Network, ReductionError> {
    expect(rnn, Arch::Rnn)?;
    let hidden = rnn.config.dims.hidden;
    if width != hidden {
        return Err(ReductionError::WidthMismatch { width, hidden });
    }
    let lc = LstmConfig {
        candidate_act: Activation::Identity,
        readout: Readout::Hidden,
        input_to_candidate: false,
        gates: GateMode::Pinned,
    };
    let config = CellConfig {
        dims: Dims {
            width,
            ..rnn.config.dims
        },
        cell: ArchConfig::Lstm(lc),
        ..rnn.config
    };
    let mut params = Params::new();
    for (name, t) in rnn.params.iter() {
        let name = if name == "w_hh" {
            "w_rh"
        } else {
            name.as_str()
        };
        params.insert(name, t.clone());
    }
    params.insert("w_hc", Tensor::identity(hidden));
    params.insert("b_c", Tensor::zeros(hidden, 1));
    Ok(Network::new(config, params)?)
}

/// Outer network of `pair` built from `inner`, sized for episodes of up to
/// `len` steps.
pub fn constrain(
    pair: ReductionPair,
    inner: &Network,
    len: usize,
) -> Result<Network, ReductionError> {
    let slots = len + 2;
    match pair {
        ReductionPair::RamToStack => constrain_ram_to_stack(inner, slots),
        ReductionPair::StackToLstm => constrain_stack_to_lstm(inner),
        ReductionPair::LstmToRnn => constrain_lstm_to_rnn(inner, inner.config.dims.hidden),
        ReductionPair::Chain => {
            let lstm = constrain_lstm_to_rnn(inner, inner.config.dims.hidden)?;
            let stack = constrain_stack_to_lstm(&lstm)?;
            constrain_ram_to_stack(&stack, slots)
        }
    }
}

/// Random network of the inner architecture of `pair`.
pub fn random_inner(pair: ReductionPair, seed: u64) -> Result<Network, ReductionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = match pair.inner() {
        Arch::Rnn => Dims::new(3, 5, 3, 5, 0),
        _ => Dims::new(3, 5, 3, 4, 0),
    };
    let config = CellConfig::new(pair.inner(), dims).with_hidden_act(Activation::Tanh);
    let mut net = Network::init(config, InitMode::Scaled, rng.gen())?;
    for (_, t) in net.params.iter_mut() {
        for v in t.data_mut() {
            *v += rng.gen_range(-0.5..0.5);
        }
    }
    Ok(net)
}

/// Largest `|Δh|` at each step of two runs on the same inputs.
pub fn hidden_deviation(
    a: &Network,
    b: &Network,
    inputs: &[Tensor],
) -> Result<Vec<f64>, ReductionError> {
    let (ta, sa) = run_episode(a, inputs)?;
    let (tb, sb) = run_episode(b, inputs)?;
    Ok(sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| {
            let hx = ta.value(x.state.hidden());
            let hy = tb.value(y.state.hidden());
            hx.zip_map(hy, |p, q| (p - q).abs()).max_abs()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub max_deviation: f64,
    pub per_step: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub pair: ReductionPair,
    pub len: usize,
    pub tolerance: f64,
    /// Size of the deliberate perturbation of the outer `w_xh[0][0]`, if any.
    pub perturbation: Option<f64>,
    pub seeds: Vec<SeedResult>,
    pub max_deviation: f64,
    pub equivalent: bool,
    pub notes: Vec<String>,
}

fn notes(pair: ReductionPair) -> Vec<String> {
    let lstm_rnn = "lstm-rnn: the output gate is pinned to 1, not 0; with g_o = 0 the read vector vanishes and \
                    the rnn recurrence cannot be recovered"
        .to_string();
    let ram_stack =
        "ram-stack: slot gates tied to push/no-op, shifted candidates with alpha = pop/push, \
                     read weights [g_o, 0, ..., 1 - g_o] with a zero sink slot"
            .to_string();
    match pair {
        ReductionPair::LstmToRnn => vec![lstm_rnn],
        ReductionPair::RamToStack => vec![ram_stack],
        ReductionPair::StackToLstm => {
            vec!["stack-lstm: pop pinned to 0, only the top element is kept".into()]
        }
        ReductionPair::Chain => vec![ram_stack, lstm_rnn],
    }
}

/// Runs the inner network and its constrained outer counterpart on the same
/// random inputs for every seed, optionally nudging one outer weight.
pub fn verify_equivalence_with(
    pair: ReductionPair,
    len: usize,
    seeds: &[u64],
    perturbation: Option<f64>,
) -> Result<EquivalenceReport, ReductionError> {
    assert!(!seeds.is_empty(), "at least one seed is required");
    let mut results = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let inner = random_inner(pair, seed)?;
        let mut outer = constrain(pair, &inner, len)?;
        if let Some(delta) = perturbation {
            let w = outer.params.get_mut("w_xh").expect("every cell has w_xh");
            w.set(0, 0, w.get(0, 0) + delta);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_1A7E);
        let inputs: Vec<Tensor> = (0..len)
            .map(|_| Tensor::from_vec(3, 1, (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect();
        let per_step = hidden_deviation(&outer, &inner, &inputs)?;
        let max_deviation = per_step.iter().cloned().fold(0.0, f64::max);
        results.push(SeedResult {
            seed,
            max_deviation,
            per_step,
        });
    }
    let max_deviation = results.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    Ok(EquivalenceReport {
        pair,
        len,
        tolerance: EQUIVALENCE_TOLERANCE,
        perturbation,
        equivalent: max_deviation < EQUIVALENCE_TOLERANCE,
        max_deviation,
        seeds: results,
        notes: notes(pair),
    })
}

pub fn verify_equivalence(
    pair: ReductionPair,
    len: usize,
    seeds: &[u64],
) -> Result<EquivalenceReport, ReductionError> {
    verify_equivalence_with(pair, len, seeds, None)
}
