//! Per-timestep dynamics of the four memory architectures.
//!
//! Every cell follows the same ordering within a step: memory controls
//! (gates, stack signals, write candidates, read heads) are computed from the
//! previous hidden state and the current input, the external memory is
//! written, the fresh memory is read, and only then is the new hidden state
//! formed from the input and the read vector.

mod addressing;
mod config;
mod init;
mod lstm;
mod ram;
mod rnn;
mod stack;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numcore::{NumError, Tape, Tensor, Var};

pub use addressing::address_content_location;
pub use config::{
    Activation, AddressingMode, Arch, ArchConfig, CellConfig, Dims, GateMode, LstmConfig,
    ParamKind, ParamShape, RamConfig, RamControl, ReadGate, Readout, StackConfig, StackControl,
};
pub use init::{init_params, InitMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CellError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("parameter `{name}` has shape {found:?}, expected {expected:?}")]
    ParamShape {
        name: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("input has shape {found:?}, expected ({expected}, 1)")]
    InputShape {
        expected: usize,
        found: (usize, usize),
    },
    #[error("stack depth {depth} exceeds cap {cap}")]
    StackOverflow { depth: usize, cap: usize },
    #[error("max shift {max_shift} needs at least {} slots, have {slots}", 2 * max_shift + 1)]
    InvalidShift { max_shift: usize, slots: usize },
    #[error("unknown architecture `{0}`")]
    UnknownArch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Named parameter tensors, ordered by name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params(BTreeMap<String, Tensor>);

impl Params {
    pub fn new() -> Self {
        Params(BTreeMap::new())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.0.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.0.get_mut(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        self.0.insert(name.into(), value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.0.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.0.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total number of scalar entries.
    pub fn numel(&self) -> usize {
        self.0.values().map(Tensor::len).sum()
    }
}

/// Parameters recorded as leaves on one tape.
#[derive(Clone, Debug)]
pub struct Bound {
    vars: BTreeMap<String, Var>,
}

impl Bound {
    pub fn get(&self, name: &str) -> Result<Var, CellError> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| CellError::MissingParam(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Var)> {
        self.vars.iter()
    }
}

/// Recurrent state of one cell, as nodes on the current tape.
#[derive(Clone, Copy, Debug)]
pub enum CellState {
    Rnn {
        h: Var,
    },
    Lstm {
        h: Var,
        m: Var,
    },
    /// `stack` holds one element per row, row 0 topmost.
    Stack {
        h: Var,
        stack: Var,
    },
    /// `memory` is `slots × width`; `read` the previous read weights.
    Ram {
        h: Var,
        memory: Var,
        read: Var,
    },
}

impl CellState {
    pub fn hidden(&self) -> Var {
        match *self {
            CellState::Rnn { h }
            | CellState::Lstm { h, .. }
            | CellState::Stack { h, .. }
            | CellState::Ram { h, .. } => h,
        }
    }
}

/// An internal quantity exposed for traces and tests.
#[derive(Clone, Copy, Debug)]
pub struct Probe {
    pub name: &'static str,
    pub var: Var,
}

#[derive(Clone, Debug)]
pub struct Step {
    pub state: CellState,
    pub output: Var,
    pub probes: Vec<Probe>,
}

impl Step {
    pub fn probe(&self, name: &str) -> Option<Var> {
        self.probes.iter().find(|p| p.name == name).map(|p| p.var)
    }
}

pub(crate) fn activate(tape: &mut Tape, act: Activation, v: Var) -> Var {
    match act {
        Activation::Identity => v,
        Activation::Sigmoid => tape.sigmoid(v),
        Activation::Tanh => tape.tanh(v),
        Activation::Relu => tape.relu(v),
    }
}

/// `w·x + b`.
pub(crate) fn linear(
    tape: &mut Tape,
    p: &Bound,
    w: &str,
    x: Var,
    b: &str,
) -> Result<Var, CellError> {
    let wx = tape.matmul(p.get(w)?, x)?;
    Ok(tape.add(wx, p.get(b)?)?)
}

/// `(w1·x1 + w2·x2) + b`.
pub(crate) fn linear2(
    tape: &mut Tape,
    p: &Bound,
    (w1, x1): (&str, Var),
    (w2, x2): (&str, Var),
    b: &str,
) -> Result<Var, CellError> {
    let a = tape.matmul(p.get(w1)?, x1)?;
    let c = tape.matmul(p.get(w2)?, x2)?;
    let s = tape.add(a, c)?;
    Ok(tape.add(s, p.get(b)?)?)
}

/// Hidden update shared by the memory cells: `f(w_xh x + w_rh r + b_h)`.
pub(crate) fn hidden_from_read(
    tape: &mut Tape,
    cfg: &CellConfig,
    p: &Bound,
    x: Var,
    r: Var,
) -> Result<Var, CellError> {
    let pre = linear2(tape, p, ("w_xh", x), ("w_rh", r), "b_h")?;
    Ok(activate(tape, cfg.hidden_act, pre))
}

pub(crate) fn output_from_hidden(
    tape: &mut Tape,
    cfg: &CellConfig,
    p: &Bound,
    h: Var,
) -> Result<Var, CellError> {
    let pre = linear(tape, p, "w_ho", h, "b_o")?;
    Ok(activate(tape, cfg.output_act, pre))
}

/// A configured architecture together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub config: CellConfig,
    pub params: Params,
}

impl Network {
    /// Checks the parameter set against the configuration.
    pub fn new(config: CellConfig, params: Params) -> Result<Self, CellError> {
        config.validate()?;
        for shape in config.param_shapes() {
            let t = params
                .get(shape.name)
                .ok_or_else(|| CellError::MissingParam(shape.name.to_string()))?;
            if t.shape() != (shape.rows, shape.cols) {
                return Err(CellError::ParamShape {
                    name: shape.name.to_string(),
                    expected: (shape.rows, shape.cols),
                    found: t.shape(),
                });
            }
        }
        Ok(Network { config, params })
    }

    pub fn init(config: CellConfig, mode: InitMode, seed: u64) -> Result<Self, CellError> {
        config.validate()?;
        let params = init_params(&config, mode, seed);
        Ok(Network { config, params })
    }

    pub fn arch(&self) -> Arch {
        self.config.arch()
    }

    pub fn bind(&self, tape: &mut Tape) -> Bound {
        let vars = self
            .params
            .iter()
            .map(|(name, t)| (name.clone(), tape.leaf(t.clone())))
            .collect();
        Bound { vars }
    }

    /// Zero hidden state and empty memory.
    pub fn initial_state(&self, tape: &mut Tape) -> CellState {
        let d = self.config.dims;
        let h = tape.leaf(Tensor::zeros(d.hidden, 1));
        match self.config.cell {
            ArchConfig::Rnn => CellState::Rnn { h },
            ArchConfig::Lstm(_) => CellState::Lstm {
                h,
                m: tape.leaf(Tensor::zeros(d.width, 1)),
            },
            ArchConfig::Stack(_) => CellState::Stack {
                h,
                stack: tape.leaf(Tensor::zeros(1, d.width)),
            },
            ArchConfig::Ram(_) => {
                let mut first = Tensor::zeros(d.slots, 1);
                first.set(0, 0, 1.0);
                CellState::Ram {
                    h,
                    memory: tape.leaf(Tensor::zeros(d.slots, d.width)),
                    read: tape.leaf(first),
                }
            }
        }
    }

    pub fn step(
        &self,
        tape: &mut Tape,
        p: &Bound,
        state: &CellState,
        x: Var,
    ) -> Result<Step, CellError> {
        let found = tape.shape(x);
        if found != (self.config.dims.input, 1) {
            return Err(CellError::InputShape {
                expected: self.config.dims.input,
                found,
            });
        }
        match (&self.config.cell, *state) {
            (ArchConfig::Rnn, CellState::Rnn { h }) => rnn::step(tape, &self.config, p, h, x),
            (ArchConfig::Lstm(lc), CellState::Lstm { h, m }) => {
                lstm::step(tape, &self.config, lc, p, h, m, x)
            }
            (ArchConfig::Stack(sc), CellState::Stack { h, stack }) => {
                stack::step(tape, &self.config, sc, p, h, stack, x)
            }
            (ArchConfig::Ram(rc), CellState::Ram { h, memory, read }) => {
                ram::step(tape, &self.config, rc, p, h, memory, read, x)
            }
            _ => Err(CellError::InvalidConfig(
                "state does not match architecture".into(),
            )),
        }
    }

    /// Unrolls the cell over `inputs` from the initial state.
    pub fn unroll(
        &self,
        tape: &mut Tape,
        p: &Bound,
        inputs: &[Var],
    ) -> Result<Vec<Step>, CellError> {
        let mut state = self.initial_state(tape);
        let mut steps = Vec::with_capacity(inputs.len());
        for &x in inputs {
            let step = self.step(tape, p, &state, x)?;
            state = step.state;
            steps.push(step);
        }
        Ok(steps)
    }
}

#[cfg(test)]
mod tests;
