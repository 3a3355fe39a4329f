use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CellError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arch {
    Rnn,
    Lstm,
    Stack,
    Ram,
}

impl Arch {
    /// Innermost first.
    pub const ALL: [Arch; 4] = [Arch::Rnn, Arch::Lstm, Arch::Stack, Arch::Ram];

    pub fn name(self) -> &'static str {
        match self {
            Arch::Rnn => "rnn",
            Arch::Lstm => "lstm",
            Arch::Stack => "stack",
            Arch::Ram => "ram",
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = CellError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Arch::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| CellError::UnknownArch(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Identity,
    Sigmoid,
    Tanh,
    Relu,
}

/// Layer sizes. `width` is the external memory element size (the LSTM
/// memory length N, the stack element size, or the RAM word size W);
/// `slots` is the RAM row count M.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub width: usize,
    pub slots: usize,
}

impl Dims {
    pub fn new(input: usize, hidden: usize, output: usize, width: usize, slots: usize) -> Self {
        Dims {
            input,
            hidden,
            output,
            width,
            slots,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Readout {
    /// `o = f_out(w_ho h + b_o)`.
    Hidden,
    /// `o = f_out(w_mo m + b_mo)`, LSTM only.
    Memory,
}

/// How the LSTM gates are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateMode {
    Learned,
    /// Structural override: input gate 1, forget gate 0, output gate 1.
    Pinned,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadGate {
    Learned,
    One,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum AddressingMode {
    /// `a = softmax(w_ha h + b_a)`.
    Direct,
    /// Cosine content lookup sharpened by `sharpness`, interpolated with the
    /// previous weights, then circularly shifted by up to `max_shift` slots.
    ContentLocation { sharpness: f64, max_shift: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    pub candidate_act: Activation,
    pub readout: Readout,
    /// Adds a `w_xc x` term to the candidate.
    pub input_to_candidate: bool,
    pub gates: GateMode,
}

impl Default for LstmConfig {
    fn default() -> Self {
        LstmConfig {
            candidate_act: Activation::Tanh,
            readout: Readout::Hidden,
            input_to_candidate: false,
            gates: GateMode::Learned,
        }
    }
}

/// Source of push/pop/no-op signals, candidate and read gate of a stack.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StackControl {
    Native,
    /// Pop pinned to 0, depth held at 1, push/no-op/read from LSTM gates.
    Lstm(LstmConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackConfig {
    pub candidate_act: Activation,
    pub read_gate: ReadGate,
    pub max_depth: usize,
    pub control: StackControl,
}

impl Default for StackConfig {
    fn default() -> Self {
        StackConfig {
            candidate_act: Activation::Tanh,
            read_gate: ReadGate::Learned,
            max_depth: 64,
            control: StackControl::Native,
        }
    }
}

/// Source of the RAM read head, write gates and write candidates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RamControl {
    Native,
    /// Head and gates restricted so the memory bank behaves as a stack.
    /// The last slot is a sink that stays zero and absorbs the read mass
    /// not placed on slot 0.
    Stack(StackConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamConfig {
    pub candidate_act: Activation,
    pub addressing: AddressingMode,
    /// `g_f(i) = 1 - g_i(i)`.
    pub coupled_gates: bool,
    pub control: RamControl,
}

impl Default for RamConfig {
    fn default() -> Self {
        RamConfig {
            candidate_act: Activation::Tanh,
            addressing: AddressingMode::Direct,
            coupled_gates: false,
            control: RamControl::Native,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "arch", rename_all = "kebab-case")]
pub enum ArchConfig {
    Rnn,
    Lstm(LstmConfig),
    Stack(StackConfig),
    Ram(RamConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub dims: Dims,
    pub hidden_act: Activation,
    pub output_act: Activation,
    pub cell: ArchConfig,
}

impl CellConfig {
    /// Default configuration of an architecture with the given sizes.
    pub fn new(arch: Arch, dims: Dims) -> Self {
        let cell = match arch {
            Arch::Rnn => ArchConfig::Rnn,
            Arch::Lstm => ArchConfig::Lstm(LstmConfig::default()),
            Arch::Stack => ArchConfig::Stack(StackConfig::default()),
            Arch::Ram => ArchConfig::Ram(RamConfig::default()),
        };
        CellConfig {
            dims,
            hidden_act: Activation::Tanh,
            output_act: Activation::Identity,
            cell,
        }
    }

    pub fn arch(&self) -> Arch {
        match self.cell {
            ArchConfig::Rnn => Arch::Rnn,
            ArchConfig::Lstm(_) => Arch::Lstm,
            ArchConfig::Stack(_) => Arch::Stack,
            ArchConfig::Ram(_) => Arch::Ram,
        }
    }

    pub fn with_hidden_act(mut self, act: Activation) -> Self {
        self.hidden_act = act;
        self
    }

    pub fn with_output_act(mut self, act: Activation) -> Self {
        self.output_act = act;
        self
    }

    pub fn validate(&self) -> Result<(), CellError> {
        let d = self.dims;
        if d.input == 0 || d.hidden == 0 || d.output == 0 {
            return Err(CellError::InvalidConfig(
                "input, hidden and output sizes must be positive".into(),
            ));
        }
        match self.cell {
            ArchConfig::Rnn => Ok(()),
            ArchConfig::Lstm(_) if d.width == 0 => Err(CellError::InvalidConfig(
                "lstm memory width must be positive".into(),
            )),
            ArchConfig::Lstm(_) => Ok(()),
            ArchConfig::Stack(s) => {
                if d.width == 0 || s.max_depth == 0 {
                    return Err(CellError::InvalidConfig(
                        "stack width and depth cap must be positive".into(),
                    ));
                }
                Ok(())
            }
            ArchConfig::Ram(r) => {
                if d.width == 0 || d.slots == 0 {
                    return Err(CellError::InvalidConfig(
                        "ram word size and slot count must be positive".into(),
                    ));
                }
                if let RamControl::Stack(_) = r.control {
                    if d.slots < 2 {
                        return Err(CellError::InvalidConfig(
                            "stack emulation needs at least one data slot plus the sink".into(),
                        ));
                    }
                } else if let AddressingMode::ContentLocation {
                    sharpness,
                    max_shift,
                } = r.addressing
                {
                    if !(sharpness > 0.0) {
                        return Err(CellError::InvalidConfig(
                            "sharpness must be positive".into(),
                        ));
                    }
                    if 2 * max_shift + 1 > d.slots {
                        return Err(CellError::InvalidShift {
                            max_shift,
                            slots: d.slots,
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

/// Whether a parameter is a weight or a bias; decides its initialization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamShape {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub kind: ParamKind,
}

fn w(name: &'static str, rows: usize, cols: usize) -> ParamShape {
    ParamShape {
        name,
        rows,
        cols,
        kind: ParamKind::Weight,
    }
}

fn b(name: &'static str, rows: usize) -> ParamShape {
    ParamShape {
        name,
        rows,
        cols: 1,
        kind: ParamKind::Bias,
    }
}

fn lstm_control_shapes(cfg: &LstmConfig, d: Dims, out: &mut Vec<ParamShape>) {
    out.push(w("w_hc", d.width, d.hidden));
    out.push(b("b_c", d.width));
    if cfg.input_to_candidate {
        out.push(w("w_xc", d.width, d.input));
    }
    if cfg.gates == GateMode::Learned {
        for (wh, wx, bias) in [
            ("w_hgi", "w_xgi", "b_gi"),
            ("w_hgf", "w_xgf", "b_gf"),
            ("w_hgo", "w_xgo", "b_go"),
        ] {
            out.push(w(wh, 1, d.hidden));
            out.push(w(wx, 1, d.input));
            out.push(b(bias, 1));
        }
    }
}

fn stack_control_shapes(cfg: &StackConfig, d: Dims, out: &mut Vec<ParamShape>) {
    match cfg.control {
        StackControl::Native => {
            out.push(w("w_hd", 3, d.hidden));
            out.push(b("b_op", 3));
            out.push(w("w_hc", d.width, d.hidden));
            out.push(b("b_c", d.width));
            if cfg.read_gate == ReadGate::Learned {
                out.push(w("w_hgo", 1, d.hidden));
                out.push(w("w_xgo", 1, d.input));
                out.push(b("b_go", 1));
            }
        }
        StackControl::Lstm(lc) => lstm_control_shapes(&lc, d, out),
    }
}

impl CellConfig {
    /// Every parameter the configured cell reads, in a fixed order.
    pub fn param_shapes(&self) -> Vec<ParamShape> {
        let d = self.dims;
        let mut out = vec![w("w_xh", d.hidden, d.input)];
        match &self.cell {
            ArchConfig::Rnn => out.push(w("w_hh", d.hidden, d.hidden)),
            _ => out.push(w("w_rh", d.hidden, d.width)),
        }
        out.push(b("b_h", d.hidden));
        match &self.cell {
            ArchConfig::Rnn => {}
            ArchConfig::Lstm(lc) => lstm_control_shapes(lc, d, &mut out),
            ArchConfig::Stack(sc) => stack_control_shapes(sc, d, &mut out),
            ArchConfig::Ram(rc) => match rc.control {
                RamControl::Stack(sc) => stack_control_shapes(&sc, d, &mut out),
                RamControl::Native => {
                    out.push(w("w_hc", d.width, d.hidden));
                    out.push(b("b_c", d.width));
                    out.push(w("w_hgi", d.slots, d.hidden));
                    out.push(w("w_xgi", d.slots, d.input));
                    out.push(b("b_gi", d.slots));
                    if !rc.coupled_gates {
                        out.push(w("w_hgf", d.slots, d.hidden));
                        out.push(w("w_xgf", d.slots, d.input));
                        out.push(b("b_gf", d.slots));
                    }
                    match rc.addressing {
                        AddressingMode::Direct => {
                            out.push(w("w_ha", d.slots, d.hidden));
                            out.push(b("b_a", d.slots));
                        }
                        AddressingMode::ContentLocation { max_shift, .. } => {
                            out.push(w("w_hk", d.width, d.hidden));
                            out.push(b("b_k", d.width));
                            out.push(w("w_hgt", 1, d.hidden));
                            out.push(b("b_gt", 1));
                            out.push(w("w_hs", 2 * max_shift + 1, d.hidden));
                            out.push(b("b_s", 2 * max_shift + 1));
                        }
                    }
                }
            },
        }
        match &self.cell {
            ArchConfig::Lstm(lc) if lc.readout == Readout::Memory => {
                out.push(w("w_mo", d.output, d.width));
                out.push(b("b_mo", d.output));
            }
            _ => {
                out.push(w("w_ho", d.output, d.hidden));
                out.push(b("b_o", d.output));
            }
        }
        out
    }
}
