use super::{
    activate, hidden_from_read, linear, linear2, output_from_hidden, Bound, CellConfig, CellError,
    CellState, GateMode, LstmConfig, Probe, Readout, Step,
};
use crate::numcore::{Tape, Var};

/// Input, forget and output gates, or the pinned `(1, 0, 1)` override.
pub(super) enum Gates {
    Learned {
        input: Var,
        forget: Var,
        output: Var,
    },
    Pinned,
}

/// `c = f(w_hc h_prev + b_c)`, optionally with a `w_xc x` term.
pub(super) fn candidate(
    tape: &mut Tape,
    lc: &LstmConfig,
    p: &Bound,
    h_prev: Var,
    x: Var,
) -> Result<Var, CellError> {
    let pre = if lc.input_to_candidate {
        linear2(tape, p, ("w_hc", h_prev), ("w_xc", x), "b_c")?
    } else {
        linear(tape, p, "w_hc", h_prev, "b_c")?
    };
    Ok(activate(tape, lc.candidate_act, pre))
}

fn gate(
    tape: &mut Tape,
    p: &Bound,
    names: (&str, &str, &str),
    h_prev: Var,
    x: Var,
) -> Result<Var, CellError> {
    let pre = linear2(tape, p, (names.0, h_prev), (names.1, x), names.2)?;
    Ok(tape.sigmoid(pre))
}

/// `g = s(w_hg h_prev + w_xg x + b_g)` for the three gates.
pub(super) fn gates(
    tape: &mut Tape,
    lc: &LstmConfig,
    p: &Bound,
    h_prev: Var,
    x: Var,
) -> Result<Gates, CellError> {
    match lc.gates {
        GateMode::Pinned => Ok(Gates::Pinned),
        GateMode::Learned => Ok(Gates::Learned {
            input: gate(tape, p, ("w_hgi", "w_xgi", "b_gi"), h_prev, x)?,
            forget: gate(tape, p, ("w_hgf", "w_xgf", "b_gf"), h_prev, x)?,
            output: gate(tape, p, ("w_hgo", "w_xgo", "b_go"), h_prev, x)?,
        }),
    }
}

/// `m' = g_i c + g_f m`, `r = m'`, `h' = f(w_xh x + w_rh (g_o r) + b_h)`.
pub(super) fn step(
    tape: &mut Tape,
    cfg: &CellConfig,
    lc: &LstmConfig,
    p: &Bound,
    h: Var,
    m: Var,
    x: Var,
) -> Result<Step, CellError> {
    let c = candidate(tape, lc, p, h, x)?;
    let mut probes = vec![Probe {
        name: "candidate",
        var: c,
    }];
    let (m_new, read) = match gates(tape, lc, p, h, x)? {
        Gates::Learned {
            input,
            forget,
            output,
        } => {
            let write = tape.scale_by(c, input)?;
            let keep = tape.scale_by(m, forget)?;
            let m_new = tape.add(write, keep)?;
            let read = tape.scale_by(m_new, output)?;
            probes.extend([
                Probe {
                    name: "gate_input",
                    var: input,
                },
                Probe {
                    name: "gate_forget",
                    var: forget,
                },
                Probe {
                    name: "gate_output",
                    var: output,
                },
            ]);
            (m_new, read)
        }
        Gates::Pinned => (c, c),
    };
    let h_new = hidden_from_read(tape, cfg, p, x, read)?;
    let output = match lc.readout {
        Readout::Hidden => output_from_hidden(tape, cfg, p, h_new)?,
        Readout::Memory => {
            let pre = linear(tape, p, "w_mo", m_new, "b_mo")?;
            activate(tape, cfg.output_act, pre)
        }
    };
    probes.push(Probe {
        name: "memory",
        var: m_new,
    });
    probes.push(Probe {
        name: "hidden",
        var: h_new,
    });
    Ok(Step {
        state: CellState::Lstm { h: h_new, m: m_new },
        output,
        probes,
    })
}
