use super::addressing::address_content_location;
use super::stack;
use super::{
    activate, hidden_from_read, linear, linear2, output_from_hidden, AddressingMode, Bound,
    CellConfig, CellError, CellState, Probe, RamConfig, RamControl, StackConfig, Step,
};
use crate::numcore::{Tape, Tensor, Var};

struct Written {
    memory: Var,
    read_weights: Var,
    probes: Vec<Probe>,
}

/// Per-slot gates and a shared candidate: `m'(i) = g_i(i) c + g_f(i) m(i)`.
fn native_write(
    tape: &mut Tape,
    cfg: &CellConfig,
    rc: &RamConfig,
    p: &Bound,
    h: Var,
    memory: Var,
    prev_read: Var,
    x: Var,
) -> Result<Written, CellError> {
    let gi = linear2(tape, p, ("w_hgi", h), ("w_xgi", x), "b_gi")?;
    let gi = tape.sigmoid(gi);
    let gf = if rc.coupled_gates {
        tape.one_minus(gi)
    } else {
        let gf = linear2(tape, p, ("w_hgf", h), ("w_xgf", x), "b_gf")?;
        tape.sigmoid(gf)
    };
    let c = linear(tape, p, "w_hc", h, "b_c")?;
    let c = activate(tape, rc.candidate_act, c);
    let c_row = tape.transpose(c);
    let write = tape.matmul(gi, c_row)?;
    let keep = tape.scale_rows(memory, gf)?;
    let memory = tape.add(write, keep)?;

    let read_weights = match rc.addressing {
        AddressingMode::Direct => {
            let logits = linear(tape, p, "w_ha", h, "b_a")?;
            tape.softmax(logits)?
        }
        AddressingMode::ContentLocation {
            sharpness,
            max_shift,
        } => {
            if 2 * max_shift + 1 > cfg.dims.slots {
                return Err(CellError::InvalidShift {
                    max_shift,
                    slots: cfg.dims.slots,
                });
            }
            let key = linear(tape, p, "w_hk", h, "b_k")?;
            let key = tape.tanh(key);
            let gate = linear(tape, p, "w_hgt", h, "b_gt")?;
            let gate = tape.sigmoid(gate);
            let shift = linear(tape, p, "w_hs", h, "b_s")?;
            let shift = tape.softmax(shift)?;
            address_content_location(tape, memory, key, sharpness, gate, shift, prev_read)?
        }
    };
    let probes = vec![
        Probe {
            name: "write_gate",
            var: gi,
        },
        Probe {
            name: "forget_gate",
            var: gf,
        },
        Probe {
            name: "candidate",
            var: c,
        },
    ];
    Ok(Written {
        memory,
        read_weights,
        probes,
    })
}

/// Memory bank restricted to stack behaviour. Slots `0..M-1` hold the stack
/// (slot 0 on top), slot `M-1` is a sink that stays zero.
///
/// Every slot shares the input gate `g_i = push` and forget gate
/// `g_f = no-op`. The write candidate of slot `i` is the shifted content
/// `m(i-1) + α m(i+1)` (slot 0 takes the fresh candidate in place of
/// `m(-1)`), with `α = pop / push` so that `α g_i` is the pop amplitude.
/// The read head puts `g_o` on slot 0 and `1 - g_o` on the sink.
fn stack_write(
    tape: &mut Tape,
    sc: &StackConfig,
    p: &Bound,
    h: Var,
    memory: Var,
    x: Var,
) -> Result<Written, CellError> {
    let (slots, width) = tape.shape(memory);
    let data = slots - 1;
    let ctl = stack::controls(tape, sc, p, h, x)?;
    let c_row = tape.transpose(ctl.candidate);
    let down = if data > 1 {
        let rows = tape.slice_rows(memory, 0, data - 1)?;
        tape.concat_rows(c_row, rows)?
    } else {
        c_row
    };
    let shifted = match ctl.pop {
        Some(pop) => {
            let alpha = tape.div(pop, ctl.push)?;
            let zero = tape.leaf(Tensor::zeros(1, width));
            let up = if data > 1 {
                let rows = tape.slice_rows(memory, 1, data - 1)?;
                tape.concat_rows(rows, zero)?
            } else {
                zero
            };
            let up = tape.scale_by(up, alpha)?;
            tape.add(down, up)?
        }
        None => down,
    };
    let sink = tape.leaf(Tensor::zeros(1, width));
    let candidates = tape.concat_rows(shifted, sink)?;
    let ones = tape.leaf(Tensor::ones(slots, 1));
    let gi = tape.scale_by(ones, ctl.push)?;
    let gf = tape.scale_by(ones, ctl.noop)?;
    let write = tape.scale_rows(candidates, gi)?;
    let keep = tape.scale_rows(memory, gf)?;
    let memory = tape.add(write, keep)?;

    let read_weights = match ctl.read_gate {
        Some(g) => {
            let rest = tape.one_minus(g);
            let head = if slots > 2 {
                let gap = tape.leaf(Tensor::zeros(slots - 2, 1));
                tape.concat_rows(g, gap)?
            } else {
                g
            };
            tape.concat_rows(head, rest)?
        }
        None => {
            let mut top = Tensor::zeros(slots, 1);
            top.set(0, 0, 1.0);
            tape.leaf(top)
        }
    };
    let mut probes = vec![
        Probe {
            name: "push",
            var: ctl.push,
        },
        Probe {
            name: "noop",
            var: ctl.noop,
        },
        Probe {
            name: "write_gate",
            var: gi,
        },
        Probe {
            name: "forget_gate",
            var: gf,
        },
        Probe {
            name: "candidate",
            var: ctl.candidate,
        },
    ];
    if let Some(pop) = ctl.pop {
        probes.push(Probe {
            name: "pop",
            var: pop,
        });
    }
    Ok(Written {
        memory,
        read_weights,
        probes,
    })
}

/// Write, then `r = Σ_i a(i) m'(i)`, then `h' = f(w_xh x + w_rh r + b_h)`.
#[allow(clippy::too_many_arguments)]
pub(super) fn step(
    tape: &mut Tape,
    cfg: &CellConfig,
    rc: &RamConfig,
    p: &Bound,
    h: Var,
    memory: Var,
    prev_read: Var,
    x: Var,
) -> Result<Step, CellError> {
    let written = match &rc.control {
        RamControl::Native => native_write(tape, cfg, rc, p, h, memory, prev_read, x)?,
        RamControl::Stack(sc) => stack_write(tape, sc, p, h, memory, x)?,
    };
    let mem_t = tape.transpose(written.memory);
    let read = tape.matmul(mem_t, written.read_weights)?;
    let h_new = hidden_from_read(tape, cfg, p, x, read)?;
    let output = output_from_hidden(tape, cfg, p, h_new)?;
    let mut probes = written.probes;
    probes.push(Probe {
        name: "read_weights",
        var: written.read_weights,
    });
    probes.push(Probe {
        name: "memory",
        var: written.memory,
    });
    probes.push(Probe {
        name: "read",
        var: read,
    });
    probes.push(Probe {
        name: "hidden",
        var: h_new,
    });
    Ok(Step {
        state: CellState::Ram {
            h: h_new,
            memory: written.memory,
            read: written.read_weights,
        },
        output,
        probes,
    })
}
