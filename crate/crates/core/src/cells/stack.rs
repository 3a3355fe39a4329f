use super::lstm::{self, Gates};
use super::{
    activate, hidden_from_read, linear, linear2, output_from_hidden, Bound, CellConfig, CellError,
    CellState, Probe, ReadGate, StackConfig, StackControl, Step,
};
use crate::numcore::{Tape, Tensor, Var};

/// Operation signals, candidate and read gate for one stack step.
pub(super) struct Controls {
    pub push: Var,
    /// `None` when pop is structurally zero.
    pub pop: Option<Var>,
    pub noop: Var,
    /// `(width, 1)`.
    pub candidate: Var,
    /// `None` when the read gate is fixed at 1.
    pub read_gate: Option<Var>,
    /// Only the topmost element is kept.
    pub top_only: bool,
}

pub(super) fn controls(
    tape: &mut Tape,
    sc: &StackConfig,
    p: &Bound,
    h_prev: Var,
    x: Var,
) -> Result<Controls, CellError> {
    match sc.control {
        StackControl::Native => {
            let d = linear(tape, p, "w_hd", h_prev, "b_op")?;
            let d = tape.sigmoid(d);
            let push = tape.slice_rows(d, 0, 1)?;
            let pop = tape.slice_rows(d, 1, 1)?;
            let noop = tape.slice_rows(d, 2, 1)?;
            let c = linear(tape, p, "w_hc", h_prev, "b_c")?;
            let candidate = activate(tape, sc.candidate_act, c);
            let read_gate = match sc.read_gate {
                ReadGate::One => None,
                ReadGate::Learned => {
                    let g = linear2(tape, p, ("w_hgo", h_prev), ("w_xgo", x), "b_go")?;
                    Some(tape.sigmoid(g))
                }
            };
            Ok(Controls {
                push,
                pop: Some(pop),
                noop,
                candidate,
                read_gate,
                top_only: false,
            })
        }
        StackControl::Lstm(lc) => {
            let candidate = lstm::candidate(tape, &lc, p, h_prev, x)?;
            let (push, noop, read_gate) = match lstm::gates(tape, &lc, p, h_prev, x)? {
                Gates::Learned {
                    input,
                    forget,
                    output,
                } => (input, forget, Some(output)),
                Gates::Pinned => (
                    tape.leaf(Tensor::scalar(1.0)),
                    tape.leaf(Tensor::scalar(0.0)),
                    None,
                ),
            };
            Ok(Controls {
                push,
                pop: None,
                noop,
                candidate,
                read_gate,
                top_only: true,
            })
        }
    }
}

/// One continuous stack update on a `depth × width` stack (row 0 on top):
///
/// `s'(0) = push·c + pop·s(1) + noop·s(0)`,
/// `s'(i) = push·s(i-1) + pop·s(i+1) + noop·s(i)`.
///
/// The result has one more row than the input; rows past the old bottom are
/// zero-padded. `candidate` is a `(1, width)` row.
pub fn update_stack(
    tape: &mut Tape,
    stack: Var,
    candidate: Var,
    push: Var,
    pop: Option<Var>,
    noop: Var,
    max_depth: usize,
) -> Result<Var, CellError> {
    let (depth, width) = tape.shape(stack);
    if depth + 1 > max_depth {
        return Err(CellError::StackOverflow {
            depth: depth + 1,
            cap: max_depth,
        });
    }
    let zero_row = tape.leaf(Tensor::zeros(1, width));
    let down = tape.concat_rows(candidate, stack)?;
    let same = tape.concat_rows(stack, zero_row)?;
    let pushed = tape.scale_by(down, push)?;
    let kept = tape.scale_by(same, noop)?;
    let moved = match pop {
        Some(pop) => {
            let up = if depth > 1 {
                let below = tape.slice_rows(stack, 1, depth - 1)?;
                let pad = tape.leaf(Tensor::zeros(2, width));
                tape.concat_rows(below, pad)?
            } else {
                tape.leaf(Tensor::zeros(2, width))
            };
            let popped = tape.scale_by(up, pop)?;
            tape.add(pushed, popped)?
        }
        None => pushed,
    };
    Ok(tape.add(moved, kept)?)
}

/// Controls from `(h_prev, x)`, stack update, `r = g_o s'(0)`, `h' = g(w_xh x + w_rh r + b_h)`.
pub(super) fn step(
    tape: &mut Tape,
    cfg: &CellConfig,
    sc: &StackConfig,
    p: &Bound,
    h: Var,
    stack: Var,
    x: Var,
) -> Result<Step, CellError> {
    let ctl = controls(tape, sc, p, h, x)?;
    let c_row = tape.transpose(ctl.candidate);
    let new_stack = if ctl.top_only {
        let write = tape.scale_by(c_row, ctl.push)?;
        let top = tape.slice_rows(stack, 0, 1)?;
        let keep = tape.scale_by(top, ctl.noop)?;
        tape.add(write, keep)?
    } else {
        update_stack(
            tape,
            stack,
            c_row,
            ctl.push,
            ctl.pop,
            ctl.noop,
            sc.max_depth,
        )?
    };
    let top = tape.slice_rows(new_stack, 0, 1)?;
    let top = tape.transpose(top);
    let read = match ctl.read_gate {
        Some(g) => tape.scale_by(top, g)?,
        None => top,
    };
    let h_new = hidden_from_read(tape, cfg, p, x, read)?;
    let output = output_from_hidden(tape, cfg, p, h_new)?;
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
    if let Some(g) = ctl.read_gate {
        probes.push(Probe {
            name: "read_gate",
            var: g,
        });
    }
    probes.push(Probe {
        name: "stack",
        var: new_stack,
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
        state: CellState::Stack {
            h: h_new,
            stack: new_stack,
        },
        output,
        probes,
    })
}
