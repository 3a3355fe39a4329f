use super::{
    activate, linear2, output_from_hidden, Bound, CellConfig, CellError, CellState, Probe, Step,
};
use crate::numcore::{Tape, Var};

/// `h' = f(w_xh x + w_hh h + b_h)`, `o = f_out(w_ho h' + b_o)`.
pub(super) fn step(
    tape: &mut Tape,
    cfg: &CellConfig,
    p: &Bound,
    h: Var,
    x: Var,
) -> Result<Step, CellError> {
    let pre = linear2(tape, p, ("w_xh", x), ("w_hh", h), "b_h")?;
    let h_new = activate(tape, cfg.hidden_act, pre);
    let output = output_from_hidden(tape, cfg, p, h_new)?;
    Ok(Step {
        state: CellState::Rnn { h: h_new },
        output,
        probes: vec![Probe {
            name: "hidden",
            var: h_new,
        }],
    })
}
