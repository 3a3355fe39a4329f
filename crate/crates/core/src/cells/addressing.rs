use super::CellError;
use crate::numcore::{Tape, Var};

/// Content lookup followed by location adjustment.
///
/// `content(i) = softmax_i(α · cos(key, memory(i)))`, then
/// `a = g · prev + (1 - g) · content`, then `a` is circularly convolved with
/// `shift`, a distribution over offsets `-n..=n`. A zero key, or a zero
/// memory row, contributes similarity 0, so an all-zero memory or key gives
/// uniform content weights. The result sums to 1 whenever `prev` and
/// `shift` do.
pub fn address_content_location(
    tape: &mut Tape,
    memory: Var,
    key: Var,
    sharpness: f64,
    gate: Var,
    shift: Var,
    prev: Var,
) -> Result<Var, CellError> {
    let (slots, _) = tape.shape(memory);
    let shift_len = tape.shape(shift).0;
    if shift_len.is_multiple_of(2) || shift_len > slots {
        return Err(CellError::InvalidShift {
            max_shift: shift_len / 2,
            slots,
        });
    }
    let sim = tape.cosine_rows(memory, key)?;
    let sim = tape.scale(sim, sharpness);
    let content = tape.softmax(sim)?;
    let kept = tape.scale_by(prev, gate)?;
    let fresh_weight = tape.one_minus(gate);
    let fresh = tape.scale_by(content, fresh_weight)?;
    let blended = tape.add(kept, fresh)?;
    Ok(tape.circular_conv(blended, shift)?)
}
