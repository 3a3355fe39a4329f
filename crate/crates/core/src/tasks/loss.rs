use super::{Episode, LossKind, TaskError};
use crate::numcore::{Tape, Tensor, Var, PROB_FLOOR};

/// Loss and task success metric of one episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    pub loss: f64,
    /// Masked MSE for counting, masked argmax accuracy otherwise.
    pub metric: f64,
    /// Number of masked steps the metric averages over.
    pub steps: usize,
}

fn masked_steps(predictions: usize, ep: &Episode) -> Result<usize, TaskError> {
    if predictions != ep.len() {
        return Err(TaskError::Misaligned {
            expected: ep.len(),
            found: predictions,
        });
    }
    match ep.mask.iter().filter(|&&m| m).count() {
        0 => Err(TaskError::EmptyMask),
        n => Ok(n),
    }
}

fn softmax(v: &Tensor) -> Tensor {
    let max = v.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = v.map(|x| (x - max).exp());
    let s = e.sum();
    e.map(|x| x / s)
}

/// Mean masked squared error per component, or mean masked cross-entropy of
/// `softmax(prediction)`. Predictions are raw output-layer values.
pub fn episode_loss(predictions: &[Tensor], ep: &Episode) -> Result<Score, TaskError> {
    let count = masked_steps(predictions.len(), ep)?;
    let n = count as f64;
    let steps = predictions
        .iter()
        .zip(&ep.targets)
        .zip(&ep.mask)
        .filter(|(_, &m)| m)
        .map(|(pair, _)| pair);
    match ep.loss_kind {
        LossKind::SquaredError => {
            let k = ep.targets[0].len() as f64;
            let se: f64 = steps
                .map(|(p, y)| p.zip_map(y, |a, b| (a - b) * (a - b)).sum())
                .sum();
            let mse = se / (n * k);
            Ok(Score {
                loss: mse,
                metric: mse,
                steps: count,
            })
        }
        LossKind::CrossEntropy => {
            let (mut ce, mut correct) = (0.0, 0usize);
            for (p, y) in steps {
                let q = softmax(p);
                ce -= y
                    .data()
                    .iter()
                    .zip(q.data())
                    .map(|(&t, &qi)| t * qi.max(PROB_FLOOR).ln())
                    .sum::<f64>();
                if p.argmax() == y.argmax() {
                    correct += 1;
                }
            }
            Ok(Score {
                loss: ce / n,
                metric: correct as f64 / n,
                steps: count,
            })
        }
    }
}

/// Differentiable form of [`episode_loss`]'s loss on the outputs of an unroll.
pub fn episode_loss_on_tape(
    tape: &mut Tape,
    outputs: &[Var],
    ep: &Episode,
) -> Result<Var, TaskError> {
    let n = masked_steps(outputs.len(), ep)? as f64;
    let k = ep.targets[0].len() as f64;
    let mut total: Option<Var> = None;
    for ((&o, y), &m) in outputs.iter().zip(&ep.targets).zip(&ep.mask) {
        if !m {
            continue;
        }
        let y = tape.leaf(y.clone());
        let term = match ep.loss_kind {
            LossKind::SquaredError => tape.squared_error(o, y)?,
            LossKind::CrossEntropy => {
                let q = tape.softmax(o)?;
                tape.cross_entropy(q, y)?
            }
        };
        total = Some(match total {
            Some(t) => tape.add(t, term)?,
            None => term,
        });
    }
    let scale = match ep.loss_kind {
        LossKind::SquaredError => 1.0 / (n * k),
        LossKind::CrossEntropy => 1.0 / n,
    };
    Ok(tape.scale(total.expect("mask checked non-empty"), scale))
}
