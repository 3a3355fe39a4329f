use serde::{Deserialize, Serialize};

use crate::cells::Params;
use crate::numcore::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Plain gradient descent or Adam over a parameter set in name order.
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, params: &Params) -> Self {
        let zeros: Vec<Tensor> = params
            .iter()
            .map(|(_, p)| Tensor::zeros(p.rows(), p.cols()))
            .collect();
        Optimizer {
            kind,
            lr,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    /// Applies one update; `grads` follow the iteration order of `params`.
    pub fn step(&mut self, params: &mut Params, grads: &[Tensor]) {
        self.t += 1;
        let (bc1, bc2) = (1.0 - BETA1.powi(self.t), 1.0 - BETA2.powi(self.t));
        for (i, ((_, p), g)) in params.iter_mut().zip(grads).enumerate() {
            match self.kind {
                OptimizerKind::Sgd => {
                    for (w, d) in p.data_mut().iter_mut().zip(g.data()) {
                        *w -= self.lr * d;
                    }
                }
                OptimizerKind::Adam => {
                    let (m, v) = (self.m[i].data_mut(), self.v[i].data_mut());
                    for (j, (w, &d)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                        m[j] = BETA1 * m[j] + (1.0 - BETA1) * d;
                        v[j] = BETA2 * v[j] + (1.0 - BETA2) * d * d;
                        *w -= self.lr * (m[j] / bc1) / ((v[j] / bc2).sqrt() + EPS);
                    }
                }
            }
        }
    }
}

/// Rescales all gradients by `threshold / g` when their global L2 norm `g`
/// exceeds `threshold`. Returns the norm before clipping.
pub fn clip_gradients(grads: &mut [Tensor], threshold: f64) -> f64 {
    assert!(threshold > 0.0, "clip threshold must be positive");
    let norm = grads.iter().map(Tensor::norm_sq).sum::<f64>().sqrt();
    if norm > threshold {
        let s = threshold / norm;
        for g in grads.iter_mut() {
            g.scale_in_place(s);
        }
    }
    norm
}
