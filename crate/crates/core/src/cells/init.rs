use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{CellConfig, ParamKind, Params};
use crate::numcore::Tensor;

/// Bias value used by both initialization modes.
pub const BIAS_INIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Standard normal weights scaled by `1/√fan_in`.
    #[default]
    Scaled,
    /// Raw standard normal weights.
    Paper,
}

/// Draws every parameter of `config` from a generator seeded with `seed`.
/// Weights are normal with mean 0; biases are 0.1.
pub fn init_params(config: &CellConfig, mode: InitMode, seed: u64) -> Params {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Params::new();
    for shape in config.param_shapes() {
        let t = match shape.kind {
            ParamKind::Bias => Tensor::filled(shape.rows, shape.cols, BIAS_INIT),
            ParamKind::Weight => {
                let scale = match mode {
                    InitMode::Scaled => 1.0 / (shape.cols as f64).sqrt(),
                    InitMode::Paper => 1.0,
                };
                let data = (0..shape.rows * shape.cols)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        scale * z
                    })
                    .collect::<Vec<f64>>();
                Tensor::from_vec(shape.rows, shape.cols, data)
            }
        };
        params.insert(shape.name, t);
    }
    params
}
