use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TrainError;
use crate::cells::{
    Activation, AddressingMode, Arch, ArchConfig, CellConfig, Dims, InitMode, Network,
};
use crate::numcore::{finite_diff, tensor_relative_error, Tape, Tensor, FD_STEP};

/// Largest acceptable relative error between backward and finite differences.
pub const GRAD_CHECK_TOLERANCE: f64 = 1e-5;

const STEPS: usize = 3;

/// Small configurations that exercise every code path of `arch`; RAM is
/// returned once per addressing mode.
pub fn grad_check_configs(arch: Arch) -> Vec<CellConfig> {
    let base = CellConfig::new(arch, Dims::new(3, 4, 3, 3, 5))
        .with_hidden_act(Activation::Tanh)
        .with_output_act(Activation::Tanh);
    match base.cell {
        ArchConfig::Ram(rc) => [
            AddressingMode::Direct,
            AddressingMode::ContentLocation {
                sharpness: 5.0,
                max_shift: 1,
            },
        ]
        .into_iter()
        .map(|addressing| CellConfig {
            cell: ArchConfig::Ram(crate::cells::RamConfig { addressing, ..rc }),
            ..base
        })
        .collect(),
        _ => vec![base],
    }
}

/// `Σ_t p_t · o_t` over a 3-step unroll, for fixed random projections `p_t`.
fn loss(net: &Network, inputs: &[Tensor], proj: &[Tensor]) -> Result<f64, TrainError> {
    let mut tape = Tape::new();
    let p = net.bind(&mut tape);
    let xs: Vec<_> = inputs.iter().map(|x| tape.leaf(x.clone())).collect();
    let steps = net.unroll(&mut tape, &p, &xs)?;
    Ok(steps
        .iter()
        .zip(proj)
        .map(|(s, w)| tape.value(s.output).zip_map(w, |a, b| a * b).sum())
        .sum())
}

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
}

/// Max relative error between backward and central differences over every
/// parameter tensor, across `trials` random networks and input sequences.
///
/// Errors are measured per tensor in the max norm. Central differences at the
/// default step carry about 1e-11 of rounding noise, which would swamp any
/// single entry whose true gradient happens to be near zero.
pub fn grad_check_cell(config: &CellConfig, seed: u64, trials: usize) -> Result<f64, TrainError> {
    assert!(trials >= 1, "grad check needs at least one trial");
    let d = config.dims;
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let mut net = Network::init(*config, InitMode::Scaled, rng.gen())?;
        for (_, t) in net.params.iter_mut() {
            let noise = random(&mut rng, t.rows(), t.cols());
            t.add_assign(&noise.map(|v| 0.3 * v));
        }
        let inputs: Vec<Tensor> = (0..STEPS).map(|_| random(&mut rng, d.input, 1)).collect();
        let proj: Vec<Tensor> = (0..STEPS).map(|_| random(&mut rng, d.output, 1)).collect();

        let mut tape = Tape::new();
        let p = net.bind(&mut tape);
        let xs: Vec<_> = inputs.iter().map(|x| tape.leaf(x.clone())).collect();
        let steps = net.unroll(&mut tape, &p, &xs)?;
        let mut total = None;
        for (s, w) in steps.iter().zip(&proj) {
            let w = tape.leaf(w.clone());
            let term = tape.mul(s.output, w)?;
            let term = tape.sum(term);
            total = Some(match total {
                Some(t) => tape.add(t, term)?,
                None => term,
            });
        }
        let grads = tape.backward(total.expect("at least one step"))?;

        let names: Vec<String> = net.params.names().cloned().collect();
        for name in names {
            let analytic = grads.get(p.get(&name)?);
            let original = net.params.get(&name).unwrap().clone();
            let mut probe_net = net.clone();
            let mut failure = None;
            let numeric = finite_diff(
                |t| {
                    *probe_net.params.get_mut(&name).unwrap() = t.clone();
                    loss(&probe_net, &inputs, &proj).unwrap_or_else(|e| {
                        failure = Some(e);
                        f64::NAN
                    })
                },
                &original,
                FD_STEP,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            worst = worst.max(tensor_relative_error(&analytic, &numeric));
        }
    }
    Ok(worst)
}
