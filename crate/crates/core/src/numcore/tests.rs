use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
    Tensor::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect(),
    )
}

/// Entries with magnitude in `[0.05, 2)` and random sign, away from relu's kink.
fn random_signed(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| {
                let v = rng.gen_range(0.05..2.0);
                if rng.gen_bool(0.5) {
                    v
                } else {
                    -v
                }
            })
            .collect(),
    )
}

/// Checks backward against central differences for `loss = Σ proj ⊙ op(inputs)`.
fn max_error_for<F>(op: F, inputs: &[Tensor], proj_seed: u64) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    let forward = |tape: &mut Tape, vals: &[Tensor]| -> (Vec<Var>, Var) {
        let vars: Vec<Var> = vals.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = op(tape, &vars);
        let (r, c) = tape.shape(out);
        let mut rng = ChaCha8Rng::seed_from_u64(proj_seed);
        let proj = tape.leaf(random(&mut rng, r, c, -1.0, 1.0));
        let weighted = tape.mul(out, proj).unwrap();
        (vars, tape.sum(weighted))
    };
    let mut tape = Tape::new();
    let (vars, loss) = forward(&mut tape, inputs);
    let grads = tape.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    for (i, var) in vars.iter().enumerate() {
        let analytic = grads.get(*var);
        let numeric = finite_diff(
            |probe| {
                let mut vals = inputs.to_vec();
                vals[i] = probe.clone();
                let mut t = Tape::new();
                let (_, l) = forward(&mut t, &vals);
                t.value(l).item()
            },
            &inputs[i],
            FD_STEP,
        );
        worst = worst.max(max_relative_error(&analytic, &numeric));
    }
    worst
}

type Build = Box<dyn Fn(&mut Tape, &[Var]) -> Var>;
type Sample = Box<dyn Fn(&mut ChaCha8Rng) -> Vec<Tensor>>;

fn op_cases() -> Vec<(&'static str, Build, Sample)> {
    vec![
        (
            "add",
            Box::new(|t, v| t.add(v[0], v[1]).unwrap()),
            Box::new(|r| vec![random_signed(r, 3, 2), random_signed(r, 3, 2)]),
        ),
        (
            "sub",
            Box::new(|t, v| t.sub(v[0], v[1]).unwrap()),
            Box::new(|r| vec![random_signed(r, 4, 1), random_signed(r, 4, 1)]),
        ),
        (
            "mul",
            Box::new(|t, v| t.mul(v[0], v[1]).unwrap()),
            Box::new(|r| vec![random_signed(r, 2, 3), random_signed(r, 2, 3)]),
        ),
        (
            "div",
            Box::new(|t, v| t.div(v[0], v[1]).unwrap()),
            Box::new(|r| vec![random_signed(r, 3, 1), random(r, 3, 1, 0.5, 2.0)]),
        ),
        (
            "scale",
            Box::new(|t, v| t.scale(v[0], -1.7)),
            Box::new(|r| vec![random_signed(r, 3, 3)]),
        ),
        (
            "scale_by",
            Box::new(|t, v| t.scale_by(v[0], v[1]).unwrap()),
            Box::new(|r| vec![random_signed(r, 3, 2), random_signed(r, 1, 1)]),
        ),
        (
            "one_minus",
            Box::new(|t, v| t.one_minus(v[0])),
            Box::new(|r| vec![random_signed(r, 3, 1)]),
        ),
        (
            "matmul",
            Box::new(|t, v| t.matmul(v[0], v[1]).unwrap()),
            Box::new(|r| vec![random_signed(r, 3, 4), random_signed(r, 4, 2)]),
        ),
        (
            "transpose",
            Box::new(|t, v| t.transpose(v[0])),
            Box::new(|r| vec![random_signed(r, 2, 5)]),
        ),
        (
            "concat_rows",
            Box::new(|t, v| t.concat_rows(v[0], v[1]).unwrap()),
            Box::new(|r| vec![random_signed(r, 2, 3), random_signed(r, 1, 3)]),
        ),
        (
            "slice_rows",
            Box::new(|t, v| t.slice_rows(v[0], 1, 2).unwrap()),
            Box::new(|r| vec![random_signed(r, 4, 2)]),
        ),
        (
            "scale_rows",
            Box::new(|t, v| t.scale_rows(v[0], v[1]).unwrap()),
            Box::new(|r| vec![random_signed(r, 3, 4), random_signed(r, 3, 1)]),
        ),
        (
            "sigmoid",
            Box::new(|t, v| t.sigmoid(v[0])),
            Box::new(|r| vec![random_signed(r, 5, 1)]),
        ),
        (
            "tanh",
            Box::new(|t, v| t.tanh(v[0])),
            Box::new(|r| vec![random_signed(r, 5, 1)]),
        ),
        (
            "relu",
            Box::new(|t, v| t.relu(v[0])),
            Box::new(|r| vec![random_signed(r, 5, 2)]),
        ),
        (
            "softmax",
            Box::new(|t, v| t.softmax(v[0]).unwrap()),
            Box::new(|r| vec![random_signed(r, 6, 1)]),
        ),
        (
            "sum",
            Box::new(|t, v| t.sum(v[0])),
            Box::new(|r| vec![random_signed(r, 3, 3)]),
        ),
        (
            "squared_error",
            Box::new(|t, v| t.squared_error(v[0], v[1]).unwrap()),
            Box::new(|r| vec![random_signed(r, 4, 1), random_signed(r, 4, 1)]),
        ),
        (
            "cross_entropy",
            Box::new(|t, v| t.cross_entropy(v[0], v[1]).unwrap()),
            Box::new(|r| vec![random(r, 5, 1, 0.05, 1.0), random(r, 5, 1, 0.0, 1.0)]),
        ),
        (
            "cosine_rows",
            Box::new(|t, v| t.cosine_rows(v[0], v[1]).unwrap()),
            Box::new(|r| vec![random_signed(r, 4, 3), random_signed(r, 3, 1)]),
        ),
        (
            "circular_conv",
            Box::new(|t, v| t.circular_conv(v[0], v[1]).unwrap()),
            Box::new(|r| vec![random_signed(r, 5, 1), random_signed(r, 3, 1)]),
        ),
    ]
}

#[test]
fn every_op_matches_finite_differences() {
    for (name, build, sample) in op_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for trial in 0..100 {
            let inputs = sample(&mut rng);
            worst = worst.max(max_error_for(&build, &inputs, trial));
        }
        assert!(worst <= 1e-5, "{name}: max relative error {worst:e}");
    }
}

#[test]
fn random_graph_matches_finite_differences() {
    // loss = Σ σ(W x) ⊙ tanh(W x) on positive inputs, so no gradient entry is
    // close to zero and the relative error is not dominated by rounding.
    let loss = |w: &Tensor, x: &Tensor| -> (Tape, Var, Var, Var) {
        let mut t = Tape::new();
        let (wv, xv) = (t.leaf(w.clone()), t.leaf(x.clone()));
        let z = t.matmul(wv, xv).unwrap();
        let s = t.sigmoid(z);
        let h = t.tanh(z);
        let p = t.mul(s, h).unwrap();
        let l = t.sum(p);
        (t, wv, xv, l)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let w = random(&mut rng, 4, 3, 0.05, 1.0);
        let x = random(&mut rng, 3, 1, 0.05, 1.0);
        let (t, wv, xv, l) = loss(&w, &x);
        let g = t.backward(l).unwrap();
        let gw = finite_diff(
            |p| {
                let (t, _, _, l) = loss(p, &x);
                t.value(l).item()
            },
            &w,
            FD_STEP,
        );
        let gx = finite_diff(
            |p| {
                let (t, _, _, l) = loss(&w, p);
                t.value(l).item()
            },
            &x,
            FD_STEP,
        );
        let err = max_relative_error(&g.get(wv), &gw).max(max_relative_error(&g.get(xv), &gx));
        assert!(err <= 1e-6, "trial {trial}: {err:e}");
    }
}

#[test]
fn sigmoid_of_zero_is_half() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros(3, 1));
    let y = tape.sigmoid(x);
    assert_eq!(tape.value(y).data(), &[0.5, 0.5, 0.5]);
}

#[test]
fn softmax_of_constant_is_uniform() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::column(&[1.0, 1.0, 1.0]));
    let y = tape.softmax(x).unwrap();
    for &v in tape.value(y).data() {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn identity_matmul_returns_input() {
    let mut tape = Tape::new();
    let i = tape.leaf(Tensor::identity(2));
    let x = tape.leaf(Tensor::column(&[3.5, -2.0]));
    let y = tape.matmul(i, x).unwrap();
    assert_eq!(tape.value(y).data(), &[3.5, -2.0]);
}

#[test]
fn gradient_of_sum_is_ones() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::column(&[0.3, -1.0, 8.0, 2.0]));
    let s = tape.sum(x);
    let g = tape.backward(s).unwrap();
    assert_eq!(g.get(x), Tensor::ones(4, 1));
    assert_eq!(g.get(s), Tensor::scalar(1.0));
}

#[test]
fn gradient_of_squared_norm() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::column(&[1.0, 2.0]));
    let zero = tape.leaf(Tensor::zeros(2, 1));
    let l = tape.squared_error(x, zero).unwrap();
    assert_eq!(tape.value(l).item(), 5.0);
    let g = tape.backward(l).unwrap();
    assert_eq!(g.get(x).data(), &[2.0, 4.0]);
}

#[test]
fn unreachable_nodes_get_zero_gradient() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::column(&[1.0, 2.0]));
    let unused = tape.leaf(Tensor::column(&[5.0]));
    let side = tape.tanh(unused);
    let s = tape.sum(x);
    let g = tape.backward(s).unwrap();
    assert_eq!(g.get(unused), Tensor::zeros(1, 1));
    assert_eq!(g.get(side), Tensor::zeros(1, 1));
}

#[test]
fn non_scalar_root_is_rejected() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::column(&[1.0, 2.0]));
    assert_eq!(
        tape.backward(x).unwrap_err(),
        NumError::NonScalarRoot((2, 1))
    );
}

#[test]
fn shape_mismatch_reports_both_shapes() {
    let mut tape = Tape::new();
    let a = tape.leaf(Tensor::zeros(2, 1));
    let b = tape.leaf(Tensor::zeros(3, 1));
    let err = tape.add(a, b).unwrap_err();
    assert_eq!(
        err,
        NumError::ShapeMismatch {
            op: "add",
            left: (2, 1),
            right: (3, 1)
        }
    );
    assert!(err.to_string().contains("(2, 1)") && err.to_string().contains("(3, 1)"));
}

#[test]
fn cross_entropy_rejects_negative_probability_and_floors_zero() {
    let mut tape = Tape::new();
    let y = tape.leaf(Tensor::column(&[1.0, 0.0]));
    let bad = tape.leaf(Tensor::column(&[-0.1, 1.1]));
    assert!(matches!(
        tape.cross_entropy(bad, y),
        Err(NumError::Domain { .. })
    ));
    let zero = tape.leaf(Tensor::column(&[0.0, 1.0]));
    let l = tape.cross_entropy(zero, y).unwrap();
    assert!((tape.value(l).item() + PROB_FLOOR.ln()).abs() < 1e-12);
}

#[test]
fn relu_derivative_at_zero_is_zero() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::column(&[0.0, 1.0]));
    let y = tape.relu(x);
    let s = tape.sum(y);
    let g = tape.backward(s).unwrap();
    assert_eq!(g.get(x).data(), &[0.0, 1.0]);
}

#[test]
fn finite_diff_examples() {
    let g = finite_diff(|x| x.sum(), &Tensor::column(&[3.0, 7.0]), FD_STEP);
    for &v in g.data() {
        assert!((v - 1.0).abs() < 1e-9);
    }
    let sig = |x: &Tensor| {
        x.data()
            .iter()
            .map(|v| 1.0 / (1.0 + (-v).exp()))
            .sum::<f64>()
    };
    let g = finite_diff(sig, &Tensor::zeros(3, 1), FD_STEP);
    for &v in g.data() {
        assert!((v - 0.25).abs() < 1e-9);
    }
}

#[test]
fn tape_is_topologically_ordered() {
    let mut tape = Tape::new();
    let a = tape.leaf(Tensor::column(&[1.0]));
    let b = tape.sigmoid(a);
    let c = tape.add(a, b).unwrap();
    let d = tape.mul(c, b).unwrap();
    for v in [b, c, d] {
        assert!(tape.operands(v).iter().all(|o| o.index() < v.index()));
    }
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(values in prop::collection::vec(-30.0f64..30.0, 1..12)) {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::column(&values));
        let y = tape.softmax(x).unwrap();
        let out = tape.value(y);
        prop_assert!((out.sum() - 1.0).abs() <= 1e-12);
        prop_assert!(out.data().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn reuse_accumulates_linearly(values in prop::collection::vec(-3.0f64..3.0, 1..6)) {
        let once = {
            let mut tape = Tape::new();
            let x = tape.leaf(Tensor::column(&values));
            let y = tape.tanh(x);
            let s = tape.sum(y);
            tape.backward(s).unwrap().get(x)
        };
        let twice = {
            let mut tape = Tape::new();
            let x = tape.leaf(Tensor::column(&values));
            let y1 = tape.tanh(x);
            let y2 = tape.tanh(x);
            let both = tape.add(y1, y2).unwrap();
            let s = tape.sum(both);
            tape.backward(s).unwrap().get(x)
        };
        for (a, b) in once.data().iter().zip(twice.data()) {
            prop_assert!((2.0 * a - b).abs() <= 1e-15);
        }
    }
}

#[test]
fn tensor_relative_error_uses_the_max_norm() {
    let a = Tensor::column(&[1.0, 3e-8]);
    let b = Tensor::column(&[1.0, 1e-8]);
    assert!((tensor_relative_error(&a, &b) - 2e-8 / 2.0).abs() < 1e-20);
    assert_eq!(tensor_relative_error(&a, &a), 0.0);
    assert_eq!(
        tensor_relative_error(&Tensor::zeros(2, 1), &Tensor::zeros(2, 1)),
        0.0
    );
    assert_eq!(
        tensor_relative_error(&a, &Tensor::column(&[f64::NAN, 0.0])),
        f64::INFINITY
    );
}
