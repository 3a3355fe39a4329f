use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

// Straight-line reference implementations on plain tensors.

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn act(a: Activation, t: &Tensor) -> Tensor {
    match a {
        Activation::Identity => t.clone(),
        Activation::Sigmoid => t.map(sig),
        Activation::Tanh => t.map(f64::tanh),
        Activation::Relu => t.map(|v| v.max(0.0)),
    }
}

fn affine(p: &Params, w: &str, x: &Tensor, b: &str) -> Tensor {
    let mut out = p.get(w).unwrap().matmul(x);
    out.add_assign(p.get(b).unwrap());
    out
}

fn affine2(p: &Params, w1: &str, x1: &Tensor, w2: &str, x2: &Tensor, b: &str) -> Tensor {
    let mut out = p.get(w1).unwrap().matmul(x1);
    out.add_assign(&p.get(w2).unwrap().matmul(x2));
    out.add_assign(p.get(b).unwrap());
    out
}

fn softmax(t: &Tensor) -> Tensor {
    let max = t.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = t.map(|v| (v - max).exp());
    let s = e.sum();
    e.map(|v| v / s)
}

fn ref_rnn(cfg: &CellConfig, p: &Params, h: &Tensor, x: &Tensor) -> (Tensor, Tensor) {
    let h2 = act(cfg.hidden_act, &affine2(p, "w_xh", x, "w_hh", h, "b_h"));
    let o = act(cfg.output_act, &affine(p, "w_ho", &h2, "b_o"));
    (h2, o)
}

fn ref_lstm(
    cfg: &CellConfig,
    p: &Params,
    h: &Tensor,
    m: &Tensor,
    x: &Tensor,
) -> (Tensor, Tensor, Tensor) {
    let c = affine(p, "w_hc", h, "b_c").map(f64::tanh);
    let gate = |wh: &str, wx: &str, b: &str| sig(affine2(p, wh, h, wx, x, b).item());
    let (gi, gf, go) = (
        gate("w_hgi", "w_xgi", "b_gi"),
        gate("w_hgf", "w_xgf", "b_gf"),
        gate("w_hgo", "w_xgo", "b_go"),
    );
    let m2 = c.zip_map(m, |cv, mv| gi * cv + gf * mv);
    let r = m2.map(|v| go * v);
    let h2 = act(cfg.hidden_act, &affine2(p, "w_xh", x, "w_rh", &r, "b_h"));
    let o = act(cfg.output_act, &affine(p, "w_ho", &h2, "b_o"));
    (h2, m2, o)
}

/// Stack as a list of rows, row 0 on top.
fn ref_stack(
    cfg: &CellConfig,
    p: &Params,
    h: &Tensor,
    s: &[Vec<f64>],
    x: &Tensor,
) -> (Tensor, Vec<Vec<f64>>, Tensor) {
    let d = affine(p, "w_hd", h, "b_op").map(sig);
    let (push, pop, noop) = (d.data()[0], d.data()[1], d.data()[2]);
    let c = affine(p, "w_hc", h, "b_c").map(f64::tanh);
    let go = sig(affine2(p, "w_hgo", h, "w_xgo", x, "b_go").item());
    let width = c.len();
    let at = |i: isize| -> Vec<f64> {
        if i < 0 {
            c.data().to_vec()
        } else {
            s.get(i as usize)
                .cloned()
                .unwrap_or_else(|| vec![0.0; width])
        }
    };
    let new: Vec<Vec<f64>> = (0..=s.len() as isize)
        .map(|i| {
            let (a, b, k) = (at(i - 1), at(i + 1), at(i));
            (0..width)
                .map(|j| push * a[j] + pop * b[j] + noop * k[j])
                .collect()
        })
        .collect();
    let r = Tensor::column(&new[0].iter().map(|v| go * v).collect::<Vec<_>>());
    let h2 = act(cfg.hidden_act, &affine2(p, "w_xh", x, "w_rh", &r, "b_h"));
    let o = act(cfg.output_act, &affine(p, "w_ho", &h2, "b_o"));
    (h2, new, o)
}

fn ref_ram(
    cfg: &CellConfig,
    p: &Params,
    h: &Tensor,
    mem: &Tensor,
    x: &Tensor,
) -> (Tensor, Tensor, Tensor, Tensor) {
    let gi = affine2(p, "w_hgi", h, "w_xgi", x, "b_gi").map(sig);
    let gf = affine2(p, "w_hgf", h, "w_xgf", x, "b_gf").map(sig);
    let c = affine(p, "w_hc", h, "b_c").map(f64::tanh);
    let mut m2 = mem.clone();
    for i in 0..mem.rows() {
        for j in 0..mem.cols() {
            m2.set(
                i,
                j,
                gi.data()[i] * c.data()[j] + gf.data()[i] * mem.get(i, j),
            );
        }
    }
    let a = softmax(&affine(p, "w_ha", h, "b_a"));
    let mut r = Tensor::zeros(mem.cols(), 1);
    for i in 0..mem.rows() {
        for j in 0..mem.cols() {
            r.data_mut()[j] += a.data()[i] * m2.get(i, j);
        }
    }
    let h2 = act(cfg.hidden_act, &affine2(p, "w_xh", x, "w_rh", &r, "b_h"));
    let o = act(cfg.output_act, &affine(p, "w_ho", &h2, "b_o"));
    (h2, m2, a, o)
}

fn random_inputs(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Vec<Tensor> {
    (0..len)
        .map(|_| Tensor::from_vec(n, 1, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect()
}

fn close(a: &Tensor, b: &Tensor, tol: f64) -> bool {
    a.shape() == b.shape()
        && a.data()
            .iter()
            .zip(b.data())
            .all(|(x, y)| (x - y).abs() <= tol)
}

fn run(net: &Network, inputs: &[Tensor]) -> (Tape, Vec<Step>) {
    let mut tape = Tape::new();
    let p = net.bind(&mut tape);
    let xs: Vec<Var> = inputs.iter().map(|x| tape.leaf(x.clone())).collect();
    let steps = net.unroll(&mut tape, &p, &xs).unwrap();
    (tape, steps)
}

fn value(tape: &Tape, step: &Step, name: &str) -> Tensor {
    tape.value(step.probe(name).unwrap()).clone()
}

#[test]
fn rnn_with_zero_weights_outputs_bias() {
    let cfg =
        CellConfig::new(Arch::Rnn, Dims::new(3, 4, 2, 0, 0)).with_output_act(Activation::Sigmoid);
    let mut net = Network::init(cfg, InitMode::Scaled, 1).unwrap();
    for (name, t) in net.params.iter_mut() {
        let fill = if name == "b_o" { 0.7 } else { 0.0 };
        *t = Tensor::filled(t.rows(), t.cols(), fill);
    }
    let (tape, steps) = run(&net, &[Tensor::column(&[1.0, -2.0, 0.5])]);
    assert_eq!(value(&tape, &steps[0], "hidden"), Tensor::zeros(4, 1));
    assert_eq!(tape.value(steps[0].output).data(), &[sig(0.7), sig(0.7)]);
}

#[test]
fn rnn_without_recurrence_is_feedforward() {
    let cfg =
        CellConfig::new(Arch::Rnn, Dims::new(3, 3, 3, 0, 0)).with_hidden_act(Activation::Identity);
    let mut net = Network::init(cfg, InitMode::Scaled, 2).unwrap();
    *net.params.get_mut("w_xh").unwrap() = Tensor::identity(3);
    *net.params.get_mut("w_hh").unwrap() = Tensor::zeros(3, 3);
    *net.params.get_mut("b_h").unwrap() = Tensor::zeros(3, 1);
    let xs = [
        Tensor::column(&[1.0, 2.0, 3.0]),
        Tensor::column(&[-4.0, 0.5, 0.0]),
    ];
    let (tape, steps) = run(&net, &xs);
    for (x, s) in xs.iter().zip(&steps) {
        assert_eq!(&value(&tape, s, "hidden"), x);
    }
}

#[test]
fn rnn_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..5 {
        let cfg = CellConfig::new(Arch::Rnn, Dims::new(3, 4, 3, 0, 0));
        let net = Network::init(cfg, InitMode::Paper, seed).unwrap();
        let xs = random_inputs(&mut rng, 3, 6);
        let (tape, steps) = run(&net, &xs);
        let mut h = Tensor::zeros(4, 1);
        for (x, s) in xs.iter().zip(&steps) {
            let (h2, o) = ref_rnn(&cfg, &net.params, &h, x);
            assert!(close(&value(&tape, s, "hidden"), &h2, 1e-12));
            assert!(close(tape.value(s.output), &o, 1e-12));
            h = h2;
        }
    }
}

#[test]
fn lstm_with_zero_weights_halves_memory() {
    let cfg = CellConfig::new(Arch::Lstm, Dims::new(2, 3, 2, 4, 0));
    let mut net = Network::init(cfg, InitMode::Scaled, 1).unwrap();
    for (_, t) in net.params.iter_mut() {
        *t = Tensor::zeros(t.rows(), t.cols());
    }
    let mut tape = Tape::new();
    let p = net.bind(&mut tape);
    let h = tape.leaf(Tensor::zeros(3, 1));
    let m = tape.leaf(Tensor::column(&[1.0, -2.0, 4.0, 0.5]));
    let x = tape.leaf(Tensor::column(&[1.0, 0.0]));
    let step = net
        .step(&mut tape, &p, &CellState::Lstm { h, m }, x)
        .unwrap();
    assert_eq!(value(&tape, &step, "candidate"), Tensor::zeros(4, 1));
    for g in ["gate_input", "gate_forget", "gate_output"] {
        assert_eq!(value(&tape, &step, g).item(), 0.5);
    }
    assert_eq!(
        value(&tape, &step, "memory").data(),
        &[0.5, -1.0, 2.0, 0.25]
    );
}

#[test]
fn lstm_with_pinned_gates_stores_candidate() {
    let mut lc = LstmConfig::default();
    lc.gates = GateMode::Pinned;
    let cfg = CellConfig {
        cell: ArchConfig::Lstm(lc),
        ..CellConfig::new(Arch::Lstm, Dims::new(2, 3, 2, 3, 0))
    };
    let net = Network::init(cfg, InitMode::Paper, 5).unwrap();
    let mut tape = Tape::new();
    let p = net.bind(&mut tape);
    let h = tape.leaf(Tensor::column(&[0.2, -0.4, 0.9]));
    let m = tape.leaf(Tensor::column(&[7.0, 7.0, 7.0]));
    let x = tape.leaf(Tensor::column(&[1.0, 0.0]));
    let step = net
        .step(&mut tape, &p, &CellState::Lstm { h, m }, x)
        .unwrap();
    assert_eq!(
        value(&tape, &step, "memory"),
        value(&tape, &step, "candidate")
    );
}

#[test]
fn lstm_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for seed in 0..5 {
        let cfg = CellConfig::new(Arch::Lstm, Dims::new(3, 4, 3, 5, 0));
        let net = Network::init(cfg, InitMode::Paper, seed).unwrap();
        let xs = random_inputs(&mut rng, 3, 6);
        let (tape, steps) = run(&net, &xs);
        let (mut h, mut m) = (Tensor::zeros(4, 1), Tensor::zeros(5, 1));
        for (x, s) in xs.iter().zip(&steps) {
            let (h2, m2, o) = ref_lstm(&cfg, &net.params, &h, &m, x);
            assert!(close(&value(&tape, s, "hidden"), &h2, 1e-12));
            assert!(close(&value(&tape, s, "memory"), &m2, 1e-12));
            assert!(close(tape.value(s.output), &o, 1e-12));
            (h, m) = (h2, m2);
        }
    }
}

fn stack_update_values(stack: &Tensor, c: &[f64], d: (f64, f64, f64)) -> Tensor {
    let mut tape = Tape::new();
    let s = tape.leaf(stack.clone());
    let c = tape.leaf(Tensor::from_vec(1, c.len(), c.to_vec()));
    let push = tape.leaf(Tensor::scalar(d.0));
    let pop = tape.leaf(Tensor::scalar(d.1));
    let noop = tape.leaf(Tensor::scalar(d.2));
    let out = stack::update_stack(&mut tape, s, c, push, Some(pop), noop, 64).unwrap();
    tape.value(out).clone()
}

#[test]
fn pure_push_shifts_everything_down() {
    let s = Tensor::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
    let out = stack_update_values(&s, &[9.0, 8.0], (1.0, 0.0, 0.0));
    assert_eq!(
        out,
        Tensor::from_rows(&[&[9.0, 8.0], &[1.0, 2.0], &[3.0, 4.0]])
    );
}

#[test]
fn partial_push_on_empty_stack_scales_candidate() {
    let out = stack_update_values(&Tensor::zeros(1, 3), &[1.0, -2.0, 0.5], (0.8, 0.0, 0.0));
    assert_eq!(out.row(0), &[0.8, -1.6, 0.4]);
}

#[test]
fn pure_pop_shifts_everything_up() {
    let s = Tensor::from_rows(&[&[1.0], &[2.0], &[3.0]]);
    let out = stack_update_values(&s, &[9.0], (0.0, 1.0, 0.0));
    assert_eq!(out.data(), &[2.0, 3.0, 0.0, 0.0]);
}

#[test]
fn pure_push_conserves_every_candidate() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut s = Tensor::zeros(1, 3);
    let mut pushed = Vec::new();
    for _ in 0..12 {
        let c: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        s = stack_update_values(&s, &c, (1.0, 0.0, 0.0));
        pushed.push(c);
    }
    let t = pushed.len();
    for i in 0..t {
        assert_eq!(s.row(i), pushed[t - 1 - i].as_slice());
    }
}

#[test]
fn stack_update_is_linear_in_contents() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let s = Tensor::from_vec(4, 2, (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let c: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d = (
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
        );
        let lambda = rng.gen_range(-3.0..3.0);
        let base = stack_update_values(&s, &c, d);
        let scaled_c: Vec<f64> = c.iter().map(|v| v * lambda).collect();
        let scaled = stack_update_values(&s.map(|v| v * lambda), &scaled_c, d);
        assert!(close(&scaled, &base.map(|v| v * lambda), 1e-12));
    }
}

#[test]
fn stack_overflow_is_an_error() {
    let mut sc = StackConfig::default();
    sc.max_depth = 3;
    let cfg = CellConfig {
        cell: ArchConfig::Stack(sc),
        ..CellConfig::new(Arch::Stack, Dims::new(2, 3, 2, 2, 0))
    };
    let net = Network::init(cfg, InitMode::Scaled, 1).unwrap();
    let mut tape = Tape::new();
    let p = net.bind(&mut tape);
    let xs: Vec<Var> = (0..3)
        .map(|_| tape.leaf(Tensor::column(&[1.0, 0.0])))
        .collect();
    let err = net.unroll(&mut tape, &p, &xs).unwrap_err();
    assert_eq!(err, CellError::StackOverflow { depth: 4, cap: 3 });
}

#[test]
fn stack_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..5 {
        let cfg = CellConfig::new(Arch::Stack, Dims::new(3, 4, 3, 2, 0));
        let net = Network::init(cfg, InitMode::Paper, seed).unwrap();
        let xs = random_inputs(&mut rng, 3, 7);
        let (tape, steps) = run(&net, &xs);
        let mut h = Tensor::zeros(4, 1);
        let mut s = vec![vec![0.0; 2]];
        for (x, st) in xs.iter().zip(&steps) {
            let (h2, s2, o) = ref_stack(&cfg, &net.params, &h, &s, x);
            assert!(close(&value(&tape, st, "hidden"), &h2, 1e-12));
            let got = value(&tape, st, "stack");
            assert_eq!(got.rows(), s2.len());
            for (i, row) in s2.iter().enumerate() {
                assert!(close(
                    &Tensor::column(got.row(i)),
                    &Tensor::column(row),
                    1e-12
                ));
            }
            assert!(close(tape.value(st.output), &o, 1e-12));
            (h, s) = (h2, s2);
        }
    }
}

fn ram_net(addressing: AddressingMode, seed: u64) -> Network {
    let rc = RamConfig {
        addressing,
        ..RamConfig::default()
    };
    let cfg = CellConfig {
        cell: ArchConfig::Ram(rc),
        ..CellConfig::new(Arch::Ram, Dims::new(3, 4, 3, 3, 5))
    };
    Network::init(cfg, InitMode::Paper, seed).unwrap()
}

#[test]
fn ram_reads_convex_combination() {
    let rc = RamConfig::default();
    let cfg = CellConfig {
        cell: ArchConfig::Ram(rc),
        ..CellConfig::new(Arch::Ram, Dims::new(1, 2, 1, 2, 2))
    };
    let mut net = Network::init(cfg, InitMode::Scaled, 1).unwrap();
    for name in ["w_ha", "w_hgi", "w_xgi", "w_hgf", "w_xgf"] {
        let t = net.params.get_mut(name).unwrap();
        *t = Tensor::zeros(t.rows(), t.cols());
    }
    *net.params.get_mut("b_a").unwrap() = Tensor::column(&[0.3f64.ln(), 0.7f64.ln()]);
    // Saturated gates: exactly 0 and exactly 1 in f64.
    *net.params.get_mut("b_gi").unwrap() = Tensor::column(&[-1000.0, -1000.0]);
    *net.params.get_mut("b_gf").unwrap() = Tensor::column(&[1000.0, 1000.0]);
    let mut tape = Tape::new();
    let p = net.bind(&mut tape);
    let h = tape.leaf(Tensor::zeros(2, 1));
    let memory = tape.leaf(Tensor::identity(2));
    let read = tape.leaf(Tensor::column(&[1.0, 0.0]));
    let x = tape.leaf(Tensor::column(&[1.0]));
    let step = net
        .step(&mut tape, &p, &CellState::Ram { h, memory, read }, x)
        .unwrap();
    assert_eq!(value(&tape, &step, "memory"), Tensor::identity(2));
    let r = value(&tape, &step, "read");
    assert!(close(&r, &Tensor::column(&[0.3, 0.7]), 1e-15));
}

#[test]
fn ram_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..5 {
        let net = ram_net(AddressingMode::Direct, seed);
        let cfg = net.config;
        let xs = random_inputs(&mut rng, 3, 6);
        let (tape, steps) = run(&net, &xs);
        let (mut h, mut m) = (Tensor::zeros(4, 1), Tensor::zeros(5, 3));
        for (x, st) in xs.iter().zip(&steps) {
            let (h2, m2, a, o) = ref_ram(&cfg, &net.params, &h, &m, x);
            assert!(close(&value(&tape, st, "hidden"), &h2, 1e-12));
            assert!(close(&value(&tape, st, "memory"), &m2, 1e-12));
            assert!(close(&value(&tape, st, "read_weights"), &a, 1e-12));
            assert!(close(tape.value(st.output), &o, 1e-12));
            (h, m) = (h2, m2);
        }
    }
}

#[test]
fn ram_read_weights_are_distributions_in_both_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for mode in [
        AddressingMode::Direct,
        AddressingMode::ContentLocation {
            sharpness: 8.0,
            max_shift: 1,
        },
    ] {
        for seed in 0..10 {
            let net = ram_net(mode, seed);
            let xs = random_inputs(&mut rng, 3, 15);
            let (tape, steps) = run(&net, &xs);
            for st in &steps {
                let a = value(&tape, st, "read_weights");
                assert!((a.sum() - 1.0).abs() <= 1e-12, "{mode:?}: sum {}", a.sum());
                assert!(a.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
    }
}

#[test]
fn gates_and_signals_stay_strictly_inside_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let nets = [
        Network::init(
            CellConfig::new(Arch::Lstm, Dims::new(3, 5, 3, 4, 0)),
            InitMode::Scaled,
            1,
        )
        .unwrap(),
        Network::init(
            CellConfig::new(Arch::Stack, Dims::new(3, 5, 3, 4, 0)),
            InitMode::Scaled,
            1,
        )
        .unwrap(),
        ram_net(AddressingMode::Direct, 1),
    ];
    for net in &nets {
        let xs = random_inputs(&mut rng, 3, 10);
        let (tape, steps) = run(net, &xs);
        for st in &steps {
            for name in [
                "gate_input",
                "gate_forget",
                "gate_output",
                "push",
                "pop",
                "noop",
                "read_gate",
                "write_gate",
                "forget_gate",
            ] {
                if let Some(v) = st.probe(name) {
                    assert!(
                        tape.value(v).data().iter().all(|&g| g > 0.0 && g < 1.0),
                        "{name}"
                    );
                }
            }
        }
    }
}

#[test]
fn same_seed_same_trajectory() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let xs = random_inputs(&mut rng, 3, 8);
    for arch in Arch::ALL {
        let cfg = CellConfig::new(arch, Dims::new(3, 4, 3, 3, 4));
        let a = Network::init(cfg, InitMode::Scaled, 77).unwrap();
        let b = Network::init(cfg, InitMode::Scaled, 77).unwrap();
        assert_eq!(a, b);
        let (ta, sa) = run(&a, &xs);
        let (tb, sb) = run(&b, &xs);
        for (x, y) in sa.iter().zip(&sb) {
            assert_eq!(ta.value(x.output).data(), tb.value(y.output).data());
        }
        let c = Network::init(cfg, InitMode::Scaled, 78).unwrap();
        assert_ne!(a.params, c.params);
    }
}

#[test]
fn unit_normal_init_has_unit_normal_weights() {
    let cfg = CellConfig::new(Arch::Rnn, Dims::new(100, 100, 1, 0, 0));
    let params = init_params(&cfg, InitMode::Paper, 2024);
    let w = params.get("w_xh").unwrap();
    let n = w.len() as f64;
    assert_eq!(n, 1e4);
    let mean = w.sum() / n;
    let var = w
        .data()
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (n - 1.0);
    assert!(mean.abs() < 3.0 / n.sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 3.0 * (2.0 / n).sqrt(), "variance {var}");
    assert!(params.get("b_h").unwrap().data().iter().all(|&b| b == 0.1));
}

#[test]
fn wrong_input_shape_is_rejected() {
    let net = Network::init(
        CellConfig::new(Arch::Rnn, Dims::new(3, 4, 3, 0, 0)),
        InitMode::Scaled,
        1,
    )
    .unwrap();
    let mut tape = Tape::new();
    let p = net.bind(&mut tape);
    let s = net.initial_state(&mut tape);
    let x = tape.leaf(Tensor::zeros(2, 1));
    assert_eq!(
        net.step(&mut tape, &p, &s, x).unwrap_err(),
        CellError::InputShape {
            expected: 3,
            found: (2, 1)
        }
    );
}

#[test]
fn invalid_shift_range_is_rejected() {
    let rc = RamConfig {
        addressing: AddressingMode::ContentLocation {
            sharpness: 1.0,
            max_shift: 3,
        },
        ..RamConfig::default()
    };
    let cfg = CellConfig {
        cell: ArchConfig::Ram(rc),
        ..CellConfig::new(Arch::Ram, Dims::new(2, 2, 2, 2, 4))
    };
    assert!(matches!(
        cfg.validate(),
        Err(CellError::InvalidShift {
            max_shift: 3,
            slots: 4
        })
    ));
}

#[test]
fn network_new_checks_shapes() {
    let cfg = CellConfig::new(Arch::Rnn, Dims::new(3, 4, 3, 0, 0));
    let mut params = init_params(&cfg, InitMode::Scaled, 1);
    params.insert("w_hh", Tensor::zeros(3, 3));
    assert!(matches!(
        Network::new(cfg, params),
        Err(CellError::ParamShape { .. })
    ));
}
