//! Eager reverse-mode differentiation over a linear tape.
//!
//! Every operation computes its value immediately and appends a node that
//! remembers its operands. `backward` walks the nodes in reverse order and
//! accumulates vector-Jacobian products, so a value used by several later
//! nodes receives the sum of their contributions.

use super::tensor::Tensor;
use super::NumError;

/// Floor applied to predicted probabilities before taking a logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f64),
    ScaleBy(Var, Var),
    OneMinus(Var),
    MatMul(Var, Var),
    Transpose(Var),
    ConcatRows(Var, Var),
    SliceRows(Var, usize),
    ScaleRows(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Softmax(Var),
    Sum(Var),
    SquaredError(Var, Var),
    CrossEntropy(Var, Var),
    CosineRows(Var, Var),
    CircularConv(Var, Var),
}

impl Op {
    fn operands(&self) -> [Option<Var>; 2] {
        use Op::*;
        match *self {
            Leaf => [None, None],
            Add(a, b)
            | Sub(a, b)
            | Mul(a, b)
            | Div(a, b)
            | ScaleBy(a, b)
            | MatMul(a, b)
            | ConcatRows(a, b)
            | ScaleRows(a, b)
            | SquaredError(a, b)
            | CrossEntropy(a, b)
            | CosineRows(a, b)
            | CircularConv(a, b) => [Some(a), Some(b)],
            Scale(a, _)
            | OneMinus(a)
            | Transpose(a)
            | SliceRows(a, _)
            | Sigmoid(a)
            | Tanh(a)
            | Relu(a)
            | Softmax(a)
            | Sum(a) => [Some(a), None],
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Recorded computation for one forward pass.
///
/// A tape is single-threaded; independent runs use independent tapes.
#[derive(Default, Debug)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradient table produced by [`Tape::backward`], one slot per node.
#[derive(Debug)]
pub struct Gradients {
    slots: Vec<Option<Tensor>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient of the root with respect to `v`; zeros if `v` does not reach the root.
    pub fn get(&self, v: Var) -> Tensor {
        match &self.slots[v.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[v.0];
                Tensor::zeros(r, c)
            }
        }
    }

    pub fn try_get(&self, v: Var) -> Option<&Tensor> {
        self.slots[v.0].as_ref()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<(), NumError> {
    if a.shape() != b.shape() {
        return Err(NumError::ShapeMismatch {
            op,
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

fn is_scalar(op: &'static str, t: &Tensor, other: &Tensor) -> Result<(), NumError> {
    if t.shape() != (1, 1) {
        return Err(NumError::ShapeMismatch {
            op,
            left: other.shape(),
            right: t.shape(),
        });
    }
    Ok(())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax(x: &Tensor) -> Tensor {
    let max = x.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps = x.map(|v| (v - max).exp());
    let total = exps.sum();
    exps.map(|v| v / total)
}

/// Row-wise cosine similarities plus the norms needed for the backward pass.
/// A zero-norm row (or key) has similarity 0.
fn cosine_rows(m: &Tensor, key: &Tensor) -> Tensor {
    let key_norm = key.norm_sq().sqrt();
    let mut out = Tensor::zeros(m.rows(), 1);
    for r in 0..m.rows() {
        let row = m.row(r);
        let row_norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if row_norm == 0.0 || key_norm == 0.0 {
            continue;
        }
        let dot: f64 = row.iter().zip(key.data()).map(|(a, b)| a * b).sum();
        out.set(r, 0, dot / (row_norm * key_norm));
    }
    out
}

fn circular_conv(a: &Tensor, shift: &Tensor) -> Tensor {
    let m = a.rows() as isize;
    let n = (shift.rows() / 2) as isize;
    let mut out = Tensor::zeros(a.rows(), 1);
    for i in 0..m {
        let mut acc = 0.0;
        for (j, &s) in shift.data().iter().enumerate() {
            let offset = j as isize - n;
            acc += s * a.data()[(i - offset).rem_euclid(m) as usize];
        }
        out.data_mut()[i as usize] = acc;
    }
    out
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records an input (parameter, data, or constant).
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (x, y) = (self.value(a), self.value(b));
        same_shape("add", x, y)?;
        let v = x.zip_map(y, |p, q| p + q);
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (x, y) = (self.value(a), self.value(b));
        same_shape("sub", x, y)?;
        let v = x.zip_map(y, |p, q| p - q);
        Ok(self.push(v, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (x, y) = (self.value(a), self.value(b));
        same_shape("mul", x, y)?;
        let v = x.zip_map(y, |p, q| p * q);
        Ok(self.push(v, Op::Mul(a, b)))
    }

    /// Elementwise quotient. The caller keeps the divisor away from zero.
    pub fn div(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (x, y) = (self.value(a), self.value(b));
        same_shape("div", x, y)?;
        let v = x.zip_map(y, |p, q| p / q);
        Ok(self.push(v, Op::Div(a, b)))
    }

    /// Multiplication by a constant.
    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let v = self.value(a).map(|p| p * k);
        self.push(v, Op::Scale(a, k))
    }

    /// Multiplication of a tensor by a recorded `(1, 1)` value.
    pub fn scale_by(&mut self, a: Var, s: Var) -> Result<Var, NumError> {
        let (x, k) = (self.value(a), self.value(s));
        is_scalar("scale_by", k, x)?;
        let k = k.item();
        let v = x.map(|p| p * k);
        Ok(self.push(v, Op::ScaleBy(a, s)))
    }

    /// `1 - a`, used for complementary gates.
    pub fn one_minus(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|p| 1.0 - p);
        self.push(v, Op::OneMinus(a))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.cols() != y.rows() {
            return Err(NumError::ShapeMismatch {
                op: "matmul",
                left: x.shape(),
                right: y.shape(),
            });
        }
        let v = x.matmul(y);
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a))
    }

    /// Stacks `a` on top of `b`.
    pub fn concat_rows(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.cols() != y.cols() {
            return Err(NumError::ShapeMismatch {
                op: "concat_rows",
                left: x.shape(),
                right: y.shape(),
            });
        }
        let mut data = Vec::with_capacity(x.len() + y.len());
        data.extend_from_slice(x.data());
        data.extend_from_slice(y.data());
        let v = Tensor::from_vec(x.rows() + y.rows(), x.cols(), data);
        Ok(self.push(v, Op::ConcatRows(a, b)))
    }

    /// Rows `start..start + len` of `a`.
    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var, NumError> {
        let x = self.value(a);
        if start + len > x.rows() || len == 0 {
            return Err(NumError::SliceOutOfRange {
                start,
                len,
                rows: x.rows(),
            });
        }
        let c = x.cols();
        let v = Tensor::from_vec(len, c, x.data()[start * c..(start + len) * c].to_vec());
        Ok(self.push(v, Op::SliceRows(a, start)))
    }

    /// Multiplies row `r` of matrix `m` by entry `r` of column `v`.
    pub fn scale_rows(&mut self, m: Var, v: Var) -> Result<Var, NumError> {
        let (x, w) = (self.value(m), self.value(v));
        if w.shape() != (x.rows(), 1) {
            return Err(NumError::ShapeMismatch {
                op: "scale_rows",
                left: x.shape(),
                right: w.shape(),
            });
        }
        let mut out = x.clone();
        let c = x.cols();
        for r in 0..x.rows() {
            let k = w.data()[r];
            for value in &mut out.data_mut()[r * c..(r + 1) * c] {
                *value *= k;
            }
        }
        Ok(self.push(out, Op::ScaleRows(m, v)))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    /// Rectifier; its derivative at exactly zero is taken as zero.
    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|p| if p > 0.0 { p } else { 0.0 });
        self.push(v, Op::Relu(a))
    }

    /// Softmax over all entries of a column vector.
    pub fn softmax(&mut self, a: Var) -> Result<Var, NumError> {
        let x = self.value(a);
        if x.cols() != 1 {
            return Err(NumError::ShapeMismatch {
                op: "softmax",
                left: x.shape(),
                right: (x.rows(), 1),
            });
        }
        let v = softmax(x);
        Ok(self.push(v, Op::Softmax(a)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = Tensor::scalar(self.value(a).sum());
        self.push(v, Op::Sum(a))
    }

    /// `Σ (a - b)²` as a `(1, 1)` value.
    pub fn squared_error(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (x, y) = (self.value(a), self.value(b));
        same_shape("squared_error", x, y)?;
        let v: f64 = x
            .data()
            .iter()
            .zip(y.data())
            .map(|(p, q)| (p - q) * (p - q))
            .sum();
        Ok(self.push(Tensor::scalar(v), Op::SquaredError(a, b)))
    }

    /// `-Σ target · ln(max(prob, 1e-12))`. Negative or non-finite probabilities are rejected.
    pub fn cross_entropy(&mut self, prob: Var, target: Var) -> Result<Var, NumError> {
        let (p, y) = (self.value(prob), self.value(target));
        same_shape("cross_entropy", p, y)?;
        if let Some(&bad) = p.data().iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(NumError::Domain {
                op: "cross_entropy",
                value: bad,
            });
        }
        let v: f64 = -p
            .data()
            .iter()
            .zip(y.data())
            .map(|(&pi, &yi)| {
                if yi == 0.0 {
                    0.0
                } else {
                    yi * pi.max(PROB_FLOOR).ln()
                }
            })
            .sum::<f64>();
        Ok(self.push(Tensor::scalar(v), Op::CrossEntropy(prob, target)))
    }

    /// Cosine similarity of every row of `m` with the column `key`, as an `(rows, 1)` column.
    pub fn cosine_rows(&mut self, m: Var, key: Var) -> Result<Var, NumError> {
        let (x, k) = (self.value(m), self.value(key));
        if k.shape() != (x.cols(), 1) {
            return Err(NumError::ShapeMismatch {
                op: "cosine_rows",
                left: x.shape(),
                right: k.shape(),
            });
        }
        let v = cosine_rows(x, k);
        Ok(self.push(v, Op::CosineRows(m, key)))
    }

    /// Circular convolution of weights `a` (M×1) with a shift distribution
    /// over offsets `-n..=n` stored as a `(2n+1, 1)` column.
    pub fn circular_conv(&mut self, a: Var, shift: Var) -> Result<Var, NumError> {
        let (x, s) = (self.value(a), self.value(shift));
        if x.cols() != 1 || s.cols() != 1 || s.rows() % 2 == 0 {
            return Err(NumError::ShapeMismatch {
                op: "circular_conv",
                left: x.shape(),
                right: s.shape(),
            });
        }
        let v = circular_conv(x, s);
        Ok(self.push(v, Op::CircularConv(a, shift)))
    }

    /// Reverse pass from a `(1, 1)` root.
    pub fn backward(&self, root: Var) -> Result<Gradients, NumError> {
        let root_shape = self.shape(root);
        if root_shape != (1, 1) {
            return Err(NumError::NonScalarRoot(root_shape));
        }
        let mut slots: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        slots[root.0] = Some(Tensor::scalar(1.0));
        for idx in (0..=root.0).rev() {
            let Some(g) = slots[idx].take() else { continue };
            self.propagate(idx, &g, &mut slots);
            slots[idx] = Some(g);
        }
        let shapes = self.nodes.iter().map(|n| n.value.shape()).collect();
        Ok(Gradients { slots, shapes })
    }

    fn propagate(&self, idx: usize, g: &Tensor, slots: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        let out = &node.value;
        let val = |v: Var| &self.nodes[v.0].value;
        let mut acc = |v: Var, contrib: Tensor| {
            debug_assert!(v.0 < idx, "tape is not topologically ordered");
            match &mut slots[v.0] {
                Some(existing) => existing.add_assign(&contrib),
                slot @ None => *slot = Some(contrib),
            }
        };
        match node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                acc(a, g.clone());
                acc(b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(a, g.clone());
                acc(b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                acc(a, g.zip_map(val(b), |p, q| p * q));
                acc(b, g.zip_map(val(a), |p, q| p * q));
            }
            Op::Div(a, b) => {
                let y = val(b);
                acc(a, g.zip_map(y, |p, q| p / q));
                let ga = g.zip_map(out, |p, o| p * o);
                acc(b, ga.zip_map(y, |p, q| -p / q));
            }
            Op::Scale(a, k) => acc(a, g.map(|v| v * k)),
            Op::ScaleBy(a, s) => {
                let k = val(s).item();
                let ds: f64 = g.data().iter().zip(val(a).data()).map(|(p, q)| p * q).sum();
                acc(a, g.map(|v| v * k));
                acc(s, Tensor::scalar(ds));
            }
            Op::OneMinus(a) => acc(a, g.map(|v| -v)),
            Op::MatMul(a, b) => {
                acc(a, g.matmul_nt(val(b)));
                acc(b, val(a).matmul_tn(g));
            }
            Op::Transpose(a) => acc(a, g.transpose()),
            Op::ConcatRows(a, b) => {
                let split = val(a).len();
                let (top, bottom) = g.data().split_at(split);
                acc(a, Tensor::from_vec(val(a).rows(), g.cols(), top.to_vec()));
                acc(
                    b,
                    Tensor::from_vec(val(b).rows(), g.cols(), bottom.to_vec()),
                );
            }
            Op::SliceRows(a, start) => {
                let x = val(a);
                let mut full = Tensor::zeros(x.rows(), x.cols());
                let c = x.cols();
                full.data_mut()[start * c..start * c + g.len()].copy_from_slice(g.data());
                acc(a, full);
            }
            Op::ScaleRows(m, v) => {
                let (x, w) = (val(m), val(v));
                let c = x.cols();
                let mut gm = g.clone();
                let mut gv = Tensor::zeros(x.rows(), 1);
                for r in 0..x.rows() {
                    let k = w.data()[r];
                    let mut dot = 0.0;
                    for j in 0..c {
                        dot += g.data()[r * c + j] * x.data()[r * c + j];
                        gm.data_mut()[r * c + j] *= k;
                    }
                    gv.data_mut()[r] = dot;
                }
                acc(m, gm);
                acc(v, gv);
            }
            Op::Sigmoid(a) => acc(a, g.zip_map(out, |p, y| p * y * (1.0 - y))),
            Op::Tanh(a) => acc(a, g.zip_map(out, |p, y| p * (1.0 - y * y))),
            Op::Relu(a) => acc(a, g.zip_map(out, |p, y| if y > 0.0 { p } else { 0.0 })),
            Op::Softmax(a) => {
                let dot: f64 = g.data().iter().zip(out.data()).map(|(p, y)| p * y).sum();
                acc(a, g.zip_map(out, |p, y| y * (p - dot)));
            }
            Op::Sum(a) => {
                let (r, c) = val(a).shape();
                acc(a, Tensor::filled(r, c, g.item()));
            }
            Op::SquaredError(a, b) => {
                let k = g.item();
                let diff = val(a).zip_map(val(b), |p, q| 2.0 * (p - q) * k);
                acc(b, diff.map(|v| -v));
                acc(a, diff);
            }
            Op::CrossEntropy(p, y) => {
                let k = g.item();
                let (pv, yv) = (val(p), val(y));
                let gp = pv.zip_map(yv, |pi, yi| {
                    if yi == 0.0 || pi < PROB_FLOOR {
                        0.0
                    } else {
                        -k * yi / pi
                    }
                });
                let gy = pv.map(|pi| -k * pi.max(PROB_FLOOR).ln());
                acc(p, gp);
                acc(y, gy);
            }
            Op::CosineRows(m, key) => {
                let (x, kv) = (val(m), val(key));
                let key_norm = kv.norm_sq().sqrt();
                let c = x.cols();
                let mut gm = Tensor::zeros(x.rows(), c);
                let mut gk = Tensor::zeros(c, 1);
                if key_norm > 0.0 {
                    for r in 0..x.rows() {
                        let row = x.row(r);
                        let row_norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if row_norm == 0.0 {
                            continue;
                        }
                        let cos = out.data()[r];
                        let gr = g.data()[r];
                        let inv = 1.0 / (row_norm * key_norm);
                        for j in 0..c {
                            let (mj, kj) = (row[j], kv.data()[j]);
                            gm.data_mut()[r * c + j] +=
                                gr * (kj * inv - cos * mj / (row_norm * row_norm));
                            gk.data_mut()[j] += gr * (mj * inv - cos * kj / (key_norm * key_norm));
                        }
                    }
                }
                acc(m, gm);
                acc(key, gk);
            }
            Op::CircularConv(a, shift) => {
                let (x, s) = (val(a), val(shift));
                let m = x.rows() as isize;
                let n = (s.rows() / 2) as isize;
                let mut ga = Tensor::zeros(x.rows(), 1);
                let mut gs = Tensor::zeros(s.rows(), 1);
                for i in 0..m {
                    let gi = g.data()[i as usize];
                    for j in 0..s.rows() {
                        let src = (i - (j as isize - n)).rem_euclid(m) as usize;
                        ga.data_mut()[src] += gi * s.data()[j];
                        gs.data_mut()[j] += gi * x.data()[src];
                    }
                }
                acc(a, ga);
                acc(shift, gs);
            }
        }
    }

    /// Operand indices of a node; used to check topological ordering.
    pub fn operands(&self, v: Var) -> Vec<Var> {
        self.nodes[v.0]
            .op
            .operands()
            .into_iter()
            .flatten()
            .collect()
    }
}
