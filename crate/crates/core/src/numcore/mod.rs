//! Dense tensors, a recording tape for reverse-mode gradients, and a
//! central-difference oracle used to check them.

mod tape;
mod tensor;

pub use tape::{Gradients, Tape, Var, PROB_FLOOR};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("rows {start}..{} out of range for {rows} rows", start + len)]
    SliceOutOfRange {
        start: usize,
        len: usize,
        rows: usize,
    },
    #[error("domain error in {op}: {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("backward root must be (1, 1), got {0:?}")]
    NonScalarRoot((usize, usize)),
}

/// Default step for [`finite_diff`].
pub const FD_STEP: f64 = 1e-5;

/// Central-difference gradient of a scalar function: `(f(x + h·eᵢ) - f(x - h·eᵢ)) / 2h`.
pub fn finite_diff(mut f: impl FnMut(&Tensor) -> f64, x: &Tensor, h: f64) -> Tensor {
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut probe = x.clone();
    let mut grad = Tensor::zeros(x.rows(), x.cols());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let plus = f(&probe);
        probe.data_mut()[i] = orig - h;
        let minus = f(&probe);
        probe.data_mut()[i] = orig;
        grad.data_mut()[i] = (plus - minus) / (2.0 * h);
    }
    grad
}

/// `|a - b| / max(1e-8, |a| + |b|)`, the comparison used for gradient checks.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Largest [`relative_error`] over corresponding entries; infinite if any
/// entry is NaN.
pub fn max_relative_error(a: &Tensor, b: &Tensor) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| relative_error(x, y))
        .fold(
            0.0,
            |m, e| if e.is_nan() { f64::INFINITY } else { m.max(e) },
        )
}

/// Max-norm relative error of whole tensors:
/// `‖a - b‖∞ / max(1e-8, ‖a‖∞ + ‖b‖∞)`; infinite on NaN.
pub fn tensor_relative_error(a: &Tensor, b: &Tensor) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let diff = a.zip_map(b, |x, y| x - y).max_abs();
    let e = diff / (a.max_abs() + b.max_abs()).max(1e-8);
    if e.is_nan() || !a.all_finite() || !b.all_finite() {
        f64::INFINITY
    } else {
        e
    }
}

#[cfg(test)]
mod tests;
