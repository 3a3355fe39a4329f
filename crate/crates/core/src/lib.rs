//! Differentiable memory networks: vanilla RNN, LSTM, neural stack and
//! neural RAM cells on a reverse-mode tape, algorithmic sequence tasks,
//! a BPTT training loop, and executable parameter-constraint reductions
//! between the architectures.

pub mod cells;
pub mod cli;
pub mod numcore;
pub mod reductions;
pub mod tasks;
pub mod training;
