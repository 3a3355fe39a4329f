use serde::Serialize;

use super::CliError;
use crate::cells::Network;
use crate::tasks::{parse_symbols, Symbol, TaskKind};
use crate::training::run_episode;

/// One value of one internal quantity at one step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub symbol: String,
    pub quantity: String,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Runs `net` on `symbols` and records, per step, the input, every probe the
/// cell exposes, and the output. The quantity order is fixed per
/// architecture.
pub fn trace(net: &Network, task: TaskKind, symbols: &[Symbol]) -> Result<Vec<TraceRow>, CliError> {
    let inputs = task
        .encode_all(symbols)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let (tape, steps) = run_episode(net, &inputs).map_err(|e| CliError::Failed(e.to_string()))?;
    let mut rows = Vec::new();
    for (t, ((step, sym), x)) in steps.iter().zip(symbols).zip(&inputs).enumerate() {
        let mut push = |quantity: &str, v: &crate::numcore::Tensor| {
            for r in 0..v.rows() {
                for c in 0..v.cols() {
                    rows.push(TraceRow {
                        step: t,
                        symbol: sym.to_string(),
                        quantity: quantity.to_string(),
                        row: r,
                        col: c,
                        value: v.get(r, c),
                    });
                }
            }
        };
        push("input", x);
        for p in &step.probes {
            push(p.name, tape.value(p.var));
        }
        push("output", tape.value(step.output));
    }
    Ok(rows)
}

/// Parses `text` in the task notation and traces it.
pub fn trace_text(net: &Network, task: TaskKind, text: &str) -> Result<Vec<TraceRow>, CliError> {
    let symbols = parse_symbols(text).map_err(|e| CliError::Data(e.to_string()))?;
    trace(net, task, &symbols)
}

/// CSV with header `step,symbol,quantity,row,col,value`.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(["step", "symbol", "quantity", "row", "col", "value"])
        .expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Values of `quantity` per step, flattened row-major.
pub fn series(rows: &[TraceRow], quantity: &str) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for r in rows.iter().filter(|r| r.quantity == quantity) {
        if out.len() <= r.step {
            out.resize(r.step + 1, Vec::new());
        }
        out[r.step].push(r.value);
    }
    out
}
