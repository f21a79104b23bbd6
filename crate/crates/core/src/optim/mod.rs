//! Gradient-based pose refinement.
//!
//! The machinery here is deliberately objective-agnostic: a flat parameter
//! vector, a from-scratch Adam step, and central finite differences over an
//! arbitrary closure. Stage orchestration (which instances move, in which
//! order, with which losses) lives in [`crate::scene`].
//!
//! Scale is optimized through a log multiplier over the pose's scale at pack
//! time, so a zero parameter reproduces the original scale bit for bit and
//! positivity is structural rather than enforced by clamping.

mod adam;
mod gradient;
mod params;

pub use adam::AdamState;
pub use gradient::{numerical_gradient, Objective};
pub use params::{ParamBlock, ParamVector};

use crate::error::Result;

/// One row of an optimization trace: loss before the step at `iteration`,
/// with the final row holding the loss after the last step.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub loss: f64,
}

/// Outcome of a [`minimize`] run. `best_values` is the best parameter
/// vector seen at any evaluation point, never worse than the start.
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub best_values: Vec<f64>,
    pub best_loss: f64,
    pub initial_loss: f64,
    pub trace: Vec<TraceRow>,
}

/// Settings for a single [`minimize`] run.
#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub learning_rate: f64,
    pub iterations: usize,
    /// Central-difference step for the numerical gradient.
    pub fd_step: f64,
}

/// Runs Adam with numerical gradients from `x0` and returns the best-seen
/// parameters. Only loss values at the iterate itself (not at probe points)
/// participate in best tracking, so the result is always reachable by
/// re-evaluating the objective.
pub fn minimize(f: &Objective<'_>, x0: Vec<f64>, opts: MinimizeOptions) -> Result<MinimizeResult> {
    let mut x = x0;
    let mut adam = AdamState::new(opts.learning_rate, x.len());
    let mut trace = Vec::with_capacity(opts.iterations + 1);

    let initial_loss = f(&x)?;
    let mut best_values = x.clone();
    let mut best_loss = initial_loss;
    let mut loss = initial_loss;

    for iteration in 0..opts.iterations {
        trace.push(TraceRow { iteration, loss });
        let grad = numerical_gradient(f, &x, opts.fd_step)?;
        adam.step(&mut x, &grad);
        loss = f(&x)?;
        if loss < best_loss {
            best_loss = loss;
            best_values = x.clone();
        }
    }
    trace.push(TraceRow {
        iteration: opts.iterations,
        loss,
    });

    Ok(MinimizeResult {
        best_values,
        best_loss,
        initial_loss,
        trace,
    })
}

/// Writes a trace as CSV (`iteration,loss` header plus one row per entry).
pub fn write_trace_csv<W: std::io::Write>(rows: &[TraceRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iteration", "loss"])
        .map_err(|e| crate::Error::Configuration(format!("trace csv: {e}")))?;
    for row in rows {
        w.write_record([row.iteration.to_string(), format!("{:.17e}", row.loss)])
            .map_err(|e| crate::Error::Configuration(format!("trace csv: {e}")))?;
    }
    w.flush()
        .map_err(|e| crate::Error::Configuration(format!("trace csv: {e}")))?;
    Ok(())
}
