//! Normalized objective evolution `E(t)` and per-group metrics.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::engine::Trace;

/// `points` uniform samples of `[0, max_time]`.
pub fn default_grid(max_time: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![max_time],
        _ => (0..points)
            .map(|i| max_time * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Smallest objective seen anywhere in the given traces.
pub fn group_min<'a>(traces: impl IntoIterator<Item = &'a Trace>) -> f64 {
    traces
        .into_iter()
        .flat_map(|t| t.time_objective().map(|(_, f)| f))
        .fold(f64::INFINITY, f64::min)
}

/// `E(t)` of one trace on `grid`: the running minimum of
/// `(F^k - f_min) / (F^0 - f_min)` over iterates with `T(k) <= t`.
/// A degenerate trace with `F^0 = f_min` gives all zeros.
pub fn trace_curve(trace: &Trace, f_min: f64, grid: &[f64]) -> Vec<f64> {
    let span = trace.initial_objective - f_min;
    if !(span > 0.0) {
        warn!("degenerate E(t): initial objective equals the group minimum");
        return vec![0.0; grid.len()];
    }
    let points: Vec<(f64, f64)> = trace.time_objective().collect();
    let mut out = Vec::with_capacity(grid.len());
    let mut best = f64::INFINITY;
    let mut next = 0;
    for &t in grid {
        while next < points.len() && points[next].0 <= t {
            best = best.min(((points[next].1 - f_min) / span).clamp(0.0, 1.0));
            next += 1;
        }
        out.push(best.min(1.0));
    }
    out
}

/// Pointwise mean of `trace_curve` over a set of traces sharing `f_min`.
pub fn evolution_curve<'a>(traces: impl IntoIterator<Item = &'a Trace>, f_min: f64, grid: &[f64]) -> Vec<f64> {
    let mut sum = vec![0.0; grid.len()];
    let mut count = 0usize;
    for trace in traces {
        for (s, e) in sum.iter_mut().zip(trace_curve(trace, f_min, grid)) {
            *s += e;
        }
        count += 1;
    }
    if count > 0 {
        for s in &mut sum {
            *s /= count as f64;
        }
    }
    sum
}

/// `(F - F_min) / (F_max - F_min)` within one group; zeros if all values agree.
pub fn normalized_values(finals: &[f64]) -> Vec<f64> {
    let lo = finals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    finals
        .iter()
        .map(|&f| if hi > lo { (f - lo) / (hi - lo) } else { 0.0 })
        .collect()
}

/// Averaged `E(t)` samples for one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionCurve {
    pub algorithm: String,
    pub values: Vec<f64>,
}
