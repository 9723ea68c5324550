//! Lagged coefficient averaging and knot freezing.
//!
//! The averaged value at `t` is the mean of the raw step function over
//! `[t - 2 eps, t - eps)`, with the raw path extended backward by its value at
//! time 0. Everything used at `t` was therefore observed by `t - eps`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::market::{at_node, CoefficientModel, CoefficientPath, MarketNode, TimeGrid};
use crate::wealth::StrategyTrace;

fn window_cells(grid: &TimeGrid, eps: f64) -> Result<usize> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::config(format!("eps must be finite and > 0, got {eps}")));
    }
    grid.cells_in(eps).ok_or_else(|| {
        Error::config(format!(
            "eps = {eps} is not a whole multiple of the grid step {}",
            grid.dt()
        ))
    })
}

/// Mean over the `k` cells `[i - 2k, i - k)`, indices clamped at 0.
fn lagged_mean<T, F>(values: &[T], i: usize, k: usize, zero: T, add: F) -> T
where
    T: Clone,
    F: Fn(T, &T) -> T,
{
    (0..k).fold(zero, |acc, j| {
        let idx = (i + j).saturating_sub(2 * k);
        add(acc, &values[idx])
    })
}

/// Replaces `(r, a, sigma)` by their lagged window means.
pub fn epsilon_average(path: &CoefficientPath, eps: f64) -> Result<CoefficientPath> {
    let grid = *path.grid();
    let k = window_cells(&grid, eps)?;
    let n = path.dim();
    let w = 1.0 / k as f64;
    let nodes = path.nodes();
    let rates: Vec<f64> = nodes.iter().map(|x| x.rate()).collect();
    let apprec: Vec<DVector<f64>> = nodes.iter().map(|x| x.appreciation().clone()).collect();
    let vols: Vec<DMatrix<f64>> = nodes.iter().map(|x| x.volatility().clone()).collect();
    let out = (0..=grid.steps())
        .map(|i| {
            let r = lagged_mean(&rates, i, k, 0.0, |a, b| a + b) * w;
            let a = lagged_mean(&apprec, i, k, DVector::zeros(n), |a, b| a + b) * w;
            let s = lagged_mean(&vols, i, k, DMatrix::zeros(n, n), |a, b| a + b) * w;
            MarketNode::new(r, a, s, path.bounds()).map_err(|e| at_node(e, i))
        })
        .collect::<Result<Vec<_>>>()?;
    CoefficientPath::new(grid, out, *path.bounds())
}

/// The same lagged window mean applied to a strategy trace.
pub fn average_strategy_trace(trace: &StrategyTrace, eps: f64) -> Result<StrategyTrace> {
    let grid = *trace.grid();
    let k = window_cells(&grid, eps)?;
    let weights = trace.weights();
    let n = weights.first().map_or(0, |w| w.len());
    let w = 1.0 / k as f64;
    let out = (0..grid.steps())
        .map(|i| lagged_mean(weights, i, k, DVector::zeros(n), |a, b| a + b) * w)
        .collect();
    StrategyTrace::new(grid, out)
}

/// Holds coefficients constant between knots: on `[t_k, t_{k+1})` they take
/// their value at `t_k`.
pub fn freeze_on_grid(path: &CoefficientPath, knots: &[f64]) -> Result<CoefficientPath> {
    let grid = *path.grid();
    let idx = knots
        .iter()
        .map(|&t| {
            grid.index_of(t)
                .ok_or_else(|| Error::config(format!("knot {t} is not a grid node")))
        })
        .collect::<Result<Vec<_>>>()?;
    if idx.first() != Some(&0) || idx.last() != Some(&grid.steps()) {
        return Err(Error::config("knots must start at 0 and end at the horizon"));
    }
    if idx.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("knots must be strictly increasing"));
    }
    let mut nodes = path.nodes().to_vec();
    for w in idx.windows(2) {
        for i in w[0] + 1..w[1] {
            nodes[i] = nodes[w[0]].clone();
        }
    }
    CoefficientPath::new(grid, nodes, *path.bounds())
}

/// Wraps `model` so that every sampled path is averaged with window `eps`.
///
/// The window is validated against the grid when paths are sampled.
pub fn averaged_market_model(model: &CoefficientModel, eps: f64) -> Result<CoefficientModel> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::config(format!("eps must be finite and > 0, got {eps}")));
    }
    Ok(model.with_averaging(eps))
}
