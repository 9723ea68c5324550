//! Discounted wealth integration.
//!
//! With coefficients and proportions constant on each cell the exponential
//! solution of the self-financing equation is exact, so integration happens
//! in log space:
//!
//! `Y_{i+1} = Y_i + (pi_i . a~_i - |sigma_i^T pi_i|^2 / 2) dt + (sigma_i^T pi_i) . dw_i`.

use std::io::Write;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::market::{BrownianPath, CoefficientPath, TimeGrid};
use crate::strategies::{check_weights, log_increment, Observation, ProjectionCertificate, Strategy};

/// Log discounted wealth on every node.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthPath {
    grid: TimeGrid,
    log_wealth: Vec<f64>,
}

impl WealthPath {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn log_wealth(&self) -> &[f64] {
        &self.log_wealth
    }

    pub fn initial_wealth(&self) -> f64 {
        self.log_wealth[0].exp()
    }

    /// `Y_M`, the log of terminal discounted wealth.
    pub fn terminal_log_wealth(&self) -> f64 {
        self.log_wealth[self.grid.steps()]
    }

    pub fn terminal_wealth(&self) -> f64 {
        self.terminal_log_wealth().exp()
    }

    /// CSV with columns `node,t,log_wealth,wealth`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "node,t,log_wealth,wealth")?;
        for (i, y) in self.log_wealth.iter().enumerate() {
            writeln!(out, "{i},{},{y},{}", self.grid.node(i), y.exp())?;
        }
        Ok(())
    }
}

/// Proportions actually held on each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTrace {
    grid: TimeGrid,
    weights: Vec<DVector<f64>>,
}

impl StrategyTrace {
    pub fn new(grid: TimeGrid, weights: Vec<DVector<f64>>) -> Result<Self> {
        if weights.len() != grid.steps() {
            return Err(Error::Dimension {
                expected: grid.steps(),
                actual: weights.len(),
                context: "strategy trace cells",
            });
        }
        Ok(Self { grid, weights })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// One vector per cell, `len = steps`.
    pub fn weights(&self) -> &[DVector<f64>] {
        &self.weights
    }

    pub fn sup_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.norm()).fold(0.0, f64::max)
    }

    /// CSV with columns `node,t,pi_1..pi_n`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.weights.first().map_or(0, |w| w.len());
        let cols: Vec<String> = (1..=n).map(|k| format!("pi_{k}")).collect();
        writeln!(out, "node,t,{}", cols.join(","))?;
        for (i, w) in self.weights.iter().enumerate() {
            let vals: Vec<String> = w.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{i},{},{}", self.grid.node(i), vals.join(","))?;
        }
        Ok(())
    }

    /// Parses the format written by [`StrategyTrace::write_csv`].
    pub fn read_csv(grid: TimeGrid, text: &str) -> Result<Self> {
        let mut rows = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header = rows
            .next()
            .ok_or_else(|| Error::config("trace file is empty"))?;
        let n = header.split(',').filter(|c| c.trim().starts_with("pi_")).count();
        if n == 0 {
            return Err(Error::config("trace header has no pi_ columns"));
        }
        let weights = rows
            .enumerate()
            .map(|(line, row)| {
                let cells: Vec<&str> = row.split(',').collect();
                if cells.len() != n + 2 {
                    return Err(Error::config(format!("trace row {line}: expected {} columns", n + 2)));
                }
                cells[2..]
                    .iter()
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::config(format!("trace row {line}: {e}")))
                    })
                    .collect::<Result<Vec<f64>>>()
                    .map(DVector::from_vec)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, weights)
    }
}

/// Output of one simulated path.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub wealth: WealthPath,
    pub trace: StrategyTrace,
    /// Present only for projected strategies; one record per cell.
    pub certificates: Vec<ProjectionCertificate>,
}

/// Integrates log discounted wealth for `strategy` along the given paths.
///
/// The strategy at node `i` sees coefficients and wealth up to node `i` and
/// the increments of cells `0..i` only.
pub fn simulate_log_wealth<S: Strategy + ?Sized>(
    coeffs: &CoefficientPath,
    brownian: &BrownianPath,
    strategy: &S,
    initial_wealth: f64,
    path_seed: u64,
) -> Result<Simulation> {
    if !(initial_wealth.is_finite() && initial_wealth > 0.0) {
        return Err(Error::invariant(format!(
            "initial wealth must be > 0, got {initial_wealth}"
        )));
    }
    let grid = *coeffs.grid();
    if grid != *brownian.grid() {
        return Err(Error::invariant("coefficient and Brownian paths use different grids"));
    }
    let n = coeffs.dim();
    if brownian.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: brownian.dim(),
            context: "brownian dimension",
        });
    }
    let m = grid.steps();
    let dt = grid.dt();
    let bound = strategy.bound();
    let mut policy = strategy.policy(path_seed);
    let mut y = Vec::with_capacity(m + 1);
    y.push(initial_wealth.ln());
    let mut weights = Vec::with_capacity(m);
    let mut certificates = Vec::new();
    let nodes = coeffs.nodes();
    let incs = brownian.increments();
    for i in 0..m {
        let obs = Observation::new(i, &grid, &nodes[..=i], &incs[..i * n], &y[..=i]);
        let pi = policy.weights(&obs)?;
        check_weights(&pi, &nodes[i], bound, i)?;
        if let Some(c) = policy.certificate() {
            certificates.push(*c);
        }
        let next = y[i] + log_increment(&pi, &nodes[i], brownian.increment(i), dt);
        if !next.is_finite() {
            return Err(Error::numeric(format!("node {}: log wealth is not finite", i + 1)));
        }
        y.push(next);
        weights.push(pi);
    }
    Ok(Simulation {
        wealth: WealthPath {
            grid,
            log_wealth: y,
        },
        trace: StrategyTrace { grid, weights },
        certificates,
    })
}

/// Undiscounted terminal wealth `X(T) = exp(Y_M + sum_i r_i dt)`.
pub fn undiscount(wealth: &WealthPath, coeffs: &CoefficientPath) -> Result<f64> {
    if wealth.grid() != coeffs.grid() {
        return Err(Error::invariant("wealth and coefficient paths use different grids"));
    }
    Ok((wealth.terminal_log_wealth() + coeffs.integrated_rate()).exp())
}
