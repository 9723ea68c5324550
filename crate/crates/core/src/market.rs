//! Market coefficients and the Brownian driver.
//!
//! Coefficients are piecewise constant on grid cells: the value stored at
//! node `i` applies on `[t_i, t_{i+1})`. Coefficient paths and Brownian paths
//! are sampled from independent seed streams (see [`crate::seed`]).

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::smoothing;

/// Below this norm the risk premium is treated as exactly zero.
pub const THETA_ZERO: f64 = 1e-12;

/// Uniform partition of `[0, T]` into `M` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invariant(format!(
                "grid.horizon must be finite and > 0, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::invariant("grid.steps must be >= 1"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Time of node `i`; exact at both ends.
    pub fn node(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |i| self.node(i))
    }

    /// Index of the node at time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.dt();
        let k = x.round();
        if k < 0.0 || k > self.steps as f64 || (x - k).abs() > 1e-9 * (1.0 + k) {
            return None;
        }
        Some(k as usize)
    }

    /// Number of cells spanned by a duration, if it is a whole multiple of the step.
    pub fn cells_in(&self, duration: f64) -> Option<usize> {
        let x = duration / self.dt();
        let k = x.round();
        if k < 1.0 || (x - k).abs() > 1e-9 * k {
            return None;
        }
        Some(k as usize)
    }
}

/// Declared bounds every coefficient node must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientBounds {
    /// Largest admissible 2-norm condition number of sigma.
    pub max_condition: f64,
    /// Largest admissible absolute value of any entry of r, a or sigma.
    pub max_abs: f64,
}

impl Default for CoefficientBounds {
    fn default() -> Self {
        Self {
            max_condition: 1e4,
            max_abs: 1e3,
        }
    }
}

/// `a - r 1`.
pub fn excess_returns(appreciation: &DVector<f64>, rate: f64) -> DVector<f64> {
    appreciation.map(|a| a - rate)
}

/// Risk premium `theta = sigma^{-1} a_tilde`, by LU solve.
pub fn risk_premium(volatility: &DMatrix<f64>, excess: &DVector<f64>) -> Result<DVector<f64>> {
    check_square(volatility, excess.len())?;
    volatility
        .clone()
        .lu()
        .solve(excess)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::invariant("volatility matrix is singular"))
}

fn check_square(m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: m.nrows(),
            context: "volatility rows",
        });
    }
    if m.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: m.ncols(),
            context: "volatility columns",
        });
    }
    Ok(())
}

/// Market parameters in force on one grid cell, with derived quantities cached.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketNode {
    rate: f64,
    appreciation: DVector<f64>,
    volatility: DMatrix<f64>,
    excess: DVector<f64>,
    theta: DVector<f64>,
    // sigma^{-T} theta: weights of the nu = 1 fund.
    fund: DVector<f64>,
    vol_norm: f64,
    vol_inv_norm: f64,
}

impl MarketNode {
    pub fn new(
        rate: f64,
        appreciation: DVector<f64>,
        volatility: DMatrix<f64>,
        bounds: &CoefficientBounds,
    ) -> Result<Self> {
        let n = appreciation.len();
        if n == 0 {
            return Err(Error::invariant("market needs at least one stock"));
        }
        check_square(&volatility, n)?;
        let finite = rate.is_finite()
            && appreciation.iter().all(|v| v.is_finite())
            && volatility.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invariant("non-finite coefficient"));
        }
        if rate < 0.0 {
            return Err(Error::invariant(format!("rate must be >= 0, got {rate}")));
        }
        let max_abs = appreciation
            .iter()
            .chain(volatility.iter())
            .chain(std::iter::once(&rate))
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if max_abs > bounds.max_abs {
            return Err(Error::invariant(format!(
                "coefficient magnitude {max_abs} exceeds declared bound {}",
                bounds.max_abs
            )));
        }
        let sv = volatility.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if !(smin > 0.0) {
            return Err(Error::invariant("volatility matrix is singular"));
        }
        let cond = smax / smin;
        if cond > bounds.max_condition {
            return Err(Error::invariant(format!(
                "volatility condition number {cond:.3e} exceeds bound {:.3e}",
                bounds.max_condition
            )));
        }
        let excess = excess_returns(&appreciation, rate);
        let theta = risk_premium(&volatility, &excess)?;
        let fund = volatility
            .transpose()
            .lu()
            .solve(&theta)
            .ok_or_else(|| Error::invariant("volatility matrix is singular"))?;
        Ok(Self {
            rate,
            appreciation,
            volatility,
            excess,
            theta,
            fund,
            vol_norm: smax,
            vol_inv_norm: 1.0 / smin,
        })
    }

    pub fn dim(&self) -> usize {
        self.appreciation.len()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn appreciation(&self) -> &DVector<f64> {
        &self.appreciation
    }

    pub fn volatility(&self) -> &DMatrix<f64> {
        &self.volatility
    }

    pub fn excess(&self) -> &DVector<f64> {
        &self.excess
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn theta_is_zero(&self) -> bool {
        self.theta.norm() < THETA_ZERO
    }

    /// `sigma^{-T} theta`, so that the fund strategy with scalar `nu` holds `nu * fund()`.
    pub fn fund(&self) -> &DVector<f64> {
        &self.fund
    }

    /// Operator 2-norm of sigma.
    pub fn vol_norm(&self) -> f64 {
        self.vol_norm
    }

    /// Operator 2-norm of sigma^{-1}.
    pub fn vol_inv_norm(&self) -> f64 {
        self.vol_inv_norm
    }
}

/// Coefficient values on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPath {
    grid: TimeGrid,
    nodes: Vec<MarketNode>,
    bounds: CoefficientBounds,
}

impl CoefficientPath {
    pub fn new(grid: TimeGrid, nodes: Vec<MarketNode>, bounds: CoefficientBounds) -> Result<Self> {
        if nodes.len() != grid.steps() + 1 {
            return Err(Error::Dimension {
                expected: grid.steps() + 1,
                actual: nodes.len(),
                context: "coefficient path nodes",
            });
        }
        let n = nodes[0].dim();
        if let Some(bad) = nodes.iter().position(|node| node.dim() != n) {
            return Err(Error::invariant(format!(
                "node {bad}: dimension {} differs from {n}",
                nodes[bad].dim()
            )));
        }
        Ok(Self {
            grid,
            nodes,
            bounds,
        })
    }

    /// Builds a path from raw per-node values, validating every node.
    pub fn from_values(
        grid: TimeGrid,
        rates: &[f64],
        appreciation: &[DVector<f64>],
        volatility: &[DMatrix<f64>],
        bounds: CoefficientBounds,
    ) -> Result<Self> {
        let m = grid.steps() + 1;
        for (len, context) in [
            (rates.len(), "rates"),
            (appreciation.len(), "appreciation rates"),
            (volatility.len(), "volatilities"),
        ] {
            if len != m {
                return Err(Error::Dimension {
                    expected: m,
                    actual: len,
                    context,
                });
            }
        }
        let nodes = (0..m)
            .map(|i| {
                MarketNode::new(
                    rates[i],
                    appreciation[i].clone(),
                    volatility[i].clone(),
                    &bounds,
                )
                .map_err(|e| at_node(e, i))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, nodes, bounds)
    }

    pub fn constant(grid: TimeGrid, node: MarketNode) -> Self {
        Self {
            grid,
            nodes: vec![node; grid.steps() + 1],
            bounds: CoefficientBounds::default(),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn nodes(&self) -> &[MarketNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &MarketNode {
        &self.nodes[i]
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].dim()
    }

    pub fn bounds(&self) -> &CoefficientBounds {
        &self.bounds
    }

    /// `sum_i r_i dt` over the cells of the grid.
    pub fn integrated_rate(&self) -> f64 {
        let dt = self.grid.dt();
        self.nodes[..self.grid.steps()]
            .iter()
            .map(|n| n.rate() * dt)
            .sum()
    }

    /// Largest `||sigma||` and `||sigma^{-1}||` along the path.
    pub fn operator_norm_bounds(&self) -> OperatorNormBounds {
        OperatorNormBounds::over(self.nodes.iter())
    }
}

pub(crate) fn at_node(e: Error, i: usize) -> Error {
    match e {
        Error::Invariant(msg) => Error::Invariant(format!("node {i}: {msg}")),
        Error::Numeric(msg) => Error::Numeric(format!("node {i}: {msg}")),
        other => other,
    }
}

/// Suprema of the operator norms of sigma and its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNormBounds {
    pub vol: f64,
    pub vol_inv: f64,
}

impl OperatorNormBounds {
    pub fn over<'a>(nodes: impl IntoIterator<Item = &'a MarketNode>) -> Self {
        nodes.into_iter().fold(
            Self {
                vol: 0.0,
                vol_inv: 0.0,
            },
            |b, n| Self {
                vol: b.vol.max(n.vol_norm()),
                vol_inv: b.vol_inv.max(n.vol_inv_norm()),
            },
        )
    }
}

/// Brownian increments `dw_i` over the cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    grid: TimeGrid,
    dim: usize,
    // Row-major: increment i occupies [i*dim, (i+1)*dim).
    increments: Vec<f64>,
}

impl BrownianPath {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            increments: vec![0.0; grid.steps() * dim],
        }
    }

    pub fn from_increments(grid: TimeGrid, dim: usize, increments: Vec<f64>) -> Result<Self> {
        if increments.len() != grid.steps() * dim {
            return Err(Error::Dimension {
                expected: grid.steps() * dim,
                actual: increments.len(),
                context: "brownian increments",
            });
        }
        Ok(Self {
            grid,
            dim,
            increments,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn increment(&self, i: usize) -> &[f64] {
        &self.increments[i * self.dim..(i + 1) * self.dim]
    }

    /// Flat slice of all increments, row-major.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }
}

/// I.i.d. `N(0, dt I)` increments, fully determined by `seed`.
pub fn sample_brownian(grid: &TimeGrid, seed: u64, dim: usize) -> BrownianPath {
    let mut rng = seed::rng(seed);
    let scale = grid.dt().sqrt();
    let increments = (0..grid.steps() * dim)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * scale
        })
        .collect();
    BrownianPath {
        grid: *grid,
        dim,
        increments,
    }
}

/// One coefficient state as written in a configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub rate: f64,
    pub appreciation: Vec<f64>,
    /// Row-major volatility matrix.
    pub volatility: Vec<Vec<f64>>,
}

impl StateSpec {
    pub fn to_node(&self, bounds: &CoefficientBounds) -> Result<MarketNode> {
        let n = self.appreciation.len();
        if self.volatility.len() != n || self.volatility.iter().any(|row| row.len() != n) {
            return Err(Error::invariant(format!(
                "volatility must be a {n}x{n} matrix"
            )));
        }
        let vol = DMatrix::from_fn(n, n, |i, j| self.volatility[i][j]);
        MarketNode::new(
            self.rate,
            DVector::from_vec(self.appreciation.clone()),
            vol,
            bounds,
        )
    }
}

/// How the active coefficient state evolves over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Dynamics {
    /// One state drawn at time 0 and held to the horizon.
    ConstantRandom { weights: Vec<f64> },
    /// Continuous-time Markov chain; `rates[i][j]` is the jump intensity i -> j.
    /// `initial` defaults to the stationary distribution.
    RegimeSwitching {
        rates: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        initial: Option<Vec<f64>>,
    },
    /// Fresh i.i.d. state drawn every `interval` grid steps.
    PiecewiseResampled { weights: Vec<f64>, interval: usize },
    /// State `sequence[k]` from time `times[k]` on; `times[0] = 0`.
    Scheduled { times: Vec<f64>, sequence: Vec<usize> },
}

/// A law for random coefficient paths, independent of the Brownian driver.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientModel {
    states: Vec<MarketNode>,
    dynamics: Dynamics,
    bounds: CoefficientBounds,
    // Lagged averaging windows applied, in order, to every sampled path.
    averaging: Vec<f64>,
}

impl CoefficientModel {
    pub fn new(states: Vec<MarketNode>, dynamics: Dynamics, bounds: CoefficientBounds) -> Result<Self> {
        let k = states.len();
        if k == 0 {
            return Err(Error::invariant("model needs at least one state"));
        }
        let n = states[0].dim();
        if states.iter().any(|s| s.dim() != n) {
            return Err(Error::invariant("all states must have the same dimension"));
        }
        let dynamics = match dynamics {
            Dynamics::ConstantRandom { weights } => Dynamics::ConstantRandom {
                weights: normalize_weights(weights, k)?,
            },
            Dynamics::PiecewiseResampled { weights, interval } => {
                if interval == 0 {
                    return Err(Error::invariant("resample interval must be >= 1 step"));
                }
                Dynamics::PiecewiseResampled {
                    weights: normalize_weights(weights, k)?,
                    interval,
                }
            }
            Dynamics::Scheduled { times, sequence } => {
                if times.is_empty() || times.len() != sequence.len() {
                    return Err(Error::invariant("schedule needs matching, nonempty times and sequence"));
                }
                if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
                    return Err(Error::invariant("schedule times must start at 0 and increase strictly"));
                }
                if let Some(bad) = sequence.iter().find(|&&s| s >= k) {
                    return Err(Error::invariant(format!("schedule refers to state {bad}, only {k} states")));
                }
                Dynamics::Scheduled { times, sequence }
            }
            Dynamics::RegimeSwitching { rates, initial } => {
                if rates.len() != k || rates.iter().any(|row| row.len() != k) {
                    return Err(Error::invariant(format!(
                        "transition rates must be a {k}x{k} matrix"
                    )));
                }
                for (i, row) in rates.iter().enumerate() {
                    for (j, &q) in row.iter().enumerate() {
                        if i != j && !(q.is_finite() && q >= 0.0) {
                            return Err(Error::invariant(format!(
                                "transition rate [{i}][{j}] must be finite and >= 0, got {q}"
                            )));
                        }
                    }
                }
                let initial = match initial {
                    Some(w) => normalize_weights(w, k)?,
                    None => stationary_distribution(&rates)?,
                };
                Dynamics::RegimeSwitching {
                    rates,
                    initial: Some(initial),
                }
            }
        };
        Ok(Self {
            states,
            dynamics,
            bounds,
            averaging: Vec::new(),
        })
    }

    pub fn from_specs(states: &[StateSpec], dynamics: Dynamics, bounds: CoefficientBounds) -> Result<Self> {
        let nodes = states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if !(s.rate.is_finite() && s.rate >= 0.0) {
                    return Err(Error::invariant(format!(
                        "market.states[{i}].rate must be finite and >= 0, got {}",
                        s.rate
                    )));
                }
                s.to_node(&bounds).map_err(|e| match e {
                    Error::Invariant(m) => Error::Invariant(format!("market.states[{i}]: {m}")),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes, dynamics, bounds)
    }

    /// Deterministic model with a single state.
    pub fn constant(node: MarketNode) -> Self {
        Self {
            states: vec![node],
            dynamics: Dynamics::ConstantRandom { weights: vec![1.0] },
            bounds: CoefficientBounds::default(),
            averaging: Vec::new(),
        }
    }

    pub fn states(&self) -> &[MarketNode] {
        &self.states
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn bounds(&self) -> &CoefficientBounds {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn averaging(&self) -> &[f64] {
        &self.averaging
    }

    /// True when every sampled path is the same deterministic path.
    pub fn is_deterministic(&self) -> bool {
        self.states.len() == 1 || matches!(self.dynamics, Dynamics::Scheduled { .. })
    }

    pub(crate) fn with_averaging(&self, eps: f64) -> Self {
        let mut m = self.clone();
        m.averaging.push(eps);
        m
    }

    /// Operator-norm suprema over the model's states.
    pub fn operator_norm_bounds(&self) -> OperatorNormBounds {
        OperatorNormBounds::over(self.states.iter())
    }

    /// `max |sigma^{-T} theta|` over the states: the weight norm of the nu = 1 fund.
    pub fn max_fund_weight(&self) -> f64 {
        self.states.iter().map(|s| s.fund().norm()).fold(0.0, f64::max)
    }

    /// Index of the active state on each node; `len = steps + 1`.
    pub fn sample_states(&self, grid: &TimeGrid, seed: u64) -> Vec<usize> {
        let m = grid.steps();
        let mut rng = seed::rng(seed);
        match &self.dynamics {
            Dynamics::Scheduled { times, sequence } => (0..=m)
                .map(|i| {
                    // Tolerate rounding in node times.
                    let t = grid.node(i) + 1e-12 * grid.horizon();
                    let k = times.partition_point(|&s| s <= t);
                    sequence[k.max(1) - 1]
                })
                .collect(),
            Dynamics::ConstantRandom { weights } => {
                let s = draw(&mut rng, weights);
                vec![s; m + 1]
            }
            Dynamics::PiecewiseResampled { weights, interval } => {
                let mut out = Vec::with_capacity(m + 1);
                let mut s = 0;
                for i in 0..=m {
                    if i % interval == 0 {
                        s = draw(&mut rng, weights);
                    }
                    out.push(s);
                }
                out
            }
            Dynamics::RegimeSwitching { rates, initial } => {
                let initial = initial.as_deref().expect("initial resolved in new()");
                let mut s = draw(&mut rng, initial);
                let mut t = 0.0;
                let mut next = t + holding_time(&mut rng, rates, s);
                let mut out = Vec::with_capacity(m + 1);
                for i in 0..=m {
                    let ti = grid.node(i);
                    while next <= ti {
                        t = next;
                        s = jump(&mut rng, rates, s);
                        next = t + holding_time(&mut rng, rates, s);
                    }
                    out.push(s);
                }
                out
            }
        }
    }
}

fn normalize_weights(w: Vec<f64>, k: usize) -> Result<Vec<f64>> {
    if w.len() != k {
        return Err(Error::invariant(format!(
            "expected {k} state weights, got {}",
            w.len()
        )));
    }
    if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::invariant("state weights must be finite and >= 0"));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invariant("state weights must not all be zero"));
    }
    Ok(w.into_iter().map(|x| x / total).collect())
}

fn total_rate(rates: &[Vec<f64>], s: usize) -> f64 {
    rates[s]
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != s)
        .map(|(_, q)| q)
        .sum()
}

fn holding_time<R: Rng>(rng: &mut R, rates: &[Vec<f64>], s: usize) -> f64 {
    let q = total_rate(rates, s);
    if q > 0.0 {
        Exp::new(q).expect("positive rate").sample(rng)
    } else {
        f64::INFINITY
    }
}

fn jump<R: Rng>(rng: &mut R, rates: &[Vec<f64>], s: usize) -> usize {
    let w: Vec<f64> = rates[s]
        .iter()
        .enumerate()
        .map(|(j, &q)| if j == s { 0.0 } else { q })
        .collect();
    draw(rng, &w)
}

fn draw<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    if weights.len() == 1 {
        return 0;
    }
    WeightedIndex::new(weights)
        .expect("weights validated")
        .sample(rng)
}

/// Stationary law of the chain with off-diagonal intensities `rates`.
pub fn stationary_distribution(rates: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = rates.len();
    if k == 1 {
        return Ok(vec![1.0]);
    }
    // Solve pi Q = 0 with the last balance equation replaced by sum(pi) = 1.
    let mut a = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            if i != j {
                a[(j, i)] = rates[i][j];
            }
        }
        a[(i, i)] = -total_rate(rates, i);
    }
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::invariant("transition rates are reducible; give an initial distribution"))?;
    if pi.iter().any(|p| *p < -1e-12 || !p.is_finite()) {
        return Err(Error::invariant("stationary distribution is not unique"));
    }
    Ok(pi.iter().map(|p| p.max(0.0)).collect())
}

/// Samples one coefficient path; deterministic in `(model, grid, seed)`.
pub fn sample_coefficients(model: &CoefficientModel, grid: &TimeGrid, seed: u64) -> Result<CoefficientPath> {
    let states = model.sample_states(grid, seed);
    let nodes = states.iter().map(|&s| model.states[s].clone()).collect();
    let mut path = CoefficientPath {
        grid: *grid,
        nodes,
        bounds: model.bounds,
    };
    for &eps in &model.averaging {
        path = smoothing::epsilon_average(&path, eps)?;
    }
    Ok(path)
}
