#![allow(dead_code)]

use mft::market::{CoefficientBounds, CoefficientModel, Dynamics, MarketNode, StateSpec, TimeGrid};
use mft::strategies::{ConstantWeights, Contrarian, RandomizedBounded, Strategy};
use nalgebra::{DMatrix, DVector};

pub fn node(rate: f64, appreciation: &[f64], vol_rows: &[&[f64]]) -> MarketNode {
    let n = appreciation.len();
    let vol = DMatrix::from_fn(n, n, |i, j| vol_rows[i][j]);
    MarketNode::new(rate, DVector::from_column_slice(appreciation), vol, &CoefficientBounds::default()).unwrap()
}

pub fn regime_states() -> Vec<StateSpec> {
    vec![
        StateSpec {
            rate: 0.01,
            appreciation: vec![0.06, 0.04],
            volatility: vec![vec![0.2, 0.0], vec![0.05, 0.25]],
        },
        StateSpec {
            rate: 0.03,
            appreciation: vec![0.02, 0.07],
            volatility: vec![vec![0.3, 0.05], vec![0.0, 0.15]],
        },
    ]
}

pub fn regime_dynamics() -> Dynamics {
    Dynamics::RegimeSwitching {
        rates: vec![vec![0.0, 1.5], vec![1.0, 0.0]],
        initial: None,
    }
}

/// Two assets, two regimes, switching in continuous time.
pub fn regime_model() -> CoefficientModel {
    CoefficientModel::from_specs(&regime_states(), regime_dynamics(), CoefficientBounds::default()).unwrap()
}

/// Constant 2-asset market with `theta = (0.06, 0.08)`.
pub fn merton_node() -> MarketNode {
    // a_tilde = sigma theta with sigma = [[0.2, 0], [0.1, 0.3]].
    node(0.0, &[0.012, 0.030], &[&[0.2, 0.0], &[0.1, 0.3]])
}

pub fn base_strategies() -> Vec<Box<dyn Strategy>> {
    vec![
        Box::new(ConstantWeights::new("constant_mixed", DVector::from_vec(vec![0.6, 0.4]))),
        Box::new(Contrarian::new("contrarian", DVector::from_vec(vec![0.8, 0.5]), 2.0, 0.0, 2.0).unwrap()),
        Box::new(RandomizedBounded::new("randomized", 1.0)),
    ]
}

pub fn grid(steps: usize) -> TimeGrid {
    TimeGrid::new(1.0, steps).unwrap()
}
