//! Mutual-fund separation for markets with random coefficients.
//!
//! Simulation of discounted wealth under random, Brownian-independent
//! coefficients, projection of arbitrary strategies onto the log-optimal fund
//! direction, and Monte Carlo checks that the projection never lowers
//! expected utility.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod market;
pub mod montecarlo;
pub mod seed;
pub mod smoothing;
pub mod strategies;
pub mod utility;
pub mod wealth;

pub use error::{Error, Result};
pub use market::{BrownianPath, CoefficientModel, CoefficientPath, MarketNode, TimeGrid};
pub use strategies::{lift_projection, Policy, Strategy};
pub use utility::UtilitySpec;
pub use wealth::{simulate_log_wealth, Simulation, StrategyTrace, WealthPath};
