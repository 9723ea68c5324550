//! Closed-form and quadrature oracles for deterministic inputs.
//!
//! With deterministic coefficients and a deterministic-in-time strategy the
//! terminal log discounted wealth is Gaussian, so expected utilities reduce
//! to one-dimensional integrals.

use crate::error::{Error, Result};
use crate::market::CoefficientPath;
use crate::utility::UtilitySpec;
use crate::wealth::StrategyTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of `Y_M` for a deterministic path and trace.
pub fn gaussian_log_wealth_moments(
    coeffs: &CoefficientPath,
    trace: &StrategyTrace,
    initial_wealth: f64,
) -> Result<GaussianMoments> {
    if !(initial_wealth > 0.0 && initial_wealth.is_finite()) {
        return Err(Error::invariant(format!(
            "initial wealth must be > 0, got {initial_wealth}"
        )));
    }
    if coeffs.grid() != trace.grid() {
        return Err(Error::invariant("coefficient path and trace use different grids"));
    }
    let dt = coeffs.grid().dt();
    let (mut mean, mut variance) = (initial_wealth.ln(), 0.0);
    for (pi, node) in trace.weights().iter().zip(coeffs.nodes()) {
        if pi.len() != node.dim() {
            return Err(Error::Dimension {
                expected: node.dim(),
                actual: pi.len(),
                context: "trace weights",
            });
        }
        let s2 = node.volatility().tr_mul(pi).norm_squared();
        mean += (pi.dot(node.excess()) - 0.5 * s2) * dt;
        variance += s2 * dt;
    }
    Ok(GaussianMoments { mean, variance })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    /// Estimated absolute error of `value` (0 for closed forms).
    pub error: f64,
    /// Gaussian mass outside the integration window.
    pub tail_mass: f64,
}

/// Truncation half-width in standard deviations.
const WINDOW: f64 = 10.0;
const MIN_PANELS: usize = 512;
const MAX_PANELS: usize = 1 << 22;
// P(|Z| > 10).
const TAIL_MASS: f64 = 1.523_970_604_832_105e-23;

/// `E U(exp(Y))` for `Y ~ N(mean, variance)`.
///
/// Constant-coefficient specs (log, negative powers) use the lognormal
/// moment formula; everything else uses adaptive composite Simpson on
/// `mean +- 10 sd`.
pub fn expected_utility_gaussian(spec: &UtilitySpec, mean: f64, variance: f64) -> Result<OracleValue> {
    if !(variance >= 0.0 && variance.is_finite() && mean.is_finite()) {
        return Err(Error::invariant(format!(
            "need finite mean and variance >= 0, got ({mean}, {variance})"
        )));
    }
    if variance == 0.0 {
        return Ok(OracleValue {
            value: spec.eval_log(mean),
            error: 0.0,
            tail_mass: 0.0,
        });
    }
    if let Some(value) = closed_form(spec, mean, variance) {
        return Ok(OracleValue {
            value,
            error: 0.0,
            tail_mass: 0.0,
        });
    }
    let mut panels = MIN_PANELS;
    let mut prev = simpson(spec, mean, variance, panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let next = simpson(spec, mean, variance, panels);
        let diff = (next - prev).abs();
        if diff <= 1e-11 * next.abs().max(1.0) {
            return Ok(OracleValue {
                value: next,
                error: diff,
                tail_mass: TAIL_MASS,
            });
        }
        prev = next;
    }
    Err(Error::numeric(format!(
        "quadrature for '{}' did not converge at {MAX_PANELS} panels",
        spec.name
    )))
}

fn closed_form(spec: &UtilitySpec, mean: f64, variance: f64) -> Option<f64> {
    let c0 = spec.base.as_constant()?;
    let c_log = spec.log_weight.as_constant()?;
    let mut value = c0 + c_log * mean;
    for p in &spec.penalties {
        let c = p.weight.as_constant()?;
        // E exp(-d Y) = exp(-d m + d^2 v / 2).
        value -= c * (-p.delta * mean + 0.5 * p.delta * p.delta * variance).exp();
    }
    Some(value)
}

/// Composite Simpson on the standard-normal axis with `panels` (even) panels.
pub fn simpson(spec: &UtilitySpec, mean: f64, variance: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let sd = variance.sqrt();
    let h = 2.0 * WINDOW / panels as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let f = |z: f64| spec.eval_log(mean + sd * z) * norm * (-0.5 * z * z).exp();
    let mut sum = f(-WINDOW) + f(WINDOW);
    for k in 1..panels {
        let z = -WINDOW + k as f64 * h;
        sum += if k % 2 == 1 { 4.0 } else { 2.0 } * f(z);
    }
    sum * h / 3.0
}
