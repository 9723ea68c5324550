//! Admissible strategies and the mutual-fund projection.
//!
//! A [`Strategy`] is a reusable description; each simulated path asks it for
//! a fresh [`Policy`], which carries whatever per-path state the rule needs.
//! Policies only ever see an [`Observation`] truncated at the current node,
//! so adaptedness holds by construction.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::market::{risk_premium, MarketNode, OperatorNormBounds, TimeGrid, THETA_ZERO};
use crate::seed;

/// Everything a strategy may read at node `index`.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    index: usize,
    grid: &'a TimeGrid,
    market: &'a [MarketNode],
    increments: &'a [f64],
    log_wealth: &'a [f64],
    dim: usize,
}

impl<'a> Observation<'a> {
    /// `market` and `log_wealth` must hold nodes `0..=index`; `increments`
    /// must hold the `index` increments already realised.
    pub fn new(
        index: usize,
        grid: &'a TimeGrid,
        market: &'a [MarketNode],
        increments: &'a [f64],
        log_wealth: &'a [f64],
    ) -> Self {
        let dim = market[0].dim();
        debug_assert_eq!(market.len(), index + 1);
        debug_assert_eq!(log_wealth.len(), index + 1);
        debug_assert_eq!(increments.len(), index * dim);
        Self {
            index,
            grid,
            market,
            increments,
            log_wealth,
            dim,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn time(&self) -> f64 {
        self.grid.node(self.index)
    }

    pub fn grid(&self) -> &TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficients in force on the current cell.
    pub fn current(&self) -> &'a MarketNode {
        &self.market[self.index]
    }

    /// Coefficient history, nodes `0..=index`.
    pub fn market(&self) -> &'a [MarketNode] {
        self.market
    }

    /// Realised increment over cell `j < index`.
    pub fn increment(&self, j: usize) -> &'a [f64] {
        &self.increments[j * self.dim..(j + 1) * self.dim]
    }

    /// Log discounted wealth history, nodes `0..=index`.
    pub fn log_wealth_history(&self) -> &'a [f64] {
        self.log_wealth
    }

    pub fn log_wealth(&self) -> f64 {
        self.log_wealth[self.index]
    }

    fn with_wealth(&self, log_wealth: &'a [f64]) -> Self {
        Self { log_wealth, ..*self }
    }
}

/// Per-path evaluation state of a strategy.
pub trait Policy {
    /// Portfolio proportions in the stocks for the current cell.
    fn weights(&mut self, obs: &Observation<'_>) -> Result<DVector<f64>>;

    /// Projection audit record for the last call, for projected strategies.
    fn certificate(&self) -> Option<&ProjectionCertificate> {
        None
    }
}

/// A bounded, adapted portfolio rule.
///
/// Implementations must be reentrant: all mutable state lives in the
/// [`Policy`] returned for each path.
pub trait Strategy: Send + Sync {
    fn label(&self) -> &str;

    /// Declared bound on `|pi|`; `f64::INFINITY` means unchecked.
    fn bound(&self) -> f64;

    /// Fresh policy for one path. `path_seed` feeds strategies that randomise.
    fn policy(&self, path_seed: u64) -> Box<dyn Policy + '_>;
}

impl<S: Strategy + ?Sized> Strategy for &S {
    fn label(&self) -> &str {
        (**self).label()
    }
    fn bound(&self) -> f64 {
        (**self).bound()
    }
    fn policy(&self, path_seed: u64) -> Box<dyn Policy + '_> {
        (**self).policy(path_seed)
    }
}

impl<S: Strategy + ?Sized> Strategy for Box<S> {
    fn label(&self) -> &str {
        (**self).label()
    }
    fn bound(&self) -> f64 {
        (**self).bound()
    }
    fn policy(&self, path_seed: u64) -> Box<dyn Policy + '_> {
        (**self).policy(path_seed)
    }
}

impl<S: Strategy + ?Sized> Strategy for Arc<S> {
    fn label(&self) -> &str {
        (**self).label()
    }
    fn bound(&self) -> f64 {
        (**self).bound()
    }
    fn policy(&self, path_seed: u64) -> Box<dyn Policy + '_> {
        (**self).policy(path_seed)
    }
}

/// Checks the admissibility constraints on one proportion vector.
pub fn check_weights(pi: &DVector<f64>, node: &MarketNode, bound: f64, index: usize) -> Result<()> {
    if pi.len() != node.dim() {
        return Err(Error::Dimension {
            expected: node.dim(),
            actual: pi.len(),
            context: "strategy weights",
        });
    }
    if pi.iter().any(|x| !x.is_finite()) {
        return Err(Error::numeric(format!("node {index}: strategy returned non-finite weights")));
    }
    let norm = pi.norm();
    if norm > bound * (1.0 + 1e-12) {
        return Err(Error::invariant(format!(
            "node {index}: |pi| = {norm} exceeds declared bound {bound}"
        )));
    }
    if node.theta_is_zero() && norm != 0.0 {
        return Err(Error::invariant(format!(
            "node {index}: pi must vanish where the risk premium is zero"
        )));
    }
    Ok(())
}

fn masked(pi: DVector<f64>, node: &MarketNode) -> DVector<f64> {
    if node.theta_is_zero() {
        DVector::zeros(pi.len())
    } else {
        pi
    }
}

// ---------------------------------------------------------------------------
// Projection

/// Audit record of one projection onto the fund direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionCertificate {
    pub node: usize,
    /// `|pi^T sigma|`
    pub base_volatility: f64,
    /// `|pi_hat^T sigma|`
    pub projected_volatility: f64,
    /// `pi_hat^T a_tilde - pi^T a_tilde`, nonnegative.
    pub drift_gap: f64,
    pub nu: f64,
    /// `|pi|`
    pub base_norm: f64,
    /// `|pi_hat|`
    pub projected_norm: f64,
}

fn project_parts(
    pi: &DVector<f64>,
    volatility: &DMatrix<f64>,
    theta: &DVector<f64>,
    fund: &DVector<f64>,
) -> (DVector<f64>, ProjectionCertificate) {
    let exposure = volatility.tr_mul(pi);
    let base_volatility = exposure.norm();
    let theta_norm = theta.norm();
    if theta_norm < THETA_ZERO {
        let cert = ProjectionCertificate {
            node: 0,
            base_volatility,
            projected_volatility: 0.0,
            drift_gap: 0.0,
            nu: 0.0,
            base_norm: pi.norm(),
            projected_norm: 0.0,
        };
        return (DVector::zeros(pi.len()), cert);
    }
    let nu = base_volatility / theta_norm;
    let projected = fund * nu;
    let projected_volatility = volatility.tr_mul(&projected).norm();
    // pi_hat^T a_tilde = nu |theta|^2 and pi^T a_tilde = (sigma^T pi) . theta.
    let drift_gap = base_volatility * theta_norm - exposure.dot(theta);
    let cert = ProjectionCertificate {
        node: 0,
        base_volatility,
        projected_volatility,
        drift_gap,
        nu,
        base_norm: pi.norm(),
        projected_norm: projected.norm(),
    };
    (projected, cert)
}

/// Drift-maximising projection of `pi` onto the ray spanned by `theta^T sigma^{-1}`
/// at equal volatility: `pi_hat^T = nu theta^T sigma^{-1}` with `nu = |pi^T sigma| / |theta|`.
pub fn project_to_mft(
    pi: &DVector<f64>,
    volatility: &DMatrix<f64>,
    excess: &DVector<f64>,
) -> Result<(DVector<f64>, ProjectionCertificate)> {
    if pi.len() != excess.len() {
        return Err(Error::Dimension {
            expected: excess.len(),
            actual: pi.len(),
            context: "strategy weights",
        });
    }
    let theta = risk_premium(volatility, excess)?;
    let fund = volatility
        .transpose()
        .lu()
        .solve(&theta)
        .ok_or_else(|| Error::invariant("volatility matrix is singular"))?;
    Ok(project_parts(pi, volatility, &theta, &fund))
}

/// [`project_to_mft`] using the quantities cached on a market node.
pub fn project_on_node(pi: &DVector<f64>, node: &MarketNode) -> (DVector<f64>, ProjectionCertificate) {
    project_parts(pi, node.volatility(), node.theta(), node.fund())
}

/// `sup ||sigma|| * sup ||sigma^{-1}||`, which bounds `|pi_hat| / |pi|`.
pub fn mft_bound_constant(bounds: OperatorNormBounds) -> f64 {
    bounds.vol * bounds.vol_inv
}

// ---------------------------------------------------------------------------
// Built-in strategies

/// Holds everything in the bank account.
#[derive(Debug, Clone, Default)]
pub struct ZeroStrategy;

struct ZeroPolicy;

impl Policy for ZeroPolicy {
    fn weights(&mut self, obs: &Observation<'_>) -> Result<DVector<f64>> {
        Ok(DVector::zeros(obs.dim()))
    }
}

impl Strategy for ZeroStrategy {
    fn label(&self) -> &str {
        "zero"
    }
    fn bound(&self) -> f64 {
        0.0
    }
    fn policy(&self, _path_seed: u64) -> Box<dyn Policy + '_> {
        Box::new(ZeroPolicy)
    }
}

/// Fixed proportions, switched off where the risk premium vanishes.
#[derive(Debug, Clone)]
pub struct ConstantWeights {
    label: String,
    weights: DVector<f64>,
}

impl ConstantWeights {
    pub fn new(label: impl Into<String>, weights: DVector<f64>) -> Self {
        Self {
            label: label.into(),
            weights,
        }
    }
}

impl Strategy for ConstantWeights {
    fn label(&self) -> &str {
        &self.label
    }
    fn bound(&self) -> f64 {
        self.weights.norm()
    }
    fn policy(&self, _path_seed: u64) -> Box<dyn Policy + '_> {
        Box::new(FnPolicy(move |obs: &Observation<'_>| {
            Ok(masked(self.weights.clone(), obs.current()))
        }))
    }
}

struct FnPolicy<F>(F);

impl<F> Policy for FnPolicy<F>
where
    F: FnMut(&Observation<'_>) -> Result<DVector<f64>>,
{
    fn weights(&mut self, obs: &Observation<'_>) -> Result<DVector<f64>> {
        (self.0)(obs)
    }
}

/// Deterministic-in-time proportions, one vector per cell.
#[derive(Debug, Clone)]
pub struct Schedule {
    label: String,
    weights: Vec<DVector<f64>>,
    bound: f64,
}

impl Schedule {
    pub fn new(label: impl Into<String>, weights: Vec<DVector<f64>>) -> Self {
        let bound = weights.iter().map(|w| w.norm()).fold(0.0, f64::max);
        Self {
            label: label.into(),
            weights,
            bound,
        }
    }

    pub fn weights(&self) -> &[DVector<f64>] {
        &self.weights
    }
}

impl Strategy for Schedule {
    fn label(&self) -> &str {
        &self.label
    }
    fn bound(&self) -> f64 {
        self.bound
    }
    fn policy(&self, _path_seed: u64) -> Box<dyn Policy + '_> {
        Box::new(FnPolicy(move |obs: &Observation<'_>| {
            let w = self.weights.get(obs.index()).ok_or_else(|| {
                Error::invariant(format!("node {}: schedule has no entry", obs.index()))
            })?;
            Ok(masked(w.clone(), obs.current()))
        }))
    }
}

/// Scales a base mix down after gains and up after losses:
/// `pi = w * clamp(1 - sensitivity * (Y - Y_0), floor, cap)`.
#[derive(Debug, Clone)]
pub struct Contrarian {
    label: String,
    weights: DVector<f64>,
    sensitivity: f64,
    floor: f64,
    cap: f64,
}

impl Contrarian {
    pub fn new(label: impl Into<String>, weights: DVector<f64>, sensitivity: f64, floor: f64, cap: f64) -> Result<Self> {
        if !(floor.is_finite() && cap.is_finite() && floor <= cap && sensitivity.is_finite()) {
            return Err(Error::invariant("contrarian strategy needs finite floor <= cap"));
        }
        Ok(Self {
            label: label.into(),
            weights,
            sensitivity,
            floor,
            cap,
        })
    }
}

impl Strategy for Contrarian {
    fn label(&self) -> &str {
        &self.label
    }
    fn bound(&self) -> f64 {
        self.weights.norm() * self.floor.abs().max(self.cap.abs())
    }
    fn policy(&self, _path_seed: u64) -> Box<dyn Policy + '_> {
        Box::new(FnPolicy(move |obs: &Observation<'_>| {
            let gain = obs.log_wealth() - obs.log_wealth_history()[0];
            let scale = (1.0 - self.sensitivity * gain).clamp(self.floor, self.cap);
            Ok(masked(&self.weights * scale, obs.current()))
        }))
    }
}

/// Independent uniform draws from the ball of the given radius at every node.
#[derive(Debug, Clone)]
pub struct RandomizedBounded {
    label: String,
    radius: f64,
}

impl RandomizedBounded {
    pub fn new(label: impl Into<String>, radius: f64) -> Self {
        Self {
            label: label.into(),
            radius,
        }
    }
}

struct RandomPolicy {
    rng: ChaCha8Rng,
    radius: f64,
}

impl Policy for RandomPolicy {
    fn weights(&mut self, obs: &Observation<'_>) -> Result<DVector<f64>> {
        let n = obs.dim();
        let dir = DVector::from_fn(n, |_, _| self.rng.sample::<f64, _>(StandardNormal));
        let u: f64 = self.rng.random();
        let r = self.radius * u.powf(1.0 / n as f64);
        let norm = dir.norm();
        let pi = if norm > 0.0 { dir * (r / norm) } else { DVector::zeros(n) };
        Ok(masked(pi, obs.current()))
    }
}

impl Strategy for RandomizedBounded {
    fn label(&self) -> &str {
        &self.label
    }
    fn bound(&self) -> f64 {
        self.radius
    }
    fn policy(&self, path_seed: u64) -> Box<dyn Policy + '_> {
        Box::new(RandomPolicy {
            rng: seed::rng(path_seed),
            radius: self.radius,
        })
    }
}

/// Scalar allocation rule of a fund strategy.
#[derive(Clone)]
pub enum NuRule {
    Constant(f64),
    Adapted(Arc<dyn Fn(&Observation<'_>) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for NuRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NuRule::Constant(nu) => write!(f, "Constant({nu})"),
            NuRule::Adapted(_) => write!(f, "Adapted(..)"),
        }
    }
}

/// `pi^T = nu theta^T sigma^{-1}` for a scalar adapted `nu`.
#[derive(Debug, Clone)]
pub struct MutualFundStrategy {
    label: String,
    nu: NuRule,
    bound: f64,
}

impl MutualFundStrategy {
    pub fn new(label: impl Into<String>, nu: NuRule) -> Self {
        Self {
            label: label.into(),
            nu,
            bound: f64::INFINITY,
        }
    }

    /// Declares a bound on `|pi|`, e.g. `|nu| * model.max_fund_weight()`.
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    pub fn nu(&self) -> &NuRule {
        &self.nu
    }
}

impl Strategy for MutualFundStrategy {
    fn label(&self) -> &str {
        &self.label
    }
    fn bound(&self) -> f64 {
        self.bound
    }
    fn policy(&self, _path_seed: u64) -> Box<dyn Policy + '_> {
        Box::new(FnPolicy(move |obs: &Observation<'_>| {
            let nu = match &self.nu {
                NuRule::Constant(nu) => *nu,
                NuRule::Adapted(f) => f(obs),
            };
            if !nu.is_finite() {
                return Err(Error::numeric(format!("node {}: nu is not finite", obs.index())));
            }
            let node = obs.current();
            Ok(masked(node.fund() * nu, node))
        }))
    }
}

/// The growth-optimal fund, `nu = 1`.
pub fn log_optimal_strategy() -> MutualFundStrategy {
    MutualFundStrategy::new("log_optimal", NuRule::Constant(1.0))
}

pub fn constant_nu_strategy(nu: f64) -> MutualFundStrategy {
    MutualFundStrategy::new(format!("nu={nu}"), NuRule::Constant(nu))
}

// ---------------------------------------------------------------------------
// Lifting a strategy onto the fund direction

/// A base strategy projected node by node onto the fund direction.
///
/// The base strategy is run on its own companion wealth `Y_M`, advanced with
/// the same Brownian increments, and each base decision is replaced by its
/// projection. The resulting `nu` therefore depends only on observables.
#[derive(Debug, Clone)]
pub struct LiftedStrategy<S> {
    base: S,
    label: String,
    bound: f64,
}

pub fn lift_projection<S: Strategy>(base: S) -> LiftedStrategy<S> {
    let label = format!("mft({})", base.label());
    LiftedStrategy {
        base,
        label,
        bound: f64::INFINITY,
    }
}

impl<S: Strategy> LiftedStrategy<S> {
    /// Declares `C * C_pi` as the bound, with `C` from [`mft_bound_constant`].
    pub fn with_norm_bounds(mut self, bounds: OperatorNormBounds) -> Self {
        self.bound = mft_bound_constant(bounds) * self.base.bound();
        self
    }

    pub fn base(&self) -> &S {
        &self.base
    }
}

struct LiftedPolicy<'a> {
    base: Box<dyn Policy + 'a>,
    base_bound: f64,
    companion: Vec<f64>,
    last_base: Option<DVector<f64>>,
    certificate: Option<ProjectionCertificate>,
}

impl Policy for LiftedPolicy<'_> {
    fn weights(&mut self, obs: &Observation<'_>) -> Result<DVector<f64>> {
        let i = obs.index();
        if self.companion.is_empty() {
            self.companion.push(obs.log_wealth_history()[0]);
        }
        // Advance the companion over cell i-1, whose increment is now observable.
        while self.companion.len() <= i {
            let j = self.companion.len() - 1;
            let pi = self
                .last_base
                .as_ref()
                .ok_or_else(|| Error::invariant("projected strategy skipped a node"))?;
            let y = self.companion[j]
                + log_increment(pi, &obs.market()[j], obs.increment(j), obs.grid().dt());
            self.companion.push(y);
        }
        let companion_obs = obs.with_wealth(&self.companion[..=i]);
        let pi = self.base.weights(&companion_obs)?;
        check_weights(&pi, obs.current(), self.base_bound, i)?;
        let (projected, mut cert) = project_on_node(&pi, obs.current());
        cert.node = i;
        self.certificate = Some(cert);
        self.last_base = Some(pi);
        Ok(projected)
    }

    fn certificate(&self) -> Option<&ProjectionCertificate> {
        self.certificate.as_ref()
    }
}

impl<S: Strategy> Strategy for LiftedStrategy<S> {
    fn label(&self) -> &str {
        &self.label
    }
    fn bound(&self) -> f64 {
        self.bound
    }
    fn policy(&self, path_seed: u64) -> Box<dyn Policy + '_> {
        Box::new(LiftedPolicy {
            base: self.base.policy(path_seed),
            base_bound: self.base.bound(),
            companion: Vec::new(),
            last_base: None,
            certificate: None,
        })
    }
}

/// Exact log-wealth increment over one cell with constant coefficients.
pub(crate) fn log_increment(pi: &DVector<f64>, node: &MarketNode, dw: &[f64], dt: f64) -> f64 {
    let exposure = node.volatility().tr_mul(pi);
    let drift = pi.dot(node.excess()) - 0.5 * exposure.norm_squared();
    let noise: f64 = exposure.iter().zip(dw).map(|(e, w)| e * w).sum();
    drift * dt + noise
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::CoefficientBounds;
    use proptest::prelude::*;

    fn node(r: f64, a: &[f64], sigma: &[f64]) -> MarketNode {
        let n = a.len();
        MarketNode::new(
            r,
            DVector::from_row_slice(a),
            DMatrix::from_row_slice(n, n, sigma),
            &CoefficientBounds::default(),
        )
        .unwrap()
    }

    /// Brute-force maximum of f . a over the circle |f^T sigma| = radius in 2D.
    fn brute_force_2d(sigma: &DMatrix<f64>, excess: &DVector<f64>, radius: f64, angles: usize) -> (f64, DVector<f64>) {
        let inv_t = sigma.transpose().try_inverse().unwrap();
        let mut best = (f64::NEG_INFINITY, DVector::zeros(2));
        for k in 0..angles {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / angles as f64;
            // f^T sigma = radius * u  <=>  f = sigma^{-T} radius u.
            let u = DVector::from_vec(vec![phi.cos(), phi.sin()]);
            let f = &inv_t * u * radius;
            let val = f.dot(excess);
            if val > best.0 {
                best = (val, f);
            }
        }
        best
    }

    #[test]
    fn zero_premium_gives_zero() {
        let sigma = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.0, 0.2]);
        let (p, c) = project_to_mft(&DVector::from_vec(vec![0.4, -0.7]), &sigma, &DVector::zeros(2)).unwrap();
        assert_eq!(p.norm(), 0.0);
        assert_eq!(c.nu, 0.0);
        assert_eq!(c.drift_gap, 0.0);
    }

    #[test]
    fn one_dimensional_example() {
        let sigma = DMatrix::from_element(1, 1, 1.0);
        let excess = DVector::from_vec(vec![0.1]);
        let pi = DVector::from_vec(vec![-0.5]);
        // Feasible set {f : |f| = 0.5} = {-0.5, 0.5}; f a is largest at +0.5.
        let best = [-0.5f64, 0.5]
            .into_iter()
            .max_by(|a, b| (a * 0.1).partial_cmp(&(b * 0.1)).unwrap())
            .unwrap();
        let (p, c) = project_to_mft(&pi, &sigma, &excess).unwrap();
        assert!((p[0] - best).abs() < 1e-15);
        assert!((c.nu - 5.0).abs() < 1e-12);
        assert!((c.drift_gap - (best * 0.1 - (-0.5 * 0.1))).abs() < 1e-15);
        assert!((c.drift_gap - 0.1).abs() < 1e-15);
    }

    #[test]
    fn two_dimensional_example() {
        let sigma = DMatrix::identity(2, 2);
        let excess = DVector::from_vec(vec![0.1, 0.0]);
        let pi = DVector::from_vec(vec![0.0, 0.3]);
        let (best_val, best_f) = brute_force_2d(&sigma, &excess, 0.3, 10_000);
        let (p, c) = project_to_mft(&pi, &sigma, &excess).unwrap();
        assert!((&p - &best_f).norm() < 1e-12);
        assert!((p[0] - 0.3).abs() < 1e-15 && p[1].abs() < 1e-15);
        assert!((c.nu - 3.0).abs() < 1e-12);
        assert!((c.drift_gap - 0.03).abs() < 1e-15);
        assert!((c.drift_gap - (best_val - 0.0)).abs() < 1e-12);
    }

    #[test]
    fn bound_constant_examples() {
        let id = node(0.0, &[0.1, 0.1], &[1.0, 0.0, 0.0, 1.0]);
        assert!((mft_bound_constant(OperatorNormBounds::over([&id])) - 1.0).abs() < 1e-14);
        let d = node(0.0, &[0.1, 0.1], &[0.2, 0.0, 0.0, 0.5]);
        // ||diag(0.2, 0.5)|| = 0.5 and ||diag(5, 2)|| = 5.
        assert!((mft_bound_constant(OperatorNormBounds::over([&d])) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn log_optimal_weights() {
        let n = node(0.0, &[0.05, 0.02], &[1.0, 0.0, 0.0, 1.0]);
        assert!((n.fund() - DVector::from_vec(vec![0.05, 0.02])).norm() < 1e-15);
        // a_tilde / sigma^2 = 0.04 / 0.04.
        let n = node(0.0, &[0.04], &[0.2]);
        assert!((n.fund()[0] - 1.0).abs() < 1e-14);
        assert!((n.fund()[0] * 2.0 - 2.0).abs() < 1e-14);
    }

    fn invertible_2x2() -> impl proptest::strategy::Strategy<Value = DMatrix<f64>> {
        use proptest::strategy::Strategy as _;
        proptest::collection::vec(-1.0f64..1.0, 4)
            .prop_map(|v: Vec<f64>| DMatrix::from_row_slice(2, 2, &v) + DMatrix::identity(2, 2) * 1.5)
    }

    proptest! {
        #[test]
        fn projection_properties(
            sigma in invertible_2x2(),
            excess in proptest::collection::vec(-0.3f64..0.3, 2),
            pi in proptest::collection::vec(-2.0f64..2.0, 2),
            lambda in -3.0f64..3.0,
        ) {
            let excess = DVector::from_vec(excess);
            let pi = DVector::from_vec(pi);
            prop_assume!(risk_premium(&sigma, &excess).unwrap().norm() > 1e-6);
            let (p, c) = project_to_mft(&pi, &sigma, &excess).unwrap();
            let vb = sigma.tr_mul(&pi).norm();
            prop_assert!((c.projected_volatility - vb).abs() <= 1e-12 * vb.max(1e-300));
            prop_assert!(c.drift_gap >= -1e-14);
            prop_assert!(p.dot(&excess) >= pi.dot(&excess) - 1e-14);
            let (pp, _) = project_to_mft(&p, &sigma, &excess).unwrap();
            prop_assert!((&pp - &p).norm() <= 1e-12 * (1.0 + p.norm()));
            let (pl, _) = project_to_mft(&(&pi * lambda), &sigma, &excess).unwrap();
            prop_assert!((&pl - &p * lambda.abs()).norm() <= 1e-12 * (1.0 + p.norm()));
        }
    }
}
