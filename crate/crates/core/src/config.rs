//! Declarative experiment configuration.
//!
//! A config is one JSON document with a `"schema"` version. Resolution turns
//! it into a self-contained form (utility names expanded, trace files
//! inlined, overrides applied) which is what the manifest records, so a
//! manifest is itself a valid config that reproduces the same run.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{CoefficientBounds, CoefficientModel, Dynamics, StateSpec, TimeGrid};
use crate::montecarlo::Setup;
use crate::strategies::{
    log_optimal_strategy, lift_projection, ConstantWeights, Contrarian, MutualFundStrategy, NuRule, RandomizedBounded,
    Schedule, Strategy, ZeroStrategy,
};
use crate::utility::UtilitySpec;
use crate::wealth::StrategyTrace;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSpec {
    pub states: Vec<StateSpec>,
    pub dynamics: Dynamics,
    #[serde(default)]
    pub bounds: CoefficientBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategySpec {
    Zero {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Constant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        weights: Vec<f64>,
    },
    /// One weight vector per grid cell.
    Schedule {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        weights: Vec<Vec<f64>>,
    },
    /// A trace CSV, relative to the config file. Inlined as a schedule on resolution.
    Trace {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        file: String,
    },
    Contrarian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        weights: Vec<f64>,
        sensitivity: f64,
        floor: f64,
        cap: f64,
    },
    Randomized {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        radius: f64,
    },
    MutualFund {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        nu: f64,
    },
    LogOptimal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    /// The fund projection of another strategy.
    Projected { base: Box<StrategySpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UtilityRef {
    Name(String),
    Spec(UtilitySpec),
}

impl UtilityRef {
    pub fn resolve(&self) -> Result<UtilitySpec> {
        let spec = match self {
            UtilityRef::Name(n) => UtilitySpec::builtin(n)?,
            UtilityRef::Spec(s) => s.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    Project,
    Compare,
    Sweep,
    Converge,
    CheckUtility,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Project => "project",
            ExperimentKind::Compare => "compare",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Converge => "converge",
            ExperimentKind::CheckUtility => "check_utility",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub grid: GridSpec,
    pub market: MarketSpec,
    #[serde(default = "one")]
    pub initial_wealth: f64,
    #[serde(default)]
    pub strategies: Vec<StrategySpec>,
    pub utilities: Vec<UtilityRef>,
    pub experiment: ExperimentSpec,
    pub paths: usize,
    pub seed: u64,
    /// Output directory; not part of the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn one() -> f64 {
    1.0
}

/// Command-line overrides applied before resolution.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kind: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "schema: unsupported version {}, expected {SCHEMA_VERSION}",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies overrides, inlines trace files and expands utility names.
    /// `base_dir` anchors relative trace paths.
    pub fn resolve(mut self, overrides: &Overrides, base_dir: &Path) -> Result<Self> {
        if let Some(k) = overrides.kind {
            self.experiment.kind = k;
        }
        if let Some(s) = overrides.seed {
            self.seed = s;
        }
        if let Some(p) = overrides.paths {
            self.paths = p;
        }
        self.output = None;
        let grid = self.grid()?;
        self.strategies = self
            .strategies
            .into_iter()
            .map(|s| inline_traces(s, &grid, base_dir))
            .collect::<Result<_>>()?;
        self.utilities = self
            .utilities
            .iter()
            .map(|u| u.resolve().map(UtilityRef::Spec))
            .collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.horizon, self.grid.steps).map_err(|e| prefix("grid", e))
    }

    pub fn model(&self) -> Result<CoefficientModel> {
        CoefficientModel::from_specs(&self.market.states, self.market.dynamics.clone(), self.market.bounds)
    }

    pub fn setup(&self) -> Result<Setup> {
        Setup::new(self.model()?, self.grid()?, self.initial_wealth, self.paths, self.seed)
    }

    pub fn utility_specs(&self) -> Result<Vec<UtilitySpec>> {
        if self.utilities.is_empty() {
            return Err(Error::config("utilities: at least one utility is required"));
        }
        self.utilities.iter().map(UtilityRef::resolve).collect()
    }

    /// Builds every strategy; errors name `strategies[i]`.
    pub fn build_strategies(&self, model: &CoefficientModel) -> Result<Vec<Box<dyn Strategy>>> {
        let grid = self.grid()?;
        self.strategies
            .iter()
            .enumerate()
            .map(|(i, s)| build_strategy(s, model, &grid).map_err(|e| prefix(&format!("strategies[{i}]"), e)))
            .collect()
    }

    /// Validates everything that can be checked before simulating.
    pub fn validate(&self) -> Result<()> {
        let model = self.model()?;
        let grid = self.grid()?;
        self.utility_specs()?;
        let strategies = self.build_strategies(&model)?;
        if strategies.is_empty() && self.experiment.kind != ExperimentKind::CheckUtility {
            return Err(Error::config("strategies: at least one strategy is required"));
        }
        if !(self.initial_wealth > 0.0 && self.initial_wealth.is_finite()) {
            return Err(Error::invariant(format!(
                "initial_wealth must be > 0, got {}",
                self.initial_wealth
            )));
        }
        if self.paths < 2 {
            return Err(Error::config(format!("paths must be >= 2, got {}", self.paths)));
        }
        if let Some(eps) = &self.experiment.eps {
            for (i, e) in eps.iter().enumerate() {
                if grid.cells_in(*e).is_none() {
                    return Err(Error::config(format!(
                        "experiment.eps[{i}] = {e} is not a positive multiple of the grid step"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn nu_grid(&self) -> Vec<f64> {
        self.experiment
            .nu_grid
            .clone()
            .unwrap_or_else(|| (0..=8).map(|k| k as f64 * 0.25).collect())
    }

    pub fn eps_list(&self) -> Vec<f64> {
        self.experiment.eps.clone().unwrap_or_else(|| {
            let t = self.grid.horizon;
            vec![t / 4.0, t / 8.0, t / 16.0, t / 32.0]
        })
    }

    pub fn to_manifest_json(&self) -> String {
        let mut m = self.clone();
        m.output = None;
        let mut s = serde_json::to_string_pretty(&m).expect("config serializes");
        s.push('\n');
        s
    }
}

fn prefix(ctx: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
        Error::Invariant(m) => Error::Invariant(format!("{ctx}: {m}")),
        Error::Numeric(m) => Error::Numeric(format!("{ctx}: {m}")),
        other => other,
    }
}

fn inline_traces(spec: StrategySpec, grid: &TimeGrid, base_dir: &Path) -> Result<StrategySpec> {
    Ok(match spec {
        StrategySpec::Trace { label, file } => {
            let path = base_dir.join(&file);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::config(format!("trace file {}: {e}", path.display())))?;
            let trace = StrategyTrace::read_csv(*grid, &text)?;
            StrategySpec::Schedule {
                label: Some(label.unwrap_or(file)),
                weights: trace.weights().iter().map(|w| w.iter().copied().collect()).collect(),
            }
        }
        StrategySpec::Projected { base } => StrategySpec::Projected {
            base: Box::new(inline_traces(*base, grid, base_dir)?),
        },
        other => other,
    })
}

fn check_dim(w: &[f64], n: usize) -> Result<DVector<f64>> {
    if w.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: w.len(),
            context: "strategy weights",
        });
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::invariant("weights must be finite"));
    }
    Ok(DVector::from_column_slice(w))
}

fn build_strategy(spec: &StrategySpec, model: &CoefficientModel, grid: &TimeGrid) -> Result<Box<dyn Strategy>> {
    let n = model.dim();
    let name = |l: &Option<String>, d: &str| l.clone().unwrap_or_else(|| d.to_string());
    Ok(match spec {
        StrategySpec::Zero { .. } => Box::new(ZeroStrategy),
        StrategySpec::Constant { label, weights } => {
            Box::new(ConstantWeights::new(name(label, "constant"), check_dim(weights, n)?))
        }
        StrategySpec::Schedule { label, weights } => {
            if weights.len() != grid.steps() {
                return Err(Error::Dimension {
                    expected: grid.steps(),
                    actual: weights.len(),
                    context: "schedule cells",
                });
            }
            let w = weights.iter().map(|w| check_dim(w, n)).collect::<Result<_>>()?;
            Box::new(Schedule::new(name(label, "schedule"), w))
        }
        StrategySpec::Trace { .. } => {
            return Err(Error::config("trace strategies must be resolved before building"));
        }
        StrategySpec::Contrarian {
            label,
            weights,
            sensitivity,
            floor,
            cap,
        } => Box::new(Contrarian::new(
            name(label, "contrarian"),
            check_dim(weights, n)?,
            *sensitivity,
            *floor,
            *cap,
        )?),
        StrategySpec::Randomized { label, radius } => {
            if !(radius.is_finite() && *radius >= 0.0) {
                return Err(Error::invariant(format!("radius must be finite and >= 0, got {radius}")));
            }
            Box::new(RandomizedBounded::new(name(label, "randomized"), *radius))
        }
        StrategySpec::MutualFund { label, nu } => {
            if !nu.is_finite() {
                return Err(Error::invariant("nu must be finite"));
            }
            Box::new(
                MutualFundStrategy::new(name(label, &format!("nu={nu}")), NuRule::Constant(*nu))
                    .with_bound(nu.abs() * model.max_fund_weight()),
            )
        }
        StrategySpec::LogOptimal { label } => {
            let s = log_optimal_strategy().with_bound(model.max_fund_weight());
            match label {
                Some(l) => Box::new(MutualFundStrategy::new(l.clone(), NuRule::Constant(1.0)).with_bound(s.bound())),
                None => Box::new(s),
            }
        }
        StrategySpec::Projected { base } => {
            let b = build_strategy(base, model, grid)?;
            Box::new(lift_projection(b).with_norm_bounds(model.operator_norm_bounds()))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": 1,
        "grid": {"horizon": 1.0, "steps": 4},
        "market": {
            "states": [{"rate": 0.0, "appreciation": [0.1], "volatility": [[0.2]]}],
            "dynamics": {"kind": "constant_random", "weights": [1.0]}
        },
        "strategies": [{"kind": "zero"}],
        "utilities": ["log"],
        "experiment": {"kind": "simulate"},
        "paths": 10,
        "seed": 7
    }"#;

    #[test]
    fn minimal_config_resolves() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        let r = cfg.resolve(&Overrides::default(), Path::new(".")).unwrap();
        r.validate().unwrap();
        assert!(matches!(r.utilities[0], UtilityRef::Spec(_)));
        // Resolution is idempotent, so manifests reproduce themselves.
        let again = ExperimentConfig::from_json(&r.to_manifest_json())
            .unwrap()
            .resolve(&Overrides::default(), Path::new("."))
            .unwrap();
        assert_eq!(again.to_manifest_json(), r.to_manifest_json());
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let bad = MINIMAL.replace("\"paths\"", "\"pathz\": 3, \"paths\"");
        let e = ExperimentConfig::from_json(&bad).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{e}");
        let bad = MINIMAL.replace("\"schema\": 1", "\"schema\": 2");
        assert_eq!(ExperimentConfig::from_json(&bad).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn negative_rate_names_the_field() {
        let bad = MINIMAL.replace("\"rate\": 0.0", "\"rate\": -0.01");
        let cfg = ExperimentConfig::from_json(&bad).unwrap();
        let e = cfg.validate().unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("market.states[0].rate"), "{e}");
    }

    #[test]
    fn bad_strategy_dimension_names_the_strategy() {
        let bad = MINIMAL.replace(r#"{"kind": "zero"}"#, r#"{"kind": "constant", "weights": [0.1, 0.2]}"#);
        let e = ExperimentConfig::from_json(&bad).unwrap().validate().unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }
}
