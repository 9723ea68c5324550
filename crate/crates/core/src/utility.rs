//! The admissible utility family
//!
//! `U(x) = U_0(x) - sum_k U_k(x) x^{-delta_k} + U_{N+1}(x) log x`
//!
//! with nonnegative component functions `U_1..U_{N+1}`, `U_0` bounded below,
//! `U_1..U_N` bounded above and `U_{N+1}` bounded above on `(0, 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar component function with analytically known bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Component {
    Zero,
    Constant {
        value: f64,
    },
    /// `coefficient * x^exponent`
    Power {
        coefficient: f64,
        exponent: f64,
    },
    /// Linear interpolation between `(x, y)` breakpoints, flat outside.
    PiecewiseLinear {
        points: Vec<[f64; 2]>,
    },
    /// `min(inner, cap)`
    Capped {
        inner: Box<Component>,
        cap: f64,
    },
}

impl Component {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Component::Zero => 0.0,
            Component::Constant { value } => *value,
            Component::Power {
                coefficient,
                exponent,
            } => coefficient * x.powf(*exponent),
            Component::PiecewiseLinear { points } => interpolate(points, x),
            Component::Capped { inner, cap } => inner.eval(x).min(*cap),
        }
    }

    /// Value at `x = exp(y)`.
    pub fn eval_log(&self, y: f64) -> f64 {
        match self {
            Component::Zero => 0.0,
            Component::Constant { value } => *value,
            Component::Power {
                coefficient,
                exponent,
            } => coefficient * (exponent * y).exp(),
            Component::PiecewiseLinear { points } => interpolate(points, y.exp()),
            Component::Capped { inner, cap } => inner.eval_log(y).min(*cap),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Component::Zero => true,
            Component::Constant { value } => *value == 0.0,
            Component::Power { coefficient, .. } => *coefficient == 0.0,
            _ => false,
        }
    }

    /// The value if the component is constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Component::Zero => Some(0.0),
            Component::Constant { value } => Some(*value),
            Component::Power {
                coefficient,
                exponent,
            } if *coefficient == 0.0 || *exponent == 0.0 => Some(*coefficient),
            Component::Capped { inner, cap } => inner.as_constant().map(|v| v.min(*cap)),
            _ => None,
        }
    }

    /// Declared `inf_{x>0}`.
    pub fn inf(&self) -> f64 {
        match self {
            Component::Zero => 0.0,
            Component::Constant { value } => *value,
            Component::Power {
                coefficient: c,
                exponent: p,
            } => {
                if *c == 0.0 || *p == 0.0 {
                    *c
                } else if *c > 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Component::PiecewiseLinear { points } => {
                points.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min)
            }
            Component::Capped { inner, cap } => inner.inf().min(*cap),
        }
    }

    /// Declared `sup_{x>0}`.
    pub fn sup(&self) -> f64 {
        match self {
            Component::Zero => 0.0,
            Component::Constant { value } => *value,
            Component::Power {
                coefficient: c,
                exponent: p,
            } => {
                if *c == 0.0 || *p == 0.0 {
                    *c
                } else if *c > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Component::PiecewiseLinear { points } => {
                points.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max)
            }
            Component::Capped { inner, cap } => inner.sup().min(*cap),
        }
    }

    /// Declared `sup_{0<x<1}`.
    pub fn sup_below_one(&self) -> f64 {
        match self {
            Component::Zero => 0.0,
            Component::Constant { value } => *value,
            Component::Power {
                coefficient: c,
                exponent: p,
            } => {
                if *c == 0.0 || *p == 0.0 {
                    *c
                } else if (*c > 0.0) == (*p < 0.0) {
                    // c > 0, p < 0: blows up at 0; c < 0, p > 0: tends to 0 from below.
                    if *c > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else {
                    // c > 0, p > 0: increasing to c; c < 0, p < 0: increasing to c.
                    *c
                }
            }
            Component::PiecewiseLinear { points } => {
                let first = points.first().map_or(0.0, |p| p[1]);
                points
                    .iter()
                    .filter(|p| p[0] < 1.0)
                    .map(|p| p[1])
                    .fold(first.max(interpolate(points, 1.0)), f64::max)
            }
            Component::Capped { inner, cap } => inner.sup_below_one().min(*cap),
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        match self {
            Component::PiecewiseLinear { points } => {
                if points.is_empty() {
                    return Err(Error::config(format!("{what}: breakpoint list is empty")));
                }
                if points.iter().any(|p| !(p[0] > 0.0 && p[0].is_finite() && p[1].is_finite())) {
                    return Err(Error::config(format!(
                        "{what}: breakpoints need finite x > 0 and finite y"
                    )));
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::config(format!(
                        "{what}: breakpoint x values must be strictly increasing"
                    )));
                }
                Ok(())
            }
            Component::Capped { inner, cap } => {
                if cap.is_nan() {
                    return Err(Error::config(format!("{what}: cap is NaN")));
                }
                inner.validate(what)
            }
            Component::Constant { value } if !value.is_finite() => {
                Err(Error::config(format!("{what}: constant must be finite")))
            }
            Component::Power {
                coefficient,
                exponent,
            } if !(coefficient.is_finite() && exponent.is_finite()) => {
                Err(Error::config(format!("{what}: power parameters must be finite")))
            }
            _ => Ok(()),
        }
    }
}

fn interpolate(points: &[[f64; 2]], x: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if x <= first[0] {
        return first[1];
    }
    if x >= last[0] {
        return last[1];
    }
    let k = points.partition_point(|p| p[0] <= x);
    let (a, b) = (points[k - 1], points[k]);
    a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0])
}

/// `U_k(x) x^{-delta}` term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Penalty {
    pub weight: Component,
    pub delta: f64,
}

/// One member of the admissible family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySpec {
    pub name: String,
    /// `U_0`
    #[serde(default = "zero")]
    pub base: Component,
    /// `(U_k, delta_k)`, `k = 1..N`
    #[serde(default)]
    pub penalties: Vec<Penalty>,
    /// `U_{N+1}`
    #[serde(default = "zero")]
    pub log_weight: Component,
}

fn zero() -> Component {
    Component::Zero
}

impl UtilitySpec {
    pub fn log() -> Self {
        Self {
            name: "log".into(),
            base: Component::Zero,
            penalties: Vec::new(),
            log_weight: Component::Constant { value: 1.0 },
        }
    }

    /// `-x^{-delta}`
    pub fn neg_power(delta: f64) -> Self {
        Self {
            name: format!("neg_power_{delta}"),
            base: Component::Zero,
            penalties: vec![Penalty {
                weight: Component::Constant { value: 1.0 },
                delta,
            }],
            log_weight: Component::Zero,
        }
    }

    /// `min(x^{1/2}, 10)`: bounded and increasing.
    pub fn bounded_sqrt() -> Self {
        Self {
            name: "bounded_sqrt".into(),
            base: Component::Capped {
                inner: Box::new(Component::Power {
                    coefficient: 1.0,
                    exponent: 0.5,
                }),
                cap: 10.0,
            },
            penalties: Vec::new(),
            log_weight: Component::Zero,
        }
    }

    /// Resolves a built-in name: `log`, `neg_power_<delta>`, `bounded_sqrt`.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "log" => Ok(Self::log()),
            "bounded_sqrt" => Ok(Self::bounded_sqrt()),
            _ => {
                let delta = name
                    .strip_prefix("neg_power_")
                    .and_then(|d| d.parse::<f64>().ok())
                    .filter(|d| d.is_finite() && *d > 0.0)
                    .ok_or_else(|| Error::config(format!("unknown utility '{name}'")))?;
                Ok(Self::neg_power(delta))
            }
        }
    }

    /// The utilities exercised by the acceptance experiments.
    pub fn builtins() -> Vec<Self> {
        vec![
            Self::log(),
            Self::neg_power(0.5),
            Self::neg_power(1.0),
            Self::neg_power(2.0),
            Self::bounded_sqrt(),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate("base")?;
        self.log_weight.validate("log_weight")?;
        for (k, p) in self.penalties.iter().enumerate() {
            p.weight.validate(&format!("penalties[{k}]"))?;
            if !(p.delta.is_finite() && p.delta > 0.0) {
                return Err(Error::config(format!(
                    "penalties[{k}].delta must be finite and > 0, got {}",
                    p.delta
                )));
            }
        }
        Ok(())
    }

    /// `U(exp(y))`, the form used on simulated log wealth.
    pub fn eval_log(&self, y: f64) -> f64 {
        let mut u = self.base.eval_log(y);
        for p in &self.penalties {
            if !p.weight.is_zero() {
                u -= p.weight.eval_log(y) * (-p.delta * y).exp();
            }
        }
        if !self.log_weight.is_zero() {
            u += self.log_weight.eval_log(y) * y;
        }
        u
    }
}

/// Evaluates the assembled utility at `x > 0`.
pub fn eval_utility(spec: &UtilitySpec, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::invariant(format!("utility argument must be > 0, got {x}")));
    }
    let mut u = spec.base.eval(x);
    for p in &spec.penalties {
        if !p.weight.is_zero() {
            u -= p.weight.eval(x) * x.powf(-p.delta);
        }
    }
    if !spec.log_weight.is_zero() {
        u += spec.log_weight.eval(x) * x.ln();
    }
    Ok(u)
}

/// `U_0 -> min(U_0, K)` and `U_{N+1} -> min(U_{N+1}, K)`.
pub fn cap_utility(spec: &UtilitySpec, cap: f64) -> UtilitySpec {
    UtilitySpec {
        name: format!("{}|cap={cap}", spec.name),
        base: Component::Capped {
            inner: Box::new(spec.base.clone()),
            cap,
        },
        penalties: spec.penalties.clone(),
        log_weight: Component::Capped {
            inner: Box::new(spec.log_weight.clone()),
            cap,
        },
    }
}

/// `count` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let last = (count.max(2) - 1) as f64;
    (0..count.max(2))
        .map(|i| {
            if i == 0 {
                lo
            } else if i as f64 == last {
                hi
            } else {
                (a + (b - a) * i as f64 / last).exp()
            }
        })
        .collect()
}

/// The diagnostic grid: 10^4 log-spaced points on `[1e-6, 1e6]`.
pub fn diagnostic_grid() -> Vec<f64> {
    log_grid(1e-6, 1e6, 10_000)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    Coverage,
    Bound,
    Sign,
    Monotonicity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub kind: IssueKind,
    pub x: Option<f64>,
    pub message: String,
}

/// Outcome of [`check_admissible`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdmissibilityReport {
    pub issues: Vec<Issue>,
    /// Observations that do not fail admissibility.
    pub notes: Vec<String>,
    /// Grid intervals on which `U` decreased.
    pub monotonicity_violations: usize,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has(&self, kind: IssueKind) -> bool {
        self.issues.iter().any(|i| i.kind == kind)
    }
}

const MAX_REPORTED: usize = 10;

/// Checks the family's hypotheses on a grid of points.
pub fn check_admissible(spec: &UtilitySpec, grid: &[f64]) -> AdmissibilityReport {
    let mut report = AdmissibilityReport::default();
    let mut issue = |kind, x, message: String| report.issues.push(Issue { kind, x, message });

    if let Err(e) = spec.validate() {
        issue(IssueKind::Bound, None, e.to_string());
        return report;
    }
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if grid.is_empty() || lo > 1e-6 || hi < 1e6 || grid.iter().any(|x| !(*x > 0.0)) {
        issue(
            IssueKind::Coverage,
            None,
            format!("grid must be positive and span [1e-6, 1e6], got [{lo}, {hi}]"),
        );
    }

    // Declared bounds.
    let inf0 = spec.base.inf();
    if inf0 == f64::NEG_INFINITY {
        issue(IssueKind::Bound, None, "inf U_0 = -inf".into());
    }
    for (k, p) in spec.penalties.iter().enumerate() {
        if p.weight.sup() == f64::INFINITY {
            issue(IssueKind::Bound, None, format!("sup U_{} = +inf", k + 1));
        }
        if p.weight.inf() < 0.0 {
            issue(IssueKind::Sign, None, format!("U_{} takes negative values", k + 1));
        }
    }
    let n1 = spec.penalties.len() + 1;
    if spec.log_weight.sup_below_one() == f64::INFINITY {
        issue(IssueKind::Bound, None, format!("sup over (0,1) of U_{n1} = +inf"));
    }
    if spec.log_weight.inf() < 0.0 {
        issue(IssueKind::Sign, None, format!("U_{n1} takes negative values"));
    }

    // Grid evaluation against the declared bounds.
    let tol = |v: f64| 1e-12 * v.abs().max(1.0);
    for &x in grid {
        let u0 = spec.base.eval(x);
        if inf0.is_finite() && u0 < inf0 - tol(inf0) {
            issue(IssueKind::Bound, Some(x), format!("U_0({x}) = {u0} below declared inf {inf0}"));
            break;
        }
    }
    for (k, p) in spec.penalties.iter().enumerate() {
        let sup = p.weight.sup();
        if let Some(&x) = grid
            .iter()
            .find(|&&x| p.weight.eval(x) < 0.0 || p.weight.eval(x) > sup + tol(sup))
        {
            let v = p.weight.eval(x);
            let kind = if v < 0.0 { IssueKind::Sign } else { IssueKind::Bound };
            issue(kind, Some(x), format!("U_{}({x}) = {v} violates declared range", k + 1));
        }
    }
    let sup1 = spec.log_weight.sup_below_one();
    if let Some(&x) = grid.iter().find(|&&x| {
        let v = spec.log_weight.eval(x);
        v < 0.0 || (x < 1.0 && v > sup1 + tol(sup1))
    }) {
        let v = spec.log_weight.eval(x);
        let kind = if v < 0.0 { IssueKind::Sign } else { IssueKind::Bound };
        issue(kind, Some(x), format!("U_{n1}({x}) = {v} violates declared range"));
    }

    // Monotonicity of the assembled function.
    let values: Vec<f64> = grid
        .iter()
        .map(|&x| eval_utility(spec, x).unwrap_or(f64::NAN))
        .collect();
    let mut violations = 0;
    for (k, w) in values.windows(2).enumerate() {
        let decreased = w[1] < w[0] - tol(w[0]);
        if decreased || w[1].is_nan() {
            violations += 1;
            if violations <= MAX_REPORTED {
                issue(
                    IssueKind::Monotonicity,
                    Some(grid[k + 1]),
                    format!("U decreases from {} at x={} to {} at x={}", w[0], grid[k], w[1], grid[k + 1]),
                );
            }
        }
    }
    report.monotonicity_violations = violations;

    if spec.base.sup() == f64::INFINITY {
        report.notes.push(
            "U_0 is unbounded above; the capped utilities min(U_0, K) are used in the approximation argument"
                .into(),
        );
    }
    report
}
