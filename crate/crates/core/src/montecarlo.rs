//! Monte Carlo estimation of expected utility.
//!
//! Path `k` always consumes the seeds `PathSeeds::for_path(master, k)`, so
//! two strategies run under the same setup see identical coefficient and
//! Brownian draws (common random numbers). Per-path results are collected in
//! path order and reduced sequentially, which makes every estimate
//! independent of the number of worker threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market::{sample_brownian, sample_coefficients, BrownianPath, CoefficientModel, CoefficientPath, TimeGrid};
use crate::seed::PathSeeds;
use crate::smoothing::{average_strategy_trace, epsilon_average};
use crate::strategies::{constant_nu_strategy, Schedule, Strategy};
use crate::utility::{check_admissible, diagnostic_grid, UtilitySpec};
use crate::wealth::simulate_log_wealth;

/// Market law, grid, initial wealth and sampling budget shared by an experiment.
#[derive(Debug, Clone)]
pub struct Setup {
    pub model: CoefficientModel,
    pub grid: TimeGrid,
    pub initial_wealth: f64,
    pub paths: usize,
    pub seed: u64,
}

impl Setup {
    pub fn new(model: CoefficientModel, grid: TimeGrid, initial_wealth: f64, paths: usize, seed: u64) -> Result<Self> {
        if paths < 2 {
            return Err(Error::config(format!("paths must be >= 2, got {paths}")));
        }
        if !(initial_wealth > 0.0 && initial_wealth.is_finite()) {
            return Err(Error::invariant(format!(
                "initial_wealth must be > 0, got {initial_wealth}"
            )));
        }
        Ok(Self {
            model,
            grid,
            initial_wealth,
            paths,
            seed,
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// Runs `f` on every path in parallel and returns the results in path order.
    pub fn per_path<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&PathSeeds, &CoefficientPath, &BrownianPath) -> Result<T> + Sync,
    {
        let n = self.model.dim();
        (0..self.paths)
            .into_par_iter()
            .map(|k| {
                let seeds = PathSeeds::for_path(self.seed, k as u64);
                let coeffs = sample_coefficients(&self.model, &self.grid, seeds.coeff)?;
                let bm = sample_brownian(&self.grid, seeds.brownian, n);
                f(&seeds, &coeffs, &bm).map_err(|e| on_path(e, k, &seeds))
            })
            .collect()
    }
}

fn on_path(e: Error, k: usize, s: &PathSeeds) -> Error {
    let ctx = format!(
        "path {k} (coeff seed {}, brownian seed {})",
        s.coeff, s.brownian
    );
    match e {
        Error::Invariant(m) => Error::Invariant(format!("{ctx}: {m}")),
        Error::Numeric(m) => Error::Numeric(format!("{ctx}: {m}")),
        Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
        other => other,
    }
}

/// Neumaier-compensated sum, evaluated left to right.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Sample mean and its standard error.
fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let sd = (ss / (n - 1.0)).sqrt();
    (mean, sd / n.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub label: String,
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_samples(label: impl Into<String>, values: &[f64], seed: u64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::config("an estimate needs at least two paths"));
        }
        let (mean, std_error) = mean_and_se(values);
        Ok(Self {
            label: label.into(),
            mean,
            std_error,
            paths: values.len(),
            seed,
        })
    }
}

/// Rejects specs that fail the admissibility diagnostics.
pub fn ensure_admissible(spec: &UtilitySpec) -> Result<()> {
    let report = check_admissible(spec, &diagnostic_grid());
    if report.passed() {
        Ok(())
    } else {
        let msgs: Vec<&str> = report.issues.iter().take(3).map(|i| i.message.as_str()).collect();
        Err(Error::invariant(format!(
            "utility '{}' is not admissible: {}",
            spec.name,
            msgs.join("; ")
        )))
    }
}

fn utilities_of(specs: &[UtilitySpec], y: f64) -> Result<Vec<f64>> {
    specs
        .iter()
        .map(|s| {
            let u = s.eval_log(y);
            if u.is_finite() {
                Ok(u)
            } else {
                Err(Error::numeric(format!(
                    "utility '{}' is not finite at log wealth {y}",
                    s.name
                )))
            }
        })
        .collect()
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

/// `J(pi) = E U(X~(T))` for each spec, on one shared set of paths.
pub fn expected_utilities<S: Strategy + ?Sized>(setup: &Setup, strategy: &S, specs: &[UtilitySpec]) -> Result<Vec<McEstimate>> {
    specs.iter().try_for_each(ensure_admissible)?;
    let rows = setup.per_path(|s, c, b| {
        let sim = simulate_log_wealth(c, b, strategy, setup.initial_wealth, s.strategy)?;
        utilities_of(specs, sim.wealth.terminal_log_wealth())
    })?;
    specs
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            McEstimate::from_samples(
                format!("{}/{}", strategy.label(), spec.name),
                &column(&rows, j),
                setup.seed,
            )
        })
        .collect()
}

pub fn expected_utility<S: Strategy + ?Sized>(setup: &Setup, strategy: &S, spec: &UtilitySpec) -> Result<McEstimate> {
    Ok(expected_utilities(setup, strategy, std::slice::from_ref(spec))?.remove(0))
}

/// Paired comparison `J(projected) - J(base)` on identical draws.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedComparison {
    pub label: String,
    pub utility: String,
    pub differences: Vec<f64>,
    pub mean_difference: f64,
    pub std_error: f64,
    /// Fraction of paths with a nonnegative difference.
    pub nonnegative_fraction: f64,
    pub base: McEstimate,
    pub projected: McEstimate,
}

impl PairedComparison {
    /// Mean difference in units of its standard error.
    pub fn z_score(&self) -> f64 {
        if self.std_error > 0.0 {
            self.mean_difference / self.std_error
        } else if self.mean_difference == 0.0 {
            0.0
        } else {
            self.mean_difference.signum() * f64::INFINITY
        }
    }
}

pub fn paired_compare<B, P>(setup: &Setup, base: &B, projected: &P, specs: &[UtilitySpec]) -> Result<Vec<PairedComparison>>
where
    B: Strategy + ?Sized,
    P: Strategy + ?Sized,
{
    specs.iter().try_for_each(ensure_admissible)?;
    let rows = setup.per_path(|s, c, b| {
        let y0 = simulate_log_wealth(c, b, base, setup.initial_wealth, s.strategy)?;
        let y1 = simulate_log_wealth(c, b, projected, setup.initial_wealth, s.strategy)?;
        let mut u = utilities_of(specs, y0.wealth.terminal_log_wealth())?;
        u.extend(utilities_of(specs, y1.wealth.terminal_log_wealth())?);
        Ok(u)
    })?;
    let k = specs.len();
    specs
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let u0 = column(&rows, j);
            let u1 = column(&rows, k + j);
            let differences: Vec<f64> = u1.iter().zip(&u0).map(|(a, b)| a - b).collect();
            let (mean_difference, std_error) = mean_and_se(&differences);
            let nonneg = differences.iter().filter(|d| **d >= 0.0).count();
            Ok(PairedComparison {
                label: format!("{} vs {}", projected.label(), base.label()),
                utility: spec.name.clone(),
                nonnegative_fraction: nonneg as f64 / differences.len() as f64,
                mean_difference,
                std_error,
                base: McEstimate::from_samples(format!("{}/{}", base.label(), spec.name), &u0, setup.seed)?,
                projected: McEstimate::from_samples(format!("{}/{}", projected.label(), spec.name), &u1, setup.seed)?,
                differences,
            })
        })
        .collect()
}

/// Terminal discounted wealth on every path.
pub fn terminal_wealths<S: Strategy + ?Sized>(setup: &Setup, strategy: &S) -> Result<Vec<f64>> {
    setup.per_path(|s, c, b| {
        Ok(simulate_log_wealth(c, b, strategy, setup.initial_wealth, s.strategy)?
            .wealth
            .terminal_wealth())
    })
}

/// `max_x (F_a(x) - F_b(x))` over all sample points.
///
/// `a` first-order dominates `b` when this is (statistically) nonpositive.
pub fn cdf_dominance(samples_a: &[f64], samples_b: &[f64]) -> Result<f64> {
    if samples_a.is_empty() || samples_b.is_empty() {
        return Err(Error::invariant("cdf_dominance needs nonempty samples"));
    }
    if samples_a.iter().chain(samples_b).any(|x| x.is_nan()) {
        return Err(Error::numeric("cdf_dominance samples contain NaN"));
    }
    let mut a = samples_a.to_vec();
    let mut b = samples_b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best = f64::NEG_INFINITY;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max(i as f64 / na - j as f64 / nb);
    }
    Ok(best)
}

/// One-sided two-sample band at level `alpha`: the difference of two
/// empirical CDFs of equal laws exceeds it with probability at most about `alpha`.
pub fn dkw_band(n_a: usize, n_b: usize, alpha: f64) -> f64 {
    let (na, nb) = (n_a as f64, n_b as f64);
    ((1.0 / alpha).ln() * (na + nb) / (2.0 * na * nb)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub nu: f64,
    pub estimate: McEstimate,
}

/// `J` of the constant-`nu` fund strategies, all on the same draws.
pub fn sweep_nu(setup: &Setup, nu_grid: &[f64], spec: &UtilitySpec) -> Result<Vec<SweepRow>> {
    if nu_grid.iter().any(|nu| !nu.is_finite()) {
        return Err(Error::config("nu grid must be finite"));
    }
    let fund_norm = if setup.model.averaging().is_empty() {
        setup.model.max_fund_weight()
    } else {
        f64::INFINITY
    };
    nu_grid
        .iter()
        .map(|&nu| {
            let s = constant_nu_strategy(nu).with_bound(nu.abs() * fund_norm);
            Ok(SweepRow {
                nu,
                estimate: expected_utility(setup, &s, spec)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub utility: String,
    pub eps: f64,
    /// `J_eps(pi_eps)` on the averaged market.
    pub averaged: McEstimate,
    /// `J(pi)` on the original market.
    pub original: McEstimate,
    /// `|J_eps(pi_eps) - J(pi)|`
    pub abs_difference: f64,
    /// Paired standard error of the difference.
    pub std_error: f64,
}

/// For each `eps`: run the lag-averaged strategy trace on the lag-averaged
/// coefficients, with the same Brownian path, and compare to the original.
pub fn convergence_experiment<S: Strategy + ?Sized>(
    setup: &Setup,
    base: &S,
    specs: &[UtilitySpec],
    eps_list: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    specs.iter().try_for_each(ensure_admissible)?;
    if eps_list.is_empty() || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("eps list must be nonempty and strictly decreasing"));
    }
    for &e in eps_list {
        if setup.grid.cells_in(e).is_none() {
            return Err(Error::config(format!(
                "eps = {e} is not a whole multiple of the grid step {}",
                setup.grid.dt()
            )));
        }
    }
    let k = specs.len();
    // Row layout: [original specs..., eps_0 specs..., eps_1 specs..., ...].
    let rows = setup.per_path(|s, c, b| {
        let sim = simulate_log_wealth(c, b, base, setup.initial_wealth, s.strategy)?;
        let mut out = utilities_of(specs, sim.wealth.terminal_log_wealth())?;
        for &eps in eps_list {
            let avg_c = epsilon_average(c, eps)?;
            let avg_pi = average_strategy_trace(&sim.trace, eps)?;
            let sched = Schedule::new("averaged", avg_pi.weights().to_vec());
            let y = simulate_log_wealth(&avg_c, b, &sched, setup.initial_wealth, s.strategy)?;
            out.extend(utilities_of(specs, y.wealth.terminal_log_wealth())?);
        }
        Ok(out)
    })?;
    let mut table = Vec::new();
    for (e, &eps) in eps_list.iter().enumerate() {
        for (j, spec) in specs.iter().enumerate() {
            let orig = column(&rows, j);
            let avg = column(&rows, k * (e + 1) + j);
            let diffs: Vec<f64> = avg.iter().zip(&orig).map(|(a, o)| a - o).collect();
            let (d, se) = mean_and_se(&diffs);
            table.push(ConvergenceRow {
                utility: spec.name.clone(),
                eps,
                averaged: McEstimate::from_samples(format!("{}/eps={eps}", spec.name), &avg, setup.seed)?,
                original: McEstimate::from_samples(spec.name.clone(), &orig, setup.seed)?,
                abs_difference: d.abs(),
                std_error: se,
            });
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_is_accurate() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn dominance_statistic_examples() {
        let a: Vec<f64> = (0..100).map(|k| (k as f64 * 0.37).sin()).collect();
        assert_eq!(cdf_dominance(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 0.5).collect();
        assert!(cdf_dominance(&b, &a).unwrap() <= 0.0);
        assert!(cdf_dominance(&a, &b).unwrap() > 0.0);
        assert!(cdf_dominance(&[], &a).is_err());
    }

    #[test]
    fn dominance_statistic_matches_brute_force() {
        let a = [0.3, 1.2, -0.4, 0.3, 2.0];
        let b = [0.1, 0.3, 0.9, 1.7];
        let cdf = |s: &[f64], x: f64| s.iter().filter(|v| **v <= x).count() as f64 / s.len() as f64;
        let brute = a
            .iter()
            .chain(&b)
            .map(|&x| cdf(&a, x) - cdf(&b, x))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(cdf_dominance(&a, &b).unwrap(), brute);
    }

    #[test]
    fn estimate_needs_two_paths() {
        assert!(McEstimate::from_samples("x", &[1.0], 0).is_err());
        let e = McEstimate::from_samples("x", &[1.0, 3.0], 0).unwrap();
        assert_eq!(e.mean, 2.0);
        // sd = sqrt(2), se = sd / sqrt(2) = 1.
        assert!((e.std_error - 1.0).abs() < 1e-15);
    }
}
