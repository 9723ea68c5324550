//! Experiment runner behind the `mftsim` binary.
//!
//! Every table starts with `# manifest-sha256: <hex>`, the hash of the
//! `manifest.json` written next to it, followed by a CSV header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ExperimentKind, Overrides};
use crate::error::Result;
use crate::montecarlo::{convergence_experiment, expected_utilities, paired_compare, sweep_nu, Setup};
use crate::strategies::lift_projection;
use crate::utility::{check_admissible, diagnostic_grid};
use crate::wealth::{simulate_log_wealth, undiscount};

/// A CSV table under construction.
struct Table {
    name: &'static str,
    body: String,
}

impl Table {
    fn new(name: &'static str, header: &[&str]) -> Self {
        let mut body = header.join(",");
        body.push('\n');
        Self { name, body }
    }

    fn row(&mut self, cells: &[String]) {
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Loads, resolves and validates a config, then runs it and writes outputs
/// into `out_dir`. Returns the files written.
pub fn run_experiment(config_path: &Path, overrides: &Overrides, out_dir: Option<&Path>) -> Result<Vec<PathBuf>> {
    let raw = ExperimentConfig::load(config_path)?;
    let out = out_dir
        .map(Path::to_path_buf)
        .or_else(|| raw.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let base_dir = config_path.parent().unwrap_or(Path::new("."));
    let cfg = raw.resolve(overrides, base_dir)?;
    cfg.validate()?;
    let tables = run_resolved(&cfg)?;
    write_outputs(&cfg, &tables, &out)
}

fn write_outputs(cfg: &ExperimentConfig, tables: &[Table], out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let manifest = cfg.to_manifest_json();
    let hash = hex::encode(Sha256::digest(manifest.as_bytes()));
    let mut written = Vec::new();
    let mpath = out.join("manifest.json");
    fs::write(&mpath, &manifest)?;
    written.push(mpath);
    for t in tables {
        let p = out.join(format!("{}.csv", t.name));
        fs::write(&p, format!("# manifest-sha256: {hash}\n{}", t.body))?;
        written.push(p);
    }
    Ok(written)
}

fn run_resolved(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    match cfg.experiment.kind {
        ExperimentKind::CheckUtility => check_utility(cfg),
        ExperimentKind::Simulate => simulate(cfg),
        ExperimentKind::Project => project(cfg),
        ExperimentKind::Compare => compare(cfg),
        ExperimentKind::Sweep => sweep(cfg),
        ExperimentKind::Converge => converge(cfg),
    }
}

const ESTIMATE_HEADER: &[&str] = &["label", "utility", "mean", "stderr", "paths", "seed"];

fn check_utility(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let mut t = Table::new("check_utility", &["utility", "passed", "kind", "x", "message"]);
    let grid = diagnostic_grid();
    for spec in cfg.utility_specs()? {
        let r = check_admissible(&spec, &grid);
        let name = csv_field(&spec.name);
        if r.issues.is_empty() {
            t.row(&[name.clone(), "true".into(), String::new(), String::new(), String::new()]);
        }
        for i in &r.issues {
            t.row(&[
                name.clone(),
                "false".into(),
                format!("{:?}", i.kind).to_lowercase(),
                i.x.map(|x| x.to_string()).unwrap_or_default(),
                csv_field(&i.message),
            ]);
        }
        for n in &r.notes {
            t.row(&[name.clone(), r.passed().to_string(), "note".into(), String::new(), csv_field(n)]);
        }
    }
    Ok(vec![t])
}

fn simulate(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let setup = cfg.setup()?;
    let specs = cfg.utility_specs()?;
    let strategies = cfg.build_strategies(&setup.model)?;
    let mut paths = Table::new(
        "paths",
        &[
            "label",
            "path",
            "coeff_seed",
            "brownian_seed",
            "terminal_log_wealth",
            "terminal_discounted_wealth",
            "terminal_wealth",
        ],
    );
    let mut est = Table::new("estimates", ESTIMATE_HEADER);
    for s in &strategies {
        let rows = setup.per_path(|seeds, c, b| {
            let sim = simulate_log_wealth(c, b, s, setup.initial_wealth, seeds.strategy)?;
            let x = undiscount(&sim.wealth, c)?;
            Ok((seeds.coeff, seeds.brownian, sim.wealth.terminal_log_wealth(), x))
        })?;
        let label = csv_field(s.label());
        for (k, (cs, bs, y, x)) in rows.iter().enumerate() {
            paths.row(&[
                label.clone(),
                k.to_string(),
                cs.to_string(),
                bs.to_string(),
                y.to_string(),
                y.exp().to_string(),
                x.to_string(),
            ]);
        }
        for (e, spec) in expected_utilities(&setup, s, &specs)?.iter().zip(&specs) {
            est.row(&[
                label.clone(),
                csv_field(&spec.name),
                e.mean.to_string(),
                e.std_error.to_string(),
                e.paths.to_string(),
                e.seed.to_string(),
            ]);
        }
    }
    Ok(vec![est, paths])
}

fn project(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let setup = cfg.setup()?;
    let strategies = cfg.build_strategies(&setup.model)?;
    let n = setup.model.dim();
    let mut header: Vec<String> = [
        "label",
        "path",
        "node",
        "t",
        "nu",
        "base_volatility",
        "projected_volatility",
        "drift_gap",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=n).map(|k| format!("pi_hat_{k}")));
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new("certificates", &hdr);
    let bounds = setup.model.operator_norm_bounds();
    for s in strategies {
        let label = csv_field(s.label());
        let lifted = lift_projection(s).with_norm_bounds(bounds);
        let sims = setup.per_path(|seeds, c, b| simulate_log_wealth(c, b, &lifted, setup.initial_wealth, seeds.strategy))?;
        for (k, sim) in sims.iter().enumerate() {
            for (cert, w) in sim.certificates.iter().zip(sim.trace.weights()) {
                let mut row = vec![
                    label.clone(),
                    k.to_string(),
                    cert.node.to_string(),
                    setup.grid.node(cert.node).to_string(),
                    cert.nu.to_string(),
                    cert.base_volatility.to_string(),
                    cert.projected_volatility.to_string(),
                    cert.drift_gap.to_string(),
                ];
                row.extend(w.iter().map(|x| x.to_string()));
                t.row(&row);
            }
        }
    }
    Ok(vec![t])
}

fn compare(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let setup = cfg.setup()?;
    let specs = cfg.utility_specs()?;
    let strategies = cfg.build_strategies(&setup.model)?;
    let mut t = Table::new(
        "compare",
        &[
            "label",
            "utility",
            "mean_base",
            "stderr_base",
            "mean_projected",
            "stderr_projected",
            "mean_difference",
            "stderr_difference",
            "nonnegative_fraction",
            "paths",
            "seed",
        ],
    );
    let bounds = setup.model.operator_norm_bounds();
    for s in strategies {
        let label = csv_field(s.label());
        let lifted = lift_projection(&s).with_norm_bounds(bounds);
        for c in paired_compare(&setup, &s, &lifted, &specs)? {
            t.row(&[
                label.clone(),
                csv_field(&c.utility),
                c.base.mean.to_string(),
                c.base.std_error.to_string(),
                c.projected.mean.to_string(),
                c.projected.std_error.to_string(),
                c.mean_difference.to_string(),
                c.std_error.to_string(),
                c.nonnegative_fraction.to_string(),
                setup.paths.to_string(),
                setup.seed.to_string(),
            ]);
        }
    }
    Ok(vec![t])
}

fn sweep(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let setup = cfg.setup()?;
    let mut t = Table::new("sweep", &["label", "nu", "utility", "mean", "stderr", "paths", "seed"]);
    for spec in cfg.utility_specs()? {
        for row in sweep_nu(&setup, &cfg.nu_grid(), &spec)? {
            t.row(&[
                csv_field(&row.estimate.label),
                row.nu.to_string(),
                csv_field(&spec.name),
                row.estimate.mean.to_string(),
                row.estimate.std_error.to_string(),
                row.estimate.paths.to_string(),
                row.estimate.seed.to_string(),
            ]);
        }
    }
    Ok(vec![t])
}

fn converge(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let setup: Setup = cfg.setup()?;
    let specs = cfg.utility_specs()?;
    let strategies = cfg.build_strategies(&setup.model)?;
    let mut t = Table::new(
        "converge",
        &[
            "label",
            "utility",
            "eps",
            "mean_averaged",
            "stderr_averaged",
            "mean_original",
            "stderr_original",
            "abs_difference",
            "stderr_difference",
            "paths",
            "seed",
        ],
    );
    for s in &strategies {
        for r in convergence_experiment(&setup, s, &specs, &cfg.eps_list())? {
            t.row(&[
                csv_field(s.label()),
                csv_field(&r.utility),
                r.eps.to_string(),
                r.averaged.mean.to_string(),
                r.averaged.std_error.to_string(),
                r.original.mean.to_string(),
                r.original.std_error.to_string(),
                r.abs_difference.to_string(),
                r.std_error.to_string(),
                setup.paths.to_string(),
                setup.seed.to_string(),
            ]);
        }
    }
    Ok(vec![t])
}

/// One-line summary of the files written, for the terminal.
pub fn summary(files: &[PathBuf]) -> String {
    let mut s = String::new();
    for f in files {
        let _ = writeln!(s, "wrote {}", f.display());
    }
    s
}
