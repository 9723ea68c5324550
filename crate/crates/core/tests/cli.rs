mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use mft::config::{ExperimentConfig, Overrides};
use mft::montecarlo::paired_compare;
use mft::strategies::lift_projection;
use serde_json::{json, Value};

fn mftsim(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mftsim"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("MFTSIM_THREADS")
        .output()
        .unwrap()
}

fn minimal() -> Value {
    json!({
        "schema": 1,
        "grid": {"horizon": 1.0, "steps": 8},
        "market": {
            "states": [{"rate": 0.0, "appreciation": [0.1], "volatility": [[0.2]]}],
            "dynamics": {"kind": "constant_random", "weights": [1.0]}
        },
        "strategies": [{"kind": "zero"}],
        "utilities": ["log"],
        "experiment": {"kind": "simulate"},
        "paths": 20,
        "seed": 1
    })
}

fn write(dir: &Path, name: &str, v: &Value) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

/// Data rows of a table, skipping the manifest comment and the header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn minimal_config_gives_a_single_zero_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &minimal());
    let out = mftsim(&["run"], &cfg, &dir.path().join("out"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("out/estimates.csv")).unwrap();
    let mut lines = table.lines();
    assert!(lines.next().unwrap().starts_with("# manifest-sha256: "));
    assert_eq!(lines.next().unwrap(), "label,utility,mean,stderr,paths,seed");
    assert_eq!(lines.next().unwrap(), "zero,log,0,0,20,1");
    assert!(lines.next().is_none());
}

#[test]
fn compare_table_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal();
    v["market"] = json!({"states": regime_states(), "dynamics": regime_dynamics()});
    v["grid"]["steps"] = json!(16);
    v["strategies"] = json!([{"kind": "contrarian", "weights": [0.8, 0.5], "sensitivity": 2.0, "floor": 0.0, "cap": 2.0}]);
    v["utilities"] = json!(["log", "neg_power_2"]);
    v["paths"] = json!(400);
    let cfg = write(dir.path(), "c.json", &v);
    let out = mftsim(&["compare"], &cfg, &dir.path().join("out"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = rows(&dir.path().join("out/compare.csv"));

    let resolved = ExperimentConfig::from_json(&v.to_string())
        .unwrap()
        .resolve(&Overrides::default(), dir.path())
        .unwrap();
    let setup = resolved.setup().unwrap();
    let base = &base_strategies()[1];
    let lifted = lift_projection(base).with_norm_bounds(setup.model.operator_norm_bounds());
    let lib = paired_compare(&setup, base, &lifted, &resolved.utility_specs().unwrap()).unwrap();
    assert_eq!(table.len(), lib.len());
    for (row, c) in table.iter().zip(&lib) {
        assert_eq!(row[1], c.utility);
        assert_eq!(row[6].parse::<f64>().unwrap(), c.mean_difference);
        assert_eq!(row[7].parse::<f64>().unwrap(), c.std_error);
    }
}

#[test]
fn errors_map_to_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut neg = minimal();
    neg["market"]["states"][0]["rate"] = json!(-0.02);
    let out = mftsim(&["run"], &write(dir.path(), "neg.json", &neg), &dir.path().join("o1"));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("market.states[0].rate"));

    let mut unknown = minimal();
    unknown["colour"] = json!("blue");
    let out = mftsim(&["run"], &write(dir.path(), "unk.json", &unknown), &dir.path().join("o2"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let mut overflow = minimal();
    overflow["market"]["states"][0] = json!({"rate": 0.0, "appreciation": [0.0001], "volatility": [[1.0]]});
    overflow["strategies"] = json!([{"kind": "constant", "weights": [20.0]}]);
    overflow["utilities"] = json!(["neg_power_400"]);
    overflow["paths"] = json!(200);
    let out = mftsim(&["run"], &write(dir.path(), "nan.json", &overflow), &dir.path().join("o3"));
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));

    let out = mftsim(&["run"], &dir.path().join("missing.json"), &dir.path().join("o4"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_utility_reports_each_spec() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal();
    v["utilities"] = json!([
        "log",
        {"name": "falling", "base": {"kind": "power", "coefficient": -1.0, "exponent": 1.0}}
    ]);
    let out = mftsim(&["check-utility"], &write(dir.path(), "c.json", &v), &dir.path().join("out"));
    assert!(out.status.success());
    let t = rows(&dir.path().join("out/check_utility.csv"));
    assert!(t.iter().any(|r| r[0] == "log" && r[1] == "true"));
    assert!(t.iter().any(|r| r[0] == "falling" && r[1] == "false"));
}

#[test]
fn project_reads_a_trace_and_writes_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let trace = "node,t,pi_1,pi_2\n0,0,0.5,0.1\n1,0.25,0.3,-0.2\n2,0.5,0.0,0.0\n3,0.75,-0.4,0.6\n";
    std::fs::write(dir.path().join("trace.csv"), trace).unwrap();
    let mut v = minimal();
    v["grid"]["steps"] = json!(4);
    v["market"] = json!({"states": regime_states(), "dynamics": regime_dynamics()});
    v["strategies"] = json!([{"kind": "trace", "file": "trace.csv"}]);
    v["paths"] = json!(3);
    let out = mftsim(&["project"], &write(dir.path(), "c.json", &v), &dir.path().join("out"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = rows(&dir.path().join("out/certificates.csv"));
    assert_eq!(t.len(), 3 * 4);
    for r in &t {
        let gap: f64 = r[7].parse().unwrap();
        let (bv, pv): (f64, f64) = (r[5].parse().unwrap(), r[6].parse().unwrap());
        assert!(gap >= -1e-14 && (bv - pv).abs() <= 1e-12 * bv.max(1e-300));
    }
    // The manifest inlines the trace, so it reproduces without the file.
    let manifest = std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap();
    assert!(manifest.contains("\"schedule\""));
    std::fs::remove_file(dir.path().join("trace.csv")).unwrap();
    let again = mftsim(&["run"], &dir.path().join("out/manifest.json"), &dir.path().join("again"));
    assert!(again.status.success());
    assert_eq!(
        std::fs::read(dir.path().join("out/certificates.csv")).unwrap(),
        std::fs::read(dir.path().join("again/certificates.csv")).unwrap()
    );
}

#[test]
fn sweep_and_converge_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal();
    v["grid"]["steps"] = json!(16);
    v["market"] = json!({"states": regime_states(), "dynamics": regime_dynamics()});
    v["strategies"] = json!([{"kind": "constant", "weights": [0.5, 0.5]}]);
    v["experiment"] = json!({"kind": "sweep", "nu_grid": [0.0, 1.0, 2.0], "eps": [0.25, 0.125]});
    let cfg = write(dir.path(), "c.json", &v);
    assert!(mftsim(&["sweep"], &cfg, &dir.path().join("s")).status.success());
    assert_eq!(rows(&dir.path().join("s/sweep.csv")).len(), 3);
    assert!(mftsim(&["converge"], &cfg, &dir.path().join("c")).status.success());
    let t = rows(&dir.path().join("c/converge.csv"));
    assert_eq!(t.len(), 2);
    assert_eq!(t[0][2], "0.25");
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = ExperimentConfig::load(&path).unwrap();
            cfg.resolve(&Overrides::default(), &dir)
                .and_then(|c| c.validate())
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
