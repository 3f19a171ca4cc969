//! End-to-end checks of the binary: exit codes, report shape, determinism,
//! and config validation.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use sisdiag_cli::config::{load_config, validate, Config};
use sisdiag_cli::error::CliError;

fn work_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sisdiag-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_json(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
    path
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sisdiag")).args(args).output().expect("binary runs")
}

fn parse_config(dir: &Path, value: &Value) -> Result<Config, CliError> {
    let path = write_json(dir, "cfg.json", value);
    load_config(&path).map(|(cfg, _)| cfg)
}

#[test]
fn minimal_config_validates() {
    let dir = work_dir("minimal");
    let cfg = parse_config(&dir, &json!({ "group": { "moduli": [8], "divisors": [2] } }));
    assert!(cfg.is_ok());
}

#[test]
fn config_rejects_bad_combinations() {
    let dir = work_dir("combos");

    // Square presets need equal moduli.
    let r = parse_config(
        &dir,
        &json!({
            "group": { "moduli": [8, 6], "divisors": [2, 2] },
            "action": { "preset": "p4m" }
        }),
    );
    assert!(matches!(r, Err(CliError::Input(_))), "p4m on an oblong group must be rejected");

    // Exactly one action source.
    let r = parse_config(
        &dir,
        &json!({
            "group": { "moduli": [8, 8], "divisors": [2, 2] },
            "action": { "preset": "p4", "generators": [[[0, -1], [1, 0]]] }
        }),
    );
    assert!(matches!(r, Err(CliError::Input(_))));

    // Unknown keys are refused rather than ignored.
    let r = parse_config(
        &dir,
        &json!({ "group": { "moduli": [8], "divisors": [2] }, "grup": 1 }),
    );
    assert!(matches!(r, Err(CliError::Input(_))));

    // Degenerate region.
    let r = parse_config(
        &dir,
        &json!({
            "group": { "moduli": [8], "divisors": [2] },
            "region": { "shape": "disc", "center": [0.0, 0.0], "radius": 0.0 }
        }),
    );
    assert!(matches!(r, Err(CliError::Input(_))));

    // Generator point with wrong rank.
    let r = parse_config(
        &dir,
        &json!({
            "group": { "moduli": [8], "divisors": [2] },
            "generators": [{ "kind": "delta", "point": [1, 2] }]
        }),
    );
    assert!(matches!(r, Err(CliError::Input(_))));

    // validate() is also callable on an already-parsed config.
    let ok: Config = serde_json::from_value(
        json!({ "group": { "moduli": [8], "divisors": [2] } }),
    )
    .unwrap();
    assert!(validate(&ok, None).is_ok());
}

#[test]
fn diagonalize_shift_sum_end_to_end() {
    let dir = work_dir("diag");
    let cfg = write_json(
        &dir,
        "diag.json",
        &json!({
            "group": { "moduli": [8], "divisors": [2] },
            "generators": [{ "kind": "delta", "point": [0] }],
            "operator": {
                "kind": "lattice_convolution",
                "sequence": [[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
            }
        }),
    );
    let out = run_cli(&["diagonalize", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["command"], "diagonalize");
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    let pairs = report["payload"]["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 1);
    // Symbol of the symmetric two-tap sum: 2cos(pi w / 2) over the domain.
    let symbol = pairs[0]["symbol"].as_array().unwrap();
    let expect = [2.0, 0.0, -2.0, 0.0];
    for (w, z) in symbol.iter().enumerate() {
        assert!((z[0].as_f64().unwrap() - expect[w]).abs() <= 1e-12);
        assert!(z[1].as_f64().unwrap().abs() <= 1e-12);
    }
    assert!(report["payload"]["reconstruction_residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn gamma_check_rejects_single_shift() {
    let dir = work_dir("gneg");
    let mut seq = vec![[0.0, 0.0]; 16];
    seq[4] = [1.0, 0.0]; // lattice point (2, 0)
    let cfg = write_json(
        &dir,
        "g.json",
        &json!({
            "group": { "moduli": [8, 8], "divisors": [2, 2] },
            "action": { "preset": "p4" },
            "operator": { "kind": "lattice_convolution", "sequence": seq }
        }),
    );
    let out = run_cli(&["gamma-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["pass"] == false));
    for c in checks {
        if c["pass"] == false {
            if let Some(r) = c["residual"].as_f64() {
                assert!(r > 0.0, "failed check must report a positive defect");
            }
        }
    }
}

#[test]
fn input_errors_exit_two() {
    let dir = work_dir("errs");

    // Missing config file.
    let out = run_cli(&["range", "--config", dir.join("absent.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown command.
    let cfg = write_json(&dir, "ok.json", &json!({ "group": { "moduli": [8], "divisors": [2] } }));
    let out = run_cli(&["transmogrify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Command echo mismatch.
    let cfg = write_json(
        &dir,
        "named.json",
        &json!({ "group": { "moduli": [8], "divisors": [2] }, "command": "strata" }),
    );
    let out = run_cli(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Dense file reference that does not exist.
    let cfg = write_json(
        &dir,
        "dense.json",
        &json!({
            "group": { "moduli": [8], "divisors": [2] },
            "operator": { "kind": "dense_file", "path": "no-such-matrix.json" }
        }),
    );
    let out = run_cli(&["check-sp", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Symmetry-commuting random instance without an action to commute with.
    let cfg = write_json(
        &dir,
        "gamma.json",
        &json!({
            "group": { "moduli": [8, 8], "divisors": [2, 2] },
            "operator": { "kind": "random_gamma" }
        }),
    );
    let out = run_cli(&["diagonalize", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic_for_fixed_seed() {
    let dir = work_dir("det");
    let cfg = write_json(
        &dir,
        "rand.json",
        &json!({
            "group": { "moduli": [12], "divisors": [3] },
            "operator": { "kind": "random_normal" }
        }),
    );
    let mut reports = Vec::new();
    for run in 0..2 {
        let out_path = dir.join(format!("report-{run}.json"));
        let out = run_cli(&[
            "diagonalize",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "5",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        let mut v: Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("wall_clock_ms");
        reports.push(v);
    }
    assert_eq!(reports[0], reports[1], "same config and seed must give identical payloads");

    // A different seed gives a different instance.
    let out = run_cli(&["diagonalize", "--config", cfg.to_str().unwrap(), "--seed", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let mut v: Value = serde_json::from_slice(&out.stdout).unwrap();
    v.as_object_mut().unwrap().remove("wall_clock_ms");
    assert_ne!(reports[0]["payload"], v["payload"]);
}

#[test]
fn dense_file_json_and_csv_agree() {
    let dir = work_dir("densefmt");
    // Dense matrix of the symmetric two-tap shift sum on the small cyclic
    // group: circulant with ones at offsets +-2.
    let n = 8usize;
    let mut rows = vec![vec![[0.0f64, 0.0f64]; n]; n];
    for x in 0..n {
        rows[x][(x + 2) % n][0] = 1.0;
        rows[x][(x + n - 2) % n][0] += 1.0;
    }
    std::fs::write(dir.join("m.json"), serde_json::to_vec(&rows).unwrap()).unwrap();
    let csv_text: String = rows
        .iter()
        .map(|row| {
            row.iter().flat_map(|p| [p[0], p[1]]).map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(dir.join("m.csv"), csv_text).unwrap();

    let mut outputs = Vec::new();
    for file in ["m.json", "m.csv"] {
        let cfg = write_json(
            &dir,
            &format!("cfg-{file}.json"),
            &json!({
                "group": { "moduli": [8], "divisors": [2] },
                "generators": [{ "kind": "delta", "point": [0] }],
                "operator": { "kind": "dense_file", "path": file }
            }),
        );
        let out = run_cli(&["range-operator", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        outputs.push(v["payload"].clone());
    }
    assert_eq!(outputs[0], outputs[1], "the two dense formats must load identically");
}

#[test]
fn verify_command_passes_on_symmetric_group() {
    let dir = work_dir("verify");
    let cfg = write_json(
        &dir,
        "v.json",
        &json!({
            "group": { "moduli": [8], "divisors": [2] },
            "action": { "preset": "p2" },
            "seed": 11
        }),
    );
    let out = run_cli(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 20);
    for c in checks {
        assert_eq!(c["pass"], true, "verify check {} failed", c["name"]);
        if let (Some(r), Some(t)) = (c["residual"].as_f64(), c["tolerance"].as_f64()) {
            assert!(r <= t, "residual printed next to tolerance must satisfy it");
        }
    }
}

#[test]
fn explicit_operator_on_explicit_space_fails_when_not_invariant() {
    let dir = work_dir("noninv");
    // A convolution restricted to a non-invariant subspace cannot be
    // fibered; the report says so with exit 1 rather than crashing.
    let mut dense = vec![vec![[0.0f64, 0.0f64]; 8]; 8];
    for (x, row) in dense.iter_mut().enumerate() {
        row[x][0] = (x % 3) as f64; // diagonal, varies within lattice cosets
    }
    std::fs::write(dir.join("d.json"), serde_json::to_vec(&dense).unwrap()).unwrap();
    let cfg = write_json(
        &dir,
        "cfg.json",
        &json!({
            "group": { "moduli": [8], "divisors": [2] },
            "generators": [{ "kind": "delta", "point": [0] }],
            "operator": { "kind": "dense_file", "path": "d.json" }
        }),
    );
    let out = run_cli(&["range-operator", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["checks"].as_array().unwrap().iter().any(|c| c["pass"] == false));
}
