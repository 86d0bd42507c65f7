//! End-to-end tests of the `cmjc` binary: exit codes, artifact layout,
//! determinism, and the numerical contracts of the scenario catalogue.

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::process::{Command, Output};

fn cmjc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmjc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_config(dir: &Path, config: &str, out: &str) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    cmjc(&["run", "--config", path.to_str().unwrap(), "--out", out])
}

fn read_summary(out_dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

const JCM_CONFIG: &str = r#"{
  "scenario": "jcm-rabi",
  "system": { "g": 1.0, "cavity_detuning": 100.0, "drive_detuning": 100.0, "atoms_per_sample": 50 },
  "time": { "t_final": 4.0 }
}"#;

#[test]
fn list_output_is_verbatim() {
    let out = cmjc(&["list"]);
    assert!(out.status.success());
    let expected = "\
jcm-rabi            resonant exchange oscillation between the control atom and the collective mode
fock-ladder         sequential quarter swaps climbing the collective mode to a target Fock state
cat-resonant        two-branch superposition grown from a large coherent state on resonance
cat-dispersive      conditional rotation splitting a coherent state into an entangled cat
two-sample          single shared excitation entangling two atomic samples
w-state             W state spread across several atomic samples by a timed exchange
wigner              displaced-parity readout of a mode state over a phase-space grid
full-vs-effective   driven cavity model checked against the dispersive effective model
decoherence         effective decay rates and infidelity budget for a Raman realization
feasibility         derived coupling, rates, swap time, and budget from physical parameters
";
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

#[test]
fn feasibility_subcommand_matches_physical_expectations() {
    let out = cmjc(&[
        "feasibility",
        "--g", "2pi*34e6",
        "--alpha", "2pi*34e6",
        "--delta-big", "2pi*3.4e9",
        "--delta-small", "2pi*3.4e8",
        "--n-atoms", "10000",
        "--gamma", "2pi*2.6e6",
        "--kappa", "2pi*4.1e6",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    let results = &summary["results"];
    let check = |key: &str, expected: f64, rel: f64| {
        let got = results[key].as_f64().unwrap();
        assert!(
            (got - expected).abs() <= rel * expected.abs(),
            "{key}: got {got:.6e}, expected {expected:.6e} within {rel:.0e}"
        );
    };
    check("epsilon_hz", TAU * 3.1e4, 2e-2);
    check("gamma_eff_hz", TAU * 260.0, 5e-3);
    check("kappa_eff_hz", TAU * 3.7, 3e-2);
    check("t1_us", 8.1, 2e-2);
    check("budget", 1.3e-2, 1e-1);
}

#[test]
fn jcm_rabi_trace_matches_closed_form_and_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let run = run_config(dir.path(), JCM_CONFIG, out.to_str().unwrap());
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }

    let (header, rows) = read_csv(&out_a.join("P_e.csv"));
    assert_eq!(header, "t,P_e");
    let eps = 50.0f64.sqrt() / 100.0;
    let worst = rows
        .iter()
        .map(|r| (r[1] - (eps * r[0]).cos().powi(2)).abs())
        .fold(0.0f64, f64::max);
    assert!(worst <= 1e-8, "max gap to cos^2 {worst:.3e}");

    for file in ["summary.json", "P_e.csv", "P_g.csv", "n_b.csv", "Sz_c.csv"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }

    let summary = read_summary(&out_a);
    assert_eq!(summary["resolved"]["system"]["atoms_per_sample"], 50);
    assert_eq!(summary["resolved"]["system"]["rabi_from_resonance"], true);
    assert_eq!(summary["resolved"]["model"], "jcm");
    assert!(summary["convergence"]["max_change"].as_f64().unwrap() < 1e-6);
}

#[test]
fn unknown_config_key_exits_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let config = r#"{
      "scenario": "jcm-rabi",
      "system": { "g": 1.0, "cavity_detuning": 100.0, "drive_detuning": 100.0,
                  "atoms_per_sample": 50, "bogus": 1 }
    }"#;
    let run = run_config(dir.path(), config, out_dir.to_str().unwrap());
    assert_eq!(run.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("system.bogus"), "stderr names the key: {stderr}");
    assert!(!out_dir.exists(), "no artifacts on validation failure");
}

#[test]
fn negative_atom_count_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
      "scenario": "jcm-rabi",
      "system": { "g": 1.0, "cavity_detuning": 100.0, "drive_detuning": 100.0,
                  "atoms_per_sample": -5 }
    }"#;
    let run = run_config(dir.path(), config, dir.path().join("out").to_str().unwrap());
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn oversized_integrator_step_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
      "scenario": "jcm-rabi",
      "model": "full",
      "system": { "g": 1.0, "cavity_detuning": 100.0, "drive_detuning": 100.0,
                  "atoms_per_sample": 50 },
      "time": { "t_final": 4.0, "dt": 0.5 }
    }"#;
    let out_dir = dir.path().join("out");
    let run = run_config(dir.path(), config, out_dir.to_str().unwrap());
    assert_eq!(run.status.code(), Some(3));
    assert!(!out_dir.exists(), "no artifacts on non-convergence");
}

#[test]
fn ladder_decoherence_requires_rates_block() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
      "scenario": "fock-ladder",
      "system": { "g": 1.0, "cavity_detuning": 100.0, "drive_detuning": 100.0,
                  "atoms_per_sample": 50 },
      "target_n": 1,
      "decoherence": true
    }"#;
    let run = run_config(dir.path(), config, dir.path().join("out").to_str().unwrap());
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("rates"));
}

#[test]
fn w_state_run_reports_near_unit_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let config = r#"{
      "scenario": "w-state",
      "system": { "g": 1.0, "cavity_detuning": 100.0, "drive_detuning": 100.0,
                  "atoms_per_sample": 50, "samples": 3 }
    }"#;
    let run = run_config(dir.path(), config, out_dir.to_str().unwrap());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let summary = read_summary(&out_dir);
    let fidelity = summary["results"]["fidelity"].as_f64().unwrap();
    assert!(fidelity >= 1.0 - 1e-8, "W3 fidelity {fidelity}");
    assert_eq!(summary["resolved"]["system"]["samples"], 3);
    assert!(out_dir.join("Sz_c.csv").exists());
}

#[test]
fn wigner_grid_matches_exact_values() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let config = r#"{
      "scenario": "wigner",
      "system": { "g": 1.0, "rabi": 2.0, "cavity_detuning": 100.0, "drive_detuning": 100.0,
                  "atoms_per_sample": 50 },
      "state": { "kind": "fock", "n": 1 },
      "grid": { "half_extent": 1.0, "points_per_side": 3 },
      "compare_exact": true
    }"#;
    let run = run_config(dir.path(), config, out_dir.to_str().unwrap());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let (header, rows) = read_csv(&out_dir.join("wigner.csv"));
    assert_eq!(header, "beta_re,beta_im,W");
    assert_eq!(rows.len(), 9);
    let origin = rows
        .iter()
        .find(|r| r[0] == 0.0 && r[1] == 0.0)
        .expect("grid contains the origin");
    assert!(
        (origin[2] - (-2.0 / PI)).abs() <= 1e-9,
        "W(0) for the one-quantum state: {}",
        origin[2]
    );
    let summary = read_summary(&out_dir);
    let gap = summary["results"]["max_gap_vs_exact"].as_f64().unwrap();
    assert!(gap <= 1e-6, "simulated readout vs exact kernel gap {gap:.3e}");
}

#[test]
fn out_flag_overrides_env_var() {
    let dir = tempfile::tempdir().unwrap();
    let flag_dir = dir.path().join("flag");
    let env_dir = dir.path().join("env");
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, JCM_CONFIG).unwrap();
    let run = Command::new(env!("CARGO_BIN_EXE_cmjc"))
        .args(["run", "--config", config_path.to_str().unwrap()])
        .args(["--out", flag_dir.to_str().unwrap()])
        .env("CMJC_OUT", env_dir.to_str().unwrap())
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(flag_dir.join("summary.json").exists());
    assert!(!env_dir.exists());
}
