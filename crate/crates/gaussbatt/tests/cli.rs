//! End-to-end checks of the binary: exact file formats, determinism and
//! exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaussbatt"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gaussbatt-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn fig1_config(dir: &Path) -> PathBuf {
    write_config(
        dir,
        "fig1.json",
        r#"{
            "n_cells": 6, "alphas": "uniform",
            "gamma0": 5.0, "omega_d": 2.0, "T": 0.5, "T0": 0.5
        }"#,
    )
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn evolve_header_and_determinism() {
    let dir = tmp_dir("evolve");
    let cfg = fig1_config(&dir);
    let out_a = dir.join("a.csv");
    let out_b = dir.join("b.csv");
    for out in [&out_a, &out_b] {
        let st = run(bin()
            .args(["evolve", "--config"])
            .arg(&cfg)
            .args(["--points", "40", "--output"])
            .arg(out));
        assert!(st.status.success(), "stderr: {}", String::from_utf8_lossy(&st.stderr));
    }
    let text_a = fs::read_to_string(&out_a).unwrap();
    let text_b = fs::read_to_string(&out_b).unwrap();
    assert_eq!(text_a, text_b, "identical invocations must produce identical files");

    let mut lines = text_a.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,t_over_tau,E_B,E_BM,E_BM_prime,ergotropy_glob,ergotropy_loc,ratio_R,eta_glob,\
eta_th,exergy,lambda_plus,lambda_minus,r,phi,nu1,nu_pt_minus,log_neg,B_cl,B_en,regime,W,\
delta_S,sigma_irr,warnings"
    );
    assert_eq!(lines.count(), 40);
    assert!(text_a.ends_with('\n'));

    // Parse-back: every float field round-trips at 9 significant digits.
    let second_row = text_a.lines().nth(2).unwrap();
    let fields: Vec<&str> = second_row.split(',').collect();
    assert_eq!(fields.len(), 25);
    let e_b: f64 = fields[2].parse().unwrap();
    assert!(e_b > 0.0);
    // The largest maximum sits near t/tau = 0.5 for these parameters.
    let mut best = (0.0_f64, 0.0_f64);
    for line in text_a.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let t_over_tau: f64 = f[1].parse().unwrap();
        let e: f64 = f[2].parse().unwrap();
        if e > best.1 {
            best = (t_over_tau, e);
        }
    }
    assert!((best.0 - 0.5).abs() < 0.15, "max at t/tau = {}", best.0);
}

#[test]
fn evolve_rejects_empty_grid_and_bad_config() {
    let dir = tmp_dir("badcfg");
    let cfg = fig1_config(&dir);
    let st = run(bin()
        .args(["evolve", "--config"])
        .arg(&cfg)
        .args(["--points", "0", "--output"])
        .arg(dir.join("x.csv")));
    assert_eq!(st.status.code(), Some(2));

    let bad = write_config(
        &dir,
        "bad.json",
        r#"{"n_cells": 6, "alphas": "uniform", "gamma0": -5.0, "omega_d": 2.0, "T": 0.5, "T0": 0.5}"#,
    );
    let st = run(bin()
        .args(["evolve", "--config"])
        .arg(&bad)
        .args(["--output"])
        .arg(dir.join("y.csv")));
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("gamma0"));
}

#[test]
fn grid_emits_rows_and_boundary_files() {
    let dir = tmp_dir("grid");
    let cfg = write_config(
        &dir,
        "grid.json",
        r#"{
            "n_cells": 4, "alphas": "uniform",
            "gamma0": 5.0, "omega_d": 2.0, "T": 0.5, "T0": 0.5,
            "sweep": { "T": {"min": 0.2, "max": 4.0, "steps": 4},
                       "T0": {"min": 0.2, "max": 4.0, "steps": 3} }
        }"#,
    );
    let out = dir.join("grid.csv");
    let st = run(bin().args(["grid", "--config"]).arg(&cfg).arg("--output").arg(&out));
    assert!(st.status.success(), "stderr: {}", String::from_utf8_lossy(&st.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("T,T0,t_star,t,t_over_tau,"));
    assert_eq!(lines.count(), 12);
    for name in ["lambda_half_contour.csv", "nupt_half_contour.csv", "tstar_boundary.csv"] {
        let p = dir.join(name);
        assert!(p.exists(), "{name} missing");
    }
    let boundary = fs::read_to_string(dir.join("tstar_boundary.csv")).unwrap();
    assert!(boundary.starts_with("T0,T\n"));
    assert_eq!(boundary.lines().count(), 4);

    // A single-point grid degenerates to one row.
    let cfg1 = write_config(
        &dir,
        "grid1.json",
        r#"{
            "n_cells": 4, "alphas": "uniform",
            "gamma0": 5.0, "omega_d": 2.0, "T": 0.5, "T0": 0.5,
            "sweep": { "T": {"min": 1.0, "max": 1.0, "steps": 1},
                       "T0": {"min": 1.0, "max": 1.0, "steps": 1} }
        }"#,
    );
    let out1 = dir.join("one/grid.csv");
    let st = run(bin().args(["grid", "--config"]).arg(&cfg1).arg("--output").arg(&out1));
    assert!(st.status.success());
    assert_eq!(fs::read_to_string(&out1).unwrap().lines().count(), 2);
}

#[test]
fn compare_table_i_pair() {
    let dir = tmp_dir("compare");
    let cfg_a = write_config(
        &dir,
        "a.json",
        r#"{"n_cells": 6, "alphas": "uniform", "gamma0": 0.528, "omega_d": 7.344, "T": 0.01, "T0": 1.0}"#,
    );
    let out = dir.join("compare.json");
    let st = run(bin()
        .args(["compare", "--config"])
        .arg(&cfg_a)
        .args(["--gamma0-b", "1.571", "--omega-d-b", "0.922", "--output"])
        .arg(&out));
    assert!(st.status.success(), "stderr: {}", String::from_utf8_lossy(&st.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["verdict"], "b_wins");
    assert_eq!(report["e_b_match"]["fair_comparison"], true);
    assert_eq!(report["config_b"]["regime"], "entangled");
    assert_eq!(
        report["config_a"]["regime"],
        "quantum_squeezing_no_entanglement"
    );
    let eta_a = report["config_a"]["eta_glob"].as_f64().unwrap();
    let eta_b = report["config_b"]["eta_glob"].as_f64().unwrap();
    assert!((eta_a - 0.72).abs() < 0.07 && (eta_b - 0.79).abs() < 0.07);

    // Identical configurations tie.
    let st = run(bin()
        .args(["compare", "--config"])
        .arg(&cfg_a)
        .args(["--gamma0-b", "0.528", "--omega-d-b", "7.344", "--output"])
        .arg(dir.join("tie.json")));
    assert!(st.status.success());
    let tie: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("tie.json")).unwrap()).unwrap();
    assert_eq!(tie["verdict"], "tie");

    // Mismatched shared parameters are a validation error.
    let cfg_other = write_config(
        &dir,
        "other.json",
        r#"{"n_cells": 4, "alphas": "uniform", "gamma0": 1.0, "omega_d": 1.0, "T": 0.01, "T0": 1.0}"#,
    );
    let st = run(bin()
        .args(["compare", "--config"])
        .arg(&cfg_a)
        .arg("--config-b")
        .arg(&cfg_other));
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn scaling_slopes_and_validation() {
    let dir = tmp_dir("scaling");
    let cfg = write_config(
        &dir,
        "scale.json",
        r#"{"n_cells": 6, "alphas": "uniform", "gamma0": 5.0, "omega_d": 2.0, "T": 5.0, "T0": 0.1}"#,
    );
    let out = dir.join("scaling.csv");
    let st = run(bin()
        .args(["scaling", "--config"])
        .arg(&cfg)
        .args(["--n-list", "6,12,18", "--output"])
        .arg(&out));
    assert!(st.status.success(), "stderr: {}", String::from_utf8_lossy(&st.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("N,t_star,E_B,P\n"));
    assert_eq!(text.lines().count(), 4);
    let slopes: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("scaling_slopes.json")).unwrap())
            .unwrap();
    let s_eb = slopes["e_b"]["slope"].as_f64().unwrap();
    let s_p = slopes["power"]["slope"].as_f64().unwrap();
    assert!((s_eb - 1.0).abs() < 0.05, "E_B slope {s_eb}");
    assert!((s_p - 1.5).abs() < 0.05, "P slope {s_p}");

    // Fewer than three distinct N values: exit 2.
    let st = run(bin()
        .args(["scaling", "--config"])
        .arg(&cfg)
        .args(["--n-list", "6,6,6", "--output"])
        .arg(dir.join("z.csv")));
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn oracle_check_single_set_and_counter_term_failure() {
    let dir = tmp_dir("oracle");
    let cfg = write_config(
        &dir,
        "small.json",
        r#"{"n_cells": 4, "alphas": "uniform", "gamma0": 1.0, "omega_d": 1.0, "T": 0.5, "T0": 0.5}"#,
    );
    let st = run(bin()
        .args(["oracle-check", "--config"])
        .arg(&cfg)
        .args(["--times", "0.5,1.0"]));
    assert_eq!(st.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&st.stderr));
    assert!(String::from_utf8_lossy(&st.stdout).contains("PASS"));

    // Dropping the counter-term renormalizes the frequency: tolerance breach.
    let st = run(bin()
        .args(["oracle-check", "--config"])
        .arg(&cfg)
        .args(["--times", "0.5,1.0", "--drop-counter-term"]));
    assert_eq!(st.status.code(), Some(4));

    // An under-resolved bath fails the kernel invariant up front (exit 3).
    let st = run(bin()
        .args(["oracle-check", "--config"])
        .arg(&cfg)
        .args(["--times", "0.5", "--modes", "10"]));
    assert_eq!(st.status.code(), Some(3));
}
