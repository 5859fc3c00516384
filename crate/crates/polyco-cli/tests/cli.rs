//! End-to-end checks of the command-line surface: exit codes, first-failure
//! messages, file outputs and byte-level determinism.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polyco"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("polyco-cli-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn list_names_the_catalog() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "cosymplectic-darboux",
        "coupled-strings",
        "product-cosymplectic",
        "membrane-polar",
    ] {
        assert!(text.contains(name), "missing {name} in: {text}");
    }
    // stable across runs
    let again = bin().arg("list").output().unwrap();
    assert_eq!(text, String::from_utf8(again.stdout).unwrap());
}

#[test]
fn verify_strings_exits_zero() {
    let out = bin()
        .args(["verify", "--instance", "coupled-strings", "--mu", "1.0,0.5", "--samples", "30"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("overall.pass = true"));
}

#[test]
fn verify_with_zero_samples_is_a_usage_error() {
    let out = bin()
        .args(["verify", "--instance", "coupled-strings", "--samples", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_rejects_mu_of_wrong_length() {
    let out = bin()
        .args(["verify", "--instance", "coupled-strings", "--mu", "1.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_instance_is_a_config_error() {
    let out = bin().args(["verify", "--instance", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn broken_structure_config_exits_one_with_rank_message() {
    let dir = tmp_dir("broken");
    let cfg = dir.join("broken.cfg");
    fs::write(
        &cfg,
        "[structure]\nkind = polycosymplectic\nk = 2\ncoords = x, y, w, v\n\
         bounds = -1:1, -1:1, -1:1, -1:1\ntau1 = dy\ntau2 = dx\nomega1 = dx^dw\nomega2 = dy^dv\n",
    )
    .unwrap();
    let out = bin()
        .args(["verify", "--config", cfg.to_str().unwrap(), "--samples", "25"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("omega_kernel_rank"), "stderr: {err}");
    assert!(err.contains("rank 0, expected 2"), "stderr: {err}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn solve_membrane_prints_closed_form_value() {
    let out = bin()
        .args(["solve", "--instance", "membrane-polar", "--grid", "9x129"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("zeta(2) = -1 "), "stdout: {text}");
}

#[test]
fn solve_rejects_tiny_grids() {
    let out = bin()
        .args(["solve", "--instance", "coupled-strings", "--grid", "4x4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // minimum accepted
    let out = bin()
        .args(["solve", "--instance", "coupled-strings", "--grid", "8x8", "--coupling", "zero"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn compare_strings_within_bound() {
    let out = bin()
        .args(["compare", "--instance", "coupled-strings", "--grid", "101x101"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("gap_linf"));
    // an unreachable bound flips the exit code
    let out = bin()
        .args(["compare", "--instance", "coupled-strings", "--grid", "101x101", "--tol", "1e-12"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reduce_exports_round_trippable_structure() {
    let dir = tmp_dir("reduce");
    let out = bin()
        .args([
            "reduce",
            "--instance",
            "coupled-strings",
            "--mu",
            "1.0,0.5",
            "--gauge",
            "paper",
            "--samples",
            "40",
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let exported = fs::read_to_string(dir.join("reduced_structure.cfg")).unwrap();
    assert!(exported.contains("tau1 = dt"));
    assert!(exported.contains("omega1 = 0.5 * dq^dp_t"));
    // the exported structure verifies through the config path
    let out = bin()
        .args([
            "verify",
            "--config",
            dir.join("reduced_structure.cfg").to_str().unwrap(),
            "--samples",
            "25",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir_a = tmp_dir("det-a");
    let dir_b = tmp_dir("det-b");
    for dir in [&dir_a, &dir_b] {
        let out = bin()
            .args([
                "solve",
                "--instance",
                "coupled-strings",
                "--coupling",
                "q_sin_x",
                "--grid",
                "33x65",
                "--seed",
                "7",
                "--svg",
                "--out",
                dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    let csv_a = fs::read(dir_a.join("strings_solution.csv")).unwrap();
    let csv_b = fs::read(dir_b.join("strings_solution.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let svg_a = fs::read(dir_a.join("strings_q1.svg")).unwrap();
    let svg_b = fs::read(dir_b.join("strings_q1.svg")).unwrap();
    assert_eq!(svg_a, svg_b);
    let _ = fs::remove_dir_all(&dir_a);
    let _ = fs::remove_dir_all(&dir_b);
}

#[test]
fn membrane_spacetime_reduce_exports_cosymplectic_pair() {
    let dir = tmp_dir("membrane");
    let out = bin()
        .args([
            "reduce",
            "--instance",
            "membrane-polar",
            "--mu",
            "0.7,-0.4",
            "--samples",
            "30",
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let exported = fs::read_to_string(dir.join("reduced_structure.cfg")).unwrap();
    assert!(exported.contains("tau1 = dr"));
    assert!(exported.contains("omega1 = dzeta^dp_r"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn compare_membrane_route() {
    let out = bin()
        .args(["compare", "--instance", "membrane-polar", "--grid", "9x65"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("radial_subsystem_residual"));
}

#[test]
fn reduce_skips_dynamics_for_non_invariant_hamiltonian() {
    // the sandbox Hamiltonian is not G-invariant: structure reduction
    // succeeds, the dynamics certificate is explicitly not claimed
    let out = bin()
        .args(["reduce", "--instance", "cosymplectic-darboux", "--mu", "0.5,-3.0", "--samples", "30"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("no dynamics reduction is claimed"), "{text}");
    assert!(text.contains("overall.pass = true"));
}
