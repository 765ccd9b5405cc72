use std::path::PathBuf;
use std::process::{Command, Output};

use brachisto_core::brachistophase::{canonical_brachistophase, tau0_threshold, Sign};
use brachisto_core::curves::Curve;
use brachisto_core::majorana::{constellation, constellation_distance};
use brachisto_core::phase::geometric_phase;
use brachisto_core::presets::{ghz, HamiltonianPreset};
use brachisto_core::{CVector, PureState, C64};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_brachisto"));
    cmd.args(args).env_remove("BRACHISTO_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect()
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn brachistophase_phase_rises_then_leaves_taylor() {
    let v = json(&["phase", "--spin", "3/2", "--grid", "0:3.2:17"]);
    assert_eq!(v["format"], 1);
    assert_eq!(v["config"]["two_s"], 3);
    let exact = floats(&v["phase_exact"]);
    let taylor = floats(&v["phase_taylor3"]);
    assert!(exact.windows(2).all(|w| w[1] > w[0]));
    // t = 0.2: the cubic model is accurate
    assert!((exact[1] - taylor[1]).abs() < 0.01 * exact[1]);
    let last = exact.len() - 1;
    assert!((taylor[last] - exact[last]).abs() > exact[last]);
    let d3 = v["derivatives"]["3"].as_f64().unwrap();
    assert!((d3 - 4.0 * 3f64.sqrt() / 9.0).abs() < 1e-12);
}

#[test]
fn geodesic_preset_has_zero_phase() {
    let v = json(&["phase", "--hamiltonian", "geodesic", "--spin", "2", "--grid", "0:1.5:7"]);
    assert!(floats(&v["phase_exact"]).iter().all(|p| p.abs() < 1e-12));
}

#[test]
fn ghz_phase_trace_matches_library_bit_for_bit() {
    let args = ["phase", "--state", "ghz", "--grid", "0:2:9", "--steps", "128"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let h = HamiltonianPreset::Brachistophase.for_state(&ghz(), Sign::Plus).unwrap();
    let curve = Curve::schrodinger(h, ghz()).unwrap();
    for (t, p) in floats(&v["t"]).into_iter().zip(floats(&v["phase_exact"])) {
        let expected =
            if t == 0.0 { 0.0 } else { geometric_phase(&curve, t, ((t * 128.0).ceil() as usize).max(16)).unwrap().final_phase() };
        assert_eq!(p.to_bits(), expected.to_bits(), "t = {t}");
    }
}

#[test]
fn csv_uses_seventeen_significant_digits() {
    let out = run(&["phase", "--grid", "0:1:4", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# format: 1"));
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert_eq!(lines.next(), Some("t,phase_exact,phase_taylor3,phase_taylor5"));
    for line in lines {
        for field in line.split(',') {
            let (mantissa, exponent) = field.split_once('e').unwrap();
            let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
            assert_eq!(digits.len(), 17, "{field}");
            exponent.parse::<i32>().unwrap();
            field.parse::<f64>().unwrap();
        }
    }
}

#[test]
fn optimize_report() {
    let v = json(&["optimize", "--spin", "1/2", "--tau", "0.5", "--samples", "2000", "--seed", "3"]);
    let bra = &v["brachistophase"];
    let analytic = bra["phase_at_tau"].as_f64().unwrap();
    let best = v["random_search"]["best_phase"].as_f64().unwrap();
    // Largest phase at tau = 0.5 over the whole qubit constraint surface, from
    // an independent bounded scalar search over the polar angle of the axis.
    let optimum = 0.016888358104756973;
    assert!(best <= optimum + 1e-12);
    assert!(analytic >= 0.998 * best);
    let e0 = PureState::basis(2, 0).unwrap().projector();
    let h = canonical_brachistophase(2, Sign::Plus).unwrap();
    let tau0 = tau0_threshold(&h, &e0).unwrap();
    assert!((bra["tau0"]["value"].as_f64().unwrap() - tau0).abs() < 1e-12);
    assert!((bra["objective"].as_f64().unwrap() - 4.0 * 3f64.sqrt() / 9.0).abs() < 1e-12);
    assert!((v["max_accel"]["objective"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["random_search"]["samples"], 2000);
    assert!(v["timing"]["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn sign_flips_canonical_block() {
    let entry = |sign: &str| {
        let v = json(&["optimize", "--samples", "1", "--sign", sign]);
        v["brachistophase"]["h_canonical"]["re"][0][0].as_f64().unwrap()
    };
    let s = 1.0 / 3f64.sqrt();
    assert!((entry("+") + s).abs() < 1e-15);
    assert!((entry("-") - s).abs() < 1e-15);
}

#[test]
fn random_search_ignores_thread_count() {
    let args = ["optimize", "--samples", "500", "--seed", "11", "--spin", "1"];
    let pick = |threads: &str| {
        let out = run_env(&args, &[("BRACHISTO_THREADS", threads)]);
        assert!(out.status.success());
        let mut v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    assert_eq!(pick("1"), pick("4"));
}

#[test]
fn invalid_thread_count_is_a_config_error() {
    let out = run_env(&["phase", "--grid", "0:1:2"], &[("BRACHISTO_THREADS", "zero")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn coherent_constellation_has_one_falling_star() {
    let v = json(&["constellation", "--spin", "1", "--grid", "0:3:31"]);
    assert_eq!(v["star_count"], 2);
    let tracks = v["tracks"].as_array().unwrap();
    let moving: Vec<_> = tracks
        .iter()
        .filter(|tr| tr.as_array().unwrap().iter().any(|p| (p[2].as_f64().unwrap() - 1.0).abs() > 1e-9))
        .collect();
    assert_eq!(moving.len(), 1);
    let audit = &v["falling_star_audit"];
    assert!((audit["tilt"].as_f64().unwrap() - 2f64.atan()).abs() < 1e-8);
    assert_eq!(audit["stationary_stars"], 1);
}

#[test]
fn ghz_frames_match_closed_form_states() {
    let grid = [0.0, 0.5, 1.0, 1.5, 2.0, 3.2];
    let v = json(&["constellation", "--state", "ghz", "--grid", "0,0.5,1,1.5,2,3.2"]);
    assert!(v["falling_star_audit"].is_null());
    let tracks = v["tracks"].as_array().unwrap();
    let nodes: Vec<usize> = v["grid_nodes"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap() as usize).collect();
    assert_eq!(nodes.len(), 6);
    for (k, &t) in grid.iter().enumerate() {
        let (s, c) = f64::sin_cos(t);
        let (r2, r6) = (2f64.sqrt(), 6f64.sqrt());
        let psi = PureState::normalized(CVector::from_vec(vec![
            C64::new(c / r2, s / r6),
            C64::new(0.0, -(2.0f64 / 3.0).sqrt() * s),
            C64::new(0.0, 0.0),
            C64::new(-c / r2, -s / r6),
        ]))
        .unwrap();
        let expected = constellation(&psi).unwrap().stars;
        let frame: Vec<[f64; 3]> = tracks
            .iter()
            .map(|tr| {
                let p = &tr[nodes[k]];
                [p[0].as_f64().unwrap(), p[1].as_f64().unwrap(), p[2].as_f64().unwrap()]
            })
            .collect();
        assert!(constellation_distance(&expected, &frame) < 1e-8, "t = {t}");
    }
}

#[test]
fn empty_grid_is_a_config_error() {
    for grid in ["", "0:1:0"] {
        let out = run(&["constellation", "--grid", grid]);
        assert_eq!(out.status.code(), Some(2), "grid '{grid}'");
    }
}

#[test]
fn verify_default_passes() {
    let v = json(&["verify"]);
    assert_eq!(v["all_passed"], true);
}

#[test]
fn verify_detects_perturbed_christoffel() {
    let out = run(&["verify", "--perturb-christoffel", "1e-3"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<&str> = v["runs"][0]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["curvature_vs_christoffel_fd"]);
}

#[test]
fn verify_seed_sweep_table() {
    let out = run(&["verify", "--spin", "5/2", "--seeds", "5", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 5 * 13);
    assert!(text.contains("\"dim\":6"));
}

#[test]
fn file_inputs() {
    let state = tmp("state.json");
    let ham = tmp("hamiltonian.json");
    std::fs::write(&state, "[1, [0, 1], 0]").unwrap();
    std::fs::write(&ham, "[[1, 0, [0, 1]], [0, 0, 0], [[0, -1], 0, -1]]").unwrap();
    let v = json(&["phase", "--state", state.to_str().unwrap(), "--hamiltonian", ham.to_str().unwrap(), "--grid", "0:1:3"]);
    assert_eq!(v["config"]["two_s"], 2);
    assert_eq!(floats(&v["phase_exact"]).len(), 3);
    std::fs::write(&ham, "[[1, 2], [3, 4]]").unwrap();
    let out = run(&["phase", "--state", state.to_str().unwrap(), "--hamiltonian", ham.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_file_and_config_echo() {
    let path = tmp("phase.json");
    let out = run(&["phase", "--grid", "0:1:3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["format"], 1);
    assert_eq!(v["command"], "phase");
    assert_eq!(v["config"]["grid"]["spec"], "0:1:3");
    assert_eq!(v["config"]["steps"], 512);
}

#[test]
fn spin_mismatch_is_a_config_error() {
    assert_eq!(run(&["phase", "--state", "ghz", "--spin", "1"]).status.code(), Some(2));
    assert_eq!(run(&["phase", "--spin", "1/3"]).status.code(), Some(2));
}
