use std::path::Path;
use std::process::{Command, Output};

use horizonlab::manifest::RunManifest;
use horizonlab::rundir::load_run;
use horizonlab_core::jang::{continuation, JangProblem};
use serde_json::Value;

fn horizonlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horizonlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let o = horizonlab(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn rows(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

fn continue_pg(dir: &Path, grid: &str) {
    ok(&["jang", "continue", "--data", "pg:M=1", "--grid", grid, "--schedule", "geo:1:0.6:1e-3", "--out", dir.to_str().unwrap()]);
}

#[test]
fn continuation_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    continue_pg(&run, "200");
    let rf = json(&run.join("run.json"));
    let steps = rf["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 14);
    let csvs = std::fs::read_dir(run.join("steps")).unwrap().count();
    assert_eq!(csvs, 14);
    assert_eq!(header(&run.join("steps/step_000.csv")), "r,f,u_s,abs_grad_f");
    assert_eq!(rows(&run.join("steps/step_013.csv")), 200);
    assert_eq!(rf["universal_bound_holds"], true);
    assert_eq!(rf["gaps_hold"], true);

    let m = RunManifest::read(&run).unwrap();
    assert_eq!(m.artifacts.len(), 15);
    assert!(m.verify(&run).unwrap().is_empty());
    assert!(m.suites.iter().all(|s| s.pass));

    // the reloaded run is bit-identical to a fresh solve
    let loaded = load_run(&run).unwrap();
    let fresh = continuation(&JangProblem::new(loaded.data.clone(), 1.0).unwrap(), &loaded.run.schedule).unwrap();
    for (a, b) in loaded.run.steps.iter().zip(&fresh.steps) {
        assert_eq!(a.s.to_bits(), b.s.to_bits());
        assert!(a.f.iter().zip(&b.f).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a.grad.iter().zip(&b.grad).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(a.monitors, b.monitors);
    }
}

#[test]
fn identical_configs_give_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    continue_pg(&a, "120");
    continue_pg(&b, "120");
    let (ma, mb) = (RunManifest::read(&a).unwrap(), RunManifest::read(&b).unwrap());
    assert_eq!(ma.config_hash, mb.config_hash);
    assert_eq!(ma.artifacts, mb.artifacts);
    for x in ["blowdown", "structure"] {
        ok(&[x, "--run", a.to_str().unwrap()]);
        ok(&[x, "--run", b.to_str().unwrap()]);
        let (xa, xb) = (RunManifest::read(&a.join(x)).unwrap(), RunManifest::read(&b.join(x)).unwrap());
        assert_eq!(xa.artifacts, xb.artifacts);
    }
}

#[test]
fn downstream_commands_read_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    continue_pg(&run, "400");
    let r = run.to_str().unwrap();

    ok(&["blowdown", "--run", r]);
    let csv = run.join("blowdown/blowdown.csv");
    assert_eq!(header(&csv), "r,u,label,eta,levelset_residual,companion_residual");
    assert_eq!(rows(&csv), 400);
    let s = json(&run.join("blowdown/blowdown.json"));
    assert_eq!(s["sign_partition"], true);
    assert_eq!(s["bound_holds"], true);

    ok(&["classify", "--run", r]);
    let c = json(&run.join("classify/classification.json"));
    assert!(!c["domains"].as_array().unwrap().is_empty());

    ok(&["structure", "--run", r]);
    let st = json(&run.join("structure/structure.json"));
    let rep = &st["reports"][0];
    assert_eq!(rep["tiled"], true);
    assert_eq!(rep["max_on_domain"], true);
    assert_eq!(rep["segments"][0]["kind"], "maximal_domain");
    assert!(header(&run.join("structure/segments.csv")).starts_with("region,kind,start,end"));

    // tampering with a step file is detected
    let step = run.join("steps/step_005.csv");
    let text = std::fs::read_to_string(&step).unwrap().replacen("e-1,", "e-2,", 1);
    std::fs::write(&step, text).unwrap();
    let o = horizonlab(&["blowdown", "--run", r]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("checksum"));
}

#[test]
fn error_paths_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let o = out.to_str().unwrap();
    let bad = horizonlab(&["jang", "continue", "--data", "pg", "--schedule", "geo:1:1.5", "--out", o]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("invalid schedule"));
    assert!(!out.exists());

    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"data": {"name": "flat_constant_k", "params": {"c": 0.1}}, "chart": {"kind": "radial", "r_min": 0.5, "rmax": 9}}"#).unwrap();
    let bad = horizonlab(&["data", "validate", "--data", cfg.to_str().unwrap(), "--out", o]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("rmax"));

    let bad = horizonlab(&["data", "validate", "--data", "flat_constant_k:k=1", "--out", o]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("data.params.k"));

    let missing = tmp.path().join("nothing");
    let bad = horizonlab(&["blowdown", "--run", missing.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("missing run directory"));
}

#[test]
fn data_validate_and_vacuum_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().join("v");
    ok(&["data", "validate", "--data", "flat_constant_k:c=0.1", "--out", o.to_str().unwrap()]);
    let v = json(&o.join("validate.json"));
    assert_eq!(v["decay"]["pass"], false);
    assert!((v["constraints"]["max_abs_trace_k"].as_f64().unwrap() - 0.3).abs() < 1e-12);

    let o2 = tmp.path().join("all");
    let run = ok(&["verify-all", "--data", "flat_vacuum", "--out", o2.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&run.stdout);
    assert!(text.lines().count() >= 5 && text.lines().all(|l| l.starts_with("PASS")), "{text}");
    assert_eq!(json(&o2.join("verify.json"))["failed"], 0);
}

#[test]
fn surface_stability_and_foliation() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path();
    let s = o.join("s");
    ok(&["surface", "theta", "--data", "pg", "--radius", "2", "--lmax", "4", "--out", s.to_str().unwrap()]);
    assert_eq!(header(&s.join("theta.csv")), "lat,lon,H,trk,theta");
    assert!(json(&s.join("theta.json"))["theta_mean"].as_f64().unwrap().abs() < 1e-12);

    let e = o.join("e");
    ok(&["stability", "eig", "--data", "pg", "--radius", "3", "--lmax", "4", "--out", e.to_str().unwrap()]);
    let eig = json(&e.join("eig.json"));
    assert!(eig["lambda1"].is_f64() && eig["class"].is_string() && eig["residual"].is_f64());
    assert_eq!(header(&e.join("beta.csv")), "lat,lon,beta");

    let f = o.join("f");
    ok(&["foliate", "--data", "flat_vacuum", "--seed-radius", "1", "--direction", "-", "--cap", "10", "--out", f.to_str().unwrap()]);
    let csv = f.join("foliation.csv");
    assert_eq!(header(&csv), "tau,r_mean,lambda1,psi_min,psi_max,sup_h2");
    for line in std::fs::read_to_string(&csv).unwrap().lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - 2.0 / v[0]).abs() < 1e-4);
    }
    let sheets = std::fs::read_dir(f.join("sheets")).unwrap().count();
    assert_eq!(sheets, rows(&csv));
}

#[test]
fn gluing_check_on_the_product_cylinder() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.json");
    std::fs::write(&spec, r#"{"path": {"kind": "product"}, "interval": [0, 3]}"#).unwrap();
    let o = tmp.path().join("g");
    ok(&["gluing-check", "--spec", spec.to_str().unwrap(), "--out", o.to_str().unwrap()]);
    let g = json(&o.join("gluing.json"));
    assert!((g["lambda_star"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((g["lambda1"].as_f64().unwrap() - 0.25).abs() < 1e-6);
    assert_eq!(g["bound_met"], true);

    std::fs::write(&spec, r#"{"path": {"kind": "flat_ball"}, "check_ends": false}"#).unwrap();
    ok(&["gluing-check", "--spec", spec.to_str().unwrap(), "--out", o.to_str().unwrap()]);
    let g = json(&o.join("gluing.json"));
    assert_eq!(g["applicable"], false);
    assert!(g["max_abs_scalar_curvature"].as_f64().unwrap() < 1e-8);
}
