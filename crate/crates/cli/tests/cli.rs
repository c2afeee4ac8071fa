use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn kirigami(args: &[&str], out: &Path, sets: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kirigami"));
    cmd.args(args).arg("--out").arg(out);
    for s in sets {
        cmd.args(["--set", s]);
    }
    cmd.output().expect("binary runs")
}

fn desk(sub: &str, out: &Path, sets: &[&str]) -> Output {
    let cfg = config("desk_cross.toml");
    kirigami(&[sub, "--config", cfg.to_str().unwrap()], out, sets)
}

const SMALL: [&str; 4] = ["substrate.size=30", "pattern.arm_length=30", "pattern.arm_width=10", "mesh.edge_length=2.0"];

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn analyze_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let o = desk("analyze", dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let golden = json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/analyze_desk_cross.json"));
    assert_eq!(json(&dir.path().join("analyze.json")), golden);
}

#[test]
fn unknown_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = desk("analyze", dir.path(), &["mesh.bogus=1"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("mesh.bogus"), "{err}");
    assert!(!dir.path().join("analyze.json").exists());
}

#[test]
fn out_of_range_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["prestretch.values=[0.9]", "laminate.poisson=0.6", "substrate.size=-1", "laminate.face=\"nope\""] {
        let o = desk("analyze", dir.path(), &[bad]);
        assert_eq!(o.status.code(), Some(1), "{bad}");
    }
}

#[test]
fn infeasible_design_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = kirigami(&["design", "--config", config("desk_cross.toml").to_str().unwrap(), "--target", "0.9"], dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn design_round_trips_through_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let o = kirigami(&["design", "--config", config("desk_cross.toml").to_str().unwrap(), "--target", "0.2"], dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&dir.path().join("design.json"));
    let lambda = d["solved"].as_f64().unwrap();
    assert!((d["forward_hl"].as_f64().unwrap() - 0.2).abs() < 1e-9);
    let set = format!("prestretch.values=[{lambda}]");
    let o = desk("analyze", dir.path(), &[&set]);
    assert!(o.status.success());
    let hl = json(&dir.path().join("analyze.json"))["points"][0]["hl_pyramid"].as_f64().unwrap();
    assert!((hl - 0.2).abs() < 1e-8, "{hl}");
}

#[test]
fn bare_substrate_has_unit_bending_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let o = desk("analyze", dir.path(), &["pattern={kind=\"none\"}", "prestretch.values=[1.0]"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p = &json(&dir.path().join("analyze.json"))["points"][0];
    assert_eq!(p["coverage"].as_f64(), Some(0.0));
    assert!((p["D_ratio"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(p["hl_pyramid"].as_f64(), Some(0.0));
}

#[test]
fn sweep_rows_and_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sets = ["prestretch.values=[1.0,1.4,1.8]", "sweep.sizes=[40,60]"];
    assert!(desk("sweep", a.path(), &sets).status.success());
    assert!(desk("sweep", b.path(), &sets).status.success());
    let first = std::fs::read(a.path().join("sweep.csv")).unwrap();
    assert_eq!(first, std::fs::read(b.path().join("sweep.csv")).unwrap());

    let mut rdr = csv::Reader::from_reader(first.as_slice());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(headers.len(), 16);
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let lambda: f64 = r[col("lambda")].parse().unwrap();
        let hl: f64 = r[col("hl_analytic_pyramid")].parse().unwrap();
        if lambda == 1.0 {
            assert_eq!(hl, 0.0);
        } else {
            assert!(hl > 0.0 && hl < 0.5);
        }
        assert!(r[col("hl_sim_positive")].is_empty());
    }
}

#[test]
fn unstretched_simulation_stays_flat() {
    let dir = tempfile::tempdir().unwrap();
    let mut sets = SMALL.to_vec();
    sets.push("prestretch.values=[1.0]");
    let o = desk("simulate", dir.path(), &sets);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&dir.path().join("summary.json"));
    let states = summary["states"].as_array().unwrap();
    assert_eq!(states.len(), 1);
    assert!(states[0]["hl"].as_f64().unwrap() < 1e-6);
    assert!(dir.path().join("state_flat.obj").exists());
}
