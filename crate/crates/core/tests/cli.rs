use std::fs::File;
use std::path::Path;
use std::process::{Command, Output};

use belltet::export;
use belltet::BellDiagonalState;
use serde_json::Value;

fn belltet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_belltet"))
        .args(args)
        .env("BELLTET_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&belltet(&["--help"])), 0);
    assert_eq!(code(&belltet(&[])), 1);
    assert_eq!(code(&belltet(&["measure", "--c1", "0", "--c2", "0", "--c3", "0", "--bogus"])), 1);
    assert_eq!(code(&belltet(&["oracle", "--measure", "nope", "--c1", "0", "--c2", "0", "--c3", "0"])), 1);
    assert_eq!(
        code(&belltet(&["evolve", "--c1", "0.3", "--c2", "0", "--c3", "0", "--channel", "depolarizing", "--steps", "1"])),
        1
    );
    assert_eq!(code(&belltet(&["ordering", "--measure-a", "c_l1", "--measure-b", "c_re", "--mode", "ray"])), 1);
}

#[test]
fn measure_maximally_mixed_and_invalid() {
    let out = belltet(&["measure", "--c1", "0", "--c2", "0", "--c3", "0"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    for key in ["c_l1", "c_re", "discord", "geo_discord"] {
        assert_eq!(v[key].as_f64(), Some(0.0), "{key}");
    }
    let bad = belltet(&["measure", "--c1", "1", "--c2", "1", "--c3", "1"]);
    assert_eq!(code(&bad), 2);
    assert!(bad.stdout.is_empty());
    assert!(!bad.stderr.is_empty());
}

#[test]
fn measure_negative_arguments() {
    let out = belltet(&["measure", "--c1", "-0.8", "--c2", "0.4", "--c3", "0.6"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["c_l1"].as_f64().unwrap() - 0.8).abs() < 1e-15);
    assert!((v["geo_discord"].as_f64().unwrap() - (0.16 + 0.36) / 4.0).abs() < 1e-15);
}

#[test]
fn oracle_agrees() {
    let out = belltet(&["oracle", "--measure", "discord", "--c1", "0.5", "--c2", "-0.3", "--c3", "0.2"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!(v["gap"].as_f64().unwrap() <= v["tolerance"].as_f64().unwrap());
}

#[test]
fn evolve_phaseflip_keeps_c3() {
    let out = belltet(&[
        "evolve", "--c1", "0.8", "--c2", "-0.4", "--c3", "0.6", "--channel", "phaseflip", "--steps", "11",
    ]);
    assert_eq!(code(&out), 0);
    let rows = export::read_trajectory_csv(out.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 11);
    for r in &rows {
        let [c1, c2, c3] = r.state.components();
        let decay = (-2.0 * r.t).exp();
        assert!((c3 - 0.6).abs() < 1e-12);
        assert!((c1 - 0.8 * decay).abs() < 1e-12);
        assert!((c2 + 0.4 * decay).abs() < 1e-12);
    }
}

#[test]
fn evolve_depolarizing_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let out = belltet(&[
        "evolve", "--c1", "0.8", "--c2", "-0.4", "--c3", "0.6", "--channel", "depolarizing", "--t-max", "40",
        "--out", path_arg(&path),
    ]);
    assert_eq!(code(&out), 0);
    let rows = export::read_trajectory_csv(File::open(&path).unwrap()).unwrap();
    assert_eq!(rows.len(), 51);
    let last = rows.last().unwrap();
    assert!(last.state.components().iter().all(|c| c.abs() < 1e-12));
    assert!(last.measures.c_l1 < 1e-12);
}

#[test]
fn ordering_pairs_exit_codes() {
    let differ = belltet(&["ordering", "--measure-a", "c_l1", "--measure-b", "c_re"]);
    assert_eq!(code(&differ), 4);
    let v = json(&differ);
    assert_eq!(v["same_ordering"], Value::Bool(false));
    assert!(v["counterexample"].is_object());

    let same = belltet(&["ordering", "--measure-a", "c_re", "--measure-b", "c_re", "--n", "200"]);
    assert_eq!(code(&same), 0);
    assert_eq!(json(&same)["same_ordering"], Value::Bool(true));
}

#[test]
fn ordering_sequence_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("seq.csv");
    let out = belltet(&[
        "ordering", "--measure-a", "c_l1", "--measure-b", "c_re", "--mode", "sequence", "--n", "100", "--csv",
        path_arg(&path),
    ]);
    assert_eq!(code(&out), 4);
    let rows = export::read_sequence_csv(File::open(&path).unwrap()).unwrap();
    assert_eq!(rows.len(), 100);
    assert!(rows.windows(2).all(|w| w[0].value_a <= w[1].value_a));
    let descents = json(&out)["descents"].as_array().unwrap().len();
    assert!(descents > 0);
}

#[test]
fn ordering_ray_mode() {
    let out = belltet(&[
        "ordering", "--measure-a", "c_l1", "--measure-b", "c_re", "--mode", "ray", "--direction", "1,-0.5,0",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["verdict"]["violations"], Value::from(0));
}

#[test]
fn contour_writes_readable_polylines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    let out = belltet(&[
        "contour", "--measure", "c_l1", "--level", "0.5", "--dims", "101", "--out", path_arg(&path),
    ]);
    assert_eq!(code(&out), 0);
    let lines = export::read_polylines_csv(File::open(&path).unwrap()).unwrap();
    assert!(!lines.is_empty());
    for p in lines.iter().flat_map(|l| &l.points) {
        assert!((p[0].abs().max(p[1].abs()) - 0.5).abs() < 1e-12);
        assert_eq!(p[2], 0.0);
    }
}

#[test]
fn empty_level_set_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("mesh.obj");
    let out = belltet(&["isosurface", "--measure", "c_l1", "--level", "5", "--dims", "21", "--out", path_arg(&obj)]);
    assert_eq!(code(&out), 5);
    let csv = dir.path().join("c.csv");
    let out = belltet(&["contour", "--measure", "c_re", "--level", "-1", "--dims", "21", "--out", path_arg(&csv)]);
    assert_eq!(code(&out), 5);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn isosurface_mesh_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("d.obj");
    let out = belltet(&["isosurface", "--measure", "discord", "--level", "0.03", "--dims", "31", "--out", path_arg(&obj)]);
    assert_eq!(code(&out), 0);
    let (mesh, sidecar) = export::load_mesh(&obj).unwrap();
    assert!(!mesh.triangles.is_empty());
    assert_eq!(sidecar.n_vertices, mesh.vertices.len());
    assert_eq!(sidecar.n_triangles, mesh.triangles.len());
    assert_eq!(sidecar.level, 0.03);
    for v in &mesh.vertices {
        assert!(BellDiagonalState::from_components(*v).is_ok(), "{v:?}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.obj");
    let b = dir.path().join("b.obj");
    for p in [&a, &b] {
        let out = belltet(&["isosurface", "--measure", "c_re", "--level", "0.1", "--dims", "25", "--out", path_arg(p)]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let args = ["ordering", "--measure-a", "discord", "--measure-b", "geo_discord", "--n", "500", "--seed", "3"];
    assert_eq!(belltet(&args).stdout, belltet(&args).stdout);
}

#[test]
fn selftest_passes_and_literal_weights_fail() {
    let ok = belltet(&["selftest", "--seed", "1"]);
    assert_eq!(code(&ok), 0);
    assert_eq!(json(&ok)["passed"], Value::Bool(true));

    let bad = belltet(&["selftest", "--seed", "1", "--literal-depolarizing"]);
    assert_eq!(code(&bad), 6);
    let v = json(&bad);
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == Value::Bool(false))
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"depolarizing_trace_preserving"), "{failed:?}");
}
