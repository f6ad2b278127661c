//! End-to-end runs of the `remesh` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use remesh_core::mesh::save_mesh;
use remesh_core::report::{QualityReport, Termination};
use remesh_core::{shapes, HalfedgeMesh};
use tempfile::TempDir;

fn remesh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_remesh")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn write_input(dir: &TempDir, name: &str, mesh: &HalfedgeMesh) -> PathBuf {
    let path = dir.path().join(name);
    save_mesh(mesh, &path).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn sphere_reaches_theta_and_writes_a_report() {
    let dir = TempDir::new().unwrap();
    let input = write_input(&dir, "in.off", &shapes::icosphere(3));
    let (out, report, hist) = (dir.path().join("out.obj"), dir.path().join("r.json"), dir.path().join("h.csv"));
    let o = remesh(&[s(&input), s(&out), "--theta", "30", "--delta", "0.2", "--report", s(&report), "--histogram", s(&hist)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: QualityReport = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r.schema_version, 1);
    assert_eq!(r.termination, Some(Termination::ThetaReached));
    assert!(r.theta_min >= 30.0);
    assert!(r.distance.hausdorff <= 1.05 * r.delta_abs.unwrap());
    assert_eq!(r.angle_histogram.iter().sum::<u64>(), 3 * r.facets as u64);
    let output = remesh_core::mesh::load_mesh(&out).unwrap();
    assert_eq!(output.vertex_count(), r.vertices);
    assert_eq!(std::fs::read_to_string(&hist).unwrap().lines().count(), 61);
}

#[test]
fn missing_input_exits_with_1() {
    let dir = TempDir::new().unwrap();
    let o = remesh(&[s(&dir.path().join("nope.off")), s(&dir.path().join("out.off"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.off"), "{}", stderr(&o));
}

#[test]
fn theta_60_is_rejected_before_loading() {
    let dir = TempDir::new().unwrap();
    let o = remesh(&[s(&dir.path().join("nope.off")), s(&dir.path().join("out.off")), "--theta", "60"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unsupported regime"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_1() {
    assert_eq!(remesh(&["only-one-path.off"]).status.code(), Some(1));
    assert_eq!(remesh(&["a.off", "b.off", "--delta", "abc"]).status.code(), Some(1));
    assert_eq!(remesh(&["--help"]).status.code(), Some(0));
}

#[test]
fn vertex_budget_exits_with_2_and_keeps_the_bound() {
    let dir = TempDir::new().unwrap();
    let mesh = shapes::cylinder(24, 3, 0.5, 1.5);
    let input = write_input(&dir, "in.off", &mesh);
    let (out, report) = (dir.path().join("out.off"), dir.path().join("r.json"));
    let cap = (mesh.vertex_count() + 2).to_string();
    let o = remesh(&[s(&input), s(&out), "--no-simplify", "--max-vertices", &cap, "--report", s(&report)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let r: QualityReport = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r.termination, Some(Termination::VertexBudget));
    assert!(r.vertices <= mesh.vertex_count() + 2);
    assert!(r.distance.hausdorff <= 1.05 * r.delta_abs.unwrap());
}

#[test]
fn identical_invocations_give_identical_output() {
    let dir = TempDir::new().unwrap();
    let input = write_input(&dir, "in.obj", &shapes::torus(24, 10, 1.0, 0.4));
    let run = |name: &str| {
        let (out, report) = (dir.path().join(format!("{name}.off")), dir.path().join(format!("{name}.json")));
        let o = remesh(&[s(&input), s(&out), "--seed", "7", "--report", s(&report)]);
        assert!(matches!(o.status.code(), Some(0 | 2)), "{}", stderr(&o));
        let mut r: QualityReport = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        r.timings = Default::default();
        (std::fs::read(&out).unwrap(), r)
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn debug_dumps_cover_every_vertex_and_sample() {
    let dir = TempDir::new().unwrap();
    let mesh = shapes::cube(3);
    let input = write_input(&dir, "in.off", &mesh);
    let (field, samples) = (dir.path().join("field.obj"), dir.path().join("samples.obj"));
    let o = remesh(&[
        s(&input),
        s(&dir.path().join("out.off")),
        "--dump-feature-field",
        s(&field),
        "--dump-samples",
        s(&samples),
    ]);
    assert!(matches!(o.status.code(), Some(0 | 2)), "{}", stderr(&o));
    let text = std::fs::read_to_string(&field).unwrap();
    let colored: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| l.starts_with("v "))
        .map(|l| l[2..].split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(colored.len(), mesh.vertex_count());
    assert!(colored.iter().all(|c| c.len() == 6 && c[3..].iter().all(|x| (0.0..=1.0).contains(x))));
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), mesh.facet_count());
    // cube corners carry more intensity than face centers
    let red = |c: &Vec<f64>| c[3];
    let max = colored.iter().map(red).fold(0.0, f64::max);
    let min = colored.iter().map(red).fold(1.0, f64::min);
    assert!(max > min);
    let points = std::fs::read_to_string(&samples).unwrap().lines().count();
    assert!(points >= mesh.facet_count());
}
