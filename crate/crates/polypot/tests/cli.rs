use std::path::Path;
use std::process::{Command, Output};

use polypot::geometry::make_sphere_mesh;
use polypot::mesh_io::save_mesh;

fn polypot(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polypot"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("POLYPOT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn biharmonic_solve_reports_the_probe_table() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "solve", "dirichlet", "--mesh", "sphere:3:1", "--m", "2", "--data", "const:1", "--data", "const:6", "--reference", "r2",
    ];
    let out = polypot(&args, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(dir.path());
    let probe = r["probes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["x"] == serde_json::json!([0.5, 0.0, 0.0]))
        .expect("probe at (0.5, 0, 0)");
    let index = probe["probe"].as_u64().unwrap().to_string();
    let u = probe["u"].as_f64().unwrap();
    assert!((u - 0.25).abs() < 0.01, "u = {u}");
    assert_eq!(r["solve"]["order"], 2);
    let csv = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert!(csv.starts_with("level,probe,quantity,value,reference,abs_err,rel_err\n"));
    let row: Vec<&str> = csv
        .lines()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|c| c[1] == index && c[2] == "u")
        .expect("u row for the probe");
    let rel_err: f64 = row[6].parse().unwrap();
    assert!(rel_err <= 2e-2, "{rel_err}");
}

#[test]
fn reference_solution_adds_an_error_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "solve", "regularity", "--mesh", "sphere:2:1", "--m", "1", "--data", "expr:manufactured:x1:0", "--reference", "x1",
    ];
    let out = polypot(&args, dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("probe error"), "{stdout}");
    let r = report(dir.path());
    assert!(r["verdicts"].as_array().unwrap().len() == 2);
}

#[test]
fn kernel_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = polypot(&["verify", "kernels"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 3);
}

#[test]
fn missing_mesh_exits_two_with_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = polypot(&["solve", "dirichlet", "--mesh", "/no/such/shape.mesh", "--m", "1", "--data", "const:1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/shape.mesh"));
}

#[test]
fn malformed_mesh_exits_two_with_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mesh");
    std::fs::write(&bad, "POLYMESH 1\n3 1\n0 0 0\n1 0 0\n").unwrap();
    let out = polypot(&["mesh-info", "--mesh", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(bad.to_str().unwrap()));
}

#[test]
fn configuration_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 4] = [
        (&["solve", "dirichlet", "--mesh", "sphere:1:1", "--m", "2", "--data", "const:1"], "data"),
        (&["solve", "dirichlet", "--mesh", "sphere:1:1", "--m", "0"], "m"),
        (&["solve", "dirichlet", "--mesh", "sphere:x:1", "--m", "1", "--data", "const:1"], "mesh"),
        (&["converge", "dirichlet", "--m", "1", "--reference", "nope"], "reference"),
    ];
    for (args, field) in cases {
        let out = polypot(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(&format!("`{field}`")), "{args:?}: {err}");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_polypot"))
        .args(["mesh-info", "--mesh", "sphere:1:1"])
        .env("POLYPOT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("POLYPOT_THREADS"));
}

#[test]
fn single_threaded_runs_give_identical_tables() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["converge", "neumann", "--m", "2", "--reference", "x1r2", "--levels", "2,3", "--tolerance", "1"];
    let (ra, rb) = (polypot(&args, a.path()), polypot(&args, b.path()));
    assert_eq!(ra.status.code(), rb.status.code());
    let ta = std::fs::read(a.path().join("table.csv")).unwrap();
    let tb = std::fs::read(b.path().join("table.csv")).unwrap();
    assert!(!ta.is_empty());
    assert_eq!(ta, tb);
}

#[test]
fn mesh_info_reads_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.mesh");
    save_mesh(&make_sphere_mesh(1, 2.0, [1.0, 0.0, 0.0]).unwrap(), &p).unwrap();
    let out = polypot(&["mesh-info", "--mesh", p.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stats["panels"], 80);
    assert_eq!(stats["vertices"], 42);
}

#[test]
fn convergence_run_fits_an_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = polypot(&["converge", "dirichlet", "--m", "1", "--reference", "x1", "--levels", "2,3"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(dir.path());
    let q = &r["convergence"]["quantities"][0];
    assert_eq!(q["quantity"], "u");
    assert!(q["fitted_order"].as_f64().unwrap() >= 1.0);
}
