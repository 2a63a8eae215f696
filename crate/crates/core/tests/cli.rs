use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hmmrd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmmrd")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn strip_runtime(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn mesh_info_on_level_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = hmmrd(&["mesh-info", "--level", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let s = stdout(&out);
    assert!(s.contains("cells: 8\n") && s.contains("faces: 16\n") && s.contains("vertices: 9\n"), "{s}");
    assert!(s.contains("closedness_defect:"));
    assert!(!s.contains("FAILED"));
}

#[test]
fn mesh_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("square.mesh");
    fs::write(&mesh, "# two squares\nvertices 6\n0 0\n0.5 0\n1 0\n0 1\n0.5 1\n1 1\ncells 2\n4 0 1 4 3\n4 1 2 5 4\n").unwrap();
    let out = hmmrd(&["mesh-info", "--mesh-file", mesh.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("cells: 2\n"));
}

fn run_convergence(dir: &Path, config: &Path) -> Output {
    hmmrd(&[
        "convergence",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn convergence_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    fs::write(&config, "levels = 2, 4, 8\ndt = 0.01\nT = 0.1\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run_convergence(&a, &config).status.success());
    assert!(run_convergence(&b, &config).status.success());

    for f in ["errors.csv", "grad_u.dat", "grad_v.dat", "manifest.txt", "run.log"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let ea = fs::read_to_string(a.join("errors.csv")).unwrap();
    let eb = fs::read_to_string(b.join("errors.csv")).unwrap();
    assert_eq!(strip_runtime(&ea), strip_runtime(&eb));
    for f in ["grad_u.dat", "grad_v.dat", "u.dat", "v.dat"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    let lines: Vec<&str> = ea.lines().collect();
    assert_eq!(lines[0], "h,err_u,rate_u,err_v,rate_v,err_gu,rate_gu,err_gv,rate_gv,runtime_s");
    assert_eq!(lines.len(), 4);
    let err_u: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(err_u.windows(2).all(|w| w[1] < w[0]), "{err_u:?}");

    let manifest = fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert!(manifest.contains("config_sha256 = "));
    assert_eq!(manifest.matches("mesh_sha256 = ").count(), 3);
    let hash = |m: &str| m.lines().find(|l| l.starts_with("config_sha256")).unwrap().to_string();
    assert_eq!(hash(&manifest), hash(&fs::read_to_string(b.join("manifest.txt")).unwrap()));
}

#[test]
fn diagnose_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = hmmrd(&[
        "diagnose",
        "--set",
        "diag_levels=2,4",
        "--set",
        "field_samples=x0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "h,C_D,S_D[sinsin],S_D[affine],W_D[x0]");
    assert_eq!(lines.len(), 3);
}

#[test]
fn solve_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = hmmrd(&["solve", "--level", "4", "--set", "T=0.05", "--set", "dt=0.01", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert_eq!(sol.lines().count(), 1 + 32);
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = hmmrd(&["solve", "--set", "dt=-1", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`dt`"));
    let out = hmmrd(&["solve", "--set", "speed=3", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`speed`"));
}

#[test]
fn solver_failure_reports_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = hmmrd(&[
        "solve",
        "--level",
        "2",
        "--set",
        "newton_max_iter=1",
        "--set",
        "newton_tol=1e-300",
        "--set",
        "T=0.01",
        "--set",
        "dt=0.01",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("time step 1"), "{err}");
}
