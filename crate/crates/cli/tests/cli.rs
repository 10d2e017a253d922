//! End-to-end runs of the `dtn` binary from an empty directory.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dtn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtn")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn mesh_round_trips_through_the_file_format() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtn(dir.path(), &["mesh", "--shape", "square", "--h", "0.5", "--out", "sq.txt"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let text = fs::read_to_string(dir.path().join("sq.txt")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("DTNMESH 1"));
    assert_eq!(lines.next(), Some("9 8 8"));
    // a mesh file drives the same pipeline as the generator
    let a = dtn(dir.path(), &["eig", "--problem", "dtn", "--mesh", "sq.txt", "--lambda", "-1", "--count", "3"]);
    let b = dtn(
        dir.path(),
        &["eig", "--problem", "dtn", "--shape", "square", "--h", "0.5", "--lambda", "-1", "--count", "3"],
    );
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn dirichlet_first_eigenvalue_on_the_square() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtn(dir.path(), &["eig", "--problem", "dirichlet", "--shape", "square", "--h", "0.05", "--count", "1"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("index,re,im,residual"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let l1: f64 = row[1].parse().unwrap();
    let exact = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
    assert!(l1 > exact && (l1 - exact) / exact < 0.01, "{l1}");
    assert_eq!(lines.next(), None);
}

#[test]
fn duality_rows_on_the_disk() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtn(dir.path(), &["duality", "--shape", "disk", "--h", "0.05", "--lambda", "0", "--count", "5"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("mu,beta,robin_residual"));
    assert_eq!(lines.len(), 6);
    for line in &lines[1..] {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(f[0], -f[1]);
        assert!(f[2] <= 1e-8, "{line}");
    }
}

#[test]
fn semigroup_positivity_for_the_laplacian() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtn(
        dir.path(),
        &[
            "semigroup",
            "--shape",
            "disk",
            "--h",
            "0.1",
            "--lambda",
            "0",
            "--check",
            "positivity",
            "--lumped-boundary-mass",
            "--out",
            "report.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let r = &v.as_array().unwrap()[0];
    assert_eq!(r["property"], "positivity");
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["times"].as_array().unwrap().len(), 4);
    assert!(r["margins"]["margin_a"].as_f64().unwrap() > 0.0);
}

#[test]
fn consistent_mass_ripple_is_a_property_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtn(
        dir.path(),
        &["semigroup", "--shape", "disk", "--h", "0.1", "--lambda", "0", "--check", "positivity", "--times", "0.01"],
    );
    assert_eq!(code(&o), 2);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["verdict"], "fail");
}

#[test]
fn every_check_and_domination_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtn(
        dir.path(),
        &[
            "semigroup",
            "--shape",
            "disk",
            "--h",
            "0.2",
            "--preset",
            "rotational:1",
            "--lambda",
            "-1",
            "--lumped-boundary-mass",
        ],
    );
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let props: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["property"].as_str().unwrap()).collect();
    assert_eq!(props, ["positivity", "sub_markov", "irreducibility"]);

    let o = dtn(
        dir.path(),
        &[
            "dominate",
            "--shape",
            "disk",
            "--h",
            "0.2",
            "--lambda1",
            "0",
            "--lambda2",
            "0",
            "--d1",
            "0",
            "--d2",
            "1",
            "--lumped-boundary-mass",
            "--seed",
            "11",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["property"], "domination");
    assert_eq!(v["verdict"], "pass");
}

#[test]
fn assemble_and_operator_write_matrix_market() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtn(dir.path(), &["assemble", "--shape", "square", "--h", "0.25", "--out-prefix", "sq_"]);
    assert_eq!(code(&o), 0);
    for f in ["sq_K.mtx", "sq_M.mtx", "sq_Mb.mtx"] {
        let text = fs::read_to_string(dir.path().join(f)).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general\n25 25 "), "{f}");
    }
    let part = fs::read_to_string(dir.path().join("sq_partition.txt")).unwrap();
    assert!(part.starts_with("INTERIOR 9\n"));
    assert!(part.contains("BOUNDARY 16\n"));

    let o = dtn(dir.path(), &["operator", "--shape", "square", "--h", "0.25", "--lambda", "-1", "--out", "S.mtx"]);
    assert_eq!(code(&o), 0);
    let s = fs::read_to_string(dir.path().join("S.mtx")).unwrap();
    assert!(s.lines().nth(1) == Some("16 16 256"));
    assert!(dir.path().join("S_Mb.mtx").exists());
    // no temporary files left behind
    let names: Vec<String> =
        fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().all(|n| !n.contains(".tmp")), "{names:?}");
}

#[test]
fn sweep_reports_and_skips_poles() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtn(
        dir.path(),
        &[
            "sweep",
            "--shape",
            "disk",
            "--h",
            "0.2",
            "--lambda-min",
            "-5",
            "--lambda-max",
            "5",
            "--steps",
            "11",
            "--count",
            "3",
        ],
    );
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.starts_with("lambda,k,re_mu,im_mu\n"));
    assert_eq!(out.lines().count(), 1 + 11 * 3);
    // the first branch crosses zero at lambda = 0
    let at0: Vec<f64> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect::<Vec<f64>>())
        .filter(|r| r[0] == 0.0 && r[1] == 1.0)
        .map(|r| r[2])
        .collect();
    assert!(at0[0].abs() < 1e-10);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nonincreasing"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["eig", "--problem", "dtn", "--shape", "disk", "--h", "0.2", "--preset", "skew_stream:0.5", "--count", "5"],
        &["sweep", "--shape", "square", "--h", "0.25", "--lambda-min", "-3", "--lambda-max", "3", "--steps", "7"],
        &["dominate", "--shape", "square", "--h", "0.25", "--lambda1", "0", "--lambda2", "-1", "--seed", "5"],
    ];
    for args in runs {
        let a = dtn(dir.path(), args);
        let b = dtn(dir.path(), args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert!(!a.stdout.is_empty());
    }
}

#[test]
fn coefficient_file_matches_the_preset() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.txt"), "a = identity\nb = rotational 1\nc = rotational 1\nd = const 0.5\nkappa = 1\n")
        .unwrap();
    let from_file = dtn(dir.path(), &["eig", "--problem", "dtn", "--shape", "disk", "--h", "0.2", "--coeff", "c.txt"]);
    let from_preset = dtn(
        dir.path(),
        &["eig", "--problem", "dtn", "--shape", "disk", "--h", "0.2", "--preset", "rotational+constant_d:1,0.5"],
    );
    assert_eq!(code(&from_file), 0);
    assert_eq!(from_file.stdout, from_preset.stdout);
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 6] = [
        &["eig", "--problem", "dirichlet", "--shape", "disk"],
        &["eig", "--problem", "dirichlet", "--mesh", "m.txt", "--shape", "disk", "--h", "0.1"],
        &["eig", "--problem", "dirichlet", "--mesh", "missing.txt"],
        &["eig", "--problem", "dirichlet", "--shape", "disk", "--h", "0.2", "--preset", "nonsense"],
        &["mesh", "--shape", "disk", "--h", "0.2", "--out", "x.txt", "--frobnicate"],
        &["duality", "--shape", "disk", "--h", "0.2", "--tol", "0"],
    ];
    for args in cases {
        let o = dtn(dir.path(), args);
        assert_eq!(code(&o), 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn spectrum_hit_names_the_offending_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let o = dtn(dir.path(), &["eig", "--problem", "dirichlet", "--shape", "square", "--h", "0.25", "--count", "1"]);
    let out = stdout(&o);
    let l1 = out.lines().nth(1).unwrap().split(',').nth(1).unwrap().to_string();
    let o = dtn(dir.path(), &["operator", "--shape", "square", "--h", "0.25", "--lambda", &l1, "--out", "S.mtx"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    let value: f64 = l1.parse().unwrap();
    assert!(err.contains(&value.to_string()), "{err}");
    assert!(!dir.path().join("S.mtx").exists());

    let o = dtn(
        dir.path(),
        &["sweep", "--shape", "square", "--h", "0.25", "--lambda-min", &l1, "--lambda-max", &l1, "--steps", "1"],
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn vertex_cap_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_dtn"))
        .current_dir(dir.path())
        .env("DTN_MAX_DOFS", "50")
        .args(["eig", "--problem", "dirichlet", "--shape", "disk", "--h", "0.1"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cap 50"));
}
