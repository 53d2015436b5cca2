use std::path::Path;
use std::process::{Command, Output};

fn homflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn catalog_list_names_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    let o = homflow(&["catalog", "list"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["abelian3", "heisenberg3", "su2_round", "hyperbolic3", "sphere2", "sphere2_x_r"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn successful_run_exits_zero_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "su2.toml",
        "name = \"round\"\ncatalog = \"su2_round\"\nhorizon = 2.0\n\n[expect.forward]\nverdict = \"blowup\"\ntime = 1.0\n",
    );
    let o = homflow(&["run", &file], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(dir.path().join("round_forward.csv").exists());
    assert!(dir.path().join("round.report.json").exists());
}

#[test]
fn flat_run_has_zero_curvature_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = homflow(&["catalog", "run", "abelian3"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("abelian3_forward.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,mu_norm,scalar_R,tr_ric_sq,jacobi_residual"));
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(cols[2], 0.0);
        assert_eq!(cols[3], 0.0);
    }
}

#[test]
fn contradicted_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "wrong.toml",
        "name = \"wrong\"\ncatalog = \"heisenberg3\"\nhorizon = 1.0\n\n[expect.forward]\nverdict = \"blowup\"\n",
    );
    let o = homflow(&["run", &file], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("CONTRADICTS"));
}

#[test]
fn invalid_scenarios_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        "name = \"bad\"\nq = 0\nn = 3\nbracket = [[1, 2, 3, 1.0], [1, 2, 1, 0.5], [2, 3, 2, 1.0]]\n",
    );
    let o = homflow(&["run", &bad], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("jacobi_residual"), "{}", stderr(&o));

    let broken = write(dir.path(), "broken.toml", "name = \"x\"\nq = 0\nn = = 3\n");
    let o = homflow(&["run", &broken], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = homflow(&["catalog", "run", "no_such_entry"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn integrator_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "tiny.toml",
        "name = \"tiny\"\ncatalog = \"su2_round\"\nhorizon = 2.0\n\n[integrator]\nmax_steps = 3\n",
    );
    let o = homflow(&["run", &file], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

#[test]
fn backward_catalog_run_reports_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let o = homflow(&["catalog", "run", "heisenberg3", "--backward"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let json: String = std::fs::read_to_string(dir.path().join("heisenberg3.report.json")).unwrap();
    let key = "\"regression\": ";
    let at = json.find(key).expect("regression estimate present") + key.len();
    let alpha: f64 = json[at..].split([',', '\n']).next().unwrap().trim().parse().unwrap();
    assert!((alpha + 1.0 / 3.0).abs() < 1e-3);
}

#[test]
fn global_flags_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let o = homflow(
        &["catalog", "run", "su2_round", "--horizon", "0.5", "--rel-tol", "1e-9", "--abs-tol", "1e-11", "--blowup-threshold", "1e5"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("immortal-to-horizon"));
}

#[test]
fn verify_passes_on_the_true_flow() {
    let dir = tempfile::tempdir().unwrap();
    let o = homflow(&["verify"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 failed"));
}

#[test]
fn verify_catches_mutations() {
    let dir = tempfile::tempdir().unwrap();
    let o = homflow(&["verify", "--mutation", "ricci-sign"], dir.path());
    assert_ne!(o.status.code(), Some(0));
    let text = stdout(&o);
    let failed = |check: &str| {
        text.lines()
            .any(|l| l.split_whitespace().collect::<Vec<_>>().windows(2).any(|w| w == [check, "FAIL"]))
    };
    assert!(failed("scevol") && failed("monotonicity"), "{text}");

    let o = homflow(&["verify", "--mutation", "pi-sign"], dir.path());
    assert_ne!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.lines().any(|l| l.starts_with("su2_round forward") && l.contains("verdict") && l.contains("FAIL")),
        "{text}"
    );
}

#[test]
fn bundled_scenarios_run_clean() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for name in ["round_sphere.toml", "heisenberg.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let file = root.join(name);
        let o = homflow(&["run", file.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(0), "{name}: {}{}", stdout(&o), stderr(&o));
    }
}
