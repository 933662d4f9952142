use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgame")).args(args).output().expect("binary runs")
}

fn specs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("specs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn shipped_specs_validate() {
    for entry in std::fs::read_dir(specs()).unwrap() {
        let path = entry.unwrap().path();
        let out = hgame(&["validate", "--spec", p(&path)]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn invalid_spec_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"name":"x","game":{"kind":"mlmf","b":-1},"solvers":{"kind":"sg","alpha0":0},"seeds":[],
            "budget":{"kind":"outer-iters","n":1}}"#,
    )
    .unwrap();
    let out = hgame(&["validate", "--spec", p(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for field in ["seeds", "game.b", "solvers[0].alpha0"] {
        assert!(err.contains(field), "{err}");
    }
}

#[test]
fn run_tables_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let spec = specs().join("smoke.json");
    let run = hgame(&["run", "--spec", p(&spec), "--out", p(&out_dir), "--seed", "3", "--deterministic"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out_dir.join("vr-spp.csv").exists() && out_dir.join("sg.csv").exists());
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("### comparison"));

    let tables = hgame(&["tables", "--in", p(&out_dir)]);
    assert!(tables.status.success());
    let text = String::from_utf8_lossy(&tables.stdout);
    assert!(text.contains("### vr-spp") && text.contains("| base |"));

    let plots = dir.path().join("plots");
    let pd = hgame(&["plot-data", "--in", p(&out_dir), "--out", p(&plots)]);
    assert!(pd.status.success());
    assert!(plots.join("vr-spp_base.dat").exists());

    // same root seed, same bytes
    let again = dir.path().join("again");
    hgame(&["run", "--spec", p(&spec), "--out", p(&again), "--seed", "3", "--deterministic"]);
    assert_eq!(std::fs::read(out_dir.join("sg.csv")).unwrap(), std::fs::read(again.join("sg.csv")).unwrap());
}

#[test]
fn numeric_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("diverge.json");
    std::fs::write(
        &spec,
        r#"{"name":"diverge","game":{"kind":"bilevel","n_players":3,"slopes":"coincident"},
            "solvers":{"kind":"sg","alpha0":1e6},"seeds":[1],
            "budget":{"kind":"outer-iters","n":2000},"residual":{"kind":"equilibrium-distance"}}"#,
    )
    .unwrap();
    let out = hgame(&["run", "--spec", p(&spec), "--out", p(&dir.path().join("o")), "--seed", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed"));
}

#[test]
fn missing_output_directory_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.json");
    std::fs::write(
        &spec,
        r#"{"name":"s","game":{"kind":"bilevel","n_players":2,"slopes":"coincident"},
            "solvers":{"kind":"sg","alpha0":0.01},"seeds":[1],
            "budget":{"kind":"outer-iters","n":1},"residual":{"kind":"equilibrium-distance"}}"#,
    )
    .unwrap();
    let out = hgame(&["run", "--spec", p(&spec), "--seed", "0"]);
    assert_eq!(out.status.code(), Some(1));
}
