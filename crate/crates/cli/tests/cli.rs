use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
base_seed = 5
repetitions = 1
incremental_steps = 2
scenarios = ["equal", "half"]

[[datasets]]
name = "a"
n_classes = 8
dim = 8
n_train = 8
n_test = 5

[[datasets]]
name = "b"
n_classes = 8
dim = 6
n_train = 8
n_test = 5
small = true

[[strategies]]
name = "weak"
separation = 1.0

[[strategies]]
name = "strong"
separation = 4.0

[[learners]]
kind = "dslda"

[[learners]]
kind = "ncm"
"#;

const TWO_RUNS: &str = r#"
base_seed = 5
repetitions = 1
incremental_steps = 2
scenarios = ["equal", "half"]

[[datasets]]
name = "a"
n_classes = 8
dim = 8
n_train = 8
n_test = 5

[[strategies]]
name = "weak"
separation = 1.0

[[learners]]
kind = "ncm"
"#;

fn efcil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efcil")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn grid_analyze_report_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let grid = tmp.path().join("grid");
    let out = efcil(&["grid", "--config", &cfg, "--out", path(&grid), "--jobs", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let results = fs::read_to_string(grid.join("results.csv")).unwrap();
    assert_eq!(results.lines().filter(|l| !l.starts_with('#')).count(), 1 + 16);

    let report = tmp.path().join("report");
    let out = efcil(&["analyze", path(&grid), "--out", path(&report)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("partial eta2"));
    assert!(report.join("bundle.ron").is_file());

    let rendered = tmp.path().join("rendered");
    let out = efcil(&["report", path(&report), "--out", path(&rendered), "--formats", "md,csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(rendered.join("report.md").is_file());
    assert!(rendered.join("anova.csv").is_file());
}

#[test]
fn grid_output_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(
        code(&efcil(&["grid", "--config", &cfg, "--out", path(&a), "--jobs", "1"])),
        0
    );
    assert_eq!(
        code(&efcil(&["grid", "--config", &cfg, "--out", path(&b), "--jobs", "3"])),
        0
    );
    for name in ["results.csv", "manifest.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn failing_cell_gives_partial_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = format!(
        "{SMALL}\n[[overrides]]\ndata = \"a\"\ntrain = \"weak\"\nincr = \"dslda\"\nscenario = \"equal\"\nhyperparams = {{ dslda = {{ shrinkage = -1.0 }} }}\n"
    );
    let cfg = write_config(tmp.path(), "bad.toml", &bad);
    let grid = tmp.path().join("grid");
    let out = efcil(&["grid", "--config", &cfg, "--out", path(&grid)]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("a__weak__dslda__equal__r000"));
    let results = fs::read_to_string(grid.join("results.csv")).unwrap();
    assert_eq!(results.lines().filter(|l| !l.starts_with('#')).count(), 1 + 15);
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&efcil(&["grid", "--no-such-flag"])), 1);
    assert_eq!(code(&efcil(&["frobnicate"])), 1);
    let broken = write_config(tmp.path(), "broken.toml", "repetitions = \"many\"\n");
    let out = efcil(&["grid", "--config", &broken, "--out", path(tmp.path())]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let missing = tmp.path().join("nothing.toml");
    assert_eq!(code(&efcil(&["grid", "--config", path(&missing)])), 1);
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = efcil(&[
        "run",
        "--config",
        &cfg,
        "--out",
        path(tmp.path()),
        "--data",
        "zzz",
        "--train",
        "weak",
        "--incr",
        "ncm",
        "--scenario",
        "equal",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("not a cell"));
}

#[test]
fn run_prints_the_matching_grid_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let grid = tmp.path().join("grid");
    assert_eq!(code(&efcil(&["grid", "--config", &cfg, "--out", path(&grid)])), 0);
    let out = efcil(&[
        "run",
        "--config",
        &cfg,
        "--out",
        path(tmp.path()),
        "--data",
        "b",
        "--train",
        "strong",
        "--incr",
        "dslda",
        "--scenario",
        "half",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let printed = String::from_utf8_lossy(&out.stdout).into_owned();
    let row = printed.lines().last().unwrap();
    assert!(row.starts_with("b__strong__dslda__half__r000"), "{row}");
    let results = fs::read_to_string(grid.join("results.csv")).unwrap();
    assert!(results.lines().any(|l| l == row));
    assert!(tmp.path().join("runs/b__strong__dslda__half__r000.csv").is_file());
}

#[test]
fn mixed_configs_are_refused_unless_forced() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let renamed = SMALL
        .replace("name = \"a\"", "name = \"c\"")
        .replace("name = \"b\"", "name = \"d\"");
    let other = write_config(tmp.path(), "other.toml", &renamed);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(code(&efcil(&["grid", "--config", &cfg, "--out", path(&a)])), 0);
    assert_eq!(code(&efcil(&["grid", "--config", &other, "--out", path(&b)])), 0);
    let report = tmp.path().join("report");
    let out = efcil(&["analyze", path(&a), path(&b), "--out", path(&report)]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(stderr(&out).contains("config"), "{}", stderr(&out));
    assert!(!report.join("bundle.ron").exists());
    let out = efcil(&["analyze", path(&a), path(&b), "--out", path(&report), "--force-mixed"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn analysis_without_estimable_models_is_infeasible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "two.toml", TWO_RUNS);
    let grid = tmp.path().join("grid");
    assert_eq!(code(&efcil(&["grid", "--config", &cfg, "--out", path(&grid)])), 0);
    let out = efcil(&["analyze", path(&grid), "--out", path(&tmp.path().join("r"))]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn synth_writes_one_file_per_dataset_strategy_and_repetition() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = efcil(&["synth", "--config", &cfg, "--out", path(tmp.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let files = fs::read_dir(tmp.path().join("features")).unwrap().count();
    assert_eq!(files, 4);
    let table = fs::read_to_string(tmp.path().join("datasets.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
}
