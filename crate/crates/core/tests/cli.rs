use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsa")).args(args).output().expect("run nsa")
}

fn ok(args: &[&str]) -> String {
    let out = nsa(args);
    assert!(
        out.status.success(),
        "nsa {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn schedule_to_stdout() {
    let csv = ok(&["schedule"]);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "epoch,h_e,p_e");
    assert_eq!(rows.len(), 301);
    assert_eq!(rows[100], "100,219,15");
    assert_eq!(rows[300], "300,128,3");
}

#[test]
fn gen_xor_writes_csv_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("xor.csv");
    ok(&["gen-xor", "--k", "2", "--p", "4", "--n", "50", "--out", path(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 51);
    assert!(text.lines().next().unwrap().ends_with("label"));
    let prov = fs::read_to_string(dir.path().join("xor.csv.provenance.json")).unwrap();
    assert!(prov.contains("\"xor\""));

    // the same cut is reproduced exactly
    let again = dir.path().join("again.csv");
    ok(&["gen-xor", "--k", "2", "--p", "4", "--n", "50", "--out", path(&again)]);
    assert_eq!(text, fs::read_to_string(&again).unwrap());
}

#[test]
fn fsa_nsa_then_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let data = ["--k", "2", "--p", "5", "--n", "300", "--n-test", "300"];
    let mut args = vec!["fsa-nsa", "--start-nodes", "32", "--nodes", "6", "--n-iter", "60", "--seed", "3"];
    args.extend(data);
    args.extend(["--out", path(&model)]);
    ok(&args);
    let trace = fs::read_to_string(dir.path().join("model.json.trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 61);
    assert!(trace.lines().last().unwrap().contains(",6,2,"));
    let report = fs::read_to_string(dir.path().join("model.json.report.json")).unwrap();

    let mut args = vec!["eval", "--model", path(&model)];
    args.extend(data);
    let eval = ok(&args);
    let a: serde_json::Value = serde_json::from_str(&report).unwrap();
    let b: serde_json::Value = serde_json::from_str(&eval).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_file_in_key_value_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        "# small sweep\ndata.k = 2\ndata.p = 2\ndata.n = 200\ndata.n_test = 200\nhidden = [4, 8]\nseeds = [0, 1]\ntrain.epochs = 5\n",
    )
    .unwrap();
    let out = dir.path().join("sweep.csv");
    ok(&["sweep-h", "--config", path(&cfg), "--out", path(&out)]);
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "sweep-h");
    assert_eq!(manifest["config"]["train"]["epochs"], 5);
}

#[test]
fn restarts_are_sorted_by_loss() {
    let csv = ok(&[
        "restarts", "--k", "2", "--p", "2", "--n", "200", "--n-test", "200", "--hidden", "4", "--epochs", "5",
        "--restarts", "4",
    ]);
    let losses: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(losses.len(), 4);
    assert!(losses.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn grid_search_on_fixture() {
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/wine.csv");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    ok(&[
        "grid-search", "--csv", fixture, "--label", "cultivar", "--hidden", "8", "--l2", "0.001", "--batch", "32",
        "--folds", "2", "--cv-runs", "1", "--final-runs", "1", "--epochs", "20", "--sparsity", "4:3",
        "--start-nodes", "16", "--n-iter", "20", "--out", path(&out),
    ]);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.contains("fsa_nsa_k4_h3"));
    assert!(dir.path().join("grid.csv.cells.csv").exists());
}

#[test]
fn errors_exit_nonzero_with_message() {
    let out = nsa(&["train", "--csv", "/nonexistent.csv", "--label", "y"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/nonexistent.csv"), "{err}");

    let out = nsa(&["fsa-nsa", "--k", "2", "--p", "3", "--n", "100", "--features", "5", "--n-iter", "10"]);
    assert!(!out.status.success());

    let out = nsa(&["schedule", "--start-nodes", "4", "--nodes", "9"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
