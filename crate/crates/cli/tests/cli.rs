use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_urban-absa"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("PLACES_API_KEY").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_subcommands() {
    let o = run(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for cmd in ["ingest", "convert", "train", "eval", "infer", "analyze", "plot"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn unknown_flag_is_config_error() {
    assert_eq!(code(&run(&["convert", "--no-such-flag"])), 2);
}

#[test]
fn zero_rows_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["ingest", "--fixtures", s(dir.path()), "--rows", "0", "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn live_without_key_names_the_variable() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["ingest", "--live", "--out", s(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("PLACES_API_KEY"));
}

#[test]
fn ingest_three_places() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    assert_eq!(code(&run(&["synth", "--kind", "fixtures", "--places", "3", "--out", s(&fx)])), 0);
    let out = dir.path().join("data");
    let conf = fx.join("grid.conf");
    assert_eq!(code(&run(&["--config", s(&conf), "ingest", "--out", s(&out)])), 0);
    let reviews = std::fs::read_to_string(out.join("reviews.jsonl")).unwrap();
    assert!(reviews.lines().count() <= 15);
}

#[test]
fn explicit_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    assert_eq!(code(&run(&["synth", "--kind", "fixtures", "--places", "3", "--out", s(&fx)])), 0);
    let o = run(&["--config", s(&fx.join("grid.conf")), "ingest", "--rows", "0", "--out", s(&dir.path().join("d"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_apc_exit_4_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.apc");
    std::fs::write(&f, "a $T$ b\nx\nPositive\n\nno marker here\ny\nNegative\n").unwrap();
    let o = run(&["convert", "--input", s(&f)]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
}

#[test]
fn empty_file_converts_to_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let (i, o) = (dir.path().join("e.apc"), dir.path().join("e.atepc"));
    std::fs::write(&i, "").unwrap();
    assert_eq!(code(&run(&["convert", "--input", s(&i), "--output", s(&o)])), 0);
    assert_eq!(std::fs::read(&o).unwrap(), b"");
}

#[test]
fn missing_checkpoint_exit_5() {
    let o = run(&["infer", "--checkpoint", "/nonexistent/model.ckpt", "--input", "/dev/null"]);
    assert_eq!(code(&o), 5);
    let o = run(&["eval", "--checkpoint", "/nonexistent/model.ckpt", "--test", "/dev/null", "--format", "atepc"]);
    assert_eq!(code(&o), 5);
}

#[test]
fn echo_oracle_reports_all_ones() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.apc");
    assert_eq!(code(&run(&["synth", "--kind", "corpus", "--sentences", "40", "--out", s(&corpus)])), 0);
    let json = dir.path().join("r.json");
    let o = run(&["eval", "--echo-oracle", "--test", s(&corpus), "--json", s(&json)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let r = &v["echo-oracle"];
    for key in ["ate_precision", "ate_recall", "ate_f1", "apc_accuracy", "apc_f1_macro"] {
        assert_eq!(r[key], 1.0, "{key}");
    }
}

#[test]
fn train_infer_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.apc");
    assert_eq!(code(&run(&["--seed", "4", "synth", "--kind", "corpus", "--sentences", "80", "--out", s(&corpus)])), 0);
    let run_dir = dir.path().join("run");
    let o = run(&[
        "train", "--corpus", s(&corpus), "--out", s(&run_dir), "--epochs", "2", "--d-model", "8", "--n-heads", "2",
        "--n-layers", "1", "--d-ff", "8", "--max-len", "40",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let history: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("history.json")).unwrap()).unwrap();
    assert_eq!(history["epochs"].as_array().unwrap().len(), 2);

    let ckpt = run_dir.join("model.ckpt");
    let mut child = bin()
        .args(["infer", "--checkpoint", s(&ckpt)])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"the trail is great\n\nthe trash was awful\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(code(&out), 0);
    let lines: Vec<serde_json::Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["text"], "the trail is great");
    assert!(lines[0]["aspects"].is_array());

    let empty = bin().args(["infer", "--checkpoint", s(&ckpt)]).stdin(Stdio::null()).output().unwrap();
    assert_eq!(code(&empty), 0);
    assert!(empty.stdout.is_empty());

    let freq = dir.path().join("f.csv");
    std::fs::write(&freq, "polarity,aspect,count\nPositive,trail,3\nNegative,trash,2\n").unwrap();
    let plots = dir.path().join("plots");
    assert_eq!(code(&run(&["plot", "--frequency", s(&freq), "--out", s(&plots)])), 0);
    let svg = std::fs::read_to_string(plots.join("positive.svg")).unwrap();
    assert!(svg.contains("trail"));
}

#[test]
fn analyze_rejects_mismatched_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("p.jsonl");
    let reviews = dir.path().join("r.jsonl");
    std::fs::write(&preds, "{\"text\":\"a\",\"aspects\":[]}\n").unwrap();
    std::fs::write(&reviews, "").unwrap();
    let o = run(&["analyze", "--predictions", s(&preds), "--reviews", s(&reviews), "--out", s(dir.path())]);
    assert_eq!(code(&o), 2);
}
