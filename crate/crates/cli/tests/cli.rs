use std::path::Path;
use std::process::{Command, Output};

fn dradapt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dradapt"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn with_data() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = dradapt(dir.path(), &["generate", "--kind", "iid-gaussian", "--n", "60", "--d", "4", "--output", "x.csv"]);
    assert!(out.status.success());
    dir
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = with_data();
    let d = dir.path();
    assert_eq!(dradapt(d, &["--help"]).status.code(), Some(0));
    assert_eq!(dradapt(d, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(dradapt(d, &["complexity"]).status.code(), Some(1));
    assert_eq!(dradapt(d, &["complexity", "missing.csv"]).status.code(), Some(1));
    assert_eq!(dradapt(d, &["complexity", "x.csv", "--metric-that-is-not-a-flag"]).status.code(), Some(1));
    assert_eq!(dradapt(d, &["optimize", "x.csv", "--technique", "umap"]).status.code(), Some(1));
    std::fs::write(d.join("ragged.csv"), "1,2,3\n4,5\n6,7,8\n").unwrap();
    let out = dradapt(d, &["complexity", "ragged.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn complexity_report_is_tagged_and_clamps_k() {
    let dir = with_data();
    let v = json(&dradapt(dir.path(), &["complexity", "x.csv"]));
    assert_eq!(v["schema"], "dradapt/1");
    let out = dradapt(dir.path(), &["complexity", "x.csv", "--k", "10,100"]);
    let v = json(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("59"));
    assert_eq!(v.to_string().matches("\"k\":59").count(), 1, "{v}");
}

#[test]
fn timings_are_opt_in() {
    let dir = with_data();
    let args = ["optimize", "x.csv", "--technique", "isomap", "--budget", "4", "--n-init", "2"];
    let plain = String::from_utf8(dradapt(dir.path(), &args).stdout).unwrap();
    assert!(!plain.contains("wall_time"));
    let mut timed = args.to_vec();
    timed.push("--timings");
    let timed = String::from_utf8(dradapt(dir.path(), &timed).stdout).unwrap();
    assert!(timed.contains("wall_time"));
}

#[test]
fn config_file_fills_flags_and_command_line_wins() {
    let dir = with_data();
    let d = dir.path();
    std::fs::write(d.join("cfg.json"), r#"{"technique": "isomap", "budget": 5, "n_init": 2, "seed": 3}"#).unwrap();
    let from_cfg = json(&dradapt(d, &["--config", "cfg.json", "optimize", "x.csv"]));
    let explicit = json(&dradapt(d, &["optimize", "x.csv", "--technique", "isomap", "--budget", "5", "--n-init", "2", "--seed", "3"]));
    assert_eq!(from_cfg, explicit);
    let overridden = json(&dradapt(d, &["--config", "cfg.json", "optimize", "x.csv", "--budget", "3"]));
    assert_eq!(overridden.to_string().matches("\"index\"").count(), 3);
}

#[test]
fn csv_output_is_a_flat_table() {
    let dir = with_data();
    let out = dradapt(dir.path(), &["techniques", "--n", "60", "--csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let widths: Vec<usize> = text.lines().map(|l| l.split(',').count()).collect();
    assert!(widths.len() > 5);
    assert!(widths.iter().all(|&w| w == widths[0]));
}
