//! Golden-file tests for every subcommand. Set `UPDATE_GOLDEN=1` to rewrite the expected files.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclestat"))
        .args(args)
        .current_dir(dir())
        .output()
        .expect("binary runs")
}

fn golden(name: &str, args: &[&str]) {
    let out = run(args);
    assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    let path = dir().join("golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, &out.stdout).unwrap();
    }
    let expected = fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&expected), "{name}");
}

#[test]
fn count_words() {
    golden("count_words.txt", &["count-words", "--rank", "2", "--length", "10"]);
    golden("count_words.json", &["count-words", "--rank", "3", "--length", "6", "--verify", "--format", "json"]);
}

#[test]
fn homology_table() {
    golden("homology_table.csv", &["homology-table", "--rank", "2", "--length", "2", "--format", "csv"]);
    golden(
        "homology_table_enumerated.csv",
        &["homology-table", "--rank", "2", "--length", "2", "--method", "enumerate", "--format", "csv"],
    );
}

#[test]
fn modp() {
    golden("modp.json", &["modp", "--rank", "2", "--length", "8", "--prime", "3"]);
    golden("modp_characters.csv", &["modp", "--rank", "2", "--length", "8", "--prime", "3", "--method", "characters", "--format", "csv"]);
}

#[test]
fn bias() {
    golden("bias.json", &["bias", "--rank", "3", "--length", "30", "--prime", "5"]);
}

#[test]
fn limit_dist() {
    golden("limit_dist.json", &["limit-dist", "--rank", "2", "--length", "8"]);
    golden("limit_dist_plot.csv", &["limit-dist", "--rank", "2", "--length", "8", "--plot", "--format", "csv"]);
}

#[test]
fn walk_variance() {
    golden("walk_variance.json", &["walk-variance", "--graph", "builtin:k3", "--function", "1,0,0", "--length", "10"]);
    golden("walk_variance_file.csv", &["walk-variance", "--graph", "data/k4.json", "--function", "2,-1,0,1", "--format", "csv"]);
}

#[test]
fn backtrackless() {
    golden("backtrackless_gradient.json", &["backtrackless", "--graph", "builtin:k4", "--gradient-of", "1,2,0,-1", "--length", "6"]);
    golden("backtrackless_lift.csv", &["backtrackless", "--graph", "builtin:petersen", "--lift-of", "1,0,0,0,0,0,0,0,0,0", "--length", "8", "--format", "csv"]);
}

#[test]
fn group_walk() {
    golden("group_walk.json", &["group-walk", "--graph", "builtin:k4", "--group", "s3", "--labels", "2,3,0,0", "--length", "8"]);
    golden("group_walk_range.csv", &["group-walk", "--graph", "builtin:k4", "--group", "data/z3.json", "--labels", "1,0,0,2", "--length", "5..12", "--format", "csv"]);
}

#[test]
fn zeta() {
    golden("zeta_k4.json", &["zeta", "--graph", "data/k4.json", "--order", "8"]);
    golden("zeta_g2.csv", &["zeta", "--graph", "builtin:g2", "--order", "6", "--format", "csv"]);
}

#[test]
fn conjugacy() {
    golden("conjugacy.csv", &["conjugacy", "--rank", "2", "--max-length", "12", "--format", "csv"]);
    golden("conjugacy_series.json", &["conjugacy", "--rank", "2", "--max-length", "8", "--series", "h"]);
}

#[test]
fn entropy() {
    golden("entropy_weights.csv", &["entropy", "--graph", "builtin:k4", "--weights", "1,2,1,2", "--format", "csv"]);
    golden("entropy_minimize.csv", &["entropy", "--matrix", "0,1,2;0,2,1;2,0,0", "--format", "csv"]);
}

#[test]
fn perturb_check() {
    golden("perturb_check.csv", &["perturb-check", "--graph", "builtin:k3", "--function", "1,-1,0", "--format", "csv"]);
}

#[test]
fn output_file_matches_stdout() {
    let tmp = std::env::temp_dir().join(format!("cyclestat-out-{}.csv", std::process::id()));
    let args = ["conjugacy", "--rank", "3", "--max-length", "6", "--format", "csv"];
    let out = run(&args);
    let mut with_file: Vec<&str> = args.to_vec();
    let p = tmp.to_str().unwrap().to_string();
    with_file.extend(["--output", &p]);
    let quiet = run(&with_file);
    assert!(quiet.status.success() && quiet.stdout.is_empty());
    assert_eq!(fs::read(&tmp).unwrap(), out.stdout);
    let _ = fs::remove_file(tmp);
}

#[test]
fn thread_count_does_not_change_output() {
    let base = ["walk-variance", "--graph", "builtin:petersen", "--function", "1,-2,0,3,1,0,2,-1,0,1", "--length", "20"];
    let one: Vec<&str> = base.iter().copied().chain(["--threads", "1"]).collect();
    let four: Vec<&str> = base.iter().copied().chain(["--threads", "4"]).collect();
    assert_eq!(run(&one).stdout, run(&four).stdout);
    assert_eq!(run(&base).stdout, run(&base).stdout);
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| run(args).status.code();
    assert_eq!(code(&["count-words", "--rank", "2", "--length", "3", "--nope"]), Some(2));
    assert_eq!(code(&["no-such-command"]), Some(2));
    assert_eq!(code(&["count-words", "--rank", "1", "--length", "3"]), Some(2));
    assert_eq!(code(&["modp", "--rank", "2", "--length", "3", "--prime", "4"]), Some(2));
    assert_eq!(code(&["walk-variance", "--graph", "builtin:cycle:4", "--function", "1,0,0,0"]), Some(3));
    assert_eq!(code(&["backtrackless", "--graph", "builtin:cycle:6", "--lift-of", "1,0,0,0,0,0", "--length", "4"]), Some(3));
    assert_eq!(code(&["walk-variance", "--graph", "builtin:k3", "--function", "1,0"]), Some(2));
    assert_eq!(code(&["zeta", "--graph", "builtin:nonsense"]), Some(2));
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn big_counts_are_strings() {
    let out = run(&["count-words", "--rank", "5", "--length", "40", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["count"].as_str().unwrap(), "147808829414345923316083210206383297610");
}

#[test]
fn hypotheses_in_metadata() {
    let out = run(&["zeta", "--graph", "builtin:petersen", "--order", "5"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["hypotheses"]["connected"], true);
    assert_eq!(v["hypotheses"]["bipartite"], false);
    assert_eq!(v["census_match"], true);
}
