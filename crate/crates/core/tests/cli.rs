use std::fs;
use std::process::{Command, Output};

use serde_json::Value as Json;

fn actcause(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_actcause"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Json {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn cause_names(report: &Json) -> Vec<Vec<String>> {
    let mut v: Vec<Vec<String>> = report["causes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| serde_json::from_value(c["cause"].clone()).unwrap())
        .collect();
    v.sort();
    v
}

#[test]
fn rock_throwing_two_causes() {
    let r = json(&actcause(&[
        "identify",
        "--builtin",
        "rock-throwing",
        "--beam",
        "3",
        "--seed",
        "1",
    ]));
    assert_eq!(
        cause_names(&r),
        vec![vec!["SH".to_string()], vec!["ST".to_string()]]
    );
    assert!(r.get("runtime_s").is_none());
}

#[test]
fn smk_showcase_six_causes_with_isi() {
    let r = json(&actcause(&[
        "identify",
        "--builtin",
        "smk:3",
        "--algorithm",
        "isi",
        "--beam",
        "-1",
        "--seed",
        "1",
    ]));
    assert_eq!(r["causes"].as_array().unwrap().len(), 6);
}

#[test]
fn missing_context_file_is_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let scm = dir.path().join("f.json");
    fs::write(&scm, json_of_builtin("rock-throwing")).unwrap();
    let out = actcause(&[
        "identify",
        "--scm",
        scm.to_str().unwrap(),
        "--context",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oversized_exact_instance_is_a_budget_error() {
    let out = actcause(&["exact", "--builtin", "smk:3", "--max-size", "35"]);
    assert_eq!(out.status.code(), Some(3));
}

fn json_of_builtin(name: &str) -> String {
    let out = actcause(&["gen", "--builtin", name]);
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn generated_model_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let out = actcause(&[
        "gen",
        "--builtin",
        "smk-nonboolean:2",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let loaded = actcause::Scm::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    let built = actcause::benchmarks::smk_nonboolean(2).unwrap();
    assert_eq!(loaded.to_json(), built.to_json());
}

#[test]
fn exact_matches_unlimited_beam() {
    let scm = actcause::benchmarks::smk_base(2);
    let ctx = &actcause::benchmarks::sample_contexts(&scm, 1, 4).unwrap()[0];
    let u = serde_json::to_string(&ctx.values().iter().map(|&x| x == 1).collect::<Vec<bool>>())
        .unwrap();
    let exact = json(&actcause(&[
        "exact",
        "--builtin",
        "smk:2",
        "--u",
        &u,
        "--max-size",
        "4",
    ]));
    let beam = json(&actcause(&[
        "identify",
        "--builtin",
        "smk:2",
        "--u",
        &u,
        "--beam",
        "-1",
        "--max-steps",
        "4",
        "--seed",
        "0",
    ]));
    assert_eq!(cause_names(&exact), cause_names(&beam));
}

#[test]
fn same_seed_same_bytes_and_omitted_seed_is_printed() {
    let args = [
        "identify",
        "--builtin",
        "smk-noisy:2",
        "--u",
        "[true,true,true,true,true,true,true,true,true,true,true,true]",
        "--beam",
        "4",
        "--stochastic",
        "lucb",
        "--seed",
        "17",
    ];
    let a = actcause(&args);
    let b = actcause(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);

    let c = actcause(&["identify", "--builtin", "rock-throwing"]);
    let stderr = String::from_utf8_lossy(&c.stderr);
    let seed: u64 = stderr
        .trim()
        .strip_prefix("seed: ")
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(json(&c)["options"]["seed"].as_u64(), Some(seed));
}

#[test]
fn bench_writes_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    fs::write(
        &grid,
        r#"{"attackers": [2], "beams": [1, 3], "contexts": 2, "reference_max_size": 3}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = actcause(&[
        "bench",
        grid.to_str().unwrap(),
        "-o",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let runs = fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    assert_eq!(
        runs.lines().next().unwrap(),
        "scm,k,algorithm,beam,stochastic_mode,samples,batch,seed,context_id,precision,recall,f1,missed,overshoot,runtime_s,oracle_calls,n_causes"
    );
    assert_eq!(runs.lines().count(), 5);
    for f in [
        "summary.csv",
        "f1_vs_beam.csv",
        "runtime_vs_beam.csv",
        "runtime_vs_k.csv",
    ] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn unknown_builtin_is_bad_input() {
    assert_eq!(
        actcause(&["gen", "--builtin", "smk:0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        actcause(&["identify", "--builtin", "nope"]).status.code(),
        Some(2)
    );
}
