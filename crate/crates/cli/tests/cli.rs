use std::io::Write;
use std::process::{Command, Output, Stdio};

fn pdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdc")).args(args).output().unwrap()
}

fn pdc_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_pdc"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

const SIX: [&str; 4] = ["--rows", "3,3,3,3,3,3", "--cols", "3,3,3,3,3,3"];

#[test]
fn binary_count_of_six_by_six_margins_three() {
    let out = pdc(&[&["count", "--binary"][..], &SIX].concat());
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "297200");
}

#[test]
fn integer_count_with_evens() {
    let out = pdc(&["count", "--rows", "1,1", "--cols", "1,1", "--evens", "1,1"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "1");
}

#[test]
fn latin_output_is_reproducible_and_valid() {
    let args = ["sample-latin", "--n", "5", "--seed", "7", "--samples", "1"];
    let a = pdc(&args);
    let b = pdc(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let line = String::from_utf8(a.stdout.clone()).unwrap();
    assert_eq!(line.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["kind"], "latin");
    let check = pdc_stdin(&["validate"], &a.stdout);
    assert!(check.status.success(), "{}", String::from_utf8_lossy(&check.stderr));
}

#[test]
fn contingency_sample_of_six_by_six_instance_validates() {
    let out = pdc(&[
        "sample-ct",
        "--rows",
        "40,30,30,50,100,50",
        "--cols",
        "50,50,50,50,50,50",
        "--samples",
        "3",
        "--seed",
        "11",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(out.stdout.iter().filter(|&&b| b == b'\n').count(), 3);
    let check = pdc_stdin(&["validate"], &out.stdout);
    assert!(check.status.success());
}

#[test]
fn parallel_batch_does_not_depend_on_thread_count() {
    let args = ["sample-binary", "--rows", "2,2,2,2", "--cols", "2,2,2,2", "--samples", "300", "--seed", "9"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_pdc"))
            .args(args)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn tampered_record_fails_validation() {
    let out = pdc(&["sample-binary", "--rows", "1,1", "--cols", "1,1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    v["entries"][0][0] = serde_json::json!(2);
    let check = pdc_stdin(&["validate"], format!("{v}\n").as_bytes());
    assert_eq!(check.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(pdc(&["sample-ct", "--rows", "1,2", "--cols", "1,1"]).status.code(), Some(1));
    assert_eq!(pdc(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(pdc(&["--help"]).status.code(), Some(0));
    assert_eq!(pdc(&["sample-partition", "--n", "5", "--format", "csv"]).status.code(), Some(1));
    // Infeasible under the forced zeros: an input error, not a dead state.
    assert_eq!(
        pdc(&["sample-binary", "--rows", "1,1", "--cols", "1,1", "--zeros", "1,1;1,2"]).status.code(),
        Some(1)
    );
}

#[test]
fn dead_state_abort_exits_with_two() {
    // Order 16 under the abort policy meets a dead state within a few hundred samples.
    let mut saw_abort = false;
    for seed in 0..40 {
        let s = seed.to_string();
        let out = pdc(&["sample-latin", "--n", "16", "--policy", "abort", "--budget", "1", "--seed", &s, "--samples", "5"]);
        match out.status.code() {
            Some(0) => {}
            Some(2) => {
                saw_abort = true;
                break;
            }
            other => panic!("unexpected exit {other:?}"),
        }
    }
    assert!(saw_abort);
}

#[test]
fn uniformity_from_counts_and_from_samples() {
    let out = pdc(&["test-uniformity", "--counts", "60,40"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["statistic"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert_eq!(v["pass"], true);

    let samples = pdc(&["sample-binary", "--rows", "1,1", "--cols", "1,1", "--samples", "2000", "--seed", "3"]);
    let out = pdc_stdin(&["test-uniformity", "--outcomes", "2"], &samples.stdout);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["samples"], 2000);
}

#[test]
fn csv_and_diagnostics_outputs() {
    let dir = std::env::temp_dir().join(format!("pdc-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let diag = dir.join("diag.jsonl");
    let out = pdc(&[
        "sample-ct",
        "--rows",
        "2,2",
        "--cols",
        "2,2",
        "--samples",
        "2",
        "--format",
        "csv",
        "--diagnostics",
        diag.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let blocks: Vec<&str> = text.split("\n\n").collect();
    assert_eq!(blocks.len(), 2);
    for b in blocks {
        let rows: Vec<u64> = b.lines().map(|l| l.split(',').map(|x| x.parse::<u64>().unwrap()).sum()).collect();
        assert_eq!(rows, vec![2, 2]);
    }
    let d = std::fs::read_to_string(&diag).unwrap();
    assert_eq!(d.lines().count(), 2);
    let first: serde_json::Value = serde_json::from_str(d.lines().next().unwrap()).unwrap();
    assert!(first["bits_consumed"].is_u64());
    std::fs::remove_dir_all(dir).unwrap();
}
