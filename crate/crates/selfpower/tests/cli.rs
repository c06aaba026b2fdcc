//! End-to-end tests of the selfpower binary: exit codes, file contracts,
//! and the wording of summaries that scripts are expected to grep.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn selfpower(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfpower"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn sweep_file(dir: &Path, lo: u64, hi: u64) -> String {
    let out = dir.join(format!("p{lo}-{hi}.jsonl"));
    let out_str = out.to_str().unwrap().to_owned();
    let result = selfpower(&[
        "sweep", "--from", &lo.to_string(), "--to", &hi.to_string(), "--workers", "2", "--out",
        &out_str,
    ]);
    assert_eq!(code(&result), 0, "sweep failed: {}", stderr(&result));
    out_str
}

#[test]
fn sweep_of_primeless_range_writes_header_and_exits_zero() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("empty.jsonl");
    let result = selfpower(&[
        "sweep", "--from", "14", "--to", "16", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0);
    assert!(stdout(&result).contains("swept 0 primes"));
    let contents = fs::read_to_string(&out).unwrap();
    assert_eq!(contents, "# selfpower profiles v1\n");
}

#[test]
fn sweep_requires_a_range() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("x.jsonl");
    let result = selfpower(&["sweep", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&result), 2);
    assert!(stderr(&result).contains("--preset"));

    // --from without --to is a clap-level usage error.
    let result = selfpower(&["sweep", "--from", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&result), 2);

    // preset conflicts with an explicit range.
    let result = selfpower(&[
        "sweep", "--preset", "six-digit", "--from", "5", "--to", "9", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 2);
}

#[test]
fn sweep_output_is_identical_across_worker_counts() {
    let dir = tempdir().unwrap();
    let mut bytes = Vec::new();
    for workers in ["1", "4"] {
        let out = dir.path().join(format!("w{workers}.jsonl"));
        let result = selfpower(&[
            "sweep", "--from", "500", "--to", "1500", "--workers", workers, "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&result), 0, "{}", stderr(&result));
        bytes.push(fs::read(&out).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    assert!(!bytes[0].is_empty());
}

#[test]
fn verify_passes_clean_sweep_and_flags_injected_corruption() {
    let dir = tempdir().unwrap();
    let clean = sweep_file(dir.path(), 2, 300);

    let result = selfpower(&["verify", "--in", &clean]);
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    let text = stdout(&result);
    assert!(text.contains("62 profiles"), "{text}");
    assert!(text.contains("0 violations"));

    // Set F_2 of p = 13 to 1, contradicting F_2 = 0.
    let contents = fs::read_to_string(&clean).unwrap();
    let corrupted = contents.replace("\"p\":13,\"factors\":[[2,2],[3,1]],\"counts\":[[1,1],[2,0]", "\"p\":13,\"factors\":[[2,2],[3,1]],\"counts\":[[1,1],[2,1]");
    assert_ne!(contents, corrupted, "fixture must actually change");
    let bad = dir.path().join("corrupted.jsonl");
    fs::write(&bad, corrupted).unwrap();

    let result = selfpower(&["verify", "--in", bad.to_str().unwrap()]);
    assert_eq!(code(&result), 1);
    let text = stdout(&result);
    assert!(text.contains("F2"), "{text}");
    assert!(text.contains("p = 13"), "{text}");
}

#[test]
fn verify_of_empty_file_reports_zero_profiles() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("empty.jsonl");
    fs::write(&path, "# selfpower profiles v1\n").unwrap();
    let result = selfpower(&["verify", "--in", path.to_str().unwrap()]);
    assert_eq!(code(&result), 0);
    assert!(stdout(&result).contains("0 profiles"));
}

#[test]
fn analyze_normality_on_empty_input_exits_two() {
    let dir = tempdir().unwrap();
    let input = sweep_file(dir.path(), 14, 16);
    let result = selfpower(&[
        "analyze", "normality", "--in", &input, "--out-dir",
        dir.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 2);
    assert!(stderr(&result).contains("error"));
}

#[test]
fn malformed_input_line_is_named() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    fs::write(
        &path,
        "# selfpower profiles v1\n{\"p\":5,\"factors\":[[2,2]],\"counts\":[[1,1],[2,0],[4,0]],\"ord2\":4,\"pmod8\":5}\ngarbage\n",
    )
    .unwrap();
    let result = selfpower(&[
        "analyze", "gof", "--in", path.to_str().unwrap(), "--out-dir",
        dir.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 2);
    assert!(stderr(&result).contains(":3:"), "{}", stderr(&result));
}

#[test]
fn gof_echoes_exclusions() {
    let dir = tempdir().unwrap();
    let input = sweep_file(dir.path(), 2, 1000);
    let out_dir = dir.path().join("r");
    let result = selfpower(&[
        "analyze", "gof", "--in", &input, "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0);
    let text = stdout(&result);
    assert!(text.contains("1, 2, p-1, (p-1)/2"), "{text}");
    assert!(!text.contains("plus orders"));

    let result = selfpower(&[
        "analyze", "gof", "--in", &input, "--out-dir", out_dir.to_str().unwrap(),
        "--exclude-special",
    ]);
    assert_eq!(code(&result), 0);
    assert!(stdout(&result).contains("plus orders 3, 4, 6"));

    let csv = fs::read_to_string(out_dir.join("gof.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("category,observed,expected"));
    assert_eq!(lines.clone().count(), 4, "categories 0, 1, 2, >2");
    assert!(lines.any(|l| l.starts_with(">2,")));
}

#[test]
fn window_report_has_log_order_column_and_accepts_all_sort_keys() {
    let dir = tempdir().unwrap();
    let input = sweep_file(dir.path(), 2, 500);
    let out_dir = dir.path().join("r");
    for key in ["order", "prime", "phi-over-d"] {
        let result = selfpower(&[
            "analyze", "window", "--in", &input, "--out-dir", out_dir.to_str().unwrap(),
            "--window", "30", "--step", "2", "--sort-key", key,
        ]);
        assert_eq!(code(&result), 0, "sort key {key}: {}", stderr(&result));
        assert!(stdout(&result).contains(&format!("sorted by {key}")));
    }
    let csv = fs::read_to_string(out_dir.join("windows.csv")).unwrap();
    assert!(csv.starts_with("window_index,max_order,log10_max_order,stat,pvalue\n"));
    let first_row = csv.lines().nth(1).unwrap();
    assert_eq!(first_row.split(',').count(), 5);
}

#[test]
fn small_and_large_order_tables_are_emitted() {
    let dir = tempdir().unwrap();
    let input = sweep_file(dir.path(), 2, 2000);
    let out_dir = dir.path().join("r");
    let result = selfpower(&[
        "analyze", "small-orders", "--in", &input, "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0);
    let text = stdout(&result);
    for model in ["small-3", "small-4", "small-6"] {
        assert!(text.contains(model), "{text}");
    }
    let csv = fs::read_to_string(out_dir.join("small_orders.csv")).unwrap();
    assert!(csv.starts_with(
        "d,primes,observed_0,observed_1,observed_2,expected_0,expected_1,expected_2,pvalue,low_sample\n"
    ));

    let result = selfpower(&[
        "analyze", "large-orders", "--in", &input, "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0);
    let text = stdout(&result);
    for model in ["third", "quarter-1mod8", "quarter-5mod8"] {
        assert!(text.contains(model), "{text}");
    }
    assert!(out_dir.join("large_orders.csv").exists());
}

#[test]
fn normality_reports_match_library_shape() {
    let dir = tempdir().unwrap();
    let input = sweep_file(dir.path(), 2, 1500);
    let out_dir = dir.path().join("r");
    let result = selfpower(&[
        "analyze", "normality", "--in", &input, "--out-dir", out_dir.to_str().unwrap(),
        "--bins", "0.5",
    ]);
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    let text = stdout(&result);
    assert!(text.contains("ryan-joiner"));
    let hist = fs::read_to_string(out_dir.join("histogram.csv")).unwrap();
    assert!(hist.starts_with("bin_lo,bin_hi,count\n"));
    // 16 interior bins of width 0.5 over [-4, 4) plus two overflow bins.
    assert_eq!(hist.lines().count(), 1 + 18);
    let plot = fs::read_to_string(out_dir.join("probability_plot.csv")).unwrap();
    let zs = fs::read_to_string(out_dir.join("zscores.csv")).unwrap();
    // One plot pair per z-record.
    assert_eq!(plot.lines().count(), zs.lines().count());
}

#[test]
fn oracle_check_reports_prime_count_and_enforces_budget() {
    let result = selfpower(&["oracle-check", "--max-p", "61"]);
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    let text = stdout(&result);
    assert!(text.contains("18 primes checked"), "{text}");

    let result = selfpower(&["oracle-check", "--max-p", "2"]);
    assert_eq!(code(&result), 0);
    assert!(stdout(&result).contains("1 primes checked"));

    let result = selfpower(&["oracle-check", "--max-p", "200000"]);
    assert_eq!(code(&result), 2);
    assert!(stderr(&result).contains("max_p"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let result = selfpower(&["frobnicate"]);
    assert_eq!(code(&result), 2);
}
