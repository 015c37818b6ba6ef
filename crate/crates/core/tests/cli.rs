mod common;

use std::path::PathBuf;
use std::process::{Command, Output};

use qafs::cli::{parse_and_validate, CliInvocation, EXIT_CONFIG, EXIT_DATA, EXIT_OK};

fn qafs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qafs"))
        .args(args)
        .output()
        .expect("run binary")
}

fn auto_file() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/imports-85.data")
}

const SMALL: &[&str] = &[
    "--samples",
    "40",
    "--features",
    "8",
    "--repeats",
    "2",
    "--shots",
    "20",
    "--sweeps",
    "50",
    "--bootstrap",
    "2",
];

#[test]
fn small_friedman_run_succeeds_in_every_format() {
    for format in ["md", "csv", "json"] {
        let mut args = vec!["bench", "friedman", "--output", format];
        args.extend_from_slice(SMALL);
        let out = qafs(&args);
        assert_eq!(
            out.status.code(),
            Some(EXIT_OK),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("QPCC-LR"), "{format}: {text}");
        assert!(text.contains("All-LR"), "{format}: {text}");
    }
}

#[test]
fn report_can_go_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let mut args = vec![
        "bench",
        "friedman",
        "--output",
        "json",
        "--out",
        path.to_str().unwrap(),
    ];
    args.extend_from_slice(SMALL);
    let out = qafs(&args);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(report["n_features"], 8);
}

#[test]
fn invalid_settings_exit_with_config_code() {
    for bad in [
        vec!["bench", "friedman", "--alpha", "-1"],
        vec!["bench", "friedman", "--lambda", "-5"],
        vec!["bench", "friedman", "--k", "0"],
        vec!["bench", "friedman", "--k", "51"],
        vec!["bench", "friedman", "--shots", "0"],
        vec!["bench", "friedman", "--metric", "cosine"],
        vec!["bench", "friedman", "--train-fraction", "1.5"],
        vec!["bench", "friedman", "--sampler", "remote"],
        vec!["bench", "friedman", "--no-such-flag"],
        vec!["bench"],
    ] {
        let out = qafs(&bad);
        assert_eq!(out.status.code(), Some(EXIT_CONFIG), "{bad:?}");
        assert!(!out.stderr.is_empty(), "{bad:?} printed no diagnostic");
    }
}

#[test]
fn malformed_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ \"alpha\": ").unwrap();
    let out = qafs(&["bench", "friedman", "--config", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, "{ \"alhpa\": 3 }").unwrap();
    let out = qafs(&["bench", "friedman", "--config", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));

    let missing = dir.path().join("absent.json");
    let out = qafs(&["bench", "friedman", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn missing_data_file_is_a_data_error() {
    let out = qafs(&["bench", "auto", "--data", "/nonexistent/imports-85.data"]);
    assert_eq!(out.status.code(), Some(EXIT_DATA));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("imports-85"), "{stderr}");
}

#[test]
fn auto_run_with_drop_policy() {
    let data = auto_file();
    let out = qafs(&[
        "bench",
        "auto",
        "--data",
        data.to_str().unwrap(),
        "--missing-policy",
        "drop",
        "--output",
        "json",
        "--repeats",
        "1",
        "--shots",
        "20",
        "--sweeps",
        "50",
        "--bootstrap",
        "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(EXIT_OK),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n_rows"], 159);
    assert_eq!(report["n_features"], 25);
}

#[test]
fn help_lists_every_flag() {
    let bench = String::from_utf8(qafs(&["bench", "friedman", "--help"]).stdout).unwrap();
    for flag in [
        "--samples",
        "--features",
        "--noise",
        "--config",
        "--metric",
        "--model",
        "--selector",
        "--alpha",
        "--lambda",
        "--k",
        "--sampler",
        "--shots",
        "--sweeps",
        "--endpoint",
        "--timeout-ms",
        "--fallback-to-sa",
        "--bootstrap",
        "--repeats",
        "--train-fraction",
        "--seed",
        "--output",
        "--out",
        "--greedy-fraction",
        "--rfe-k",
        "--gbr-trees",
        "--gbr-depth",
        "--gbr-learning-rate",
        "--gbr-min-leaf",
        "--timings",
    ] {
        assert!(bench.contains(flag), "bench friedman help lacks {flag}");
    }
    let auto = String::from_utf8(qafs(&["bench", "auto", "--help"]).stdout).unwrap();
    assert!(auto.contains("--data") && auto.contains("--missing-policy"));
    let solve = String::from_utf8(qafs(&["solve", "--help"]).stdout).unwrap();
    for flag in ["--qubo", "--sampler", "--endpoint", "--shots", "--seed"] {
        assert!(solve.contains(flag), "solve help lacks {flag}");
    }
}

#[test]
fn same_argv_and_config_resolve_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"qubo": {"alpha": 5.0}, "repeats": 2, "metrics": ["mi", "pcc"]}"#,
    )
    .unwrap();
    let argv = [
        "qafs",
        "bench",
        "friedman",
        "--config",
        cfg.to_str().unwrap(),
        "--k",
        "3",
    ];
    let a = parse_and_validate(argv).unwrap();
    let b = parse_and_validate(argv).unwrap();
    let (CliInvocation::Bench(a), CliInvocation::Bench(b)) = (a, b) else {
        panic!("expected bench invocations");
    };
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert_eq!(a.qubo.alpha, 5.0);
    assert_eq!(a.qubo.k, 3);
    assert_eq!(a.repeats, 2);
}

#[test]
fn solve_reads_wire_format_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    std::fs::write(
        &path,
        r#"{"linear": {"0": -10.8, "1": -10.5}, "quadratic": {"0,1": 20.3}, "num_reads": 10, "offset": 10.0}"#,
    )
    .unwrap();
    for sampler in ["exhaustive", "sa"] {
        let out = qafs(&[
            "solve",
            "--qubo",
            path.to_str().unwrap(),
            "--sampler",
            sampler,
            "--shots",
            "50",
        ]);
        assert_eq!(
            out.status.code(),
            Some(EXIT_OK),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("10"), "{text}");
        assert!(text.contains("-0.8"), "{text}");
    }
}

#[test]
fn solve_file_may_omit_num_reads() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    std::fs::write(
        &path,
        r#"{"linear": {"0": -1.0, "1": -0.5}, "quadratic": {"0,1": 2.0}}"#,
    )
    .unwrap();
    let out = qafs(&[
        "solve",
        "--qubo",
        path.to_str().unwrap(),
        "--sampler",
        "exhaustive",
    ]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("mask: 10\n"), "{text}");
    assert!(text.contains("energy: -1\n"), "{text}");
}

#[test]
fn solve_through_remote_stub() {
    let stub = common::spawn(common::StubMode::Honest);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    std::fs::write(
        &path,
        r#"{"linear": {"0": -10.8, "1": -10.5}, "quadratic": {"0,1": 20.3}, "num_reads": 10, "offset": 10.0}"#,
    )
    .unwrap();
    let out = qafs(&[
        "solve",
        "--qubo",
        path.to_str().unwrap(),
        "--sampler",
        "remote",
        "--endpoint",
        &stub.url,
    ]);
    assert_eq!(
        out.status.code(),
        Some(EXIT_OK),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8(out.stdout).unwrap().contains("-0.8"));
}
