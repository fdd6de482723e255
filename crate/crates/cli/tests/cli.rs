use std::path::Path;
use std::process::Command;

use apca_cli::{run_with, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
use apca_core::data::read_csv;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn apca(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("apca").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, recipe: &str, n: &str) {
    let r = apca(&["synth", "--recipe", recipe, "--n", n, "--p", "8", "--seed", "3", "--out", s(dir)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
}

fn fit_args<'a>(dir: &'a Path, inference: &'a str, out: &'a str) -> Vec<String> {
    [
        "fit", "--flavor", "supervised", "--inference", inference, "--mu", "10", "--components", "2",
        "--primary", s(&dir.join("primary.csv")), "--augmenting", s(&dir.join("augmenting.csv")),
        "--seed", "7", "--out", out,
    ]
    .iter()
    .map(|v| v.to_string())
    .collect()
}

fn apca_owned(args: &[String]) -> Outcome {
    apca(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn fit_then_transform_gives_samples_by_k() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "supervised", "60");
    let model = dir.path().join("m.apca");
    assert_eq!(apca_owned(&fit_args(dir.path(), "encoded", s(&model))).code, EXIT_OK);
    let scores = dir.path().join("S.csv");
    let r = apca(&["transform", "--model", s(&model), "--primary", s(&dir.path().join("primary.csv")), "--out", s(&scores)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(read_csv(&scores, false).unwrap().matrix.shape(), (60, 2));
}

#[test]
fn local_transform_without_augmenting_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "supervised", "40");
    let model = dir.path().join("m.apca");
    assert_eq!(apca_owned(&fit_args(dir.path(), "local", s(&model))).code, EXIT_OK);
    let r = apca(&["transform", "--model", s(&model), "--primary", s(&dir.path().join("primary.csv")), "--out", s(&dir.path().join("S.csv"))]);
    assert_eq!(r.code, EXIT_RUNTIME);
    assert!(r.stderr.contains("requires augmenting data"), "{}", r.stderr);

    let r = apca(&[
        "reconstruct", "--model", s(&model), "--primary", s(&dir.path().join("primary.csv")),
        "--augmenting", s(&dir.path().join("augmenting.csv")), "--out", s(&dir.path().join("R.csv")),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let table = read_csv(dir.path().join("R.csv"), true).unwrap();
    assert_eq!(table.matrix.shape(), (40, 10));
    assert_eq!(table.names.unwrap()[8], "y0");
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "supervised", "40");
    let mut args = fit_args(dir.path(), "local", "unused.apca");
    let pos = args.iter().position(|a| a == "10").unwrap();
    args[pos] = "-1".into();
    assert_eq!(apca_owned(&args).code, EXIT_USAGE);
    assert_eq!(apca(&["fit", "--bogus"]).code, EXIT_USAGE);
    assert_eq!(apca(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(apca(&[]).code, EXIT_USAGE);
    assert_eq!(apca(&["--help"]).code, EXIT_OK);
}

#[test]
fn missing_input_file_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = apca_owned(&fit_args(dir.path(), "local", "unused.apca"));
    assert_eq!(r.code, EXIT_RUNTIME);
    assert!(!r.stderr.is_empty());
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "supervised", "50");
    let (a, b) = (dir.path().join("a.apca"), dir.path().join("b.apca"));
    for (m, decomp) in [(&a, "exact"), (&b, "exact")] {
        let mut args = fit_args(dir.path(), "encoded", s(m));
        args.extend(["--decomp".into(), decomp.into()]);
        assert_eq!(apca_owned(&args).code, EXIT_OK);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let primary = dir.path().join("primary.csv");
    let outs: Vec<Vec<u8>> = ["s1.csv", "s2.csv"]
        .iter()
        .map(|name| {
            let path = dir.path().join(name);
            assert_eq!(apca(&["transform", "--model", s(&a), "--primary", s(&primary), "--out", s(&path)]).code, EXIT_OK);
            std::fs::read(path).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);

    let other = tempfile::tempdir().unwrap();
    synth(other.path(), "supervised", "50");
    for name in ["primary.csv", "augmenting.csv", "labels.csv"] {
        assert_eq!(std::fs::read(dir.path().join(name)).unwrap(), std::fs::read(other.path().join(name)).unwrap());
    }
}

#[test]
fn eval_output_parses_as_report() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "supervised", "80");
    let (x, y, labels) = (dir.path().join("primary.csv"), dir.path().join("augmenting.csv"), dir.path().join("labels.csv"));
    let args = [
        "eval", "--flavor", "supervised", "--inference", "encoded", "--components", "2",
        "--primary", s(&x), "--augmenting", s(&y),
        "--labels", s(&labels), "--mu-grid", "0,10,100", "--seed", "1",
    ];
    let r = apca(&args);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines.len(), 4);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(header[..3], ["mu", "train_acc", "test_acc"]);
    assert_eq!(header.len(), 3 + 2 * 2);
    assert_eq!(header[3], "r2_c0_t0");
    for (line, mu) in lines[1..].iter().zip([0.0, 10.0, 100.0]) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), header.len());
        assert_eq!(cells[0], mu);
        assert!(cells[1..].iter().all(|v| (0.0..=1.0).contains(v)));
    }
    assert_eq!(r.stdout, apca(&args).stdout);

    let mut bad = args.to_vec();
    let pos = bad.iter().position(|a| *a == "0,10,100").unwrap();
    bad[pos] = "10,0";
    assert_eq!(apca(&bad).code, EXIT_USAGE);
}

#[test]
fn top_loadings_lists_sorted_magnitudes() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "supervised", "60");
    let model = dir.path().join("m.apca");
    assert_eq!(apca_owned(&fit_args(dir.path(), "local", s(&model))).code, EXIT_OK);
    let r = apca(&["top-loadings", "--model", s(&model), "--component", "1", "--top", "3"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines[0], "feature,loading");
    assert_eq!(lines.len(), 4);
    let mags: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap().abs()).collect();
    assert!(mags.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(apca(&["top-loadings", "--model", s(&model), "--component", "5"]).code, EXIT_RUNTIME);
}

#[test]
fn corrupted_model_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "adversarial", "40");
    let model = dir.path().join("m.apca");
    assert_eq!(apca_owned(&fit_args(dir.path(), "encoded", s(&model))).code, EXIT_OK);
    let mut bytes = std::fs::read(&model).unwrap();
    bytes[40] ^= 0xFF;
    std::fs::write(&model, &bytes).unwrap();
    let r = apca(&["transform", "--model", s(&model), "--primary", s(&dir.path().join("primary.csv")), "--out", s(&dir.path().join("S.csv"))]);
    assert_eq!(r.code, EXIT_RUNTIME);
    assert!(r.stderr.to_lowercase().contains("checksum"), "{}", r.stderr);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_apca");
    let status = Command::new(bin).arg("--version").status().unwrap();
    assert_eq!(status.code(), Some(EXIT_OK));
    let output = Command::new(bin).args(["fit", "--nope"]).output().unwrap();
    assert_eq!(output.status.code(), Some(EXIT_USAGE));
    assert!(!output.stderr.is_empty());
}

#[test]
fn bench_prints_timing_table() {
    let r = apca(&["bench", "--p", "30,40", "--n", "50", "--seed", "1"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines[0], "p,n,q,exact_seconds,approx_seconds");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("30,50,1,"));
}
