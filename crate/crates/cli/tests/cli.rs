use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rppg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rppg"))
        .args(args)
        .env_remove("BENCH_WORKERS")
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn synth(out: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--out", out.to_str().unwrap(), "--n", "3", "--hr-min", "70", "--hr-max", "100"];
    args.extend_from_slice(extra);
    let o = rppg(&args);
    assert!(o.status.success(), "{}", text(&o));
}

#[test]
fn help_exits_zero() {
    let o = rppg(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let out = text(&o);
    for sub in ["synth", "extract", "estimate", "hr", "evaluate", "analyze-dataset", "report"] {
        assert!(out.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn unknown_flag_is_usage_error() {
    let o = rppg(&["evaluate", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("Usage"));
}

#[test]
fn missing_config_exits_one_with_path() {
    let o = rppg(&["evaluate", "--config", "/no/such/bench.yaml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("/no/such/bench.yaml"), "{}", text(&o));
}

#[test]
fn unknown_method_in_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.yaml");
    fs::write(&cfg, "dataset: data\nmethods: [POS, NOPE]\n").unwrap();
    let o = rppg(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("method"), "{}", text(&o));
}

#[test]
fn empty_dataset_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("data")).unwrap();
    let cfg = dir.path().join("bench.yaml");
    fs::write(&cfg, "dataset: data\nmethods: [POS]\n").unwrap();
    let o = rppg(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
}

#[test]
fn evaluate_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    synth(&dir.path().join("data"), &[]);
    let cfg = dir.path().join("bench.yaml");
    fs::write(
        &cfg,
        "fit:\n  test:\n    dataset: data\n    method: [POS, CHROM]\n    cal_type: FFT\n    metric: [MAE, RMSE, Pearson]\n    eval_time_length: [5, 10]\n    output_dir: out\n",
    )
    .unwrap();
    let o = rppg(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let out = dir.path().join("out");
    for f in ["report.json", "report.csv", "mae.svg", "rmse.svg", "pearson.svg"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 3);

    let again = dir.path().join("again");
    let o = rppg(&[
        "report",
        "--input",
        out.join("report.json").to_str().unwrap(),
        "--output",
        again.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert_eq!(fs::read_to_string(again.join("report.csv")).unwrap(), csv);
}

#[test]
fn truth_switch_uses_hr_label() {
    let dir = tempfile::tempdir().unwrap();
    synth(&dir.path().join("data"), &["--hr-offset", "5"]);
    let cfg = dir.path().join("bench.yaml");
    fs::write(&cfg, "dataset: data\nmethods: [POS]\neval_time_length: [10]\noutput_dir: out\n").unwrap();
    let o = rppg(&["evaluate", "--config", cfg.to_str().unwrap(), "--truth", "hr_label", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let csv = fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    let mae: f64 = csv
        .lines()
        .find(|l| l.starts_with("POS,10,MAE,"))
        .unwrap()
        .split(',')
        .nth(3)
        .unwrap()
        .parse()
        .unwrap();
    assert!((mae - 5.0).abs() < 1.0, "MAE {mae}");
}

#[test]
fn extract_estimate_and_hr() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    synth(&data, &["--frames", "6x6", "--noisy", "--duration", "20"]);
    let rec = fs::read_dir(&data).unwrap().next().unwrap().unwrap().path();
    let rec_s = rec.to_str().unwrap();

    let trace = dir.path().join("trace.csv");
    let o = rppg(&["extract", "--record", rec_s, "--out", trace.to_str().unwrap(), "--roi", "1,1,4,4"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert_eq!(fs::read_to_string(&trace).unwrap().lines().count(), 601);

    let bvp = dir.path().join("bvp.csv");
    let o = rppg(&["estimate", "--record", rec_s, "--method", "ssr", "--out", bvp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(fs::read_to_string(&bvp).unwrap().starts_with("t,bvp\n"));

    let o = rppg(&["hr", "--record", rec_s, "--method", "POS", "--window", "10", "--cal-type", "PEAK"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let series: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(series["entries"].as_array().unwrap().len(), 2);
    assert_eq!(series["method"], "PEAK");
}

#[test]
fn analyze_dataset_reports_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    synth(&data, &["--label-lag", "0.5"]);
    let out = dir.path().join("audit.json");
    let o = rppg(&["analyze-dataset", "--dataset", data.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
    assert_eq!(report["summary"]["n_records"], 3);
}

#[test]
fn estimate_on_missing_record_is_data_error() {
    let o = rppg(&["estimate", "--record", "/no/such/record", "--method", "POS"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
}
