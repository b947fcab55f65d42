//! `rppg`: synthetic data, pulse extraction, heart-rate estimation and the
//! benchmark harness from the command line.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 data error,
//! 3 internal error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rppg_core::bench::config::TruthSource;
use rppg_core::bench::{emit_report, evaluate, load_report, BenchConfig, CellStatus, ReportFormat};
use rppg_core::dataset::io::{write_trace_csv, TRACE_FILE};
use rppg_core::dataset::{analyze_dataset, load_dataset, load_record, DatasetRecord, Layout};
use rppg_core::hr::{estimate_hr, WindowSpec};
use rppg_core::methods::{run_method, MethodConfig, MethodInput};
use rppg_core::preprocess::spatial_mean;
use rppg_core::synth::{generate_dataset, suite, FrameSize, SynthSpec};
use rppg_core::{Error, HrMethod, MethodId, Roi};

#[derive(Parser)]
#[command(name = "rppg", version, about = "Classical rPPG toolkit and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with known ground truth.
    Synth(SynthArgs),
    /// Reduce a record's raw frames to an RGB trace.
    Extract(ExtractArgs),
    /// Extract a BVP signal from a record with one method.
    Estimate(EstimateArgs),
    /// Estimate windowed heart rate from a record.
    Hr(HrArgs),
    /// Run the benchmark described by a config file.
    Evaluate(EvaluateArgs),
    /// Audit a dataset's labels, alignment and skin-tone distribution.
    AnalyzeDataset(AnalyzeArgs),
    /// Re-render report files from a saved report.json.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory; one sub-directory per record.
    #[arg(long)]
    out: PathBuf,
    /// Number of records.
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 60.0)]
    hr_min: f64,
    #[arg(long, default_value_t = 120.0)]
    hr_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add sensor noise, motion and illumination drift.
    #[arg(long)]
    noisy: bool,
    #[arg(long, default_value_t = 30.0)]
    duration: f64,
    #[arg(long, default_value_t = 30.0)]
    fs: f64,
    /// Also write raw frames of this size, e.g. `8x8`.
    #[arg(long, value_parser = parse_size)]
    frames: Option<FrameSize>,
    /// Round trace values to 8-bit integers.
    #[arg(long)]
    quantize: bool,
    /// Label sampling rate (defaults to the video rate).
    #[arg(long)]
    label_fs: Option<f64>,
    /// Delay the labels by this many seconds.
    #[arg(long, default_value_t = 0.0)]
    label_lag: f64,
    /// Add a constant error to the HR label.
    #[arg(long, default_value_t = 0.0)]
    hr_offset: f64,
}

#[derive(Args)]
struct ExtractArgs {
    /// Record directory containing frames.raw and frames.json.
    #[arg(long)]
    record: PathBuf,
    /// Output CSV (defaults to the record's trace.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Region of interest as `x,y,width,height`.
    #[arg(long, value_parser = parse_roi)]
    roi: Option<Roi>,
}

#[derive(Args)]
struct MethodArgs {
    #[arg(long)]
    record: PathBuf,
    #[arg(long)]
    method: MethodId,
    /// Benchmark config whose `method_config` and `band` apply.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    method: MethodArgs,
    /// Output CSV with columns `t,bvp` (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HrArgs {
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long, default_value_t = 10.0)]
    window: f64,
    #[arg(long, default_value_t = 0.0)]
    overlap: f64,
    /// FFT or PEAK.
    #[arg(long, default_value = "FFT")]
    cal_type: HrMethod,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Ground truth: ppg_label (default) or hr_label.
    #[arg(long)]
    truth: Option<TruthSource>,
    /// Output directory (overrides the config).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Comma-separated subset of json,csv,svg.
    #[arg(long, value_delimiter = ',', default_values_t = ReportFormat::ALL.map(FormatArg))]
    format: Vec<FormatArg>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Write the full report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// A report.json written by `evaluate`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = ReportFormat::ALL.map(FormatArg))]
    format: Vec<FormatArg>,
}

#[derive(Clone, Copy)]
struct FormatArg(ReportFormat);

impl std::str::FromStr for FormatArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse().map(FormatArg)
    }
}

impl std::fmt::Display for FormatArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self.0 {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Svg => "svg",
        })
    }
}

fn parse_size(s: &str) -> Result<FrameSize, String> {
    let (h, w) = s.split_once(['x', 'X']).ok_or("expected HEIGHTxWIDTH")?;
    Ok(FrameSize {
        height: h.trim().parse().map_err(|_| format!("bad height `{h}`"))?,
        width: w.trim().parse().map_err(|_| format!("bad width `{w}`"))?,
    })
}

fn parse_roi(s: &str) -> Result<Roi, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("bad roi component `{p}`")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, width, height] => Ok(Roi { x, y, width, height }),
        _ => Err("expected x,y,width,height".into()),
    }
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ConfigInvalid { .. } | Error::InvalidSpec(_) | Error::InvalidBand { .. } => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<(), Failure>;

fn load_config(path: &Path) -> Result<BenchConfig, Failure> {
    BenchConfig::from_file(path).map_err(|e| Failure::config(format!("config {}: {e}", path.display())))
}

fn method_config(config: Option<&Path>) -> Result<MethodConfig, Failure> {
    Ok(match config {
        Some(p) => {
            let c = load_config(p)?;
            MethodConfig {
                band: c.band,
                ..c.method_config
            }
        }
        None => MethodConfig::default(),
    })
}

fn run_synth(a: SynthArgs) -> CliResult {
    if a.n == 0 {
        return Err(Failure::config("--n must be at least 1"));
    }
    let specs: Vec<SynthSpec> = suite(a.n, (a.hr_min, a.hr_max), a.seed, a.noisy)
        .into_iter()
        .map(|s| SynthSpec {
            duration_s: a.duration,
            fs: a.fs,
            quantize_8bit: a.quantize,
            label_fs: a.label_fs,
            label_lag_s: a.label_lag,
            hr_label_offset_bpm: a.hr_offset,
            ..s
        })
        .collect();
    let dirs = generate_dataset(&specs, &a.out, a.frames)?;
    println!("wrote {} records to {}", dirs.len(), a.out.display());
    Ok(())
}

fn run_extract(a: ExtractArgs) -> CliResult {
    let rec = load_record(&a.record, Layout::RawFrames)?;
    let mut frames = rec.frames.expect("raw-frame layout loads frames");
    if let Some(roi) = a.roi {
        frames = frames.with_roi(roi)?;
    }
    let trace = spatial_mean(&frames)?;
    let out = a.out.unwrap_or_else(|| a.record.join(TRACE_FILE));
    write_trace_csv(&out, &trace)?;
    println!("wrote {} samples to {}", trace.len(), out.display());
    Ok(())
}

fn run_on_record(a: &MethodArgs) -> Result<(DatasetRecord, rppg_core::BvpSignal), Failure> {
    let cfg = method_config(a.config.as_deref())?;
    let rec = load_record(&a.record, Layout::Auto)?;
    let input = match (&rec.frames, a.method.requires_frames()) {
        (Some(f), true) => MethodInput::Frames(f),
        _ => MethodInput::Trace(&rec.trace),
    };
    let bvp = run_method(a.method, input, &cfg)?;
    Ok((rec, bvp))
}

fn run_estimate(a: EstimateArgs) -> CliResult {
    let (rec, bvp) = run_on_record(&a.method)?;
    let mut csv = String::from("t,bvp\n");
    for (t, v) in rec.trace.times().iter().zip(&bvp.samples) {
        let _ = writeln!(csv, "{t},{v}");
    }
    match a.out {
        Some(p) => {
            fs::write(&p, csv).map_err(|e| Failure {
                code: 2,
                message: format!("cannot write {}: {e}", p.display()),
            })?;
            println!("wrote {} samples to {}", bvp.len(), p.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn run_hr(a: HrArgs) -> CliResult {
    if a.cal_type == HrMethod::Label {
        return Err(Failure::config("--cal-type must be FFT or PEAK"));
    }
    let (_, bvp) = run_on_record(&a.method)?;
    let band = method_config(a.method.config.as_deref())?.band;
    let window = WindowSpec {
        len_s: a.window,
        overlap_s: a.overlap,
    };
    let series = estimate_hr(&bvp, window, band, a.cal_type)?;
    println!("{}", serde_json::to_string_pretty(&series).expect("series serializes"));
    Ok(())
}

fn formats(f: &[FormatArg]) -> Vec<ReportFormat> {
    f.iter().map(|f| f.0).collect()
}

fn run_evaluate(a: EvaluateArgs) -> CliResult {
    let mut cfg = load_config(&a.config)?;
    if let Some(t) = a.truth {
        cfg.truth = t;
    }
    if let Some(o) = a.output {
        cfg.output_dir = o;
    }
    for key in &cfg.ignored_keys {
        eprintln!("note: config key `{key}` has no effect here");
    }
    let report = evaluate(&cfg)?;
    let files = emit_report(&report, &cfg.output_dir, &formats(&a.format))?;
    for c in &report.cells {
        match &c.status {
            CellStatus::Ok => println!(
                "{:<6} {:>5}s  MAE {}  RMSE {}  r {}  ({} windows)",
                c.method,
                c.window_s,
                opt(c.metrics.mae_bpm),
                opt(c.metrics.rmse_bpm),
                opt(c.metrics.pearson_r),
                c.metrics.n_windows
            ),
            CellStatus::Failed { reason } => println!("{:<6} {:>5}s  FAILED: {reason}", c.method, c.window_s),
        }
    }
    for f in &report.failures {
        eprintln!("record {}: {}", f.record, f.reason);
    }
    println!("wrote {} files to {}", files.len(), cfg.output_dir.display());
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

fn run_analyze(a: AnalyzeArgs) -> CliResult {
    let loaded: Vec<_> = load_dataset(&a.dataset, Layout::Auto)?
        .into_iter()
        .map(|(p, r)| {
            let name = p.strip_prefix(&a.dataset).unwrap_or(&p).display().to_string();
            (if name.is_empty() { ".".into() } else { name }, r)
        })
        .collect();
    let report = analyze_dataset(&loaded)?;
    for row in &report.rows {
        let lag = row.alignment.map_or("-".into(), |al| format!("{:+.3}s", al.lag_s));
        let fitz = row.fitzpatrick.map_or("-".into(), |f| format!("type {}", f.skin_type));
        let d = row.label_vs_fft.map_or("-".into(), |d| format!("{:.2}", d.mean));
        println!("{:<24} label-vs-fft {d:>7} bpm  lag {lag:>8}  {fitz}", row.record);
        for f in &row.flags {
            println!("    flag: {f}");
        }
    }
    let s = &report.summary;
    println!(
        "{} records, {} flagged; Fitzpatrick I-VI {:?}, unknown {}",
        s.n_records, s.n_flagged, s.fitzpatrick_histogram, s.fitzpatrick_unknown
    );
    if let Some(p) = a.out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        fs::write(&p, json + "\n").map_err(|e| Failure {
            code: 2,
            message: format!("cannot write {}: {e}", p.display()),
        })?;
    }
    Ok(())
}

fn run_report(a: ReportArgs) -> CliResult {
    let report = load_report(&a.input)?;
    let files = emit_report(&report, &a.output, &formats(&a.format))?;
    println!("wrote {} files to {}", files.len(), a.output.display());
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Synth(a) => run_synth(a),
        Command::Extract(a) => run_extract(a),
        Command::Estimate(a) => run_estimate(a),
        Command::Hr(a) => run_hr(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::AnalyzeDataset(a) => run_analyze(a),
        Command::Report(a) => run_report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}
