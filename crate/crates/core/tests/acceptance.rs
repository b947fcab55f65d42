//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Runs without the libtest harness so the lines
//! always reach stdout.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rppg_core::bench::{emit_report, evaluate, BenchConfig, ReportFormat};
use rppg_core::dataset::{analyze_dataset, check_alignment, load_dataset, load_record, Layout};
use rppg_core::error::Error;
use rppg_core::hr::hr_fft;
use rppg_core::methods::{run_method, MethodConfig, MethodId, MethodInput};
use rppg_core::metrics::{mae, mape, pearson, rmse, snr, SNR_BAND_BPM};
use rppg_core::preprocess::diff_normalize;
use rppg_core::signal::DEFAULT_BAND;
use rppg_core::synth::{
    generate_dataset, generate_frames, generate_record, generate_trace, suite, Drift, FrameSize, HrProfile, SynthSpec,
};
use rppg_core::BvpSignal;

const TRACE_METHODS: [MethodId; 7] = [
    MethodId::Green,
    MethodId::Ica,
    MethodId::Pca,
    MethodId::Chrom,
    MethodId::Pbv,
    MethodId::Pos,
    MethodId::Lgi,
];

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fmt_err(e: Error) -> String {
    e.to_string()
}

/// Per-window absolute errors of `bvp` against a constant true rate.
fn window_errors(bvp: &BvpSignal, window_s: f64, true_bpm: f64) -> Result<Vec<f64>, String> {
    let series = hr_fft(bvp, window_s, DEFAULT_BAND).map_err(fmt_err)?;
    series
        .values()
        .into_iter()
        .map(|v| v.map(|h| (h - true_bpm).abs()).ok_or_else(|| "window without estimate".to_string()))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn constant_bpm(spec: &SynthSpec) -> f64 {
    match spec.hr_bpm {
        HrProfile::Constant(b) => b,
        _ => unreachable!("suites use constant rates"),
    }
}

/// MAE per method over `specs` at `window_s`, against the generating rate.
fn suite_mae(specs: &[SynthSpec], methods: &[MethodId], window_s: f64) -> Result<Vec<f64>, String> {
    let cfg = MethodConfig::default();
    let mut errs = vec![Vec::new(); methods.len()];
    for spec in specs {
        let (trace, _) = generate_trace(spec).map_err(fmt_err)?;
        for (k, &m) in methods.iter().enumerate() {
            let bvp = run_method(m, MethodInput::Trace(&trace), &cfg).map_err(|e| format!("{m}: {e}"))?;
            errs[k].extend(window_errors(&bvp, window_s, constant_bpm(spec))?);
        }
    }
    Ok(errs.iter().map(|e| mean(e)).collect())
}

fn ssr_mae(specs: &[SynthSpec], window_s: f64) -> Result<f64, String> {
    let mut errs = Vec::new();
    for spec in specs {
        let (frames, _) = generate_frames(spec, 8, 8).map_err(fmt_err)?;
        let bvp = run_method(MethodId::Ssr, MethodInput::Frames(&frames), &MethodConfig::default()).map_err(fmt_err)?;
        errs.extend(window_errors(&bvp, window_s, constant_bpm(spec))?);
    }
    Ok(mean(&errs))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let specs = suite(20, (72.0, 120.0), 1000, false);
    let mut maes = suite_mae(&specs, &TRACE_METHODS, 10.0)?;
    maes.push(ssr_mae(&specs, 10.0)?);
    let elapsed = start.elapsed().as_secs_f64();
    let names = TRACE_METHODS.iter().chain([&MethodId::Ssr]);
    let detail = names
        .zip(&maes)
        .map(|(m, v)| format!("{m} {v:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    let worst = maes.iter().copied().fold(0.0, f64::max);
    check(
        worst < 1.5 && elapsed < 60.0,
        format!("MAE bpm: {detail}; max {worst:.3} < 1.5; runtime {elapsed:.1} s < 60 s"),
    )
}

fn criterion_2() -> Outcome {
    let specs = suite(20, (60.0, 120.0), 2000, true);
    let short = suite_mae(&specs, &TRACE_METHODS, 3.0)?;
    let long = suite_mae(&specs, &TRACE_METHODS, 10.0)?;
    let mut bad = Vec::new();
    let mut parts = Vec::new();
    for (k, m) in TRACE_METHODS.iter().enumerate() {
        parts.push(format!("{m} {:.2}->{:.2}", short[k], long[k]));
        if long[k] > short[k] {
            bad.push(m.to_string());
        }
    }
    let (s3, s10) = (ssr_mae(&specs, 3.0)?, ssr_mae(&specs, 10.0)?);
    parts.push(format!("SSR {s3:.2}->{s10:.2}"));
    if s10 > s3 {
        bad.push("SSR".into());
    }
    check(
        bad.is_empty(),
        format!("MAE 3 s -> 10 s: {}; violations: {bad:?}", parts.join(", ")),
    )
}

fn criterion_3() -> Outcome {
    let methods = [MethodId::Green, MethodId::Chrom, MethodId::Pos];
    let (mut chrom_wins, mut pos_wins) = (0, 0);
    for i in 0..20u64 {
        let base = SynthSpec::clean(72.0 + 2.0 * i as f64, 3000 + i);
        let spec = SynthSpec {
            illumination_drift: Drift {
                amplitude: 5.0 * base.pulse_amplitude,
                frequency_hz: 0.9,
            },
            ..base
        };
        let m = suite_mae(&[spec], &methods, 10.0)?;
        chrom_wins += usize::from(m[1] <= m[0]);
        pos_wins += usize::from(m[2] <= m[0]);
    }
    check(
        chrom_wins > 10 && pos_wins > 10,
        format!("seeds with MAE <= GREEN: CHROM {chrom_wins}/20, POS {pos_wins}/20 (majority needed)"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_gap = f64::INFINITY;
    let mut worst_affine: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..50);
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let t: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let gap = rmse(&p, &t).map_err(fmt_err)? - mae(&p, &t).map_err(fmt_err)?;
        worst_gap = worst_gap.min(gap);
        let a = rng.random_range(0.1..10.0);
        let b = rng.random_range(-50.0..50.0);
        let q: Vec<f64> = p.iter().map(|v| a * v + b).collect();
        let r0 = pearson(&p, &t).map_err(fmt_err)?;
        let r1 = pearson(&q, &t).map_err(fmt_err)?;
        worst_affine = worst_affine.max((r0 - r1).abs());
    }
    let hand = [
        mae(&[1.0, 2.0], &[2.0, 4.0]).map_err(fmt_err)? - 1.5,
        mae(&[3.0, 4.0], &[0.0, 0.0]).map_err(fmt_err)? - 3.5,
        rmse(&[3.0, 4.0], &[0.0, 0.0]).map_err(fmt_err)? - 12.5f64.sqrt(),
        mape(&[110.0], &[100.0]).map_err(fmt_err)? - 0.10,
        mape(&[72.0, 80.0], &[80.0, 80.0]).map_err(fmt_err)? - 0.05,
        mape(&[5.0, 6.0], &[5.0, 6.0]).map_err(fmt_err)?,
    ];
    let worst_hand = hand.iter().map(|d| d.abs()).fold(0.0, f64::max);
    check(
        worst_gap >= 0.0 && worst_affine <= 1e-12 && worst_hand <= 1e-9,
        format!(
            "min(rmse - mae) {worst_gap:.3e} >= 0; max affine |dr| {worst_affine:.1e} <= 1e-12; hand examples max err {worst_hand:.1e} <= 1e-9"
        ),
    )
}

fn criterion_5() -> Outcome {
    let (fs, n, hr) = (30.0, 900, 72.0);
    let tone = |bpm: f64| -> Vec<f64> { (0..n).map(|i| (2.0 * PI * bpm / 60.0 * i as f64 / fs).sin()).collect() };
    let pure = BvpSignal::new(tone(hr), fs, "test").map_err(fmt_err)?;
    let pure_db = snr(&pure, hr, SNR_BAND_BPM).map_err(fmt_err)?;
    let mixed: Vec<f64> = tone(hr).iter().zip(tone(200.0)).map(|(a, b)| a + b).collect();
    let mixed = BvpSignal::new(mixed, fs, "test").map_err(fmt_err)?;
    let mixed_db = snr(&mixed, hr, SNR_BAND_BPM).map_err(fmt_err)?;
    check(
        pure_db > 20.0 && mixed_db.abs() <= 1.0,
        format!("pure tone {pure_db:.1} dB > 20; equal-energy interferer {mixed_db:.3} dB within 0 +/- 1"),
    )
}

fn criterion_6() -> Outcome {
    let (trace, _) = generate_trace(&SynthSpec::noisy(84.0, 6000)).map_err(fmt_err)?;
    let cfg = MethodConfig::default();
    let mut worst: f64 = 0.0;
    for gain in [0.5, 2.0] {
        let scaled = trace.scaled(gain).map_err(fmt_err)?;
        for m in [MethodId::Chrom, MethodId::Pos] {
            let a = run_method(m, MethodInput::Trace(&trace), &cfg).map_err(fmt_err)?;
            let b = run_method(m, MethodInput::Trace(&scaled), &cfg).map_err(fmt_err)?;
            worst = worst.max((pearson(&a.samples, &b.samples).map_err(fmt_err)? - 1.0).abs());
        }
        let a = diff_normalize(&trace).map_err(fmt_err)?;
        let b = diff_normalize(&scaled).map_err(fmt_err)?;
        for c in 0..3 {
            worst = worst.max((pearson(&a.channels[c], &b.channels[c]).map_err(fmt_err)? - 1.0).abs());
        }
    }
    check(worst <= 1e-6, format!("DiffNorm/CHROM/POS at gain 0.5 and 2: max |r - 1| {worst:.1e} <= 1e-6"))
}

fn criterion_7(root: &Path) -> Outcome {
    let offset_root = root.join("offset");
    let specs: Vec<SynthSpec> = (0..5u64)
        .map(|i| SynthSpec {
            hr_label_offset_bpm: 5.0,
            ..SynthSpec::clean(70.0 + 8.0 * i as f64, 7000 + i)
        })
        .collect();
    generate_dataset(&specs, &offset_root, None).map_err(fmt_err)?;
    let loaded: Vec<_> = load_dataset(&offset_root, Layout::Auto)
        .map_err(fmt_err)?
        .into_iter()
        .map(|(p, r)| (p.display().to_string(), r))
        .collect();
    let report = analyze_dataset(&loaded).map_err(fmt_err)?;
    let discrepancy = report
        .summary
        .mean_label_vs_fft_bpm
        .ok_or("no discrepancy reported")?;

    let lag_spec = SynthSpec {
        label_lag_s: 0.5,
        hr_bpm: HrProfile::ramp(65.0, 95.0, 30.0),
        ..SynthSpec::clean(80.0, 7100)
    };
    let dir = generate_record(&lag_spec, &root.join("lag"), None).map_err(fmt_err)?;
    let rec = load_record(&dir, Layout::Auto).map_err(fmt_err)?;
    let lag = check_alignment(&rec).map_err(fmt_err)?.lag_s;
    let lag_frames = (lag - 0.5) * rec.trace.fs();
    check(
        (discrepancy - 5.0).abs() <= 0.5 && lag_frames.abs() <= 2.0,
        format!("+5 bpm offset -> mean discrepancy {discrepancy:.3} bpm (5 +/- 0.5); 0.5 s lag -> {lag:.3} s ({lag_frames:+.1} frames, within +/-2)"),
    )
}

fn read_outputs(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let p = e.map_err(|e| e.to_string())?.path();
            let bytes = fs::read(&p).map_err(|e| e.to_string())?;
            Ok((p.file_name().unwrap().to_string_lossy().into_owned(), bytes))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

/// Drops the timestamp line so report.json compares on content alone.
fn without_timestamp(bytes: &[u8]) -> Vec<u8> {
    String::from_utf8_lossy(bytes)
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"generated_at_unix_s\""))
        .collect::<Vec<_>>()
        .join("\n")
        .into_bytes()
}

fn criterion_8(root: &Path) -> Outcome {
    let data = root.join("data");
    generate_dataset(&suite(6, (65.0, 115.0), 8000, true), &data, None).map_err(fmt_err)?;
    let mut cfg = BenchConfig::new(&data, TRACE_METHODS.to_vec());
    cfg.metrics = rppg_core::MetricKind::ALL.to_vec();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let report = evaluate(&cfg).map_err(fmt_err)?;
        let out = root.join(format!("out{run}"));
        emit_report(&report, &out, &ReportFormat::ALL).map_err(fmt_err)?;
        outputs.push((report.canonical_json(), read_outputs(&out)?));
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    let mut differing = Vec::new();
    if a.0 != b.0 {
        differing.push("canonical JSON".to_string());
    }
    if a.1.len() != b.1.len() {
        differing.push("file list".into());
    }
    for ((na, ba), (_, bb)) in a.1.iter().zip(&b.1) {
        let same = if na == "report.json" {
            without_timestamp(ba) == without_timestamp(bb)
        } else {
            ba == bb
        };
        if !same {
            differing.push(na.clone());
        }
    }
    check(
        differing.is_empty(),
        format!("{} report files compared across two runs; differing: {differing:?}", a.1.len()),
    )
}

fn criterion_9(root: &Path) -> Outcome {
    let data = root.join("roundtrip");
    let specs: Vec<SynthSpec> = suite(4, (70.0, 110.0), 9000, true)
        .into_iter()
        .map(|s| SynthSpec {
            duration_s: 20.0,
            quantize_8bit: true,
            ..s
        })
        .collect();
    generate_dataset(&specs, &data, Some(FrameSize { height: 8, width: 8 })).map_err(fmt_err)?;
    let mut malformed = 0;
    for (_, r) in load_dataset(&data, Layout::Auto).map_err(fmt_err)? {
        if let Err(Error::MalformedFile { .. }) = r {
            malformed += 1;
        }
    }
    let mut cfg = BenchConfig::new(&data, rppg_core::MethodId::ALL.to_vec());
    cfg.eval_time_lengths_s = vec![10.0];
    let report = evaluate(&cfg).map_err(fmt_err)?;
    malformed += report.failures.iter().filter(|f| f.reason.contains("malformed")).count();
    let failed_cells = report
        .cells
        .iter()
        .filter(|c| c.status != rppg_core::bench::CellStatus::Ok)
        .count();

    // Unquantized frames pass through the 8-bit store.
    let float_spec = SynthSpec {
        duration_s: 5.0,
        ..SynthSpec::noisy(80.0, 9100)
    };
    let dir = generate_record(&float_spec, &root.join("float"), Some(FrameSize { height: 6, width: 5 })).map_err(fmt_err)?;
    let (orig, _) = generate_frames(&float_spec, 6, 5).map_err(fmt_err)?;
    let stored = load_record(&dir, Layout::RawFrames)
        .map_err(fmt_err)?
        .frames
        .ok_or("frames missing after reload")?;
    let worst = orig
        .data()
        .iter()
        .zip(stored.data())
        .map(|(a, b)| (a.clamp(0.0, 255.0) - b).abs())
        .fold(0.0, f64::max);
    check(
        malformed == 0 && failed_cells == 0 && worst <= 0.5,
        format!(
            "MalformedFile errors {malformed}; failed cells {failed_cells}/{}; max 8-bit round-trip error {worst:.3} LSB <= 0.5",
            report.cells.len()
        ),
    )
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();
    let criteria: Vec<Criterion> = vec![
        ("oracle recovery", Box::new(criterion_1)),
        ("window-length trend", Box::new(criterion_2)),
        ("illumination robustness", Box::new(criterion_3)),
        ("metric identities", Box::new(criterion_4)),
        ("SNR calibration", Box::new(criterion_5)),
        ("gain invariance", Box::new(criterion_6)),
        ("label-audit fidelity", Box::new(move || criterion_7(&root.join("c7")))),
        ("determinism", Box::new(move || criterion_8(&root.join("c8")))),
        ("round-trip", Box::new(move || criterion_9(&root.join("c9")))),
    ];
    let mut failed = 0;
    println!("\nacceptance suite");
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed\n", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
