//! Windowed evaluation of every configured method over a dataset.
//!
//! Records are processed in parallel; the reduction is ordered by subject,
//! record and window start, so reports are identical for any worker count.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BenchConfig, Split, TruthSource};
use crate::dataset::analyze::split_subjects;
use crate::dataset::io::{load_dataset, DatasetRecord, Layout};
use crate::error::{Error, Result};
use crate::hr::{estimate_hr, HrSeries, WindowSpec};
use crate::methods::{run_method, MethodConfig, MethodId, MethodInput};
use crate::metrics::{snr, MetricKind, MetricSet, SNR_BAND_BPM, SNR_MIN_SECONDS};
use crate::trace::BvpSignal;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "BENCH_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub toolkit_version: String,
    pub config_sha256: String,
    /// Wall-clock creation time (seconds since the Unix epoch). Excluded
    /// from determinism comparisons.
    pub generated_at_unix_s: u64,
    pub dataset_path: String,
    pub std_convention: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CellStatus {
    Ok,
    Failed { reason: String },
}

/// Aggregate over all windows of all evaluated records for one
/// (method, window length) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: MethodId,
    pub window_s: f64,
    #[serde(flatten)]
    pub status: CellStatus,
    pub metrics: MetricSet,
    pub n_records: usize,
}

/// One paired window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPair {
    pub subject_id: String,
    pub record: String,
    pub method: MethodId,
    pub window_s: f64,
    pub window_start_s: f64,
    pub pred_hr_bpm: Option<f64>,
    pub truth_hr_bpm: Option<f64>,
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFailure {
    pub record: String,
    pub method: Option<MethodId>,
    pub window_s: Option<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub split: Split,
    pub evaluated_subjects: Vec<String>,
    pub excluded_subjects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub provenance: Provenance,
    pub config: BenchConfig,
    pub split: SplitSummary,
    pub cells: Vec<Cell>,
    pub windows: Vec<WindowPair>,
    pub failures: Vec<RecordFailure>,
}

impl EvalReport {
    pub fn cell(&self, method: MethodId, window_s: f64) -> Option<&Cell> {
        self.cells.iter().find(|c| c.method == method && c.window_s == window_s)
    }

    /// Canonical JSON with the timestamp zeroed, for comparisons.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.provenance.generated_at_unix_s = 0;
        serde_json::to_string_pretty(&r).expect("report serializes")
    }
}

fn record_name(r: &DatasetRecord) -> String {
    r.path
        .file_name()
        .map_or_else(|| r.path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

struct RecordOutcome {
    pairs: Vec<WindowPair>,
    failures: Vec<RecordFailure>,
}

fn truth_series(rec: &DatasetRecord, cfg: &BenchConfig, window: WindowSpec) -> Result<TruthWindows> {
    match cfg.truth {
        TruthSource::PpgLabel => {
            let ppg = rec.ppg_label.as_ref().ok_or_else(|| Error::MissingLabel {
                subject_id: rec.subject_id.clone(),
                label: "ppg".into(),
            })?;
            Ok(TruthWindows::Derived(estimate_hr(ppg, window, cfg.band, cfg.cal_type)?))
        }
        TruthSource::HrLabel => {
            let hr = rec.hr_label.as_ref().ok_or_else(|| Error::MissingLabel {
                subject_id: rec.subject_id.clone(),
                label: "hr".into(),
            })?;
            Ok(TruthWindows::Label(hr.clone()))
        }
    }
}

enum TruthWindows {
    Derived(HrSeries),
    Label(HrSeries),
}

impl TruthWindows {
    fn at(&self, i: usize, start: f64, len: f64) -> Option<f64> {
        match self {
            TruthWindows::Derived(s) => s.entries.get(i).and_then(|e| e.hr_bpm),
            TruthWindows::Label(s) => s.mean_in(start, start + len),
        }
    }
}

fn window_snr(bvp: &BvpSignal, start_s: f64, len_s: f64, truth: f64) -> Option<f64> {
    if len_s < SNR_MIN_SECONDS || truth < SNR_BAND_BPM.0 || truth > SNR_BAND_BPM.1 {
        return None;
    }
    let a = (start_s * bvp.fs).round() as usize;
    let b = (a + (len_s * bvp.fs).round() as usize).min(bvp.len());
    let w = BvpSignal::new(bvp.samples[a..b].to_vec(), bvp.fs, bvp.method_tag.clone()).ok()?;
    snr(&w, truth, SNR_BAND_BPM).ok()
}

fn evaluate_record(rec: &DatasetRecord, cfg: &BenchConfig, mcfg: &MethodConfig) -> RecordOutcome {
    let name = record_name(rec);
    let mut out = RecordOutcome {
        pairs: Vec::new(),
        failures: Vec::new(),
    };
    let fail = |method: Option<MethodId>, window_s: Option<f64>, e: &Error| RecordFailure {
        record: name.clone(),
        method,
        window_s,
        reason: e.to_string(),
    };
    let want_snr = cfg.metrics.contains(&MetricKind::Snr);

    // Truth depends only on the record and window length.
    let truths: Vec<(f64, Result<TruthWindows>)> = cfg
        .eval_time_lengths_s
        .iter()
        .map(|&w| {
            let spec = WindowSpec {
                len_s: w,
                overlap_s: cfg.overlap_s,
            };
            (w, truth_series(rec, cfg, spec))
        })
        .collect();

    for &method in &cfg.methods {
        let input = match (&rec.frames, method.requires_frames()) {
            (Some(f), true) => MethodInput::Frames(f),
            _ => MethodInput::Trace(&rec.trace),
        };
        let bvp = match run_method(method, input, mcfg) {
            Ok(b) => b,
            Err(e) => {
                out.failures.push(fail(Some(method), None, &e));
                continue;
            }
        };
        for (w, truth) in &truths {
            let truth = match truth {
                Ok(t) => t,
                Err(e) => {
                    out.failures.push(fail(Some(method), Some(*w), e));
                    continue;
                }
            };
            let spec = WindowSpec {
                len_s: *w,
                overlap_s: cfg.overlap_s,
            };
            let pred = match estimate_hr(&bvp, spec, cfg.band, cfg.cal_type) {
                Ok(p) => p,
                Err(e) => {
                    out.failures.push(fail(Some(method), Some(*w), &e));
                    continue;
                }
            };
            for (i, e) in pred.entries.iter().enumerate() {
                let t = truth.at(i, e.window_start_s, e.window_len_s);
                let snr_db = match (want_snr, t) {
                    (true, Some(t)) => window_snr(&bvp, e.window_start_s, e.window_len_s, t),
                    _ => None,
                };
                out.pairs.push(WindowPair {
                    subject_id: rec.subject_id.clone(),
                    record: name.clone(),
                    method,
                    window_s: *w,
                    window_start_s: e.window_start_s,
                    pred_hr_bpm: e.hr_bpm,
                    truth_hr_bpm: t,
                    snr_db,
                });
            }
        }
    }
    out
}

fn keep_requested(mut m: MetricSet, kinds: &[MetricKind]) -> MetricSet {
    let want = |k| kinds.contains(&k);
    if !want(MetricKind::Mae) {
        m.mae_bpm = None;
    }
    if !want(MetricKind::Rmse) {
        m.rmse_bpm = None;
    }
    if !want(MetricKind::Mape) {
        m.mape_pct = None;
    }
    if !want(MetricKind::Pearson) {
        m.pearson_r = None;
    }
    if !want(MetricKind::Snr) {
        m.snr_db = None;
    }
    m
}

fn worker_count(cfg: &BenchConfig) -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::config(WORKERS_ENV, format!("`{v}` is not a positive integer"))),
        },
        Err(_) => Ok(cfg.workers),
    }
}

/// `SOURCE_DATE_EPOCH` when set, so reproducible builds of a report can pin
/// the timestamp; the wall clock otherwise.
fn generated_at() -> u64 {
    if let Some(v) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return v;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Runs the benchmark described by `cfg`.
pub fn evaluate(cfg: &BenchConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let workers = worker_count(cfg)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = workers {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::config("workers", e.to_string()))?
    };
    pool.install(|| evaluate_in_pool(cfg))
}

fn evaluate_in_pool(cfg: &BenchConfig) -> Result<EvalReport> {
    let loaded = load_dataset(&cfg.dataset_path, Layout::Auto)?;
    let mut failures = Vec::new();
    let mut records = Vec::new();
    for (path, r) in loaded {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(RecordFailure {
                record: path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
                method: None,
                window_s: None,
                reason: e.to_string(),
            }),
        }
    }

    let all_subjects: Vec<String> = records.iter().map(|r| r.subject_id.clone()).collect();
    let (evaluated, excluded) = match cfg.split {
        Split::All => {
            let s: BTreeSet<String> = all_subjects.iter().cloned().collect();
            (s.into_iter().collect(), Vec::new())
        }
        Split::SubjectHoldout { fraction, seed } => split_subjects(&all_subjects, fraction, seed)?,
    };
    let chosen: BTreeSet<&String> = evaluated.iter().collect();
    records.retain(|r| chosen.contains(&r.subject_id));
    records.sort_by(|a, b| a.subject_id.cmp(&b.subject_id).then_with(|| a.path.cmp(&b.path)));

    let mcfg = MethodConfig {
        band: cfg.band,
        ..cfg.method_config.clone()
    };
    let outcomes: Vec<RecordOutcome> = records.par_iter().map(|r| evaluate_record(r, cfg, &mcfg)).collect();

    let mut pairs = Vec::new();
    for o in outcomes {
        pairs.extend(o.pairs);
        failures.extend(o.failures);
    }
    pairs.sort_by(|a, b| {
        (&a.subject_id, &a.record)
            .cmp(&(&b.subject_id, &b.record))
            .then(a.method.cmp(&b.method))
            .then(a.window_s.total_cmp(&b.window_s))
            .then(a.window_start_s.total_cmp(&b.window_start_s))
    });

    let mut cells = Vec::new();
    for &method in &cfg.methods {
        for &w in &cfg.eval_time_lengths_s {
            let rows: Vec<&WindowPair> = pairs.iter().filter(|p| p.method == method && p.window_s == w).collect();
            let paired: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|p| p.pred_hr_bpm.zip(p.truth_hr_bpm))
                .collect();
            let snrs: Vec<f64> = rows.iter().filter_map(|p| p.snr_db).collect();
            let n_records = rows.iter().map(|p| &p.record).collect::<BTreeSet<_>>().len();
            let (pred, truth): (Vec<f64>, Vec<f64>) = paired.into_iter().unzip();
            let cell = if pred.is_empty() {
                let related: Vec<&str> = failures
                    .iter()
                    .filter(|f| f.method.is_none_or(|m| m == method) && f.window_s.is_none_or(|fw| fw == w))
                    .map(|f| f.reason.as_str())
                    .collect();
                let reason = match related.first() {
                    Some(r) => format!("no paired windows ({} record failures, first: {r})", related.len()),
                    None => "no paired windows".to_string(),
                };
                Cell {
                    method,
                    window_s: w,
                    status: CellStatus::Failed { reason },
                    metrics: MetricSet::default(),
                    n_records,
                }
            } else {
                Cell {
                    method,
                    window_s: w,
                    status: CellStatus::Ok,
                    metrics: keep_requested(MetricSet::compute(&pred, &truth, &snrs)?, &cfg.metrics),
                    n_records,
                }
            };
            cells.push(cell);
        }
    }
    failures.sort_by(|a, b| {
        a.record
            .cmp(&b.record)
            .then(a.method.cmp(&b.method))
            .then(a.window_s.unwrap_or(0.0).total_cmp(&b.window_s.unwrap_or(0.0)))
    });

    let generated_at_unix_s = generated_at();
    Ok(EvalReport {
        provenance: Provenance {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: cfg.digest(),
            generated_at_unix_s,
            dataset_path: cfg.dataset_path.display().to_string(),
            std_convention: "population (divide by N)".into(),
        },
        config: cfg.clone(),
        split: SplitSummary {
            split: cfg.split,
            evaluated_subjects: evaluated,
            excluded_subjects: excluded,
        },
        cells,
        windows: pairs,
        failures,
    })
}

