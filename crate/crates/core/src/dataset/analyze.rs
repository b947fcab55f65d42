//! Label audit: video/label alignment, HR-label consistency and skin-tone
//! distribution over a dataset.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fitzpatrick::{classify_frames, classify_rgb, FitzpatrickResult};
use super::io::DatasetRecord;
use crate::error::{Error, Result};
use crate::hr::{label_discrepancy, DiscrepancyStats};
use crate::methods::{run_method, MethodConfig, MethodId, MethodInput};
use crate::signal::{bandpass, corr, mean, DEFAULT_BAND};

/// Search range for the label lag.
pub const MAX_LAG_S: f64 = 3.0;
/// Peak correlation below which an alignment is reported as unreliable.
pub const RELIABLE_CORRELATION: f64 = 0.3;
/// Window used for the HR-label consistency check.
pub const AUDIT_WINDOW_S: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    /// Positive when the label trails the video.
    pub lag_s: f64,
    pub peak_correlation: f64,
    pub reliable: bool,
}

/// Lag (in samples) maximizing the correlation of `a[i]` with `b[i + k]`
/// for `|k| <= max_lag`, with that correlation.
pub fn best_lag(a: &[f64], b: &[f64], max_lag: usize) -> (isize, f64) {
    let n = a.len().min(b.len());
    let max_lag = max_lag.min(n.saturating_sub(2)) as isize;
    let mut best = (0isize, f64::NEG_INFINITY);
    for k in -max_lag..=max_lag {
        let (sa, sb) = if k >= 0 {
            (&a[..n - k as usize], &b[k as usize..n])
        } else {
            (&a[(-k) as usize..n], &b[..n - (-k) as usize])
        };
        let r = corr(sa, sb);
        if r > best.1 {
            best = (k, r);
        }
    }
    best
}

/// Estimates the label lag by cross-correlating the POS pulse of the trace
/// with the PPG label, both band-passed.
pub fn check_alignment(record: &DatasetRecord) -> Result<AlignmentReport> {
    let label = record.ppg_label.as_ref().ok_or_else(|| Error::MissingLabel {
        subject_id: record.subject_id.clone(),
        label: "ppg".into(),
    })?;
    let pulse = run_method(MethodId::Pos, MethodInput::Trace(&record.trace), &MethodConfig::default())?;
    let fs = record.trace.fs();
    let reference = bandpass(&label.samples, fs, DEFAULT_BAND.0, DEFAULT_BAND.1)?;
    let (k, r) = best_lag(&pulse.samples, &reference, (MAX_LAG_S * fs).round() as usize);
    let r = if r.is_finite() { r } else { 0.0 };
    Ok(AlignmentReport {
        lag_s: k as f64 / fs,
        peak_correlation: r,
        reliable: r >= RELIABLE_CORRELATION,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerRow {
    pub record: String,
    pub subject_id: Option<String>,
    pub label_vs_fft: Option<DiscrepancyStats>,
    pub label_vs_peak: Option<DiscrepancyStats>,
    pub fft_vs_peak: Option<DiscrepancyStats>,
    pub alignment: Option<AlignmentReport>,
    pub fitzpatrick: Option<FitzpatrickResult>,
    /// Problems met while analysing this record.
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSummary {
    pub n_records: usize,
    pub n_flagged: usize,
    pub mean_label_vs_fft_bpm: Option<f64>,
    pub mean_label_vs_peak_bpm: Option<f64>,
    pub mean_abs_lag_s: Option<f64>,
    /// Count of records per skin type I..VI.
    pub fitzpatrick_histogram: [usize; 6],
    pub fitzpatrick_unknown: usize,
    pub skin_tone_method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerReport {
    pub rows: Vec<AnalyzerRow>,
    pub summary: AnalyzerSummary,
}

fn analyze_one(name: &str, rec: &Result<DatasetRecord>) -> AnalyzerRow {
    let mut row = AnalyzerRow {
        record: name.to_string(),
        subject_id: None,
        label_vs_fft: None,
        label_vs_peak: None,
        fft_vs_peak: None,
        alignment: None,
        fitzpatrick: None,
        flags: Vec::new(),
    };
    let rec = match rec {
        Ok(r) => r,
        Err(e) => {
            row.flags.push(format!("load: {e}"));
            return row;
        }
    };
    row.subject_id = Some(rec.subject_id.clone());

    match (&rec.ppg_label, &rec.hr_label) {
        (Some(ppg), Some(hr)) => match label_discrepancy(ppg, hr, AUDIT_WINDOW_S, DEFAULT_BAND) {
            Ok(d) => {
                row.label_vs_fft = d.label_vs_fft;
                row.label_vs_peak = d.label_vs_peak;
                row.fft_vs_peak = d.fft_vs_peak;
            }
            Err(e) => row.flags.push(format!("discrepancy: {e}")),
        },
        (None, _) => row.flags.push("discrepancy: no PPG label".into()),
        (_, None) => row.flags.push("discrepancy: no HR label".into()),
    }

    match check_alignment(rec) {
        Ok(a) => {
            if !a.reliable {
                row.flags.push(format!(
                    "alignment: UNRELIABLE (peak correlation {:.3})",
                    a.peak_correlation
                ));
            }
            row.alignment = Some(a);
        }
        Err(e) => row.flags.push(format!("alignment: {e}")),
    }

    let skin = match &rec.frames {
        Some(f) => classify_frames(f),
        None => {
            let s = rec.trace.samples();
            let m: [f64; 3] = std::array::from_fn(|c| s.iter().map(|p| p[c]).sum::<f64>() / s.len() as f64);
            classify_rgb(m)
        }
    };
    match skin {
        Ok(f) => row.fitzpatrick = Some(f),
        Err(e) => row.flags.push(format!("skin tone: {e}")),
    }
    row
}

/// Audits every record. Load and analysis failures become flagged rows;
/// only an empty input is an error.
pub fn analyze_dataset(records: &[(String, Result<DatasetRecord>)]) -> Result<AnalyzerReport> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows: Vec<AnalyzerRow> = records.par_iter().map(|(n, r)| analyze_one(n, r)).collect();

    let avg = |v: Vec<f64>| (!v.is_empty()).then(|| mean(&v));
    let mut hist = [0usize; 6];
    let mut unknown = 0;
    for r in &rows {
        match r.fitzpatrick {
            Some(f) => hist[f.skin_type as usize - 1] += 1,
            None => unknown += 1,
        }
    }
    let summary = AnalyzerSummary {
        n_records: rows.len(),
        n_flagged: rows.iter().filter(|r| !r.flags.is_empty()).count(),
        mean_label_vs_fft_bpm: avg(rows.iter().filter_map(|r| r.label_vs_fft.map(|d| d.mean)).collect()),
        mean_label_vs_peak_bpm: avg(rows.iter().filter_map(|r| r.label_vs_peak.map(|d| d.mean)).collect()),
        mean_abs_lag_s: avg(rows.iter().filter_map(|r| r.alignment.map(|a| a.lag_s.abs())).collect()),
        fitzpatrick_histogram: hist,
        fitzpatrick_unknown: unknown,
        skin_tone_method: "ITA bucketing (stand-in for a learned classifier)".into(),
    };
    Ok(AnalyzerReport { rows, summary })
}

/// Splits the distinct subject ids into a held-out share of `fraction`
/// (at least one subject when `fraction > 0`) and the rest, after a seeded
/// shuffle. Both halves come back sorted.
pub fn split_subjects(ids: &[String], fraction: f64, seed: u64) -> Result<(Vec<String>, Vec<String>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::config("split.fraction", format!("{fraction} is not in [0, 1]")));
    }
    let mut uniq: Vec<String> = ids.to_vec();
    uniq.sort();
    uniq.dedup();
    let mut shuffled = uniq.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut k = (fraction * uniq.len() as f64).round() as usize;
    if fraction > 0.0 && k == 0 && !uniq.is_empty() {
        k = 1;
    }
    let mut held: Vec<String> = shuffled[..k].to_vec();
    let mut rest: Vec<String> = shuffled[k..].to_vec();
    held.sort();
    rest.sort();
    Ok((held, rest))
}
