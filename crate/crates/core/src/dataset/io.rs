//! On-disk record layout.
//!
//! A record is a directory holding
//! - `meta.json`: `{subject_id, fs_video, fs_label, notes}`
//! - `trace.csv`: header `t,r,g,b`, one row per frame
//! - `label.csv` (optional): header `t` plus `ppg` and/or `hr`
//! - `frames.raw` + `frames.json` (optional): 8-bit planar frames, each
//!   frame stored as three row-major channel planes (R, G, B), with sidecar
//!   `{height, width, channels: 3, fps, count}`.
//!
//! Floats are written in shortest round-trip form, so trace CSVs reload
//! bit-exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hr::{HrEntry, HrMethod, HrSeries};
use crate::preprocess::spatial_mean;
use crate::trace::{BvpSignal, FrameSequence, RgbTrace};

pub const META_FILE: &str = "meta.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const LABEL_FILE: &str = "label.csv";
pub const FRAMES_FILE: &str = "frames.raw";
pub const FRAMES_HEADER_FILE: &str = "frames.json";

/// Largest tolerated gap between the label and video time ranges.
pub const MAX_CLOCK_OFFSET_S: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub subject_id: String,
    pub fs_video: f64,
    #[serde(default)]
    pub fs_label: Option<f64>,
    #[serde(default)]
    pub notes: serde_json::Value,
}

/// Label samples on the label clock.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelTable {
    pub t: Vec<f64>,
    pub ppg: Option<Vec<f64>>,
    pub hr: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameHeader {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub fps: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Layout {
    TraceCsv,
    RawFrames,
    /// Trace CSV when present, frames too when present.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub subject_id: String,
    /// Colour trace; the RoI mean of `frames` when only frames were loaded.
    pub trace: RgbTrace,
    pub frames: Option<FrameSequence>,
    /// PPG label resampled onto the video clock.
    pub ppg_label: Option<BvpSignal>,
    /// HR label entries, timed relative to the first video frame.
    pub hr_label: Option<HrSeries>,
    pub meta: RecordMeta,
    pub path: PathBuf,
}

fn malformed(path: &Path, position: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::MalformedFile {
        path: path.to_path_buf(),
        position: position.into(),
        reason: reason.into(),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Parses a numeric CSV with a header, returning the header names and rows.
fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let bytes = read_bytes(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| malformed(path, "line 1", e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let pos = e.position().map_or("unknown".into(), |p| format!("line {}", p.line()));
            malformed(path, pos, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(malformed(
                path,
                format!("line {line}"),
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let row = rec
            .iter()
            .zip(&header)
            .map(|(field, name)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        malformed(path, format!("line {line}"), format!("invalid number `{field}` in column `{name}`"))
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(malformed(path, "line 2", "no data rows"));
    }
    // Times must increase.
    for (i, w) in rows.windows(2).enumerate() {
        if !(w[1][0] > w[0][0]) {
            return Err(malformed(path, format!("line {}", i + 3), "time column is not increasing"));
        }
    }
    Ok((header, rows))
}

fn csv_text(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_trace_csv(path: &Path, trace: &RgbTrace) -> Result<()> {
    let rows = trace
        .times()
        .into_iter()
        .zip(trace.samples())
        .map(|(t, s)| vec![t, s[0], s[1], s[2]]);
    write_bytes(path, csv_text("t,r,g,b", rows).as_bytes())
}

/// Reads `t,r,g,b` rows; the first `t` becomes the trace start time.
pub fn read_trace_csv(path: &Path, fs: f64) -> Result<RgbTrace> {
    let (header, rows) = read_numeric_csv(path)?;
    if header != ["t", "r", "g", "b"] {
        return Err(malformed(path, "line 1", format!("expected header `t,r,g,b`, found `{}`", header.join(","))));
    }
    let t0 = rows[0][0];
    let samples = rows.iter().map(|r| [r[1], r[2], r[3]]).collect();
    Ok(RgbTrace::new(samples, fs)?.with_t0(t0))
}

pub fn write_label_csv(path: &Path, labels: &LabelTable) -> Result<()> {
    let n = labels.t.len();
    let mut header = String::from("t");
    for (name, col) in [("ppg", &labels.ppg), ("hr", &labels.hr)] {
        if let Some(c) = col {
            if c.len() != n {
                return Err(Error::InvalidTrace(format!("label column `{name}` has {} rows, expected {n}", c.len())));
            }
            header.push(',');
            header.push_str(name);
        }
    }
    let rows = (0..n).map(|i| {
        let mut r = vec![labels.t[i]];
        r.extend(labels.ppg.as_ref().map(|c| c[i]));
        r.extend(labels.hr.as_ref().map(|c| c[i]));
        r
    });
    write_bytes(path, csv_text(&header, rows).as_bytes())
}

pub fn read_label_csv(path: &Path) -> Result<LabelTable> {
    let (header, rows) = read_numeric_csv(path)?;
    if header.first().map(String::as_str) != Some("t") {
        return Err(malformed(path, "line 1", "first column must be `t`"));
    }
    let mut out = LabelTable {
        t: rows.iter().map(|r| r[0]).collect(),
        ..LabelTable::default()
    };
    for (j, name) in header.iter().enumerate().skip(1) {
        let col = Some(rows.iter().map(|r| r[j]).collect());
        match name.as_str() {
            "ppg" => out.ppg = col,
            "hr" => out.hr = col,
            other => return Err(malformed(path, "line 1", format!("unknown label column `{other}`"))),
        }
    }
    if out.ppg.is_none() && out.hr.is_none() {
        return Err(malformed(path, "line 1", "label file needs a `ppg` or `hr` column"));
    }
    Ok(out)
}

/// Writes 8-bit planar frames; values are rounded and clamped to [0, 255].
pub fn write_raw_frames(dir: &Path, frames: &FrameSequence) -> Result<()> {
    let (h, w) = (frames.height(), frames.width());
    let mut bytes = Vec::with_capacity(frames.len() * h * w * 3);
    for t in 0..frames.len() {
        let f = frames.frame(t);
        for c in 0..3 {
            for i in 0..h * w {
                bytes.push(f[i * 3 + c].round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    let header = FrameHeader {
        height: h,
        width: w,
        channels: 3,
        fps: frames.fs(),
        count: frames.len(),
    };
    write_bytes(&dir.join(FRAMES_FILE), &bytes)?;
    let json = serde_json::to_string_pretty(&header).expect("header serializes");
    write_bytes(&dir.join(FRAMES_HEADER_FILE), json.as_bytes())
}

pub fn read_raw_frames(dir: &Path) -> Result<FrameSequence> {
    let hpath = dir.join(FRAMES_HEADER_FILE);
    let header: FrameHeader = serde_json::from_slice(&read_bytes(&hpath)?).map_err(|e| {
        malformed(&hpath, format!("line {} column {}", e.line(), e.column()), e.to_string())
    })?;
    if header.channels != 3 {
        return Err(malformed(&hpath, "channels", format!("expected 3 channels, found {}", header.channels)));
    }
    let rpath = dir.join(FRAMES_FILE);
    let bytes = read_bytes(&rpath)?;
    let plane = header.height * header.width;
    let expected = header.count * plane * 3;
    if bytes.len() != expected {
        return Err(malformed(
            &rpath,
            format!("byte {}", bytes.len().min(expected)),
            format!("expected {expected} bytes for {} frames, found {}", header.count, bytes.len()),
        ));
    }
    let mut data = Vec::with_capacity(expected);
    for t in 0..header.count {
        let base = t * plane * 3;
        for i in 0..plane {
            for c in 0..3 {
                data.push(bytes[base + c * plane + i] as f64);
            }
        }
    }
    FrameSequence::from_flat(data, header.height, header.width, header.count, header.fps)
}

/// Writes a record directory, creating it if needed.
pub fn write_record(
    dir: &Path,
    meta: &RecordMeta,
    trace: &RgbTrace,
    labels: Option<&LabelTable>,
    frames: Option<&FrameSequence>,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = serde_json::to_string_pretty(meta).expect("meta serializes");
    write_bytes(&dir.join(META_FILE), json.as_bytes())?;
    write_trace_csv(&dir.join(TRACE_FILE), trace)?;
    if let Some(l) = labels {
        write_label_csv(&dir.join(LABEL_FILE), l)?;
    }
    if let Some(f) = frames {
        write_raw_frames(dir, f)?;
    }
    Ok(())
}

/// Linear interpolation of `(t_src, v_src)` at `t_dst`, holding the end
/// values outside the source range.
pub fn resample_linear(t_src: &[f64], v_src: &[f64], t_dst: &[f64]) -> Vec<f64> {
    let n = t_src.len();
    t_dst
        .iter()
        .map(|&t| {
            if t <= t_src[0] {
                return v_src[0];
            }
            if t >= t_src[n - 1] {
                return v_src[n - 1];
            }
            let j = t_src.partition_point(|&s| s <= t);
            let (t0, t1) = (t_src[j - 1], t_src[j]);
            if t == t0 {
                return v_src[j - 1];
            }
            v_src[j - 1] + (v_src[j] - v_src[j - 1]) * (t - t0) / (t1 - t0)
        })
        .collect()
}

fn read_meta(dir: &Path) -> Result<RecordMeta> {
    let path = dir.join(META_FILE);
    let meta: RecordMeta = serde_json::from_slice(&read_bytes(&path)?)
        .map_err(|e| malformed(&path, format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    if !(meta.fs_video.is_finite() && meta.fs_video > 0.0) {
        return Err(malformed(&path, "fs_video", "fs_video must be positive"));
    }
    Ok(meta)
}

/// Loads a record directory. Labels are optional here; consumers that need
/// one report `MissingLabel`.
pub fn load_record(dir: &Path, layout: Layout) -> Result<DatasetRecord> {
    let meta = read_meta(dir)?;
    let trace_path = dir.join(TRACE_FILE);
    let has_frames = dir.join(FRAMES_FILE).exists();
    let frames = match layout {
        Layout::RawFrames => Some(read_raw_frames(dir)?),
        Layout::Auto if has_frames => Some(read_raw_frames(dir)?),
        _ => None,
    }
    .map(|f| f.with_subject(meta.subject_id.clone()));
    let trace = match (layout, &frames) {
        (Layout::RawFrames, Some(f)) => spatial_mean(f)?,
        (Layout::Auto, Some(f)) if !trace_path.exists() => spatial_mean(f)?,
        _ => read_trace_csv(&trace_path, meta.fs_video)?,
    }
    .with_subject(meta.subject_id.clone());

    let label_path = dir.join(LABEL_FILE);
    let (ppg_label, hr_label) = if label_path.exists() {
        attach_labels(&label_path, &read_label_csv(&label_path)?, &trace, meta.fs_label)?
    } else {
        (None, None)
    };
    Ok(DatasetRecord {
        subject_id: meta.subject_id.clone(),
        trace,
        frames,
        ppg_label,
        hr_label,
        meta,
        path: dir.to_path_buf(),
    })
}

/// Puts label streams on the video clock.
fn attach_labels(
    path: &Path,
    labels: &LabelTable,
    trace: &RgbTrace,
    fs_label: Option<f64>,
) -> Result<(Option<BvpSignal>, Option<HrSeries>)> {
    let video_t = trace.times();
    let (v0, v1) = (video_t[0], video_t[video_t.len() - 1]);
    let (l0, l1) = (labels.t[0], labels.t[labels.t.len() - 1]);
    let offset = (l0 - v0).abs().max((l1 - v1).abs());
    if offset > MAX_CLOCK_OFFSET_S {
        return Err(Error::ClockMismatch { offset_s: offset });
    }
    let fs_label = match fs_label {
        Some(f) if f > 0.0 => f,
        _ if labels.t.len() > 1 => (labels.t.len() - 1) as f64 / (l1 - l0),
        _ => trace.fs(),
    };
    let ppg = match &labels.ppg {
        Some(p) => {
            let v = resample_linear(&labels.t, p, &video_t);
            Some(BvpSignal::new(v, trace.fs(), "ppg_label").map_err(|e| malformed(path, "ppg", e.to_string()))?)
        }
        None => None,
    };
    let hr = labels.hr.as_ref().map(|h| HrSeries {
        entries: labels
            .t
            .iter()
            .zip(h)
            .map(|(t, v)| HrEntry {
                window_start_s: t - v0,
                window_len_s: 1.0 / fs_label,
                hr_bpm: Some(*v),
            })
            .collect(),
        method: HrMethod::Label,
        source_tag: "hr_label".into(),
    });
    Ok((ppg, hr))
}

/// Record directories (those holding `meta.json`) directly under `root`,
/// sorted by name.
pub fn record_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join(META_FILE).exists() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(META_FILE).is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(dirs)
}

/// Loads every record under `root`; a failing record keeps its error so
/// callers can report it without aborting the batch.
pub fn load_dataset(root: &Path, layout: Layout) -> Result<Vec<(PathBuf, Result<DatasetRecord>)>> {
    use rayon::prelude::*;
    let dirs = record_dirs(root)?;
    Ok(dirs
        .into_par_iter()
        .map(|d| {
            let r = load_record(&d, layout);
            (d, r)
        })
        .collect())
}
