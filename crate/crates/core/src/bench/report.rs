//! Report files: full JSON, a flat metric CSV and SVG plots. Output bytes
//! depend only on the report contents.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::evaluate::{CellStatus, EvalReport};
use crate::error::{Error, Result};
use crate::metrics::{BlandAltman, MetricKind};

pub const CSV_HEADER: &str = "method,window_s,metric,value,n";
pub const FAILED: &str = "FAILED";
pub const NOT_AVAILABLE: &str = "NA";

/// Metrics drawn as grouped bar charts.
const BAR_METRICS: [MetricKind; 4] = [MetricKind::Mae, MetricKind::Rmse, MetricKind::Mape, MetricKind::Pearson];

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Svg,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Svg];
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            _ => Err(format!("unknown report format `{s}` (expected json, csv or svg)")),
        }
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:.6}")
}

/// One row per method x window x configured metric, in config order.
pub fn to_csv(report: &EvalReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for cell in &report.cells {
        for &kind in &report.config.metrics {
            let value = match &cell.status {
                CellStatus::Failed { .. } => FAILED.to_string(),
                CellStatus::Ok => cell.metrics.get(kind).map_or(NOT_AVAILABLE.to_string(), fmt_num),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                cell.method, cell.window_s, kind, value, cell.metrics.n_windows
            );
        }
    }
    out
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Grouped bars: one group per window length, one bar per method.
pub fn bar_chart_svg(report: &EvalReport, kind: MetricKind) -> String {
    let methods = &report.config.methods;
    let windows = &report.config.eval_time_lengths_s;
    let value = |m, w| {
        report
            .cell(m, w)
            .filter(|c| c.status == CellStatus::Ok)
            .and_then(|c| c.metrics.get(kind))
    };
    let vals: Vec<f64> = methods
        .iter()
        .flat_map(|&m| windows.iter().filter_map(move |&w| value(m, w)))
        .collect();
    let hi = vals.iter().copied().fold(0.0f64, f64::max);
    let lo = vals.iter().copied().fold(0.0f64, f64::min);
    let span = if hi - lo > 0.0 { hi - lo } else { 1.0 };

    let (w_px, h_px) = (720.0, 400.0);
    let (left, right, top, bottom) = (60.0, 150.0, 40.0, 50.0);
    let plot_w = w_px - left - right;
    let plot_h = h_px - top - bottom;
    let y = |v: f64| top + plot_h * (hi - v) / span;
    let group_w = plot_w / windows.len().max(1) as f64;
    let bar_w = group_w * 0.8 / methods.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w_px}" height="{h_px}" viewBox="0 0 {w_px} {h_px}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{} by window length</text>"#,
        left + plot_w / 2.0,
        kind
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        y(0.0),
        left + plot_w,
        y(0.0)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left:.2}" y1="{top:.2}" x2="{left:.2}" y2="{:.2}" stroke="black"/>"#,
        top + plot_h
    );
    for tick in [lo, (lo + hi) / 2.0, hi] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{tick:.2}</text>"#,
            left - 6.0,
            y(tick) + 4.0
        );
    }
    for (gi, &w) in windows.iter().enumerate() {
        let gx = left + gi as f64 * group_w + group_w * 0.1;
        for (mi, &m) in methods.iter().enumerate() {
            let x = gx + mi as f64 * bar_w;
            match value(m, w) {
                Some(v) => {
                    let (y0, y1) = (y(v.max(0.0)), y(v.min(0.0)));
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{m} {w}s: {v:.4}</title></rect>"#,
                        bar_w * 0.9,
                        (y1 - y0).max(0.0),
                        PALETTE[mi % PALETTE.len()]
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="9" fill="gray">x</text>"#,
                        x + bar_w * 0.45,
                        y(0.0) - 3.0
                    );
                }
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{w}s</text>"#,
            left + (gi as f64 + 0.5) * group_w,
            top + plot_h + 20.0
        );
    }
    for (mi, m) in methods.iter().enumerate() {
        let ly = top + 16.0 * mi as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{ly:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            w_px - right + 16.0,
            PALETTE[mi % PALETTE.len()],
            w_px - right + 32.0,
            ly + 9.0,
            esc(m.as_str())
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Difference against mean, with bias and limits of agreement.
pub fn bland_altman_svg(title: &str, ba: &BlandAltman) -> String {
    let (w_px, h_px) = (520.0, 380.0);
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 50.0);
    let xs: Vec<f64> = ba.pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = ba.pairs.iter().map(|p| p.1).chain([ba.loa_lo, ba.loa_hi, 0.0]).collect();
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > 1e-9 {
            (lo - 0.05 * (hi - lo), hi + 0.05 * (hi - lo))
        } else {
            (lo - 1.0, hi + 1.0)
        }
    };
    let (x0, x1) = range(&xs);
    let (y0, y1) = range(&ys);
    let pw = w_px - left - right;
    let ph = h_px - top - bottom;
    let px = |v: f64| left + pw * (v - x0) / (x1 - x0);
    let py = |v: f64| top + ph * (y1 - v) / (y1 - y0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w_px}" height="{h_px}" viewBox="0 0 {w_px} {h_px}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">Bland-Altman: {}</text>"#,
        left + pw / 2.0,
        esc(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left:.2}" y="{top:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    for (v, label, dash) in [
        (ba.bias, "bias", ""),
        (ba.loa_lo, "-1.96sd", r#" stroke-dasharray="4 3""#),
        (ba.loa_hi, "+1.96sd", r#" stroke-dasharray="4 3""#),
    ] {
        let _ = writeln!(
            s,
            r##"<line x1="{left:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#e15759"{dash}/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{label} {v:.2}</text>"##,
            py(v),
            left + pw,
            py(v),
            left + pw - 4.0,
            py(v) - 3.0
        );
    }
    for (m, d) in &ba.pairs {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#4e79a7"/>"##,
            px(*m),
            py(*d)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">mean of predicted and reference HR (bpm)</text>"#,
        left + pw / 2.0,
        h_px - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">difference (bpm)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    s.push_str("</svg>\n");
    s
}

fn write(path: PathBuf, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the requested formats into `dir` and returns the file paths.
pub fn emit_report(report: &EvalReport, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if formats.contains(&ReportFormat::Json) {
        let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
        write(dir.join("report.json"), json.as_bytes(), &mut written)?;
    }
    if formats.contains(&ReportFormat::Csv) {
        write(dir.join("report.csv"), to_csv(report).as_bytes(), &mut written)?;
    }
    if formats.contains(&ReportFormat::Svg) {
        for kind in BAR_METRICS {
            if report.config.metrics.contains(&kind) {
                let name = format!("{}.svg", kind.as_str().to_ascii_lowercase());
                write(dir.join(name), bar_chart_svg(report, kind).as_bytes(), &mut written)?;
            }
        }
        for cell in &report.cells {
            if let Some(ba) = &cell.metrics.bland_altman {
                let title = format!("{} {}s", cell.method, cell.window_s);
                let name = format!("bland_altman_{}_{}s.svg", cell.method.as_str().to_ascii_lowercase(), cell.window_s);
                write(dir.join(name), bland_altman_svg(&title, ba).as_bytes(), &mut written)?;
            }
        }
    }
    Ok(written)
}

pub fn load_report(path: &Path) -> Result<EvalReport> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::MalformedFile {
        path: path.to_path_buf(),
        position: format!("line {} column {}", e.line(), e.column()),
        reason: e.to_string(),
    })
}
