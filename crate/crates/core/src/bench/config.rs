//! Benchmark configuration: a strict YAML subset shaped like the `test:`
//! section of a training `fit.yaml`.
//!
//! Accepted layouts are either a top-level mapping of test keys, or
//! `fit: { overlap_interval, test: { ... } }`. Blocks that only make sense
//! for neural models (`train`, `meta`, `wandb`, `model`, ...) are rejected as
//! out of scope instead of being ignored.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_yaml::{Mapping, Value};

use crate::error::{Error, Result};
use crate::hr::HrMethod;
use crate::methods::{MethodConfig, MethodId};
use crate::metrics::MetricKind;
use crate::signal::DEFAULT_BAND;

pub const DEFAULT_EVAL_LENGTHS_S: [f64; 5] = [3.0, 5.0, 10.0, 20.0, 30.0];
pub const DEFAULT_METRICS: [MetricKind; 4] = [
    MetricKind::Mae,
    MetricKind::Rmse,
    MetricKind::Mape,
    MetricKind::Pearson,
];
pub const DEFAULT_OUTPUT_DIR: &str = "bench_out";

/// Keys that configure training or neural models only.
const OUT_OF_SCOPE: [&str; 16] = [
    "train",
    "meta",
    "wandb",
    "model",
    "model_save_path",
    "preprocess",
    "type",
    "time_length",
    "img_size",
    "train_flag",
    "eval_flag",
    "eval_interval",
    "debug_flag",
    "learning_rate",
    "epochs",
    "optimizer",
];

/// Keys accepted for compatibility that do not change the evaluation.
const IGNORED: [&str; 3] = ["fs", "shuffle", "batch_size"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSource {
    /// HR derived from the PPG label with the prediction's `cal_type`.
    PpgLabel,
    /// The dataset's own HR label, averaged per window.
    HrLabel,
}

impl std::str::FromStr for TruthSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "ppg_label" | "ppg" => Ok(TruthSource::PpgLabel),
            "hr_label" | "hr" => Ok(TruthSource::HrLabel),
            _ => Err(format!("unknown truth source `{s}` (expected ppg_label or hr_label)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Split {
    All,
    /// Reports on a seeded, subject-disjoint share of the records.
    SubjectHoldout { fraction: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub dataset_path: PathBuf,
    pub methods: Vec<MethodId>,
    pub cal_type: HrMethod,
    pub metrics: Vec<MetricKind>,
    pub eval_time_lengths_s: Vec<f64>,
    pub overlap_s: f64,
    pub band: (f64, f64),
    pub truth: TruthSource,
    pub split: Split,
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
    pub method_config: MethodConfig,
    /// Keys that were accepted but have no effect.
    #[serde(skip)]
    pub ignored_keys: Vec<String>,
}

impl BenchConfig {
    /// A config with defaults for everything but the data and methods.
    pub fn new(dataset_path: impl Into<PathBuf>, methods: Vec<MethodId>) -> Self {
        Self {
            dataset_path: dataset_path.into(),
            methods,
            cal_type: HrMethod::Fft,
            metrics: DEFAULT_METRICS.to_vec(),
            eval_time_lengths_s: DEFAULT_EVAL_LENGTHS_S.to_vec(),
            overlap_s: 0.0,
            band: DEFAULT_BAND,
            truth: TruthSource::PpgLabel,
            split: Split::All,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            workers: None,
            method_config: MethodConfig::default(),
            ignored_keys: Vec::new(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_yaml_str(&text, base)
    }

    /// Parses a config; relative paths resolve against `base_dir`.
    pub fn from_yaml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let root: Value = serde_yaml::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        let root = match root {
            Value::Mapping(m) => m,
            Value::Null => return Err(Error::config("<document>", "config is empty")),
            _ => return Err(Error::config("<document>", "config must be a mapping")),
        };
        let mut overlap = None;
        let section = if let Some(fit) = root.get("fit") {
            for k in root.keys() {
                let k = key_str(k, "<document>")?;
                if k != "fit" {
                    reject_or_unknown(&k, "")?;
                }
            }
            let fit = as_mapping(fit, "fit")?;
            let mut test = None;
            for (k, v) in fit {
                match key_str(k, "fit")?.as_str() {
                    "test" => test = Some(as_mapping(v, "fit.test")?.clone()),
                    "overlap_interval" => overlap = Some(as_f64(v, "fit.overlap_interval")?),
                    other => reject_or_unknown(other, "fit.")?,
                }
            }
            (test.ok_or_else(|| Error::config("fit.test", "missing `test` section"))?, "fit.test.")
        } else {
            (root, "")
        };
        let mut cfg = Self::from_section(&section.0, section.1, base_dir)?;
        if let Some(o) = overlap {
            cfg.overlap_s = o;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_section(m: &Mapping, prefix: &str, base_dir: &Path) -> Result<Self> {
        let field = |k: &str| format!("{prefix}{k}");
        let mut cfg = Self::new(PathBuf::new(), Vec::new());
        let mut dataset = None;
        for (k, v) in m {
            let key = key_str(k, prefix)?;
            let f = field(&key);
            match key.as_str() {
                "dataset" | "dataset_path" => dataset = Some(base_dir.join(as_str(v, &f)?)),
                "methods" | "method" => {
                    cfg.methods = as_list(v)
                        .iter()
                        .map(|x| as_str(x, &f)?.parse::<MethodId>().map_err(|e| Error::config(&f, e)))
                        .collect::<Result<_>>()?
                }
                "cal_type" => cfg.cal_type = parse_cal_type(as_str(v, &f)?, &f)?,
                "metric" | "metrics" => {
                    cfg.metrics = as_list(v)
                        .iter()
                        .map(|x| as_str(x, &f)?.parse::<MetricKind>().map_err(|e| Error::config(&f, e)))
                        .collect::<Result<_>>()?
                }
                "eval_time_length" | "eval_time_lengths" => {
                    cfg.eval_time_lengths_s = as_list(v).iter().map(|x| as_f64(x, &f)).collect::<Result<_>>()?
                }
                "overlap_interval" => cfg.overlap_s = as_f64(v, &f)?,
                "band" => {
                    let b = as_list(v).iter().map(|x| as_f64(x, &f)).collect::<Result<Vec<_>>>()?;
                    if b.len() != 2 {
                        return Err(Error::config(f, "expected [low_hz, high_hz]"));
                    }
                    cfg.band = (b[0], b[1]);
                }
                "truth" => cfg.truth = as_str(v, &f)?.parse().map_err(|e: String| Error::config(&f, e))?,
                "split" => cfg.split = parse_split(v, &f)?,
                "output_dir" => cfg.output_dir = base_dir.join(as_str(v, &f)?),
                "workers" => {
                    let w = as_f64(v, &f)?;
                    if !(w >= 1.0 && w.fract() == 0.0) {
                        return Err(Error::config(f, "must be a positive integer"));
                    }
                    cfg.workers = Some(w as usize);
                }
                "method_config" => {
                    cfg.method_config = serde_yaml::from_value(v.clone()).map_err(|e| Error::config(&f, e.to_string()))?
                }
                k if IGNORED.contains(&k) => cfg.ignored_keys.push(f),
                other => reject_or_unknown(other, prefix)?,
            }
        }
        cfg.dataset_path = dataset.ok_or_else(|| Error::config(field("dataset"), "missing dataset path"))?;
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base_dir.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        if self.metrics.is_empty() {
            return Err(Error::config("metric", "at least one metric is required"));
        }
        if self.eval_time_lengths_s.is_empty() {
            return Err(Error::config("eval_time_length", "at least one window length is required"));
        }
        if self.eval_time_lengths_s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::config("eval_time_length", "window lengths must be positive"));
        }
        if self.eval_time_lengths_s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("eval_time_length", "window lengths must be strictly ascending"));
        }
        let min_len = self.eval_time_lengths_s[0];
        if !(self.overlap_s.is_finite() && self.overlap_s >= 0.0 && self.overlap_s < min_len) {
            return Err(Error::config("overlap_interval", "overlap must be in [0, shortest window)"));
        }
        if !(self.band.0 > 0.0 && self.band.0 < self.band.1 && self.band.1.is_finite()) {
            return Err(Error::config("band", format!("invalid band {:?}", self.band)));
        }
        if self.cal_type == HrMethod::Label {
            return Err(Error::config("cal_type", "expected FFT or PEAK"));
        }
        if let Split::SubjectHoldout { fraction, .. } = self.split {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::config("split.fraction", "must be in (0, 1]"));
            }
        }
        self.method_config
            .validate()
            .map_err(|e| Error::config("method_config", e.to_string()))
    }

    /// Stable digest of everything that influences results.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

fn reject_or_unknown(key: &str, prefix: &str) -> Result<()> {
    if OUT_OF_SCOPE.contains(&key) {
        Err(Error::config(
            format!("{prefix}{key}"),
            "out of scope: training and neural-model settings are not supported by this benchmark",
        ))
    } else {
        Err(Error::config(format!("{prefix}{key}"), "unknown key"))
    }
}

fn key_str(k: &Value, ctx: &str) -> Result<String> {
    k.as_str()
        .map(str::to_string)
        .ok_or_else(|| Error::config(ctx, format!("non-string key {k:?}")))
}

fn as_mapping<'a>(v: &'a Value, field: &str) -> Result<&'a Mapping> {
    v.as_mapping().ok_or_else(|| Error::config(field, "expected a mapping"))
}

fn as_str<'a>(v: &'a Value, field: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::config(field, format!("expected a string, found {}", describe(v))))
}

fn as_f64(v: &Value, field: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::config(field, format!("expected a number, found {}", describe(v))))
}

/// A scalar counts as a one-element list.
fn as_list(v: &Value) -> Vec<Value> {
    match v {
        Value::Sequence(s) => s.clone(),
        other => vec![other.clone()],
    }
}

fn describe(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(b) => format!("`{b}`"),
        Value::Number(n) => format!("`{n}`"),
        Value::String(s) => format!("`{s}`"),
        Value::Sequence(_) => "a list".into(),
        Value::Mapping(_) => "a mapping".into(),
        Value::Tagged(_) => "a tagged value".into(),
    }
}

fn parse_cal_type(s: &str, field: &str) -> Result<HrMethod> {
    match s.parse::<HrMethod>() {
        Ok(HrMethod::Label) | Err(_) => Err(Error::config(field, format!("unknown cal_type `{s}` (expected FFT or PEAK)"))),
        Ok(m) => Ok(m),
    }
}

fn parse_split(v: &Value, field: &str) -> Result<Split> {
    match v {
        Value::String(s) if s.eq_ignore_ascii_case("all") => Ok(Split::All),
        Value::Mapping(m) => {
            let mut kind = None;
            let (mut fraction, mut seed) = (None, 0u64);
            for (k, val) in m {
                let k = key_str(k, field)?;
                let f = format!("{field}.{k}");
                match k.as_str() {
                    "type" | "kind" => kind = Some(as_str(val, &f)?.to_ascii_lowercase()),
                    "fraction" => fraction = Some(as_f64(val, &f)?),
                    "seed" => {
                        seed = val
                            .as_u64()
                            .ok_or_else(|| Error::config(&f, "expected a non-negative integer"))?
                    }
                    _ => return Err(Error::config(f, "unknown key")),
                }
            }
            match kind.as_deref() {
                Some("subject_holdout") => Ok(Split::SubjectHoldout {
                    fraction: fraction.ok_or_else(|| Error::config(format!("{field}.fraction"), "missing"))?,
                    seed,
                }),
                Some("all") => Ok(Split::All),
                _ => Err(Error::config(format!("{field}.type"), "expected ALL or SUBJECT_HOLDOUT")),
            }
        }
        _ => Err(Error::config(field, "expected ALL or a SUBJECT_HOLDOUT mapping")),
    }
}
