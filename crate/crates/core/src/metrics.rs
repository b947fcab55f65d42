//! Agreement metrics between predicted and reference heart rates, the
//! template SNR of a pulse signal, and Bland–Altman analysis.
//!
//! Standard deviations use the population convention (divide by N).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{detrend, hann, hr_nfft, mean, power_spectrum, std};
use crate::trace::BvpSignal;

/// Half-width of the SNR template around the fundamental and 2nd harmonic.
pub const SNR_TEMPLATE_HALF_WIDTH_BPM: f64 = 6.0;
/// Spectral range over which SNR is summed.
pub const SNR_BAND_BPM: (f64, f64) = (40.0, 240.0);
/// Minimum signal length for an SNR.
pub const SNR_MIN_SECONDS: f64 = 5.0;

fn same_len(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    Ok(())
}

fn at_least(len: usize, min: usize) -> Result<()> {
    if len < min {
        return Err(Error::InsufficientData { len, min });
    }
    Ok(())
}

pub fn pearson(pred: &[f64], truth: &[f64]) -> Result<f64> {
    same_len(pred, truth)?;
    at_least(pred.len(), 2)?;
    let (mp, mt) = (mean(pred), mean(truth));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        let (dp, dt) = (p - mp, t - mt);
        sxy += dp * dt;
        sxx += dp * dp;
        syy += dt * dt;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    same_len(pred, truth)?;
    at_least(pred.len(), 1)?;
    let ss: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok((ss / pred.len() as f64).sqrt())
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    same_len(pred, truth)?;
    at_least(pred.len(), 1)?;
    let s: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum();
    Ok(s / pred.len() as f64)
}

/// Mean absolute relative error as a fraction (multiply by 100 for %).
pub fn mape(pred: &[f64], truth: &[f64]) -> Result<f64> {
    same_len(pred, truth)?;
    at_least(pred.len(), 1)?;
    if let Some(index) = truth.iter().position(|t| *t == 0.0) {
        return Err(Error::ZeroTruth { index });
    }
    let s: f64 = pred.iter().zip(truth).map(|(p, t)| ((p - t) / t).abs()).sum();
    Ok(s / pred.len() as f64)
}

/// Template signal-to-noise ratio in dB: power within ±6 bpm of the true
/// rate and its second harmonic against the remaining power in `band_bpm`.
pub fn snr(bvp: &BvpSignal, true_hr_bpm: f64, band_bpm: (f64, f64)) -> Result<f64> {
    let min = (SNR_MIN_SECONDS * bvp.fs).ceil() as usize;
    if bvp.len() < min {
        return Err(Error::SignalTooShort {
            len: bvp.len(),
            min,
        });
    }
    if !(true_hr_bpm >= band_bpm.0 && true_hr_bpm <= band_bpm.1) {
        return Err(Error::HrOutOfBand {
            hr_bpm: true_hr_bpm,
            lo: band_bpm.0,
            hi: band_bpm.1,
        });
    }
    let w = hann(bvp.len());
    let x: Vec<f64> = detrend(&bvp.samples).iter().zip(&w).map(|(a, b)| a * b).collect();
    let (freqs, power) = power_spectrum(&x, bvp.fs, hr_nfft(x.len(), bvp.fs));
    let (mut signal, mut noise) = (0.0, 0.0);
    for (f, p) in freqs.iter().zip(&power) {
        let bpm = 60.0 * f;
        if bpm < band_bpm.0 || bpm > band_bpm.1 {
            continue;
        }
        let in_template = (bpm - true_hr_bpm).abs() <= SNR_TEMPLATE_HALF_WIDTH_BPM
            || (bpm - 2.0 * true_hr_bpm).abs() <= SNR_TEMPLATE_HALF_WIDTH_BPM;
        if in_template {
            signal += p;
        } else {
            noise += p;
        }
    }
    if signal == 0.0 && noise == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok(10.0 * (signal / noise).log10())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltman {
    pub bias: f64,
    pub loa_lo: f64,
    pub loa_hi: f64,
    /// `(mean, difference)` of each pair.
    pub pairs: Vec<(f64, f64)>,
}

pub fn bland_altman(pred: &[f64], truth: &[f64]) -> Result<BlandAltman> {
    same_len(pred, truth)?;
    at_least(pred.len(), 2)?;
    let diffs: Vec<f64> = pred.iter().zip(truth).map(|(p, t)| p - t).collect();
    let bias = mean(&diffs);
    let half = 1.96 * std(&diffs);
    let pairs = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| ((p + t) / 2.0, p - t))
        .collect();
    Ok(BlandAltman {
        bias,
        loa_lo: bias - half,
        loa_hi: bias + half,
        pairs,
    })
}

/// Which metrics a benchmark reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "MAE")]
    Mae,
    #[serde(rename = "RMSE")]
    Rmse,
    #[serde(rename = "MAPE")]
    Mape,
    #[serde(rename = "Pearson")]
    Pearson,
    #[serde(rename = "SNR")]
    Snr,
    #[serde(rename = "BA")]
    BlandAltman,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::Mae,
        MetricKind::Rmse,
        MetricKind::Mape,
        MetricKind::Pearson,
        MetricKind::Snr,
        MetricKind::BlandAltman,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Mae => "MAE",
            MetricKind::Rmse => "RMSE",
            MetricKind::Mape => "MAPE",
            MetricKind::Pearson => "Pearson",
            MetricKind::Snr => "SNR",
            MetricKind::BlandAltman => "BA",
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let k = s.trim().to_ascii_lowercase();
        Ok(match k.as_str() {
            "mae" => MetricKind::Mae,
            "rmse" => MetricKind::Rmse,
            "mape" => MetricKind::Mape,
            "pearson" | "r" => MetricKind::Pearson,
            "snr" => MetricKind::Snr,
            "ba" | "bland_altman" | "bland-altman" | "blandaltman" => MetricKind::BlandAltman,
            _ => return Err(format!("unknown metric `{s}`")),
        })
    }
}

/// Metrics over one set of paired windows. Absent fields were either not
/// requested or not computable (e.g. Pearson on constant input).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSet {
    pub mae_bpm: Option<f64>,
    pub rmse_bpm: Option<f64>,
    pub mape_pct: Option<f64>,
    pub pearson_r: Option<f64>,
    pub snr_db: Option<f64>,
    pub bland_altman: Option<BlandAltman>,
    pub n_windows: usize,
}

impl MetricSet {
    /// Computes every metric that the pairs support. `snr_values` are
    /// per-window SNRs, averaged when present.
    pub fn compute(pred: &[f64], truth: &[f64], snr_values: &[f64]) -> Result<Self> {
        same_len(pred, truth)?;
        let n = pred.len();
        if n == 0 {
            return Ok(Self::default());
        }
        Ok(Self {
            mae_bpm: Some(mae(pred, truth)?),
            rmse_bpm: Some(rmse(pred, truth)?),
            mape_pct: mape(pred, truth).ok().map(|v| 100.0 * v),
            pearson_r: pearson(pred, truth).ok(),
            snr_db: (!snr_values.is_empty()).then(|| mean(snr_values)),
            bland_altman: bland_altman(pred, truth).ok(),
            n_windows: n,
        })
    }

    pub fn get(&self, kind: MetricKind) -> Option<f64> {
        match kind {
            MetricKind::Mae => self.mae_bpm,
            MetricKind::Rmse => self.rmse_bpm,
            MetricKind::Mape => self.mape_pct,
            MetricKind::Pearson => self.pearson_r,
            MetricKind::Snr => self.snr_db,
            MetricKind::BlandAltman => self.bland_altman.as_ref().map(|b| b.bias),
        }
    }
}
