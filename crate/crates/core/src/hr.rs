//! Heart rate from a pulse waveform, by spectral peak or by beat detection,
//! over fixed evaluation windows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{detrend, hann, hr_nfft, power_spectrum, std};
use crate::trace::BvpSignal;

/// Minimum prominence of a beat, as a fraction of the window's std.
pub const PEAK_PROMINENCE_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HrMethod {
    Fft,
    Peak,
    /// Values supplied by a dataset or generator rather than derived here.
    Label,
}

impl std::str::FromStr for HrMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FFT" => Ok(HrMethod::Fft),
            "PEAK" => Ok(HrMethod::Peak),
            _ => Err(format!("unknown heart-rate method `{s}` (expected FFT or PEAK)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrEntry {
    pub window_start_s: f64,
    pub window_len_s: f64,
    /// `None` when the window yielded no estimate (e.g. too few beats).
    pub hr_bpm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrSeries {
    pub entries: Vec<HrEntry>,
    pub method: HrMethod,
    pub source_tag: String,
}

impl HrSeries {
    /// Mean of the present entries whose midpoint lies in `[start, end)`.
    pub fn mean_in(&self, start: f64, end: f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| {
                let mid = e.window_start_s + e.window_len_s / 2.0;
                mid >= start && mid < end
            })
            .filter_map(|e| e.hr_bpm)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.hr_bpm).collect()
    }
}

/// Evaluation window layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub len_s: f64,
    pub overlap_s: f64,
}

impl WindowSpec {
    pub fn new(len_s: f64) -> Self {
        Self {
            len_s,
            overlap_s: 0.0,
        }
    }

    /// `(start, len)` sample ranges of every complete window. A partial
    /// window at the tail is dropped.
    pub fn ranges(&self, n: usize, fs: f64) -> Result<Vec<(usize, usize)>> {
        let len = (self.len_s * fs).round() as usize;
        if !(self.len_s > 0.0) || len < 2 {
            return Err(Error::WindowTooShort {
                window_s: self.len_s,
                samples: len,
            });
        }
        if !(self.overlap_s >= 0.0 && self.overlap_s < self.len_s) {
            return Err(Error::config(
                "overlap_interval",
                format!("overlap {} s must be in [0, window length)", self.overlap_s),
            ));
        }
        let step = (((self.len_s - self.overlap_s) * fs).round() as usize).max(1);
        if len > n {
            return Err(Error::NoCompleteWindow {
                window_s: self.len_s,
                signal_s: n as f64 / fs,
            });
        }
        Ok((0..=n - len).step_by(step).map(|s| (s, len)).collect())
    }
}

fn check_band(band: (f64, f64), fs: f64) -> Result<()> {
    if !(band.0 > 0.0 && band.0 < band.1 && band.1 <= fs / 2.0) {
        return Err(Error::InvalidBand {
            lo: band.0,
            hi: band.1,
            fs,
        });
    }
    Ok(())
}

/// Spectral-peak heart rate (bpm) of one window: detrend, Hann taper,
/// zero-pad to at least one minute of samples, argmax inside `band`.
pub fn fft_hr(x: &[f64], fs: f64, band: (f64, f64)) -> Result<f64> {
    check_band(band, fs)?;
    if x.len() < 2 {
        return Err(Error::WindowTooShort {
            window_s: x.len() as f64 / fs,
            samples: x.len(),
        });
    }
    let w = hann(x.len());
    let tapered: Vec<f64> = detrend(x).iter().zip(&w).map(|(a, b)| a * b).collect();
    let (freqs, power) = power_spectrum(&tapered, fs, hr_nfft(x.len(), fs));
    let mut best: Option<(f64, f64)> = None;
    for (f, p) in freqs.iter().zip(&power) {
        if *f < band.0 || *f > band.1 {
            continue;
        }
        if best.is_none_or(|(_, bp)| *p > bp) {
            best = Some((*f, *p));
        }
    }
    best.map(|(f, _)| 60.0 * f).ok_or(Error::EmptyBand {
        lo: band.0,
        hi: band.1,
    })
}

/// Indices of local maxima with prominence at least `min_prominence`,
/// thinned so no two are closer than `min_distance` (taller peaks win).
pub fn find_peaks(x: &[f64], min_distance: usize, min_prominence: f64) -> Vec<usize> {
    let n = x.len();
    let mut cands = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i] > x[i - 1] {
            // Walk across a flat top; its middle is the peak.
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                cands.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    let cands: Vec<usize> = cands
        .into_iter()
        .filter(|&p| prominence(x, p) >= min_prominence)
        .collect();

    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| x[cands[b]].total_cmp(&x[cands[a]]).then(a.cmp(&b)));
    let mut keep = vec![true; cands.len()];
    for &k in &order {
        if !keep[k] {
            continue;
        }
        for (other, flag) in keep.iter_mut().enumerate() {
            if other != k && cands[other].abs_diff(cands[k]) < min_distance {
                *flag = false;
            }
        }
    }
    cands
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}

/// Height of a peak above the higher of the two minima separating it from
/// taller samples (or the signal ends).
fn prominence(x: &[f64], p: usize) -> f64 {
    let h = x[p];
    let mut left_min = h;
    for i in (0..p).rev() {
        if x[i] > h {
            break;
        }
        left_min = left_min.min(x[i]);
    }
    let mut right_min = h;
    for &v in &x[p + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Beat-detection heart rate (bpm) of one window: 60 over the mean
/// inter-beat interval.
pub fn peak_hr(x: &[f64], fs: f64, band: (f64, f64)) -> Result<f64> {
    check_band(band, fs)?;
    let min_distance = (fs / band.1).floor().max(1.0) as usize;
    let peaks = find_peaks(x, min_distance, PEAK_PROMINENCE_FRACTION * std(x));
    if peaks.len() < 2 {
        return Err(Error::TooFewPeaks { found: peaks.len() });
    }
    let span = (peaks[peaks.len() - 1] - peaks[0]) as f64 / fs;
    let ibi = span / (peaks.len() - 1) as f64;
    Ok(60.0 / ibi)
}

fn windowed(
    signal: &BvpSignal,
    window: WindowSpec,
    band: (f64, f64),
    method: HrMethod,
) -> Result<HrSeries> {
    check_band(band, signal.fs)?;
    let ranges = window.ranges(signal.len(), signal.fs)?;
    let mut entries = Vec::with_capacity(ranges.len());
    for (start, len) in ranges {
        let x = &signal.samples[start..start + len];
        let hr_bpm = match method {
            HrMethod::Fft => Some(fft_hr(x, signal.fs, band)?),
            HrMethod::Peak => match peak_hr(x, signal.fs, band) {
                Ok(v) => Some(v),
                Err(Error::TooFewPeaks { .. }) => None,
                Err(e) => return Err(e),
            },
            HrMethod::Label => unreachable!("labels are not derived"),
        };
        entries.push(HrEntry {
            window_start_s: start as f64 / signal.fs,
            window_len_s: len as f64 / signal.fs,
            hr_bpm,
        });
    }
    Ok(HrSeries {
        entries,
        method,
        source_tag: signal.method_tag.clone(),
    })
}

/// Spectral heart rate over non-overlapping windows of `window_len_s`.
pub fn hr_fft(signal: &BvpSignal, window_len_s: f64, band: (f64, f64)) -> Result<HrSeries> {
    windowed(signal, WindowSpec::new(window_len_s), band, HrMethod::Fft)
}

/// Beat-detection heart rate over non-overlapping windows. Windows with
/// fewer than two beats are kept as absent entries.
pub fn hr_peaks(signal: &BvpSignal, window_len_s: f64, band: (f64, f64)) -> Result<HrSeries> {
    windowed(signal, WindowSpec::new(window_len_s), band, HrMethod::Peak)
}

/// Heart rate with an explicit window layout.
pub fn estimate_hr(
    signal: &BvpSignal,
    window: WindowSpec,
    band: (f64, f64),
    method: HrMethod,
) -> Result<HrSeries> {
    if method == HrMethod::Label {
        return Err(Error::config("cal_type", "LABEL is not an estimation method"));
    }
    windowed(signal, window, band, method)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyRow {
    pub window_start_s: f64,
    pub window_len_s: f64,
    pub hr_label: Option<f64>,
    pub hr_fft: Option<f64>,
    pub hr_peak: Option<f64>,
    pub label_vs_fft: Option<f64>,
    pub label_vs_peak: Option<f64>,
    pub fft_vs_peak: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyStats {
    pub mean: f64,
    pub max: f64,
    pub n: usize,
}

impl DiscrepancyStats {
    fn of(vals: impl Iterator<Item = f64>) -> Option<Self> {
        let v: Vec<f64> = vals.collect();
        (!v.is_empty()).then(|| Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            n: v.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub rows: Vec<DiscrepancyRow>,
    pub label_vs_fft: Option<DiscrepancyStats>,
    pub label_vs_peak: Option<DiscrepancyStats>,
    pub fft_vs_peak: Option<DiscrepancyStats>,
}

/// Compares a dataset's HR label against the HR derived from its PPG label
/// by both spectral and beat-detection routes, window by window.
pub fn label_discrepancy(
    ppg_label: &BvpSignal,
    hr_label: &HrSeries,
    window_len_s: f64,
    band: (f64, f64),
) -> Result<DiscrepancyReport> {
    let fft = hr_fft(ppg_label, window_len_s, band)?;
    let peak = hr_peaks(ppg_label, window_len_s, band)?;
    let mut rows = Vec::with_capacity(fft.entries.len());
    for (f, p) in fft.entries.iter().zip(&peak.entries) {
        let label = hr_label.mean_in(f.window_start_s, f.window_start_s + f.window_len_s);
        let diff = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(a, b)| (a - b).abs());
        rows.push(DiscrepancyRow {
            window_start_s: f.window_start_s,
            window_len_s: f.window_len_s,
            hr_label: label,
            hr_fft: f.hr_bpm,
            hr_peak: p.hr_bpm,
            label_vs_fft: diff(label, f.hr_bpm),
            label_vs_peak: diff(label, p.hr_bpm),
            fft_vs_peak: diff(f.hr_bpm, p.hr_bpm),
        });
    }
    if rows.iter().all(|r| r.hr_label.is_none()) {
        return Err(Error::NoOverlap);
    }
    Ok(DiscrepancyReport {
        label_vs_fft: DiscrepancyStats::of(rows.iter().filter_map(|r| r.label_vs_fft)),
        label_vs_peak: DiscrepancyStats::of(rows.iter().filter_map(|r| r.label_vs_peak)),
        fft_vs_peak: DiscrepancyStats::of(rows.iter().filter_map(|r| r.fft_vs_peak)),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::DEFAULT_BAND;
    use std::f64::consts::PI;

    fn sig(mut f: impl FnMut(f64) -> f64, fs: f64, secs: f64) -> BvpSignal {
        let x = (0..(fs * secs).round() as usize).map(|i| f(i as f64 / fs)).collect();
        BvpSignal::new(x, fs, "test").unwrap()
    }

    fn constant_label(bpm: f64, secs: f64) -> HrSeries {
        HrSeries {
            entries: (0..secs as usize)
                .map(|i| HrEntry {
                    window_start_s: i as f64,
                    window_len_s: 1.0,
                    hr_bpm: Some(bpm),
                })
                .collect(),
            method: HrMethod::Label,
            source_tag: "label".into(),
        }
    }

    #[test]
    fn fft_pure_sinusoid() {
        let s = sig(|t| (2.0 * PI * 1.2 * t).sin(), 30.0, 10.0);
        let hr = hr_fft(&s, 10.0, DEFAULT_BAND).unwrap();
        assert_eq!(hr.entries.len(), 1);
        assert!((hr.entries[0].hr_bpm.unwrap() - 72.0).abs() <= 0.5);
    }

    /// Brute-force oracle: evaluate the Hann-weighted DTFT magnitude on a
    /// 0.01 bpm grid and compare the argmax with the FFT route.
    #[test]
    fn fft_dominant_of_two_tones() {
        let f = |t: f64| (2.0 * PI * 1.0 * t).sin() + 0.3 * (2.0 * PI * 2.0 * t).sin();
        let s = sig(f, 30.0, 10.0);
        let w = hann(s.len());
        let d = detrend(&s.samples);
        let mut best = (0.0, 0.0);
        let mut bpm = 40.0;
        while bpm <= 180.0 {
            let fr = bpm / 60.0;
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in d.iter().enumerate() {
                let ph = 2.0 * PI * fr * i as f64 / 30.0;
                re += v * w[i] * ph.cos();
                im -= v * w[i] * ph.sin();
            }
            let p = re * re + im * im;
            if p > best.1 {
                best = (bpm, p);
            }
            bpm += 0.01;
        }
        assert!((best.0 - 60.0).abs() < 0.1);
        let hr = hr_fft(&s, 10.0, DEFAULT_BAND).unwrap().entries[0].hr_bpm.unwrap();
        assert!((hr - best.0).abs() <= 0.5, "{hr} vs oracle {}", best.0);
    }

    #[test]
    fn fft_result_stays_in_band() {
        let mut state = 12345u64;
        let s = sig(
            |_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33) as f64 / (1u64 << 31) as f64 - 0.5
            },
            30.0,
            30.0,
        );
        for e in hr_fft(&s, 5.0, DEFAULT_BAND).unwrap().entries {
            let v = e.hr_bpm.unwrap();
            assert!((39.6..=180.0).contains(&v), "{v}");
        }
    }

    #[test]
    fn fft_invariant_to_scale_and_sign() {
        let s = sig(|t| (2.0 * PI * 1.45 * t).sin() + 0.2 * (2.0 * PI * 0.9 * t).cos(), 30.0, 10.0);
        let a = hr_fft(&s, 10.0, DEFAULT_BAND).unwrap();
        let mut neg = s.clone();
        neg.samples.iter_mut().for_each(|v| *v *= -3.7);
        let b = hr_fft(&neg, 10.0, DEFAULT_BAND).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn window_layout_drops_tail() {
        let r = WindowSpec::new(3.0).ranges(300, 30.0).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[2], (180, 90));
        let r = WindowSpec {
            len_s: 4.0,
            overlap_s: 2.0,
        }
        .ranges(300, 30.0)
        .unwrap();
        assert_eq!(r.len(), 4);
        assert!(matches!(
            WindowSpec::new(0.03).ranges(300, 30.0),
            Err(Error::WindowTooShort { .. })
        ));
        assert!(matches!(
            WindowSpec::new(20.0).ranges(300, 30.0),
            Err(Error::NoCompleteWindow { .. })
        ));
    }

    #[test]
    fn peaks_pure_sinusoid() {
        let s = sig(|t| (2.0 * PI * 1.2 * t).sin(), 30.0, 10.0);
        let hr = hr_peaks(&s, 10.0, DEFAULT_BAND).unwrap();
        assert!((hr.entries[0].hr_bpm.unwrap() - 72.0).abs() <= 1.0);
    }

    #[test]
    fn suppressed_beat_is_flagged_by_fft_disagreement() {
        // Hold one trough-to-trough cycle at its minimum so its crest
        // disappears without creating a new one.
        let s = sig(
            |t| {
                let cycle = (t * 1.2 + 0.25).floor() as i64;
                if cycle == 5 {
                    -1.0
                } else {
                    (2.0 * PI * 1.2 * t).sin()
                }
            },
            30.0,
            10.0,
        );
        let fft = hr_fft(&s, 10.0, DEFAULT_BAND).unwrap().entries[0].hr_bpm.unwrap();
        let peak = hr_peaks(&s, 10.0, DEFAULT_BAND).unwrap().entries[0].hr_bpm.unwrap();
        // 11 remaining crests span 11 periods over 10 intervals.
        assert!((peak - 72.0 * 10.0 / 11.0).abs() < 1.0, "{peak}");
        assert!((fft - peak).abs() > 5.0);
    }

    #[test]
    fn flat_signal_has_no_peaks() {
        let s = sig(|_| 0.0, 30.0, 10.0);
        assert!(matches!(
            peak_hr(&s.samples, 30.0, DEFAULT_BAND),
            Err(Error::TooFewPeaks { found: 0 })
        ));
        let hr = hr_peaks(&s, 5.0, DEFAULT_BAND).unwrap();
        assert!(hr.entries.iter().all(|e| e.hr_bpm.is_none()));
    }

    #[test]
    fn peak_distance_rejects_dicrotic_bumps() {
        let s = sig(
            |t| (2.0 * PI * 1.0 * t).sin() + 0.25 * (2.0 * PI * 4.0 * t).sin(),
            30.0,
            10.0,
        );
        let hr = peak_hr(&s.samples, 30.0, DEFAULT_BAND).unwrap();
        assert!((hr - 60.0).abs() < 2.0, "{hr}");
    }

    #[test]
    fn discrepancy_zero_and_offset() {
        let s = sig(|t| (2.0 * PI * 1.2 * t).sin(), 30.0, 30.0);
        let fft = hr_fft(&s, 10.0, DEFAULT_BAND).unwrap();
        let same = HrSeries {
            method: HrMethod::Label,
            ..fft.clone()
        };
        let r = label_discrepancy(&s, &same, 10.0, DEFAULT_BAND).unwrap();
        assert_eq!(r.label_vs_fft.unwrap().mean, 0.0);
        assert_eq!(r.label_vs_fft.unwrap().max, 0.0);

        let offset = HrSeries {
            entries: fft
                .entries
                .iter()
                .map(|e| HrEntry {
                    hr_bpm: e.hr_bpm.map(|v| v + 5.0),
                    ..*e
                })
                .collect(),
            ..same
        };
        let r = label_discrepancy(&s, &offset, 10.0, DEFAULT_BAND).unwrap();
        assert!((r.label_vs_fft.unwrap().mean - 5.0).abs() < 1e-9);
    }

    #[test]
    fn discrepancy_needs_overlap() {
        let s = sig(|t| (2.0 * PI * 1.2 * t).sin(), 30.0, 20.0);
        let mut label = constant_label(72.0, 10.0);
        for e in &mut label.entries {
            e.window_start_s += 100.0;
        }
        assert!(matches!(
            label_discrepancy(&s, &label, 10.0, DEFAULT_BAND),
            Err(Error::NoOverlap)
        ));
        let ok = label_discrepancy(&s, &constant_label(72.0, 20.0), 10.0, DEFAULT_BAND).unwrap();
        assert!(ok.label_vs_fft.unwrap().mean < 0.5);
    }
}
