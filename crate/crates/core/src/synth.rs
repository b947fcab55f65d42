//! Synthetic skin-colour traces and frame sequences with a known pulse.
//!
//! Each channel follows
//! `baseline * (1 + drift(t)) * (1 + amplitude * pulse(t) * color) + motion(t) + noise(t)`
//! where `pulse` is a fundamental plus a scaled second harmonic at the
//! instantaneous heart rate, `drift` a sinusoid, `motion` a smooth random
//! process along a colour direction and `noise` i.i.d. Gaussian.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::io::{write_record, LabelTable, RecordMeta};
use crate::error::{Error, Result};
use crate::hr::{HrEntry, HrMethod, HrSeries};
use crate::trace::{BvpSignal, FrameSequence, RgbTrace};

const MOTION_TONES: usize = 5;
const MOTION_FREQ_HZ: (f64, f64) = (0.2, 2.5);

/// Heart rate over time: a constant, or `(t_s, bpm)` knots joined linearly
/// and held flat beyond either end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HrProfile {
    Constant(f64),
    Knots(Vec<(f64, f64)>),
}

impl HrProfile {
    pub fn ramp(start_bpm: f64, end_bpm: f64, duration_s: f64) -> Self {
        HrProfile::Knots(vec![(0.0, start_bpm), (duration_s, end_bpm)])
    }

    fn knots(&self) -> Vec<(f64, f64)> {
        match self {
            HrProfile::Constant(b) => vec![(0.0, *b)],
            HrProfile::Knots(k) => k.clone(),
        }
    }

    pub fn bpm_at(&self, t: f64) -> f64 {
        let k = self.knots();
        if t <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            let ((t0, h0), (t1, h1)) = (w[0], w[1]);
            if t < t1 {
                return h0 + (h1 - h0) * (t - t0) / (t1 - t0);
            }
        }
        k[k.len() - 1].1
    }

    /// `∫ bpm dτ` from the first knot to `t`.
    fn cumulative(&self, t: f64) -> f64 {
        let k = self.knots();
        if t <= k[0].0 {
            return (t - k[0].0) * k[0].1;
        }
        let mut acc = 0.0;
        for w in k.windows(2) {
            let ((t0, h0), (t1, h1)) = (w[0], w[1]);
            if t >= t1 {
                acc += (t1 - t0) * (h0 + h1) / 2.0;
            } else {
                let h = h0 + (h1 - h0) * (t - t0) / (t1 - t0);
                return acc + (t - t0) * (h0 + h) / 2.0;
            }
        }
        let (tl, hl) = k[k.len() - 1];
        acc + (t - tl) * hl
    }

    /// Pulse phase in radians, zero at `t = 0`.
    pub fn phase(&self, t: f64) -> f64 {
        2.0 * PI * (self.cumulative(t) - self.cumulative(0.0)) / 60.0
    }

    pub fn max_bpm(&self) -> f64 {
        self.knots().iter().map(|k| k.1).fold(f64::NEG_INFINITY, f64::max)
    }

    fn validate(&self) -> Result<()> {
        let k = self.knots();
        if k.is_empty() {
            return Err(Error::InvalidSpec("heart-rate profile has no knots".into()));
        }
        if k.iter().any(|(t, b)| !t.is_finite() || !(b.is_finite() && *b > 0.0)) {
            return Err(Error::InvalidSpec("heart rates must be positive and finite".into()));
        }
        if k.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidSpec("heart-rate knots must be strictly increasing in time".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Drift {
    /// Relative amplitude of the multiplicative illumination sinusoid.
    pub amplitude: f64,
    pub frequency_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Motion {
    /// RMS amplitude in intensity counts along `direction`.
    pub amplitude: f64,
    pub direction: [f64; 3],
}

impl Default for Motion {
    fn default() -> Self {
        Self {
            amplitude: 0.0,
            direction: [1.0, 1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub duration_s: f64,
    pub fs: f64,
    pub hr_bpm: HrProfile,
    /// Relative modulation depth of the pulse.
    pub pulse_amplitude: f64,
    /// Second-harmonic amplitude relative to the fundamental; 0 gives a
    /// pure sinusoid.
    pub harmonic_ratio: f64,
    pub pulse_color: [f64; 3],
    /// Mean skin colour in 8-bit counts.
    pub baseline_skin_rgb: [f64; 3],
    pub illumination_drift: Drift,
    pub motion_noise: Motion,
    /// Gaussian sensor noise std in counts.
    pub sensor_noise_std: f64,
    pub quantize_8bit: bool,
    pub seed: u64,
    /// Sampling rate of the written labels; the video rate when absent.
    pub label_fs: Option<f64>,
    /// Delay of the PPG and HR labels relative to the video.
    pub label_lag_s: f64,
    /// Constant error added to the HR label.
    pub hr_label_offset_bpm: f64,
    pub subject_id: Option<String>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            duration_s: 30.0,
            fs: 30.0,
            hr_bpm: HrProfile::Constant(72.0),
            pulse_amplitude: 0.005,
            harmonic_ratio: 0.3,
            pulse_color: [0.33, 0.78, 0.53],
            baseline_skin_rgb: [180.0, 130.0, 110.0],
            illumination_drift: Drift::default(),
            motion_noise: Motion::default(),
            sensor_noise_std: 0.0,
            quantize_8bit: false,
            seed: 0,
            label_fs: None,
            label_lag_s: 0.0,
            hr_label_offset_bpm: 0.0,
            subject_id: None,
        }
    }
}

/// Ground truth accompanying a rendered sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Pulse waveform on the video clock.
    pub pulse: BvpSignal,
    /// Instantaneous heart rate, one entry per video frame.
    pub hr: HrSeries,
    /// Label stream as a dataset would ship it (label clock, lag and offset
    /// applied).
    pub labels: LabelTable,
}

impl SynthSpec {
    /// No drift or motion, and a trace of sensor noise so that every method
    /// sees a full-rank input.
    pub fn clean(hr_bpm: f64, seed: u64) -> Self {
        Self {
            hr_bpm: HrProfile::Constant(hr_bpm),
            sensor_noise_std: 0.05,
            seed,
            ..Self::default()
        }
    }

    /// Sensor noise, motion and mild illumination drift.
    pub fn noisy(hr_bpm: f64, seed: u64) -> Self {
        Self {
            hr_bpm: HrProfile::Constant(hr_bpm),
            sensor_noise_std: 0.5,
            motion_noise: Motion {
                amplitude: 0.5,
                direction: [1.0, 0.8, 0.6],
            },
            illumination_drift: Drift {
                amplitude: 0.005,
                frequency_hz: 0.25,
            },
            seed,
            ..Self::default()
        }
    }

    pub fn subject(&self) -> String {
        self.subject_id
            .clone()
            .unwrap_or_else(|| format!("synth-{:06}", self.seed))
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.fs).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.into()));
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return bad("fs must be positive");
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) || self.n_samples() < 2 {
            return bad("duration must cover at least two frames");
        }
        self.hr_bpm.validate()?;
        if !(self.fs > 2.0 * self.hr_bpm.max_bpm() / 60.0) {
            return bad("fs must exceed twice the highest heart rate");
        }
        let nonneg = [
            self.pulse_amplitude,
            self.harmonic_ratio,
            self.illumination_drift.amplitude,
            self.illumination_drift.frequency_hz,
            self.motion_noise.amplitude,
            self.sensor_noise_std,
        ];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("amplitudes, frequencies and noise levels must be finite and non-negative");
        }
        if self.baseline_skin_rgb.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("baseline skin colour must be positive");
        }
        if self.pulse_color.iter().chain(&self.motion_noise.direction).any(|v| !v.is_finite()) {
            return bad("colour vectors must be finite");
        }
        if self.motion_noise.amplitude > 0.0
            && self.motion_noise.direction.iter().all(|v| *v == 0.0)
        {
            return bad("motion direction must be non-zero");
        }
        if let Some(lf) = self.label_fs {
            if !(lf.is_finite() && lf > 2.0 * self.hr_bpm.max_bpm() / 60.0) {
                return bad("label_fs must exceed twice the highest heart rate");
            }
        }
        if !(self.label_lag_s.is_finite() && self.hr_label_offset_bpm.is_finite()) {
            return bad("label corruption knobs must be finite");
        }
        Ok(())
    }

    /// Beat-shaped pulse at time `t`.
    pub fn pulse_at(&self, t: f64) -> f64 {
        let ph = self.hr_bpm.phase(t);
        ph.sin() + self.harmonic_ratio * (2.0 * ph).sin()
    }
}

/// Random but seed-fixed structure shared by the trace and frame renderers.
struct Nuisance {
    drift_phase: f64,
    motion: Vec<(f64, f64)>,
    motion_dir: [f64; 3],
}

impl Nuisance {
    fn draw(spec: &SynthSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(1);
        let drift_phase = rng.random::<f64>() * 2.0 * PI;
        let motion = (0..MOTION_TONES)
            .map(|_| {
                let f = MOTION_FREQ_HZ.0 + rng.random::<f64>() * (MOTION_FREQ_HZ.1 - MOTION_FREQ_HZ.0);
                (f, rng.random::<f64>() * 2.0 * PI)
            })
            .collect();
        let d = spec.motion_noise.direction;
        let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let motion_dir = if norm > 0.0 { d.map(|v| v / norm) } else { [0.0; 3] };
        Self {
            drift_phase,
            motion,
            motion_dir,
        }
    }

    /// Unit-RMS smooth motion process.
    fn motion_at(&self, t: f64) -> f64 {
        let s: f64 = self.motion.iter().map(|(f, p)| (2.0 * PI * f * t + p).sin()).sum();
        s / (MOTION_TONES as f64 / 2.0).sqrt()
    }
}

/// Noise-free colour at every frame.
fn clean_samples(spec: &SynthSpec) -> Vec<[f64; 3]> {
    let nz = Nuisance::draw(spec);
    (0..spec.n_samples())
        .map(|i| {
            let t = i as f64 / spec.fs;
            let drift = spec.illumination_drift.amplitude
                * (2.0 * PI * spec.illumination_drift.frequency_hz * t + nz.drift_phase).sin();
            let p = spec.pulse_amplitude * spec.pulse_at(t);
            let m = spec.motion_noise.amplitude * nz.motion_at(t);
            std::array::from_fn(|c| {
                spec.baseline_skin_rgb[c] * (1.0 + drift) * (1.0 + p * spec.pulse_color[c])
                    + m * nz.motion_dir[c]
            })
        })
        .collect()
}

fn finish_value(spec: &SynthSpec, v: f64) -> f64 {
    if spec.quantize_8bit {
        v.round().clamp(0.0, 255.0)
    } else {
        v
    }
}

fn noise(spec: &SynthSpec, stream: u64) -> (ChaCha8Rng, Normal<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    let dist = Normal::new(0.0, spec.sensor_noise_std).expect("validated std");
    (rng, dist)
}

fn ground_truth(spec: &SynthSpec) -> Result<GroundTruth> {
    let n = spec.n_samples();
    let pulse = BvpSignal::new(
        (0..n).map(|i| spec.pulse_at(i as f64 / spec.fs)).collect(),
        spec.fs,
        "truth",
    )?;
    let hr = HrSeries {
        entries: (0..n)
            .map(|i| {
                let t = i as f64 / spec.fs;
                HrEntry {
                    window_start_s: t,
                    window_len_s: 1.0 / spec.fs,
                    hr_bpm: Some(spec.hr_bpm.bpm_at(t)),
                }
            })
            .collect(),
        method: HrMethod::Label,
        source_tag: "truth".into(),
    };
    let lfs = spec.label_fs.unwrap_or(spec.fs);
    let ln = (spec.duration_s * lfs).round() as usize;
    let t: Vec<f64> = (0..ln).map(|k| k as f64 / lfs).collect();
    let lag = spec.label_lag_s;
    let labels = LabelTable {
        ppg: Some(t.iter().map(|&t| spec.pulse_at(t - lag)).collect()),
        hr: Some(
            t.iter()
                .map(|&t| spec.hr_bpm.bpm_at(t - lag) + spec.hr_label_offset_bpm)
                .collect(),
        ),
        t,
    };
    Ok(GroundTruth { pulse, hr, labels })
}

pub fn generate_trace(spec: &SynthSpec) -> Result<(RgbTrace, GroundTruth)> {
    spec.validate()?;
    let (mut rng, dist) = noise(spec, 2);
    let samples = clean_samples(spec)
        .into_iter()
        .map(|s| {
            s.map(|v| {
                let e = if spec.sensor_noise_std > 0.0 { dist.sample(&mut rng) } else { 0.0 };
                finish_value(spec, v + e)
            })
        })
        .collect();
    let trace = RgbTrace::new(samples, spec.fs)?.with_subject(spec.subject());
    Ok((trace, ground_truth(spec)?))
}

/// Renders an `h x w` sequence whose pixels share the trace dynamics and
/// carry independent sensor noise.
pub fn generate_frames(spec: &SynthSpec, h: usize, w: usize) -> Result<(FrameSequence, GroundTruth)> {
    spec.validate()?;
    if h < 4 || w < 4 {
        return Err(Error::InvalidSpec(format!("frames must be at least 4x4, got {h}x{w}")));
    }
    let clean = clean_samples(spec);
    let (mut rng, dist) = noise(spec, 3);
    let mut data = Vec::with_capacity(clean.len() * h * w * 3);
    for s in &clean {
        for _ in 0..h * w {
            for v in s {
                let e = if spec.sensor_noise_std > 0.0 { dist.sample(&mut rng) } else { 0.0 };
                data.push(finish_value(spec, v + e));
            }
        }
    }
    let frames = FrameSequence::from_flat(data, h, w, clean.len(), spec.fs)?.with_subject(spec.subject());
    Ok((frames, ground_truth(spec)?))
}

/// Optional frame rendering for [`generate_record`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSize {
    pub height: usize,
    pub width: usize,
}

/// Writes one record (trace, labels, metadata and optionally raw frames)
/// into `root/<subject_id>` and returns that directory.
pub fn generate_record(spec: &SynthSpec, root: &Path, frames: Option<FrameSize>) -> Result<PathBuf> {
    let (trace, truth, frame_seq) = match frames {
        Some(sz) => {
            let (f, truth) = generate_frames(spec, sz.height, sz.width)?;
            let trace = crate::preprocess::spatial_mean(&f)?;
            (trace, truth, Some(f))
        }
        None => {
            let (t, truth) = generate_trace(spec)?;
            (t, truth, None)
        }
    };
    let mut notes = serde_json::Map::new();
    notes.insert("generator".into(), "synth".into());
    notes.insert("seed".into(), spec.seed.into());
    notes.insert("parameters".into(), serde_json::to_value(spec).expect("parameters serialize"));
    let meta = RecordMeta {
        subject_id: spec.subject(),
        fs_video: spec.fs,
        fs_label: Some(spec.label_fs.unwrap_or(spec.fs)),
        notes: serde_json::Value::Object(notes),
    };
    let dir = root.join(spec.subject());
    write_record(&dir, &meta, &trace, Some(&truth.labels), frame_seq.as_ref())?;
    Ok(dir)
}

/// Writes `specs.len()` records under `root`.
pub fn generate_dataset(specs: &[SynthSpec], root: &Path, frames: Option<FrameSize>) -> Result<Vec<PathBuf>> {
    specs.iter().map(|s| generate_record(s, root, frames)).collect()
}

/// `n` clean or noisy specs with heart rates spread evenly over `hr_range`
/// and consecutive seeds from `base_seed`.
pub fn suite(n: usize, hr_range: (f64, f64), base_seed: u64, noisy: bool) -> Vec<SynthSpec> {
    (0..n)
        .map(|i| {
            let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            let hr = hr_range.0 + frac * (hr_range.1 - hr_range.0);
            let seed = base_seed + i as u64;
            if noisy {
                SynthSpec::noisy(hr, seed)
            } else {
                SynthSpec::clean(hr, seed)
            }
        })
        .collect()
}
