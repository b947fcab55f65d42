//! Signal containers shared by every stage of the pipeline.
//!
//! `RgbTrace` holds per-frame spatial means, `FrameSequence` holds the pixels
//! themselves (needed by SSR and STmap), and `BvpSignal` is the 1-D pulse
//! waveform every extraction method produces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-frame spatial-mean colour trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RgbTrace {
    samples: Vec<[f64; 3]>,
    fs: f64,
    subject_id: String,
    t0: f64,
    normalized: bool,
}

impl RgbTrace {
    /// Builds a trace on the 0–255 intensity scale.
    pub fn new(samples: Vec<[f64; 3]>, fs: f64) -> Result<Self> {
        Self::build(samples, fs, String::new(), 0.0, false)
    }

    /// Builds a trace whose values are flagged as normalized to [0, 1].
    pub fn new_normalized(samples: Vec<[f64; 3]>, fs: f64) -> Result<Self> {
        Self::build(samples, fs, String::new(), 0.0, true)
    }

    fn build(
        samples: Vec<[f64; 3]>,
        fs: f64,
        subject_id: String,
        t0: f64,
        normalized: bool,
    ) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidTrace(format!("sampling rate {fs} must be positive")));
        }
        if samples.len() < 2 {
            return Err(Error::TraceTooShort {
                len: samples.len(),
                min: 2,
            });
        }
        for (index, s) in samples.iter().enumerate() {
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput { index });
            }
            if normalized && s.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidTrace(format!(
                    "sample {index} outside [0, 1] in a normalized trace"
                )));
            }
        }
        Ok(Self {
            samples,
            fs,
            subject_id,
            t0,
            normalized,
        })
    }

    pub fn with_subject(mut self, subject_id: impl Into<String>) -> Self {
        self.subject_id = subject_id.into();
        self
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// One colour channel (0 = R, 1 = G, 2 = B) as a plain vector.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[c]).collect()
    }

    pub fn channels(&self) -> [Vec<f64>; 3] {
        [self.channel(0), self.channel(1), self.channel(2)]
    }

    /// Multiplies every value by `gain`. Drops the normalized flag when the
    /// result could leave [0, 1].
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| [s[0] * gain, s[1] * gain, s[2] * gain])
            .collect();
        let normalized = self.normalized && (0.0..=1.0).contains(&gain);
        Self::build(samples, self.fs, self.subject_id.clone(), self.t0, normalized)
    }

    /// Frame timestamps in seconds.
    pub fn times(&self) -> Vec<f64> {
        (0..self.samples.len())
            .map(|i| self.t0 + i as f64 / self.fs)
            .collect()
    }
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// Decoded RoI pixel data for a clip. Pixels are stored interleaved
/// (`[r, g, b]` per pixel) in row-major order, one frame after another.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    data: Vec<f64>,
    height: usize,
    width: usize,
    count: usize,
    fs: f64,
    roi: Roi,
    subject_id: String,
}

impl FrameSequence {
    /// `frames` holds one `height * width * 3` interleaved buffer per frame.
    /// The RoI defaults to the whole frame.
    pub fn new(frames: Vec<Vec<f64>>, height: usize, width: usize, fs: f64) -> Result<Self> {
        let frame_len = height * width * 3;
        if frame_len == 0 {
            return Err(Error::InvalidFrames("frame dimensions must be non-zero".into()));
        }
        let count = frames.len();
        let mut data = Vec::with_capacity(frame_len * count);
        for (i, f) in frames.into_iter().enumerate() {
            if f.len() != frame_len {
                return Err(Error::InvalidFrames(format!(
                    "frame {i} has {} values, expected {frame_len}",
                    f.len()
                )));
            }
            data.extend(f);
        }
        Self::from_flat(data, height, width, count, fs)
    }

    pub fn from_flat(
        data: Vec<f64>,
        height: usize,
        width: usize,
        count: usize,
        fs: f64,
    ) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidFrames(format!("sampling rate {fs} must be positive")));
        }
        if height == 0 || width == 0 {
            return Err(Error::InvalidFrames("frame dimensions must be non-zero".into()));
        }
        if data.len() != height * width * 3 * count {
            return Err(Error::InvalidFrames(format!(
                "buffer holds {} values, expected {}",
                data.len(),
                height * width * 3 * count
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        Ok(Self {
            data,
            height,
            width,
            count,
            fs,
            roi: Roi {
                x: 0,
                y: 0,
                width,
                height,
            },
            subject_id: String::new(),
        })
    }

    pub fn with_roi(mut self, roi: Roi) -> Result<Self> {
        if roi.x + roi.width > self.width || roi.y + roi.height > self.height {
            return Err(Error::InvalidFrames(format!(
                "roi {roi:?} exceeds frame {}x{}",
                self.height, self.width
            )));
        }
        self.roi = roi;
        Ok(self)
    }

    pub fn with_subject(mut self, subject_id: impl Into<String>) -> Self {
        self.subject_id = subject_id.into();
        self
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn roi(&self) -> Roi {
        self.roi
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    /// Interleaved RGB buffer of frame `t`.
    pub fn frame(&self, t: usize) -> &[f64] {
        let n = self.height * self.width * 3;
        &self.data[t * n..(t + 1) * n]
    }

    pub fn pixel(&self, t: usize, y: usize, x: usize) -> [f64; 3] {
        let f = self.frame(t);
        let i = (y * self.width + x) * 3;
        [f[i], f[i + 1], f[i + 2]]
    }

    /// Iterates over the RoI pixels of frame `t`.
    pub fn roi_pixels(&self, t: usize) -> impl Iterator<Item = [f64; 3]> + '_ {
        let roi = self.roi;
        (roi.y..roi.y + roi.height)
            .flat_map(move |y| (roi.x..roi.x + roi.width).map(move |x| (y, x)))
            .map(move |(y, x)| self.pixel(t, y, x))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Extracted pulse waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvpSignal {
    pub samples: Vec<f64>,
    pub fs: f64,
    pub method_tag: String,
}

impl BvpSignal {
    pub fn new(samples: Vec<f64>, fs: f64, method_tag: impl Into<String>) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidTrace(format!("sampling rate {fs} must be positive")));
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        Ok(Self {
            samples,
            fs,
            method_tag: method_tag.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelSpace {
    Rgb,
    Yuv,
}

/// Spatial-temporal map: one row per RoI block, one column per frame, for
/// each of the three channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StMap {
    /// `channels[c][block][frame]`.
    pub channels: [Vec<Vec<f64>>; 3],
    pub block_grid: (usize, usize),
    pub fs: f64,
    pub channel_space: ChannelSpace,
}

impl StMap {
    pub fn n_blocks(&self) -> usize {
        self.block_grid.0 * self.block_grid.1
    }

    pub fn n_frames(&self) -> usize {
        self.channels[0].first().map_or(0, Vec::len)
    }
}
