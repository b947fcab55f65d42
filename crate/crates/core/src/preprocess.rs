//! Preprocessing transforms: difference normalization, z-score (re-exported
//! from [`crate::signal`]), spatial averaging and spatial-temporal maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::std;
use crate::trace::{ChannelSpace, FrameSequence, RgbTrace, StMap};

pub use crate::signal::zscore;

/// Added to a difference-normalization denominator when it is zero.
pub const DIFF_EPSILON: f64 = 1e-6;

/// Output of [`diff_normalize`]: three channels, one sample shorter than the
/// source trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffNormalized {
    pub channels: [Vec<f64>; 3],
    pub fs: f64,
}

impl DiffNormalized {
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels[0].is_empty()
    }
}

/// `(C(t+1) - C(t)) / (C(t+1) + C(t))` per channel, before std scaling.
pub fn normalized_difference(x: &[f64]) -> Vec<f64> {
    x.windows(2)
        .map(|w| {
            let den = w[1] + w[0];
            let den = if den == 0.0 { DIFF_EPSILON } else { den };
            (w[1] - w[0]) / den
        })
        .collect()
}

/// Normalized frame difference of each channel, divided by that channel's
/// standard deviation. Channels with zero spread are left unscaled.
pub fn diff_normalize(trace: &RgbTrace) -> Result<DiffNormalized> {
    if trace.len() < 2 {
        return Err(Error::TraceTooShort {
            len: trace.len(),
            min: 2,
        });
    }
    let channels = trace.channels().map(|c| {
        let d = normalized_difference(&c);
        let s = std(&d);
        if s > 0.0 {
            d.iter().map(|v| v / s).collect()
        } else {
            d
        }
    });
    for c in &channels {
        if let Some(index) = c.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
    }
    Ok(DiffNormalized {
        channels,
        fs: trace.fs(),
    })
}

/// Per-frame mean of each channel over the RoI.
pub fn spatial_mean(frames: &FrameSequence) -> Result<RgbTrace> {
    let roi = frames.roi();
    if roi.width == 0 || roi.height == 0 {
        return Err(Error::EmptyRoi);
    }
    let n = (roi.width * roi.height) as f64;
    let samples = (0..frames.len())
        .map(|t| {
            let mut acc = [0.0; 3];
            for p in frames.roi_pixels(t) {
                acc[0] += p[0];
                acc[1] += p[1];
                acc[2] += p[2];
            }
            acc.map(|v| v / n)
        })
        .collect();
    Ok(RgbTrace::new(samples, frames.fs())?.with_subject(frames.subject_id()))
}

/// BT.601 analog YUV from RGB.
pub fn rgb_to_yuv(p: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = p;
    [
        0.299 * r + 0.587 * g + 0.114 * b,
        -0.14713 * r - 0.28886 * g + 0.436 * b,
        0.615 * r - 0.51499 * g - 0.10001 * b,
    ]
}

/// Block means before row normalization: `out[c][block][frame]`. Blocks are
/// laid out row-major over the grid; RoI pixels beyond the last whole block
/// are dropped.
pub fn block_means(
    frames: &FrameSequence,
    grid: (usize, usize),
    space: ChannelSpace,
) -> Result<[Vec<Vec<f64>>; 3]> {
    let roi = frames.roi();
    if roi.width == 0 || roi.height == 0 {
        return Err(Error::EmptyRoi);
    }
    let (rows, cols) = grid;
    if rows == 0 || cols == 0 || rows > roi.height || cols > roi.width {
        return Err(Error::GridLargerThanRoi {
            rows,
            cols,
            roi_h: roi.height,
            roi_w: roi.width,
        });
    }
    let (bh, bw) = (roi.height / rows, roi.width / cols);
    let per_block = (bh * bw) as f64;
    let n_blocks = rows * cols;
    let mut out: [Vec<Vec<f64>>; 3] =
        std::array::from_fn(|_| vec![Vec::with_capacity(frames.len()); n_blocks]);
    for t in 0..frames.len() {
        for br in 0..rows {
            for bc in 0..cols {
                let mut acc = [0.0; 3];
                for y in roi.y + br * bh..roi.y + (br + 1) * bh {
                    for x in roi.x + bc * bw..roi.x + (bc + 1) * bw {
                        let p = frames.pixel(t, y, x);
                        let p = match space {
                            ChannelSpace::Rgb => p,
                            ChannelSpace::Yuv => rgb_to_yuv(p),
                        };
                        for c in 0..3 {
                            acc[c] += p[c];
                        }
                    }
                }
                for c in 0..3 {
                    out[c][br * cols + bc].push(acc[c] / per_block);
                }
            }
        }
    }
    Ok(out)
}

/// Min-max normalizes a row to [0, 1]; a constant row becomes all 0.5.
pub fn minmax_row(row: &[f64]) -> Vec<f64> {
    let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.5; row.len()];
    }
    row.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

pub fn make_stmap(
    frames: &FrameSequence,
    grid: (usize, usize),
    channel_space: ChannelSpace,
) -> Result<StMap> {
    let raw = block_means(frames, grid, channel_space)?;
    let channels = raw.map(|rows| rows.iter().map(|r| minmax_row(r)).collect());
    Ok(StMap {
        channels,
        block_grid: grid,
        fs: frames.fs(),
        channel_space,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Roi;

    fn uniform_frames(values: &[[f64; 3]], h: usize, w: usize) -> FrameSequence {
        let frames = values
            .iter()
            .map(|p| (0..h * w).flat_map(|_| p.iter().copied()).collect())
            .collect();
        FrameSequence::new(frames, h, w, 30.0).unwrap()
    }

    #[test]
    fn constant_trace_gives_zero_diff() {
        let t = RgbTrace::new(vec![[128.0; 3]; 20], 30.0).unwrap();
        let d = diff_normalize(&t).unwrap();
        assert_eq!(d.len(), 19);
        assert!(d.channels.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn two_sample_raw_difference() {
        let raw = normalized_difference(&[100.0, 102.0]);
        assert!((raw[0] - 2.0 / 202.0).abs() < 1e-15);
        assert!((raw[0] - 0.009901).abs() < 1e-6);
    }

    #[test]
    fn zero_sum_uses_epsilon() {
        let raw = normalized_difference(&[0.0, 0.0, 1.0]);
        assert_eq!(raw[0], 0.0);
        assert!(raw.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn diff_normalize_unit_std() {
        let s: Vec<[f64; 3]> = (0..100)
            .map(|i| {
                let v = 100.0 + (i as f64 * 0.3).sin() * 5.0;
                [v, v * 1.1, v * 0.9]
            })
            .collect();
        let d = diff_normalize(&RgbTrace::new(s, 30.0).unwrap()).unwrap();
        for c in &d.channels {
            assert!((std(c) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spatial_mean_uniform_and_checkerboard() {
        let f = uniform_frames(&[[10.0, 20.0, 30.0]], 4, 4);
        assert!(matches!(spatial_mean(&f), Err(Error::TraceTooShort { .. })));
        let f = uniform_frames(&[[10.0, 20.0, 30.0], [10.0, 20.0, 30.0]], 4, 4);
        assert_eq!(spatial_mean(&f).unwrap().samples()[0], [10.0, 20.0, 30.0]);

        let frame: Vec<f64> = (0..16)
            .flat_map(|i| {
                let v = if (i / 4 + i % 4) % 2 == 0 { 0.0 } else { 255.0 };
                [v; 3]
            })
            .collect();
        let f = FrameSequence::new(vec![frame.clone(), frame], 4, 4, 30.0).unwrap();
        assert_eq!(spatial_mean(&f).unwrap().samples()[0], [127.5; 3]);
    }

    #[test]
    fn stmap_uniform_rows_are_half() {
        let f = uniform_frames(&[[90.0; 3]; 5], 4, 4);
        let m = make_stmap(&f, (2, 2), ChannelSpace::Rgb).unwrap();
        assert_eq!(m.n_blocks(), 4);
        assert!(m.channels.iter().flatten().flatten().all(|v| *v == 0.5));
    }

    #[test]
    fn stmap_ramp_top_constant_bottom() {
        let (h, w, n) = (4, 2, 6);
        let frames: Vec<Vec<f64>> = (0..n)
            .map(|t| {
                let top = 255.0 * t as f64 / (n - 1) as f64;
                (0..h * w)
                    .flat_map(|i| if i / w < h / 2 { [top; 3] } else { [40.0; 3] })
                    .collect()
            })
            .collect();
        let f = FrameSequence::new(frames, h, w, 30.0).unwrap();
        let m = make_stmap(&f, (2, 1), ChannelSpace::Rgb).unwrap();
        for c in 0..3 {
            for (t, v) in m.channels[c][0].iter().enumerate() {
                assert!((v - t as f64 / (n - 1) as f64).abs() < 1e-12);
            }
            assert!(m.channels[c][1].iter().all(|v| *v == 0.5));
        }
    }

    #[test]
    fn single_block_equals_spatial_mean() {
        let frames: Vec<Vec<f64>> = (0..4)
            .map(|t| (0..5 * 3 * 3).map(|i| ((i * 7 + t * 13) % 256) as f64).collect())
            .collect();
        let f = FrameSequence::new(frames, 5, 3, 30.0)
            .unwrap()
            .with_roi(Roi {
                x: 0,
                y: 1,
                width: 3,
                height: 4,
            })
            .unwrap();
        let raw = block_means(&f, (1, 1), ChannelSpace::Rgb).unwrap();
        let trace = spatial_mean(&f).unwrap();
        for (t, s) in trace.samples().iter().enumerate() {
            for c in 0..3 {
                assert!((raw[c][0][t] - s[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_errors() {
        let f = uniform_frames(&[[1.0; 3]; 2], 4, 4);
        assert!(matches!(
            make_stmap(&f, (5, 1), ChannelSpace::Rgb),
            Err(Error::GridLargerThanRoi { .. })
        ));
        assert!(matches!(
            make_stmap(&f, (0, 1), ChannelSpace::Yuv),
            Err(Error::GridLargerThanRoi { .. })
        ));
    }

    #[test]
    fn yuv_of_gray_has_zero_chroma() {
        let y = rgb_to_yuv([100.0, 100.0, 100.0]);
        assert!((y[0] - 100.0).abs() < 1e-9);
        assert!(y[1].abs() < 1e-3 && y[2].abs() < 1e-3);
    }
}
