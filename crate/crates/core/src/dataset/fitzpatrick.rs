//! Skin-tone bucketing by individual typology angle (ITA) in CIELAB.
//!
//! This is a transparent stand-in for a learned skin-tone classifier:
//! `ITA = atan((L - 50) / b)` in degrees, bucketed into six types.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::rgb_to_yuv;
use crate::trace::FrameSequence;

/// Lower (exclusive) ITA bound of types I..V; anything at or below the last
/// bound is type VI.
pub const ITA_THRESHOLDS: [f64; 5] = [55.0, 41.0, 28.0, 10.0, -30.0];

const DEGENERATE_TOL: f64 = 1e-6;
const D65_WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitzpatrickResult {
    #[serde(rename = "type")]
    pub skin_type: u8,
    pub ita_degrees: f64,
    pub mean_skin_lab: [f64; 3],
}

pub fn ita_bucket(ita_degrees: f64) -> u8 {
    ITA_THRESHOLDS
        .iter()
        .position(|&th| ita_degrees > th)
        .map_or(6, |i| i as u8 + 1)
}

pub fn classify_lab(lab: [f64; 3]) -> Result<FitzpatrickResult> {
    let [l, _, b] = lab;
    if b.abs() < DEGENERATE_TOL && (l - 50.0).abs() < DEGENERATE_TOL {
        return Err(Error::DegenerateColor { l, b });
    }
    let ita = ((l - 50.0) / b).atan().to_degrees();
    Ok(FitzpatrickResult {
        skin_type: ita_bucket(ita),
        ita_degrees: ita,
        mean_skin_lab: lab,
    })
}

/// 8-bit sRGB to CIELAB under D65.
pub fn srgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(|v| {
        let c = (v / 255.0).clamp(0.0, 1.0);
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    });
    let xyz = [
        0.4124564 * lin[0] + 0.3575761 * lin[1] + 0.1804375 * lin[2],
        0.2126729 * lin[0] + 0.7151522 * lin[1] + 0.0721750 * lin[2],
        0.0193339 * lin[0] + 0.1191920 * lin[1] + 0.9503041 * lin[2],
    ];
    let f = |t: f64| {
        const D: f64 = 6.0 / 29.0;
        if t > D * D * D {
            t.cbrt()
        } else {
            t / (3.0 * D * D) + 4.0 / 29.0
        }
    };
    let [fx, fy, fz] = [0, 1, 2].map(|i| f(xyz[i] / D65_WHITE[i]));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub fn classify_rgb(mean_rgb: [f64; 3]) -> Result<FitzpatrickResult> {
    classify_lab(srgb_to_lab(mean_rgb))
}

/// Mean skin colour from frames: per-pixel temporal mean over the central
/// half (in each dimension) of the RoI, dropping the darkest and brightest
/// 10% of pixels by luma.
pub fn skin_color(frames: &FrameSequence) -> Result<[f64; 3]> {
    let roi = frames.roi();
    if roi.width == 0 || roi.height == 0 || frames.is_empty() {
        return Err(Error::EmptyRoi);
    }
    let (ch, cw) = ((roi.height / 2).max(1), (roi.width / 2).max(1));
    let (y0, x0) = (roi.y + (roi.height - ch) / 2, roi.x + (roi.width - cw) / 2);
    let mut pixels: Vec<[f64; 3]> = Vec::with_capacity(ch * cw);
    for y in y0..y0 + ch {
        for x in x0..x0 + cw {
            let mut acc = [0.0; 3];
            for t in 0..frames.len() {
                let p = frames.pixel(t, y, x);
                for c in 0..3 {
                    acc[c] += p[c];
                }
            }
            pixels.push(acc.map(|v| v / frames.len() as f64));
        }
    }
    pixels.sort_by(|a, b| rgb_to_yuv(*a)[0].total_cmp(&rgb_to_yuv(*b)[0]));
    let trim = pixels.len() / 10;
    let kept = &pixels[trim..pixels.len() - trim];
    let mut mean = [0.0; 3];
    for p in kept {
        for c in 0..3 {
            mean[c] += p[c];
        }
    }
    Ok(mean.map(|v| v / kept.len() as f64))
}

pub fn classify_frames(frames: &FrameSequence) -> Result<FitzpatrickResult> {
    classify_rgb(skin_color(frames)?)
}
