use nalgebra::{Matrix3, Vector3};

use super::{sym_eigen_desc, MethodConfig, MethodId};
use crate::error::{Error, Result};
use crate::signal::{bandpass, bandpass_min_len, mean, standardize_or_zero, std};
use crate::trace::{BvpSignal, FrameSequence};

/// Spatial subspace rotation. Each frame's RoI pixels give a 3x3
/// correlation matrix whose eigenvectors span the skin-colour subspace.
/// Over every run of `ssr_stride_frames` frames the leading eigenvector of
/// frame `t` is projected onto the two minor eigenvectors of the run's first
/// frame `τ`, scaled by `sqrt(λ1(t) / λk(τ))`; the back-projected R and G
/// traces are combined by their std ratio and overlap-added.
pub fn ssr(frames: &FrameSequence, cfg: &MethodConfig) -> Result<BvpSignal> {
    let l = cfg.ssr_stride_frames;
    let k_total = frames.len();
    let roi = frames.roi();
    if roi.width == 0 || roi.height == 0 {
        return Err(Error::EmptyRoi);
    }
    let min = (l + 1).max(bandpass_min_len() + 1);
    if k_total < min {
        return Err(Error::TraceTooShort { len: k_total, min });
    }

    let npx = (roi.width * roi.height) as f64;
    let mut lambdas = Vec::with_capacity(k_total);
    let mut bases = Vec::with_capacity(k_total);
    for t in 0..k_total {
        let mut c = Matrix3::zeros();
        for p in frames.roi_pixels(t) {
            let v = Vector3::from(p);
            c += v * v.transpose();
        }
        let (vals, vecs) = sym_eigen_desc(c / npx);
        lambdas.push(vals);
        bases.push(vecs);
    }

    let mut out = vec![0.0; k_total];
    let mut sr = [vec![0.0; l], vec![0.0; l]];
    for tau in 0..=k_total - l {
        let [_, l2, l3] = lambdas[tau];
        if !(l2 > 1e-12 * lambdas[tau][0] && l3 > 1e-12 * lambdas[tau][0]) {
            return Err(Error::DegenerateEigenstructure { frame: tau });
        }
        let (u2, u3) = (bases[tau][1], bases[tau][2]);
        for (z, t) in (tau..tau + l).enumerate() {
            let u1 = bases[t][0];
            let l1 = lambdas[t][0];
            let rot = u2 * ((l1 / l2).sqrt() * snap(u1.dot(&u2))) + u3 * ((l1 / l3).sqrt() * snap(u1.dot(&u3)));
            sr[0][z] = rot[0];
            sr[1][z] = rot[1];
        }
        let s1 = std(&sr[1]);
        let alpha = if s1 > 1e-15 { std(&sr[0]) / s1 } else { 0.0 };
        let p: Vec<f64> = sr[0].iter().zip(&sr[1]).map(|(a, b)| a - alpha * b).collect();
        let pm = mean(&p);
        for (z, v) in p.iter().enumerate() {
            out[tau + z] += v - pm;
        }
    }

    let filtered = bandpass(&out, frames.fs(), cfg.band.0, cfg.band.1)?;
    BvpSignal::new(standardize_or_zero(&filtered), frames.fs(), MethodId::Ssr.as_str())
}

/// Dot products of unit eigenvectors below round-off are treated as exact
/// zeros, so a static scene yields no rotation at all.
fn snap(d: f64) -> f64 {
    if d.abs() < 1e-12 {
        0.0
    } else {
        d
    }
}
