//! Classical (non-learned) pulse extraction methods.
//!
//! Every method maps an [`RgbTrace`] to a [`BvpSignal`], except SSR which
//! needs the pixels of a [`FrameSequence`]. [`run_method`] dispatches by
//! [`MethodId`] and reduces frames to a trace for the trace-based methods.

mod chrom;
mod green;
mod ica;
pub mod jade;
mod lgi;
mod pbv;
mod pca;
mod pos;
mod ssr;

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::spatial_mean;
use crate::signal::{band_peak_ratio, bandpass, bandpass_min_len, DEFAULT_BAND};
use crate::trace::{BvpSignal, FrameSequence, RgbTrace};

pub use chrom::chrom;
pub use green::green;
pub use ica::ica;
pub use lgi::{lgi, lgi_projection};
pub use pbv::pbv;
pub use pca::pca;
pub use pos::pos;
pub use ssr::ssr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MethodId {
    Green,
    Ica,
    Pca,
    Chrom,
    Pbv,
    Pos,
    Ssr,
    Lgi,
}

impl MethodId {
    pub const ALL: [MethodId; 8] = [
        MethodId::Green,
        MethodId::Ica,
        MethodId::Pca,
        MethodId::Chrom,
        MethodId::Pbv,
        MethodId::Pos,
        MethodId::Ssr,
        MethodId::Lgi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Green => "GREEN",
            MethodId::Ica => "ICA",
            MethodId::Pca => "PCA",
            MethodId::Chrom => "CHROM",
            MethodId::Pbv => "PBV",
            MethodId::Pos => "POS",
            MethodId::Ssr => "SSR",
            MethodId::Lgi => "LGI",
        }
    }

    pub fn requires_frames(self) -> bool {
        self == MethodId::Ssr
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// How a multi-component method picks its output component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ComponentSelection {
    /// The second component in the method's native ordering.
    FixedSecond,
    /// The component with the largest in-band spectral peak relative to its
    /// total power.
    MaxSpectralPeak,
}

/// Hyperparameters for all methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodConfig {
    /// Sliding-window length for CHROM and POS.
    pub window_seconds: f64,
    /// `None` picks each method's own default.
    pub component_selection: Option<ComponentSelection>,
    pub pbv_signature: [f64; 3],
    pub ssr_stride_frames: usize,
    pub band: (f64, f64),
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            window_seconds: 1.6,
            component_selection: None,
            pbv_signature: [0.33, 0.78, 0.53],
            ssr_stride_frames: 20,
            band: DEFAULT_BAND,
        }
    }
}

impl MethodConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_seconds.is_finite() && self.window_seconds > 0.0) {
            return Err(Error::config("window_seconds", "must be positive"));
        }
        if self.ssr_stride_frames == 0 {
            return Err(Error::config("ssr_stride_frames", "must be at least 1"));
        }
        let norm = self.pbv_signature.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::config("pbv_signature", "must be a non-zero vector"));
        }
        let (lo, hi) = self.band;
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::config("band", format!("[{lo}, {hi}] is not a valid band")));
        }
        Ok(())
    }

    /// The PBV signature scaled to unit norm.
    pub fn unit_signature(&self) -> [f64; 3] {
        let n = self.pbv_signature.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.pbv_signature.map(|v| v / n)
    }

    pub(crate) fn selection_or(&self, default: ComponentSelection) -> ComponentSelection {
        self.component_selection.unwrap_or(default)
    }

    pub(crate) fn window_samples(&self, fs: f64) -> usize {
        (self.window_seconds * fs).ceil().max(2.0) as usize
    }
}

/// Input accepted by [`run_method`].
#[derive(Debug, Clone, Copy)]
pub enum MethodInput<'a> {
    Trace(&'a RgbTrace),
    Frames(&'a FrameSequence),
}

/// Runs `id` on `input`. Trace methods given frames run on the RoI
/// spatial-mean trace; SSR given a trace fails with `IncompatibleInput`.
pub fn run_method(id: MethodId, input: MethodInput<'_>, cfg: &MethodConfig) -> Result<BvpSignal> {
    cfg.validate()?;
    let owned;
    let trace = match (id, input) {
        (MethodId::Ssr, MethodInput::Frames(f)) => return ssr(f, cfg),
        (MethodId::Ssr, MethodInput::Trace(_)) => {
            return Err(Error::IncompatibleInput {
                method: id.to_string(),
            })
        }
        (_, MethodInput::Trace(t)) => t,
        (_, MethodInput::Frames(f)) => {
            owned = spatial_mean(f)?;
            &owned
        }
    };
    match id {
        MethodId::Green => green(trace, cfg),
        MethodId::Ica => ica(trace, cfg),
        MethodId::Pca => pca(trace, cfg),
        MethodId::Chrom => chrom(trace, cfg),
        MethodId::Pbv => pbv(trace, cfg),
        MethodId::Pos => pos(trace, cfg),
        MethodId::Lgi => lgi(trace, cfg),
        MethodId::Ssr => unreachable!("handled above"),
    }
}

/// Band-passes a raw method output and tags it.
pub(crate) fn finish(raw: Vec<f64>, fs: f64, cfg: &MethodConfig, id: MethodId) -> Result<BvpSignal> {
    let out = bandpass(&raw, fs, cfg.band.0, cfg.band.1)?;
    BvpSignal::new(out, fs, id.as_str())
}

pub(crate) fn require_len(trace: &RgbTrace, min: usize) -> Result<()> {
    let min = min.max(bandpass_min_len() + 1);
    if trace.len() < min {
        return Err(Error::TraceTooShort {
            len: trace.len(),
            min,
        });
    }
    Ok(())
}

/// Index of the component to output.
pub(crate) fn select_component(
    components: &[Vec<f64>],
    fs: f64,
    band: (f64, f64),
    selection: ComponentSelection,
) -> usize {
    match selection {
        ComponentSelection::FixedSecond => 1.min(components.len() - 1),
        ComponentSelection::MaxSpectralPeak => {
            let mut best = (0, f64::NEG_INFINITY);
            for (i, c) in components.iter().enumerate() {
                let r = band_peak_ratio(c, fs, band);
                if r > best.1 {
                    best = (i, r);
                }
            }
            best.0
        }
    }
}

/// Flips the sign of each entry so the first entry with magnitude above
/// `1e-12` is positive.
pub(crate) fn canonical_sign(v: Vector3<f64>) -> Vector3<f64> {
    match v.iter().find(|x| x.abs() > 1e-12) {
        Some(x) if *x < 0.0 => -v,
        _ => v,
    }
}

/// Eigen-decomposition of a symmetric 3x3 matrix with eigenvalues in
/// descending order and eigenvectors under [`canonical_sign`]. Ties keep
/// the solver's order, which is deterministic.
pub fn sym_eigen_desc(m: Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let eig = SymmetricEigen::new(m);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = idx.map(|i| eig.eigenvalues[i]);
    let vectors = idx.map(|i| canonical_sign(eig.eigenvectors.column(i).into_owned()));
    (values, vectors)
}

/// Sample covariance (divide by N) of three equally long series.
pub fn covariance3(ch: &[Vec<f64>; 3]) -> Matrix3<f64> {
    let n = ch[0].len() as f64;
    let means: [f64; 3] = std::array::from_fn(|i| ch[i].iter().sum::<f64>() / n);
    Matrix3::from_fn(|i, j| {
        ch[i]
            .iter()
            .zip(&ch[j])
            .map(|(a, b)| (a - means[i]) * (b - means[j]))
            .sum::<f64>()
            / n
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_ids_parse_case_insensitively() {
        assert_eq!("pos".parse::<MethodId>().unwrap(), MethodId::Pos);
        assert_eq!("CHROM".parse::<MethodId>().unwrap(), MethodId::Chrom);
        assert!("OMIT".parse::<MethodId>().is_err());
        assert!(MethodId::Ssr.requires_frames());
        assert!(!MethodId::Lgi.requires_frames());
    }

    #[test]
    fn config_validation() {
        assert!(MethodConfig::default().validate().is_ok());
        let bad = MethodConfig {
            ssr_stride_frames: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MethodConfig {
            pbv_signature: [0.0; 3],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let sig = MethodConfig::default().unit_signature();
        let n: f64 = sig.iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_sorted_and_signed() {
        let m = Matrix3::new(2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 1.0);
        let (vals, vecs) = sym_eigen_desc(m);
        assert_eq!(vals, [5.0, 2.0, 1.0]);
        for v in &vecs {
            let first = v.iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
        assert!((vecs[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_preserves_covariance_spectrum() {
        let ch: [Vec<f64>; 3] = std::array::from_fn(|c| {
            (0..200)
                .map(|i| ((i * (c + 3) * 7919) % 101) as f64 * 0.1 + (i as f64 * 0.05 * (c + 1) as f64).sin())
                .collect()
        });
        let (a, b) = (0.7f64, -1.1f64);
        let rz = Matrix3::new(a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0);
        let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, b.cos(), -b.sin(), 0.0, b.sin(), b.cos());
        let r = rz * rx;
        let rotated: [Vec<f64>; 3] = std::array::from_fn(|i| {
            (0..200)
                .map(|t| (0..3).map(|j| r[(i, j)] * ch[j][t]).sum())
                .collect()
        });
        let (v1, _) = sym_eigen_desc(covariance3(&ch));
        let (v2, _) = sym_eigen_desc(covariance3(&rotated));
        for (x, y) in v1.iter().zip(&v2) {
            assert!((x - y).abs() < 1e-9 * v1[0]);
        }
    }
}
