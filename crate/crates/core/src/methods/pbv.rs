use nalgebra::{Matrix3, Vector3};

use super::{finish, require_len, MethodConfig, MethodId};
use crate::error::{Error, Result};
use crate::trace::{BvpSignal, RgbTrace};

const GRAM_RIDGE: f64 = 1e-9;

/// Blood-volume pulse signature method. With `C` the mean-normalized,
/// mean-removed 3xN trace, the projection `W ∝ Q⁻¹ pbv` (`Q = C Cᵀ`) is the
/// minimum-energy combination that keeps unit gain along the signature.
pub fn pbv(trace: &RgbTrace, cfg: &MethodConfig) -> Result<BvpSignal> {
    require_len(trace, (2.0 * trace.fs()).ceil() as usize)?;
    let n = trace.len() as f64;
    let ch = trace.channels().map(|c| {
        let m = c.iter().sum::<f64>() / n;
        if m == 0.0 {
            vec![0.0; c.len()]
        } else {
            c.iter().map(|v| v / m - 1.0).collect::<Vec<f64>>()
        }
    });
    let q = Matrix3::from_fn(|i, j| ch[i].iter().zip(&ch[j]).map(|(a, b)| a * b).sum::<f64>())
        + Matrix3::identity() * GRAM_RIDGE;
    let sig = Vector3::from(cfg.unit_signature());
    let qinv_sig = q.cholesky().ok_or(Error::SingularGram)?.solve(&sig);
    let denom = sig.dot(&qinv_sig);
    if !(denom.is_finite() && denom > 0.0) {
        return Err(Error::SingularGram);
    }
    let w = qinv_sig / denom;
    let s: Vec<f64> = (0..trace.len())
        .map(|t| w[0] * ch[0][t] + w[1] * ch[1][t] + w[2] * ch[2][t])
        .collect();
    finish(s, trace.fs(), cfg, MethodId::Pbv)
}
