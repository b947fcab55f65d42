use super::{finish, require_len, MethodConfig, MethodId};
use crate::error::{Error, Result};
use crate::signal::{hann, mean, std};
use crate::trace::{BvpSignal, RgbTrace};

/// Chrominance method. Windows of `window_seconds` (rounded up to an even
/// sample count) advance by half a window; within each, channels are
/// normalized by their means, `X = 3R - 2G`, `Y = 1.5R + G - 1.5B` and
/// `S = X - (std X / std Y) Y` is Hann-weighted and overlap-added.
pub fn chrom(trace: &RgbTrace, cfg: &MethodConfig) -> Result<BvpSignal> {
    let mut l = cfg.window_samples(trace.fs());
    l += l % 2;
    if l > trace.len() {
        return Err(Error::WindowLongerThanTrace {
            window_s: cfg.window_seconds,
            trace_s: trace.duration_s(),
        });
    }
    require_len(trace, l)?;
    let samples = trace.samples();
    let n = samples.len();
    let step = l / 2;
    let w = hann(l);
    let mut out = vec![0.0; n];
    let mut x = vec![0.0; l];
    let mut y = vec![0.0; l];
    let mut start = 0;
    while start + l <= n {
        let win = &samples[start..start + l];
        let mu: [f64; 3] = std::array::from_fn(|c| win.iter().map(|s| s[c]).sum::<f64>() / l as f64);
        for (i, s) in win.iter().enumerate() {
            let cn: [f64; 3] = std::array::from_fn(|c| if mu[c] != 0.0 { s[c] / mu[c] } else { 0.0 });
            x[i] = 3.0 * cn[0] - 2.0 * cn[1];
            y[i] = 1.5 * cn[0] + cn[1] - 1.5 * cn[2];
        }
        let sy = std(&y);
        let alpha = if sy > 1e-12 { std(&x) / sy } else { 0.0 };
        let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - alpha * b).collect();
        let sm = mean(&s);
        for i in 0..l {
            out[start + i] += (s[i] - sm) * w[i];
        }
        start += step;
    }
    finish(out, trace.fs(), cfg, MethodId::Chrom)
}
