use super::{finish, require_len, MethodConfig, MethodId};
use crate::error::{Error, Result};
use crate::signal::{mean, std};
use crate::trace::{BvpSignal, RgbTrace};

/// Plane-orthogonal-to-skin projection. Each window of `window_seconds`
/// (stride one frame) is normalized by its channel means, projected with
/// `[[0, 1, -1], [-2, 1, 1]]`, tuned by the std ratio of the two
/// projections and overlap-added after mean removal.
pub fn pos(trace: &RgbTrace, cfg: &MethodConfig) -> Result<BvpSignal> {
    let l = cfg.window_samples(trace.fs());
    if l > trace.len() {
        return Err(Error::WindowLongerThanTrace {
            window_s: cfg.window_seconds,
            trace_s: trace.duration_s(),
        });
    }
    require_len(trace, l)?;
    let samples = trace.samples();
    let n = samples.len();
    let mut h = vec![0.0; n];
    let mut s1 = vec![0.0; l];
    let mut s2 = vec![0.0; l];
    for m in 0..=n - l {
        let win = &samples[m..m + l];
        let mut mu = [0.0; 3];
        for s in win {
            for c in 0..3 {
                mu[c] += s[c];
            }
        }
        let mu = mu.map(|v| v / l as f64);
        for (i, s) in win.iter().enumerate() {
            let cn: [f64; 3] = std::array::from_fn(|c| if mu[c] != 0.0 { s[c] / mu[c] } else { 0.0 });
            s1[i] = cn[1] - cn[2];
            s2[i] = cn[1] + cn[2] - 2.0 * cn[0];
        }
        let sd2 = std(&s2);
        let alpha = if sd2 > 1e-12 { std(&s1) / sd2 } else { 0.0 };
        let hw: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| a + alpha * b).collect();
        let hm = mean(&hw);
        for (i, v) in hw.iter().enumerate() {
            h[m + i] += v - hm;
        }
    }
    finish(h, trace.fs(), cfg, MethodId::Pos)
}
