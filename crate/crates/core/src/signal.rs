//! Basic 1-D signal utilities: moments, detrending, z-scoring, the
//! zero-phase Butterworth band-pass and a zero-padded power spectrum.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Default heart-rate band in Hz (40–180 bpm).
pub const DEFAULT_BAND: (f64, f64) = (0.66, 3.0);

/// Order of the analog low-pass prototype; the band-pass is twice this.
pub const BUTTER_ORDER: usize = 2;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation (divide by N).
pub fn std(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Removes the least-squares straight line.
pub fn detrend(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let tm = (n as f64 - 1.0) / 2.0;
    let xm = mean(x);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let dt = i as f64 - tm;
        sxy += dt * (v - xm);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    x.iter()
        .enumerate()
        .map(|(i, v)| v - xm - slope * (i as f64 - tm))
        .collect()
}

/// Subtracts the mean and divides by the population standard deviation.
pub fn zscore(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::InsufficientData { len: x.len(), min: 2 });
    }
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput { index });
    }
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let m = mean(x);
    let s = std(x);
    if scale == 0.0 || s <= 1e-12 * scale {
        return Err(Error::ConstantSignal { std: s });
    }
    Ok(x.iter().map(|v| (v - m) / s).collect())
}

/// Subtracts the mean and scales to unit std, leaving near-constant input as
/// zeros instead of failing.
pub(crate) fn standardize_or_zero(x: &[f64]) -> Vec<f64> {
    zscore(x).unwrap_or_else(|_| vec![0.0; x.len()])
}

pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// One second-order section, `b` numerator and `a` denominator (`a[0] == 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Steady-state transposed direct-form II state for a unit step.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z1 = self.b[2] - self.a[2] * g;
        let z0 = self.b[1] - self.a[1] * g + z1;
        [z0, z1]
    }

    fn run(&self, x: &mut [f64], mut z: [f64; 2]) {
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + z[0];
            z[0] = self.b[1] * input - self.a[1] * y + z[1];
            z[1] = self.b[2] * input - self.a[2] * y;
            *v = y;
        }
    }
}

/// Digital Butterworth band-pass as cascaded second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterBandpass {
    sections: Vec<Biquad>,
}

impl ButterBandpass {
    /// Designs an order-`2 * order` band-pass through the bilinear transform
    /// with pre-warped edges.
    pub fn design(order: usize, lo: f64, hi: f64, fs: f64) -> Result<Self> {
        let nyq = fs / 2.0;
        if !(lo > 0.0 && lo < hi && hi < nyq) || order == 0 {
            return Err(Error::InvalidBand { lo, hi, fs });
        }
        let warp = |f: f64| 2.0 * fs * (std::f64::consts::PI * f / fs).tan();
        let (wl, wh) = (warp(lo), warp(hi));
        let bw = wh - wl;
        let wo2 = wl * wh;
        let fs2 = Complex64::new(2.0 * fs, 0.0);

        let mut analog_poles = Vec::with_capacity(2 * order);
        for k in 0..order {
            let theta = std::f64::consts::PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let p = Complex64::from_polar(1.0, theta) * (bw / 2.0);
            let disc = (p * p - wo2).sqrt();
            analog_poles.push(p + disc);
            analog_poles.push(p - disc);
        }
        // Analog gain bw^order with `order` zeros at s = 0; the bilinear
        // transform maps those to z = 1 and the zeros at infinity to z = -1.
        let mut gain = Complex64::new(bw.powi(order as i32), 0.0);
        for _ in 0..order {
            gain *= fs2;
        }
        let mut digital_poles: Vec<Complex64> = Vec::with_capacity(analog_poles.len());
        for p in &analog_poles {
            gain /= fs2 - p;
            digital_poles.push((fs2 + p) / (fs2 - p));
        }

        let mut upper: Vec<Complex64> = digital_poles.into_iter().filter(|p| p.im >= 0.0).collect();
        upper.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        let mut sections: Vec<Biquad> = upper
            .iter()
            .map(|p| Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -2.0 * p.re, p.norm_sqr()],
            })
            .collect();
        let g = gain.re;
        for v in sections[0].b.iter_mut() {
            *v *= g;
        }
        Ok(Self { sections })
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Samples of odd extension added at each end by [`Self::filtfilt`].
    pub fn pad_len(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }

    fn forward(&self, x: &mut [f64]) {
        let x0 = x[0];
        let mut scale = 1.0;
        for s in &self.sections {
            let zi = s.step_state();
            s.run(x, [zi[0] * scale * x0, zi[1] * scale * x0]);
            scale *= s.dc_gain();
        }
    }

    /// Zero-phase forward-backward filtering with odd-extension padding.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        let pad = self.pad_len();
        if n <= pad {
            return Err(Error::SignalTooShort { len: n, min: pad });
        }
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
        self.forward(&mut ext);
        ext.reverse();
        self.forward(&mut ext);
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }
}

/// Zero-phase Butterworth band-pass of the default order.
pub fn bandpass(x: &[f64], fs: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    ButterBandpass::design(BUTTER_ORDER, lo, hi, fs)?.filtfilt(x)
}

/// Minimum signal length accepted by [`bandpass`].
pub fn bandpass_min_len() -> usize {
    3 * (2 * BUTTER_ORDER + 1)
}

/// Smallest power of two not below `max(n, ceil(60 * fs))`, giving at most
/// 1 bpm per spectral bin.
pub fn hr_nfft(n: usize, fs: f64) -> usize {
    n.max((60.0 * fs).ceil() as usize).next_power_of_two()
}

/// One-sided power spectrum of `x` zero-padded to `nfft`; returns the bin
/// frequencies in Hz and `|X(f)|^2`.
pub fn power_spectrum(x: &[f64], fs: f64, nfft: usize) -> (Vec<f64>, Vec<f64>) {
    let nfft = nfft.max(x.len());
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(nfft, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    let half = nfft / 2 + 1;
    let freqs = (0..half).map(|k| k as f64 * fs / nfft as f64).collect();
    let power = buf[..half].iter().map(|c| c.norm_sqr()).collect();
    (freqs, power)
}

/// Fraction of spectral power held by the strongest bin inside `band`.
/// Scale-free, so components of different variance compare fairly.
pub fn band_peak_ratio(x: &[f64], fs: f64, band: (f64, f64)) -> f64 {
    let d = detrend(x);
    let (freqs, power) = power_spectrum(&d, fs, hr_nfft(d.len(), fs));
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    freqs
        .iter()
        .zip(&power)
        .filter(|(f, _)| **f >= band.0 && **f <= band.1)
        .map(|(_, p)| *p)
        .fold(0.0, f64::max)
        / total
}

/// Pearson correlation without error reporting; 0 for degenerate input.
pub(crate) fn corr(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n < 2 {
        return 0.0;
    }
    let (x, y) = (&x[..n], &y[..n]);
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(freq: f64, fs: f64, secs: f64) -> Vec<f64> {
        (0..(fs * secs) as usize)
            .map(|i| (2.0 * PI * freq * i as f64 / fs).sin())
            .collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn zscore_of_one_two_three() {
        let z = zscore(&[1.0, 2.0, 3.0]).unwrap();
        let e = (1.5f64).sqrt();
        for (a, b) in z.iter().zip([-e, 0.0, e]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((e - 1.224_744_871).abs() < 1e-9);
    }

    #[test]
    fn zscore_rejects_constant() {
        assert!(matches!(zscore(&[4.0; 10]), Err(Error::ConstantSignal { .. })));
        assert!(matches!(zscore(&[0.0; 10]), Err(Error::ConstantSignal { .. })));
    }

    #[test]
    fn zscore_idempotent() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 * 0.3 + 2.0).collect();
        let once = zscore(&x).unwrap();
        let twice = zscore(&once).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    /// Magnitude response of the cascade evaluated directly on the unit
    /// circle, checked against the analog Butterworth magnitude at the
    /// pre-warped frequency.
    #[test]
    fn design_matches_analog_prototype_magnitude() {
        let (lo, hi, fs) = (0.66, 3.0, 30.0);
        let filt = ButterBandpass::design(2, lo, hi, fs).unwrap();
        let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
        let (wl, wh) = (warp(lo), warp(hi));
        for &f in &[0.3, 0.66, 1.0, 1.2, 2.0, 3.0, 5.0, 8.0] {
            let z = Complex64::from_polar(1.0, 2.0 * PI * f / fs);
            let mut h = Complex64::new(1.0, 0.0);
            for s in filt.sections() {
                let num = s.b[0] + s.b[1] / z + s.b[2] / (z * z);
                let den = s.a[0] + s.a[1] / z + s.a[2] / (z * z);
                h *= num / den;
            }
            let w = warp(f);
            let omega = (w * w - wl * wh) / (w * (wh - wl));
            let expected = 1.0 / (1.0 + omega.powi(4)).sqrt();
            assert!((h.norm() - expected).abs() < 1e-9, "f={f}: {} vs {expected}", h.norm());
        }
    }

    #[test]
    fn passband_sinusoid_preserved() {
        let x = sine(1.2, 30.0, 20.0);
        let y = bandpass(&x, 30.0, 0.66, 3.0).unwrap();
        let ratio = rms(&y) / rms(&x);
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn dc_offset_removed() {
        let x: Vec<f64> = sine(1.2, 30.0, 20.0).iter().map(|v| v + 100.0).collect();
        let y = bandpass(&x, 30.0, 0.66, 3.0).unwrap();
        assert!(mean(&y).abs() < 0.01, "mean {}", mean(&y));
    }

    /// Steady-state attenuation; the first and last 5 s hold the start-up
    /// transient of the forward and backward passes.
    #[test]
    fn stopband_attenuated() {
        let x = sine(5.0, 30.0, 20.0);
        let y = bandpass(&x, 30.0, 0.66, 3.0).unwrap();
        assert!(rms(&y[150..450]) < 0.1 * rms(&x[150..450]));
    }

    #[test]
    fn bandpass_is_linear() {
        let x = sine(1.1, 30.0, 12.0);
        let y: Vec<f64> = (0..360).map(|i| ((i * 31) % 17) as f64 - 8.0).collect();
        let (a, b) = (2.5, -0.75);
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let fm = bandpass(&mix, 30.0, 0.66, 3.0).unwrap();
        let fx = bandpass(&x, 30.0, 0.66, 3.0).unwrap();
        let fy = bandpass(&y, 30.0, 0.66, 3.0).unwrap();
        let scale = fm.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..360 {
            assert!((fm[i] - (a * fx[i] + b * fy[i])).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn invalid_band_and_short_signal() {
        assert!(matches!(
            bandpass(&[0.0; 100], 30.0, 3.0, 1.0),
            Err(Error::InvalidBand { .. })
        ));
        assert!(matches!(
            bandpass(&[0.0; 100], 30.0, 1.0, 16.0),
            Err(Error::InvalidBand { .. })
        ));
        assert!(matches!(
            bandpass(&[0.0; 10], 30.0, 0.66, 3.0),
            Err(Error::SignalTooShort { .. })
        ));
    }

    #[test]
    fn detrend_removes_line() {
        let x: Vec<f64> = (0..40).map(|i| 3.0 * i as f64 - 7.0).collect();
        assert!(detrend(&x).iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn nfft_gives_bpm_resolution() {
        let n = hr_nfft(300, 30.0);
        assert!(60.0 * 30.0 / n as f64 <= 1.0);
        assert!(n.is_power_of_two());
    }
}
