use num_complex::Complex64;

use super::fft;
use super::DspError;
use crate::audio::AudioBuffer;

/// Kernels at least this long are convolved in the frequency domain.
pub const FFT_THRESHOLD: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolveMode {
    /// `len(x) + len(h) - 1` samples.
    Full,
    /// Drops `(len(h) - 1) / 2` leading samples and fits the result to `len(x)`.
    SameDelayCompensated,
}

/// O(n·m) linear convolution.
pub fn convolve_direct(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let mut y = vec![0.0; x.len() + h.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        for (yj, &hj) in y[i..i + h.len()].iter_mut().zip(h) {
            *yj += xi * hj;
        }
    }
    y
}

/// Linear convolution through a single zero-padded FFT.
pub fn convolve_fft(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    let n = out_len.next_power_of_two();
    let to_complex = |s: &[f64]| -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v.iter_mut().zip(s).for_each(|(c, &r)| c.re = r);
        v
    };
    let mut a = to_complex(x);
    let mut b = to_complex(h);
    let fwd = fft::forward(n);
    fwd.process(&mut a);
    fwd.process(&mut b);
    a.iter_mut().zip(&b).for_each(|(p, q)| *p *= q);
    fft::inverse(n).process(&mut a);
    let scale = 1.0 / n as f64;
    a.into_iter().take(out_len).map(|c| c.re * scale).collect()
}

fn convolve_raw(x: &[f64], h: &[f64]) -> Vec<f64> {
    if h.len() < FFT_THRESHOLD {
        convolve_direct(x, h)
    } else {
        convolve_fft(x, h)
    }
}

pub fn convolve(x: &AudioBuffer, h: &[f64], mode: ConvolveMode) -> Result<AudioBuffer, DspError> {
    if h.is_empty() {
        return Err(DspError::Parameter("convolution kernel is empty".into()));
    }
    let full = convolve_raw(x.samples(), h);
    let samples = match mode {
        ConvolveMode::Full => full,
        ConvolveMode::SameDelayCompensated => {
            let delay = (h.len() - 1) / 2;
            let mut out: Vec<f64> = full.into_iter().skip(delay).take(x.len()).collect();
            out.resize(x.len(), 0.0);
            out
        }
    };
    Ok(x.with_samples(samples))
}
