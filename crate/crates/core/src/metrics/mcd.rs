use super::{aligned, MetricError, LOG_EPS};
use crate::audio::AudioBuffer;
use crate::dsp::{stft_frames, window::hann_symmetric, Padding};

pub const MEL_BANDS: usize = 80;
/// Cepstral coefficients compared, `c1..=c13`; `c0` (overall level) is excluded.
pub const MCD_COEFFS: usize = 13;
const FRAME_S: f64 = 0.025;
const HOP_S: f64 = 0.010;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters on the mel scale from 0 Hz to Nyquist, `[band][bin]`.
fn mel_filterbank(sf: f64, n_fft: usize) -> Vec<Vec<f64>> {
    let top = hz_to_mel(sf / 2.0);
    let edges: Vec<f64> = (0..MEL_BANDS + 2)
        .map(|i| mel_to_hz(top * i as f64 / (MEL_BANDS + 1) as f64))
        .collect();
    (0..MEL_BANDS)
        .map(|b| {
            let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            (0..=n_fft / 2)
                .map(|k| {
                    let f = k as f64 * sf / n_fft as f64;
                    let up = (f - lo) / (mid - lo);
                    let down = (hi - f) / (hi - mid);
                    up.min(down).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II coefficients `1..=MCD_COEFFS` of `v`.
fn dct_ii(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    (1..=MCD_COEFFS)
        .map(|k| {
            let s: f64 = v
                .iter()
                .enumerate()
                .map(|(i, x)| x * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos())
                .sum();
            s * (2.0 / n).sqrt()
        })
        .collect()
}

/// Mel cepstra `c1..=c13` per frame: 25 ms Hann frames, 10 ms hop, natural
/// log of floored mel energies.
pub fn mel_cepstra(x: &AudioBuffer) -> Vec<Vec<f64>> {
    let sf = x.sample_rate_hz() as f64;
    let win = ((FRAME_S * sf).round() as usize).max(2);
    let hop = ((HOP_S * sf).round() as usize).max(1);
    let n_fft = win.next_power_of_two();
    let window = hann_symmetric(win);
    let bank = mel_filterbank(sf, n_fft);
    stft_frames(x.samples(), n_fft, hop, &window, Padding::None)
        .into_iter()
        .map(|spec| {
            let power: Vec<f64> = spec.iter().map(|c| c.norm_sqr()).collect();
            let log_mel: Vec<f64> = bank
                .iter()
                .map(|tri| tri.iter().zip(&power).map(|(w, p)| w * p).sum::<f64>().max(LOG_EPS).ln())
                .collect();
            dct_ii(&log_mel)
        })
        .collect()
}

/// Mean over frames of `(10 / ln 10) * sqrt(2 * sum_d (c_d - c'_d)^2)`.
pub fn mcd_from_cepstra(reference: &[Vec<f64>], estimate: &[Vec<f64>]) -> f64 {
    let k = 10.0 / std::f64::consts::LN_10;
    let n = reference.len().min(estimate.len());
    if n == 0 {
        return 0.0;
    }
    let total: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(a, b)| {
            let d: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
            k * (2.0 * d).sqrt()
        })
        .sum();
    total / n as f64
}

/// Mel cepstral distortion in dB over frame-aligned signals (no time warping).
pub fn mcd(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<f64, MetricError> {
    let (r, e) = aligned(reference, estimate)?;
    if r.is_empty() {
        return Err(MetricError::TooShort("empty signals".into()));
    }
    let cr = mel_cepstra(&reference.with_samples(r));
    let ce = mel_cepstra(&reference.with_samples(e));
    Ok(mcd_from_cepstra(&cr, &ce))
}
