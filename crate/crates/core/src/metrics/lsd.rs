use super::{aligned, MetricError, LOG_EPS};
use crate::audio::AudioBuffer;
use crate::dsp::{stft_frames, window::hann_periodic, Padding};

/// `(n_fft, hop)`: 2048/512 from 32 kHz up, 1024/256 below.
pub fn lsd_params(sf: u32) -> (usize, usize) {
    if sf >= 32000 {
        (2048, 512)
    } else {
        (1024, 256)
    }
}

/// Log-spectral distance in dB: per-frame RMS over bins of the dB power
/// ratio, averaged over frames.
pub fn lsd(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<f64, MetricError> {
    let (r, e) = aligned(reference, estimate)?;
    if r.is_empty() {
        return Err(MetricError::TooShort("empty signals".into()));
    }
    let (n_fft, hop) = lsd_params(reference.sample_rate_hz());
    let w = hann_periodic(n_fft);
    let sr = stft_frames(&r, n_fft, hop, &w, Padding::None);
    let se = stft_frames(&e, n_fft, hop, &w, Padding::None);
    let total: f64 = sr
        .iter()
        .zip(&se)
        .map(|(a, b)| {
            let ms: f64 = a
                .iter()
                .zip(b)
                .map(|(p, q)| {
                    let d = 10.0 * ((p.norm_sqr() + LOG_EPS) / (q.norm_sqr() + LOG_EPS)).log10();
                    d * d
                })
                .sum::<f64>()
                / a.len() as f64;
            ms.sqrt()
        })
        .sum();
    Ok(total / sr.len() as f64)
}
