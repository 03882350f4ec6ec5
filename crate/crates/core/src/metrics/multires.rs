use super::{aligned, MetricError};
use crate::audio::AudioBuffer;
use crate::dsp::{stft_frames, window::hann_periodic, Padding};

pub const MULTIRES_WINDOWS: [usize; 4] = [256, 512, 768, 1024];

/// `mean|ref - est|` plus the average over four STFT resolutions of the mean
/// absolute magnitude-spectrum difference (Hann, hop = window / 2, centred).
pub fn multires_l1_loss(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<f64, MetricError> {
    let (r, e) = aligned(reference, estimate)?;
    if r.is_empty() {
        return Ok(0.0);
    }
    let time = r.iter().zip(&e).map(|(a, b)| (a - b).abs()).sum::<f64>() / r.len() as f64;
    let spectral: f64 = MULTIRES_WINDOWS
        .iter()
        .map(|&n| {
            let w = hann_periodic(n);
            let sr = stft_frames(&r, n, n / 2, &w, Padding::CenterReflect);
            let se = stft_frames(&e, n, n / 2, &w, Padding::CenterReflect);
            let count = (sr.len() * (n / 2 + 1)) as f64;
            sr.iter()
                .zip(&se)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p.norm() - q.norm()).abs()))
                .sum::<f64>()
                / count
        })
        .sum::<f64>()
        / MULTIRES_WINDOWS.len() as f64;
    Ok(time + spectral)
}
