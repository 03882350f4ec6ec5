//! Effective-bandwidth detection and best-matching sample rate selection.
//!
//! A recording stored at 48 kHz may only carry energy up to, say, 8 kHz
//! because it was upsampled somewhere along the way. The estimator finds
//! where the long-term spectrum rolls off, and the selector picks the lowest
//! supported rate whose Nyquist frequency covers that bandwidth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioBuffer;
use crate::dsp::{self, stft_frames, window::hann_periodic, DspError, Padding};

/// Supported sampling frequencies in ascending order.
pub const SUPPORTED_SFS: [u32; 7] = [8000, 16000, 22050, 24000, 32000, 44100, 48000];

pub const DEFAULT_THRESHOLD_DB: f64 = -50.0;
pub const ANALYSIS_WINDOW_S: f64 = 0.050;
/// Consecutive above-threshold bins required to stop the downward scan.
pub const HYSTERESIS_BINS: usize = 3;
/// Frame RMS below this level (-100 dBFS) counts as digital silence.
const SILENCE_RMS: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum BandwidthError {
    #[error("signal is silent (peak frame level below -100 dBFS)")]
    Silence,
    #[error("signal too short for bandwidth analysis: {len} samples, need {needed}")]
    TooShort { len: usize, needed: usize },
    #[error(transparent)]
    Dsp(#[from] DspError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthEstimate {
    pub effective_bw_hz: f64,
    /// Mean passband level minus mean level above the detected edge, in dB.
    pub confidence_db: f64,
    pub analyzed_frames: usize,
}

/// Tunables for [`estimate_effective_bandwidth`] and
/// [`normalize_to_effective_sf_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthOptions {
    pub threshold_db: f64,
    pub allowed_sfs: Vec<u32>,
}

impl Default for BandwidthOptions {
    fn default() -> Self {
        Self {
            threshold_db: DEFAULT_THRESHOLD_DB,
            allowed_sfs: SUPPORTED_SFS.to_vec(),
        }
    }
}

/// Highest frequency whose long-term power stays within `threshold_db` of
/// the spectral peak.
///
/// Uses 50 ms Hann frames at 75% overlap and averages the power spectra of
/// the loudest half of the frames.
pub fn estimate_effective_bandwidth(
    x: &AudioBuffer,
    threshold_db: f64,
) -> Result<BandwidthEstimate, BandwidthError> {
    let sf = x.sample_rate_hz() as f64;
    let mut n = (ANALYSIS_WINDOW_S * sf).round() as usize;
    n += n % 2;
    if x.len() < n {
        return Err(BandwidthError::TooShort {
            len: x.len(),
            needed: n,
        });
    }
    let hop = (n / 4).max(1);
    let window = hann_periodic(n);

    let frame_rms: Vec<f64> = x
        .samples()
        .windows(n)
        .step_by(hop)
        .map(|f| (f.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt())
        .collect();
    if frame_rms.iter().cloned().fold(0.0, f64::max) < SILENCE_RMS {
        return Err(BandwidthError::Silence);
    }

    let spectra = stft_frames(x.samples(), n, hop, &window, Padding::None);
    debug_assert_eq!(spectra.len(), frame_rms.len());
    let mut order: Vec<usize> = (0..spectra.len()).collect();
    // loudest first; ties broken by index for determinism
    order.sort_by(|&a, &b| frame_rms[b].total_cmp(&frame_rms[a]).then(a.cmp(&b)));
    let keep = spectra.len().div_ceil(2);
    let bins = n / 2 + 1;
    let mut mean_power = vec![0.0; bins];
    for &t in &order[..keep] {
        for (acc, c) in mean_power.iter_mut().zip(&spectra[t]) {
            *acc += c.norm_sqr();
        }
    }
    mean_power.iter_mut().for_each(|p| *p /= keep as f64);

    let peak = mean_power.iter().cloned().fold(0.0, f64::max);
    let level = peak * 10f64.powf(threshold_db / 10.0);
    let above: Vec<bool> = mean_power.iter().map(|&p| p >= level).collect();
    let edge = (HYSTERESIS_BINS - 1..bins)
        .rev()
        .find(|&k| above[k + 1 - HYSTERESIS_BINS..=k].iter().all(|&a| a))
        .unwrap_or_else(|| {
            // no run long enough: fall back to the peak bin
            mean_power
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, _)| k)
                .unwrap_or(0)
        });

    let to_db = |p: f64| 10.0 * (p.max(1e-300) / peak).log10();
    let mean_db = |s: &[f64]| s.iter().map(|&p| to_db(p)).sum::<f64>() / s.len() as f64;
    let plateau = mean_db(&mean_power[..=edge]);
    let rolloff = if edge + 1 < bins {
        mean_db(&mean_power[edge + 1..])
    } else {
        threshold_db
    };

    Ok(BandwidthEstimate {
        effective_bw_hz: (edge as f64 * sf / n as f64).min(sf / 2.0),
        confidence_db: plateau - rolloff,
        analyzed_frames: keep,
    })
}

/// Lowest rate in `allowed` (ascending) whose Nyquist frequency covers
/// `bw_hz`; the highest allowed rate when none does.
pub fn best_matching_sf(bw_hz: f64, allowed: &[u32]) -> u32 {
    allowed
        .iter()
        .copied()
        .find(|&s| s as f64 / 2.0 >= bw_hz)
        .or_else(|| allowed.iter().copied().max())
        .expect("allowed sample rate set must not be empty")
}

/// Resamples `x` to the best-matching rate for its measured bandwidth.
pub fn normalize_to_effective_sf(x: &AudioBuffer) -> Result<AudioBuffer, BandwidthError> {
    normalize_to_effective_sf_with(x, &BandwidthOptions::default())
}

pub fn normalize_to_effective_sf_with(
    x: &AudioBuffer,
    opts: &BandwidthOptions,
) -> Result<AudioBuffer, BandwidthError> {
    let est = estimate_effective_bandwidth(x, opts.threshold_db)?;
    let target = best_matching_sf(est.effective_bw_hz, &opts.allowed_sfs);
    Ok(dsp::resample(x, target)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{design_lowpass, ConvolveMode};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn white(len: usize, sf: u32, seed: u64) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioBuffer::new((0..len).map(|_| rng.gen_range(-0.5..0.5)).collect(), sf).unwrap()
    }

    fn lowpassed(cutoff: f64, seed: u64) -> AudioBuffer {
        let x = white(96000, 48000, seed);
        let f = design_lowpass(cutoff, 48000, 0.05 * cutoff).unwrap();
        crate::dsp::convolve(&x, f.taps(), ConvolveMode::SameDelayCompensated).unwrap()
    }

    #[test]
    fn flat_spectrum_is_full_band() {
        let est = estimate_effective_bandwidth(&white(32000, 16000, 1), DEFAULT_THRESHOLD_DB).unwrap();
        assert!((7200.0..=8000.0).contains(&est.effective_bw_hz), "{est:?}");
    }

    #[test]
    fn low_passed_noise_edge() {
        let est = estimate_effective_bandwidth(&lowpassed(4000.0, 2), DEFAULT_THRESHOLD_DB).unwrap();
        assert!((3800.0..=4400.0).contains(&est.effective_bw_hz), "{est:?}");
        assert!(est.confidence_db > 30.0);
    }

    #[test]
    fn silence_and_short_input() {
        let z = AudioBuffer::silence(16000, 16000).unwrap();
        assert!(matches!(estimate_effective_bandwidth(&z, -50.0), Err(BandwidthError::Silence)));
        let short = white(100, 16000, 1);
        assert!(matches!(
            estimate_effective_bandwidth(&short, -50.0),
            Err(BandwidthError::TooShort { .. })
        ));
    }

    #[test]
    fn best_matching_examples() {
        assert_eq!(best_matching_sf(4000.0, &SUPPORTED_SFS), 8000);
        assert_eq!(best_matching_sf(11000.0, &SUPPORTED_SFS), 22050);
        assert_eq!(best_matching_sf(23900.0, &SUPPORTED_SFS), 48000);
        assert_eq!(best_matching_sf(0.0, &SUPPORTED_SFS), 8000);
        assert_eq!(best_matching_sf(30000.0, &[8000, 16000]), 16000);
    }

    #[test]
    fn normalize_examples() {
        let y = normalize_to_effective_sf(&lowpassed(7500.0, 3)).unwrap();
        assert_eq!(y.sample_rate_hz(), 16000);
        let y2 = normalize_to_effective_sf(&y).unwrap();
        assert_eq!(y2.sample_rate_hz(), 16000);

        let full16 = white(32000, 16000, 4);
        assert_eq!(normalize_to_effective_sf(&full16).unwrap().sample_rate_hz(), 16000);
        let x8 = white(16000, 8000, 5);
        assert_eq!(normalize_to_effective_sf(&x8).unwrap(), x8);
    }

    proptest! {
        #[test]
        fn best_matching_is_monotone(a in 0.0f64..30000.0, b in 0.0f64..30000.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(best_matching_sf(lo, &SUPPORTED_SFS) <= best_matching_sf(hi, &SUPPORTED_SFS));
        }
    }

    #[test]
    fn amplitude_invariant() {
        let x = lowpassed(10000.0, 6);
        let base = estimate_effective_bandwidth(&x, -50.0).unwrap().effective_bw_hz;
        for g in [1e-3, 0.1, 3.0] {
            let y = x.with_samples(x.samples().iter().map(|v| v * g).collect());
            assert_eq!(estimate_effective_bandwidth(&y, -50.0).unwrap().effective_bw_hz, base);
        }
    }
}
