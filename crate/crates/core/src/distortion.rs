//! Distortion generators and their composition.
//!
//! Every generator keeps the container sample rate and length of its input.
//! [`degrade`] composes them in a fixed order (reverberation, additive
//! noise, then one optional post-mixture distortion) and returns the
//! degraded signal together with the aligned clean reference.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioBuffer;
use crate::corpus_filter::{VAD_FRAME_S, VAD_HOP_S};
use crate::dsp::{self, convolve_direct, convolve_fft, design_lowpass, ConvolveMode, DspError};

/// Crossfade length at the seam when a short noise clip is looped.
pub const NOISE_CROSSFADE_S: f64 = 0.010;
/// Mixtures peaking above 1.0 are rescaled to this peak.
pub const RESCALE_PEAK: f64 = 0.99;
/// Transition width of the bandwidth-limitation filter relative to cutoff.
pub const BANDLIMIT_TRANSITION: f64 = 0.05;

#[derive(Debug, Error)]
pub enum DistortionError {
    #[error("noise segment has zero power")]
    DegenerateNoise,
    #[error("speech has zero power")]
    DegenerateSpeech,
    #[error("room impulse response is all zeros")]
    DegenerateRir,
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

/// The post-mixture distortion selected for an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distortion {
    None,
    BandwidthLimitation { cutoff_hz: f64 },
    Clipping { clip_ratio: f64 },
}

impl Distortion {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Distortion::None => "none",
            Distortion::BandwidthLimitation { .. } => "bandwidth_limitation",
            Distortion::Clipping { .. } => "clipping",
        }
    }
}

/// Full parameterisation of one degradation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub distortion: Distortion,
    pub snr_db: f64,
    pub rir_path: Option<PathBuf>,
    pub noise_path: PathBuf,
    pub noise_offset_s: f64,
    pub seed: u64,
}

impl DistortionSpec {
    pub fn validate(&self) -> Result<(), DistortionError> {
        if !self.snr_db.is_finite() {
            return Err(DistortionError::Parameter(format!("snr_db {} is not finite", self.snr_db)));
        }
        if !(self.noise_offset_s.is_finite() && self.noise_offset_s >= 0.0) {
            return Err(DistortionError::Parameter(format!(
                "noise offset {} s must be non-negative",
                self.noise_offset_s
            )));
        }
        match self.distortion {
            Distortion::Clipping { clip_ratio } if !(clip_ratio > 0.0 && clip_ratio <= 1.0) => Err(
                DistortionError::Parameter(format!("clip ratio {clip_ratio} outside (0, 1]")),
            ),
            Distortion::BandwidthLimitation { cutoff_hz } if !(cutoff_hz > 0.0 && cutoff_hz.is_finite()) => {
                Err(DistortionError::Parameter(format!("cutoff {cutoff_hz} Hz must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Which clean signal serves as the target for reverberant speech.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReverbReference {
    /// Dry speech aligned to and scaled by the direct-path tap.
    DirectPath,
    /// Speech convolved with the RIR from the direct path up to `ms` after it.
    EarlyReflections { ms: f64 },
}

/// How the SNR power of the speech component is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrPower {
    FullSignal,
    /// Mean power over 30 ms frames within 50 dB of the loudest frame.
    ActiveFrames,
}

/// Switches for the documented alternatives in [`degrade`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradeOptions {
    pub reverb_reference: ReverbReference,
    /// Convolve the noise with the same RIR as the speech.
    pub reverberate_noise: bool,
    pub snr_power: SnrPower,
}

impl Default for DegradeOptions {
    fn default() -> Self {
        Self {
            reverb_reference: ReverbReference::DirectPath,
            reverberate_noise: false,
            snr_power: SnrPower::FullSignal,
        }
    }
}

/// Degraded signal and its aligned clean reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradedPair {
    pub degraded: AudioBuffer,
    pub reference: AudioBuffer,
}

/// Result of [`mix_noise_at_snr`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub mixture: AudioBuffer,
    /// The speech input, rescaled together with the mixture if it clipped.
    pub speech: AudioBuffer,
    /// The scaled noise actually added (after any peak rescale).
    pub noise: AudioBuffer,
    /// Gain applied to the noise segment before any peak rescale.
    pub noise_gain: f64,
    /// Common factor applied to mixture and speech (1.0 unless the peak exceeded 1).
    pub rescale: f64,
}

fn same_rate(a: &AudioBuffer, b: &AudioBuffer) -> Result<(), DistortionError> {
    if a.sample_rate_hz() != b.sample_rate_hz() {
        return Err(DistortionError::SampleRateMismatch(a.sample_rate_hz(), b.sample_rate_hz()));
    }
    Ok(())
}

/// `len` samples of `noise` starting at `start`, looping with an
/// equal-power crossfade of `xfade` samples when the clip runs out.
pub fn noise_segment(noise: &[f64], start: usize, len: usize, xfade: usize) -> Vec<f64> {
    let n = noise.len();
    if n == 0 {
        return vec![0.0; len];
    }
    let start = start % n;
    if start + len <= n {
        return noise[start..start + len].to_vec();
    }
    let xf = if n > 2 * xfade { xfade } else { 0 };
    let mut looped = noise[..n - xf].to_vec();
    for i in 0..xf {
        let a = std::f64::consts::FRAC_PI_2 * i as f64 / xf as f64;
        looped[i] = noise[n - xf + i] * a.cos() + noise[i] * a.sin();
    }
    let period = looped.len();
    (0..len).map(|k| looped[(start + k) % period]).collect()
}

fn active_power(x: &AudioBuffer) -> f64 {
    let sf = x.sample_rate_hz() as f64;
    let win = ((VAD_FRAME_S * sf).round() as usize).max(1);
    let hop = ((VAD_HOP_S * sf).round() as usize).max(1);
    if x.len() < win {
        return x.energy() / x.len().max(1) as f64;
    }
    let frames: Vec<f64> = x
        .samples()
        .windows(win)
        .step_by(hop)
        .map(|f| f.iter().map(|v| v * v).sum::<f64>() / win as f64)
        .collect();
    let loudest = frames.iter().cloned().fold(0.0, f64::max);
    let active: Vec<f64> = frames.into_iter().filter(|&p| p >= loudest * 1e-5).collect();
    active.iter().sum::<f64>() / active.len().max(1) as f64
}

fn speech_power(x: &AudioBuffer, mode: SnrPower) -> f64 {
    match mode {
        SnrPower::FullSignal => x.energy() / x.len().max(1) as f64,
        SnrPower::ActiveFrames => active_power(x),
    }
}

/// Adds `noise` to `speech` so that the speech-to-noise power ratio over
/// the speech duration equals `snr_db`.
pub fn mix_noise_at_snr(
    speech: &AudioBuffer,
    noise: &AudioBuffer,
    snr_db: f64,
    offset_s: f64,
) -> Result<Mixture, DistortionError> {
    mix_noise_with(speech, noise, snr_db, offset_s, SnrPower::FullSignal)
}

pub fn mix_noise_with(
    speech: &AudioBuffer,
    noise: &AudioBuffer,
    snr_db: f64,
    offset_s: f64,
    power: SnrPower,
) -> Result<Mixture, DistortionError> {
    same_rate(speech, noise)?;
    if !snr_db.is_finite() {
        return Err(DistortionError::Parameter(format!("snr_db {snr_db} is not finite")));
    }
    let sf = speech.sample_rate_hz() as f64;
    let start = (offset_s.max(0.0) * sf).round() as usize;
    let xfade = (NOISE_CROSSFADE_S * sf).round() as usize;
    let seg = noise_segment(noise.samples(), start, speech.len(), xfade);
    let p_speech = speech_power(speech, power);
    let p_noise = seg.iter().map(|v| v * v).sum::<f64>() / seg.len().max(1) as f64;
    if !(p_speech > 0.0) {
        return Err(DistortionError::DegenerateSpeech);
    }
    if !(p_noise > 0.0) {
        return Err(DistortionError::DegenerateNoise);
    }
    let gain = (p_speech / p_noise * 10f64.powf(-snr_db / 10.0)).sqrt();
    let mut scaled: Vec<f64> = seg.iter().map(|v| gain * v).collect();
    let mut mix: Vec<f64> = speech.samples().iter().zip(&scaled).map(|(s, n)| s + n).collect();
    let peak = mix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut rescale = 1.0;
    let mut speech_out = speech.clone();
    if peak > 1.0 {
        rescale = RESCALE_PEAK / peak;
        mix.iter_mut().for_each(|v| *v *= rescale);
        scaled.iter_mut().for_each(|v| *v *= rescale);
        speech_out.samples_mut().iter_mut().for_each(|v| *v *= rescale);
    }
    Ok(Mixture {
        mixture: speech.with_samples(mix),
        speech: speech_out,
        noise: speech.with_samples(scaled),
        noise_gain: gain,
        rescale,
    })
}

fn direct_path(rir: &AudioBuffer) -> Result<usize, DistortionError> {
    let (idx, peak) = rir
        .samples()
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
    if peak == 0.0 {
        return Err(DistortionError::DegenerateRir);
    }
    Ok(idx)
}

fn convolve_aligned(x: &[f64], h: &[f64], skip: usize) -> Vec<f64> {
    let full = if h.len() < dsp::FFT_THRESHOLD {
        convolve_direct(x, h)
    } else {
        convolve_fft(x, h)
    };
    let mut out: Vec<f64> = full.into_iter().skip(skip).take(x.len()).collect();
    out.resize(x.len(), 0.0);
    out
}

/// Reverberates `speech`, compensating the pre-direct-path delay, and
/// returns `(reverberant, reference)` with the direct-path reference.
pub fn apply_reverb(
    speech: &AudioBuffer,
    rir: &AudioBuffer,
) -> Result<(AudioBuffer, AudioBuffer), DistortionError> {
    apply_reverb_with(speech, rir, ReverbReference::DirectPath)
}

pub fn apply_reverb_with(
    speech: &AudioBuffer,
    rir: &AudioBuffer,
    reference: ReverbReference,
) -> Result<(AudioBuffer, AudioBuffer), DistortionError> {
    same_rate(speech, rir)?;
    let d = direct_path(rir)?;
    let h = rir.samples();
    let reverberant = convolve_aligned(speech.samples(), h, d);
    let reference = match reference {
        ReverbReference::DirectPath => speech.samples().iter().map(|v| v * h[d]).collect(),
        ReverbReference::EarlyReflections { ms } => {
            if !(ms >= 0.0) {
                return Err(DistortionError::Parameter(format!("early reflection window {ms} ms")));
            }
            let len = ((ms / 1000.0 * rir.sample_rate_hz() as f64).round() as usize + 1).min(h.len() - d);
            convolve_aligned(speech.samples(), &h[d..d + len], 0)
        }
    };
    Ok((speech.with_samples(reverberant), speech.with_samples(reference)))
}

/// Symmetric hard clipping at `clip_ratio` times the peak magnitude.
pub fn apply_clipping(x: &AudioBuffer, clip_ratio: f64) -> Result<AudioBuffer, DistortionError> {
    if !(clip_ratio > 0.0 && clip_ratio <= 1.0) {
        return Err(DistortionError::Parameter(format!("clip ratio {clip_ratio} outside (0, 1]")));
    }
    let c = clip_ratio * x.peak();
    if c == 0.0 {
        return Ok(x.clone());
    }
    Ok(x.with_samples(x.samples().iter().map(|v| v.clamp(-c, c)).collect()))
}

/// Low-pass filters `x` at `cutoff_hz` without changing its sample rate.
/// A cutoff at the Nyquist frequency is a passthrough.
pub fn apply_bandwidth_limitation(x: &AudioBuffer, cutoff_hz: f64) -> Result<AudioBuffer, DistortionError> {
    let nyquist = x.sample_rate_hz() as f64 / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz <= nyquist) {
        return Err(DistortionError::Parameter(format!(
            "cutoff {cutoff_hz} Hz outside (0, {nyquist}] Hz"
        )));
    }
    if cutoff_hz == nyquist {
        return Ok(x.clone());
    }
    let filter = design_lowpass(cutoff_hz, x.sample_rate_hz(), BANDLIMIT_TRANSITION * cutoff_hz)?;
    Ok(dsp::convolve(x, filter.taps(), ConvolveMode::SameDelayCompensated)?)
}

fn to_rate(x: &AudioBuffer, sf: u32) -> Result<AudioBuffer, DistortionError> {
    Ok(dsp::resample(x, sf)?)
}

/// Applies the full degradation chain described by `spec` to `speech`.
///
/// Order: reverberation (when `rir` is given), noise at `spec.snr_db`, then
/// the post-mixture distortion on the mixture only. Noise and RIR are
/// resampled to the speech rate first. The result is a pure function of
/// the inputs.
pub fn degrade(
    speech: &AudioBuffer,
    spec: &DistortionSpec,
    rir: Option<&AudioBuffer>,
    noise: &AudioBuffer,
    opts: &DegradeOptions,
) -> Result<DegradedPair, DistortionError> {
    spec.validate()?;
    let sf = speech.sample_rate_hz();
    let noise = to_rate(noise, sf)?;
    let rir = rir.map(|r| to_rate(r, sf)).transpose()?;

    let (wet, mut reference) = match &rir {
        Some(r) => apply_reverb_with(speech, r, opts.reverb_reference)?,
        None => (speech.clone(), speech.clone()),
    };
    let noise = match (&rir, opts.reverberate_noise) {
        (Some(r), true) => {
            let d = direct_path(r)?;
            noise.with_samples(convolve_aligned(noise.samples(), r.samples(), d))
        }
        _ => noise,
    };

    let mixed = mix_noise_with(&wet, &noise, spec.snr_db, spec.noise_offset_s, opts.snr_power)?;
    if mixed.rescale != 1.0 {
        reference.samples_mut().iter_mut().for_each(|v| *v *= mixed.rescale);
    }

    let degraded = match spec.distortion {
        Distortion::None => mixed.mixture,
        Distortion::Clipping { clip_ratio } => apply_clipping(&mixed.mixture, clip_ratio)?,
        Distortion::BandwidthLimitation { cutoff_hz } => {
            apply_bandwidth_limitation(&mixed.mixture, cutoff_hz.min(sf as f64 / 2.0))?
        }
    };
    if degraded.sample_rate_hz() != reference.sample_rate_hz() || degraded.len() != reference.len() {
        return Err(DistortionError::SampleRateMismatch(
            degraded.sample_rate_hz(),
            reference.sample_rate_hz(),
        ));
    }
    Ok(DegradedPair { degraded, reference })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn noise(len: usize, sf: u32, seed: u64, amp: f64) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioBuffer::new((0..len).map(|_| rng.gen_range(-amp..amp)).collect(), sf).unwrap()
    }

    fn measured_snr(speech: &AudioBuffer, mixture: &AudioBuffer) -> f64 {
        let resid: f64 = mixture
            .samples()
            .iter()
            .zip(speech.samples())
            .map(|(m, s)| (m - s) * (m - s))
            .sum();
        10.0 * (speech.energy() / resid).log10()
    }

    fn spec(distortion: Distortion, snr_db: f64) -> DistortionSpec {
        DistortionSpec {
            distortion,
            snr_db,
            rir_path: None,
            noise_path: "n.wav".into(),
            noise_offset_s: 0.0,
            seed: 0,
        }
    }

    #[test]
    fn equal_power_gives_unit_gain() {
        let s = AudioBuffer::new(vec![0.5, -0.5, 0.5, -0.5], 8000).unwrap();
        let n = AudioBuffer::new(vec![-0.5, 0.5, 0.5, -0.5], 8000).unwrap();
        let m = mix_noise_at_snr(&s, &n, 0.0, 0.0).unwrap();
        assert!((m.noise_gain - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gain_follows_power_ratio() {
        // P_s = 4 P_n at 0 dB: g = sqrt(P_s / P_n) = 2
        let s = AudioBuffer::new(vec![0.4, -0.4, 0.4, -0.4], 8000).unwrap();
        let n = AudioBuffer::new(vec![0.2, 0.2, -0.2, -0.2], 8000).unwrap();
        let m = mix_noise_at_snr(&s, &n, 0.0, 0.0).unwrap();
        assert!((m.noise_gain - 2.0).abs() < 1e-12);
    }

    #[test]
    fn measured_snr_matches_target() {
        let s = noise(8000, 16000, 1, 0.3);
        let n = noise(20000, 16000, 2, 0.8);
        for snr in [-5.0, 0.0, 7.3, 20.0] {
            let m = mix_noise_at_snr(&s, &n, snr, 0.25).unwrap();
            assert!((measured_snr(&m.speech, &m.mixture) - snr).abs() < 1e-6);
            assert!(m.mixture.peak() <= 1.0);
        }
    }

    #[test]
    fn loud_mixture_is_rescaled_with_reference() {
        let s = noise(4000, 8000, 3, 0.9);
        let n = noise(4000, 8000, 4, 0.9);
        let m = mix_noise_at_snr(&s, &n, -5.0, 0.0).unwrap();
        assert!(m.rescale < 1.0);
        assert!((m.mixture.peak() - RESCALE_PEAK).abs() < 1e-12);
        assert!((measured_snr(&m.speech, &m.mixture) + 5.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_inputs() {
        let s = noise(100, 8000, 5, 0.3);
        let z = AudioBuffer::silence(100, 8000).unwrap();
        assert!(matches!(mix_noise_at_snr(&s, &z, 0.0, 0.0), Err(DistortionError::DegenerateNoise)));
        assert!(matches!(mix_noise_at_snr(&z, &s, 0.0, 0.0), Err(DistortionError::DegenerateSpeech)));
        let other = noise(100, 16000, 5, 0.3);
        assert!(matches!(
            mix_noise_at_snr(&s, &other, 0.0, 0.0),
            Err(DistortionError::SampleRateMismatch(8000, 16000))
        ));
    }

    #[test]
    fn short_noise_is_looped_smoothly() {
        let n: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.01).sin()).collect();
        let seg = noise_segment(&n, 900, 3000, 80);
        assert_eq!(seg.len(), 3000);
        assert_eq!(&seg[..20], &n[900..920]);
        // no jump across the seam
        let max_step = seg.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(max_step < 0.05, "{max_step}");
        // offset beyond the clip wraps
        assert_eq!(noise_segment(&n, 1010, 5, 80), n[10..15].to_vec());
    }

    #[test]
    fn unit_impulse_rir_is_identity() {
        let s = noise(500, 8000, 6, 0.5);
        let rir = AudioBuffer::new(vec![1.0, 0.0, 0.0], 8000).unwrap();
        let (wet, reference) = apply_reverb(&s, &rir).unwrap();
        assert_eq!(wet, s);
        assert_eq!(reference, s);
    }

    #[test]
    fn delayed_half_impulse() {
        let s = noise(500, 8000, 7, 0.5);
        let mut h = vec![0.0; 40];
        h[17] = 0.5;
        let rir = AudioBuffer::new(h, 8000).unwrap();
        let (wet, reference) = apply_reverb(&s, &rir).unwrap();
        let half: Vec<f64> = s.samples().iter().map(|v| 0.5 * v).collect();
        assert_eq!(wet.samples(), &half[..]);
        assert_eq!(reference.samples(), &half[..]);
    }

    #[test]
    fn reverb_matches_quadratic_oracle() {
        let s = noise(3000, 16000, 8, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut h: Vec<f64> = (0..200).map(|i| rng.gen_range(-1.0..1.0) * (-(i as f64) / 40.0).exp() * 0.3).collect();
        h[12] = 1.5;
        let rir = AudioBuffer::new(h.clone(), 16000).unwrap();
        let (wet, _) = apply_reverb(&s, &rir).unwrap();
        for (n, &got) in wet.samples().iter().enumerate() {
            let m = n + 12;
            let mut acc = 0.0;
            for (k, &hk) in h.iter().enumerate() {
                if m >= k && m - k < s.len() {
                    acc += hk * s.samples()[m - k];
                }
            }
            assert!((got - acc).abs() <= 1e-10);
        }
    }

    #[test]
    fn early_reflection_reference() {
        let s = noise(400, 8000, 10, 0.5);
        let rir = AudioBuffer::new(vec![0.0, 1.0, 0.5, 0.0, 0.0, 0.25], 8000).unwrap();
        // 0.125 ms at 8 kHz = 1 sample after the direct path
        let (_, reference) = apply_reverb_with(&s, &rir, ReverbReference::EarlyReflections { ms: 0.125 }).unwrap();
        let x = s.samples();
        assert!((reference.samples()[0] - x[0]).abs() < 1e-15);
        assert!((reference.samples()[5] - (x[5] + 0.5 * x[4])).abs() < 1e-15);
    }

    #[test]
    fn zero_rir_rejected() {
        let s = noise(10, 8000, 1, 0.5);
        let rir = AudioBuffer::silence(5, 8000).unwrap();
        assert!(matches!(apply_reverb(&s, &rir), Err(DistortionError::DegenerateRir)));
    }

    #[test]
    fn clipping_examples() {
        let s = noise(300, 8000, 11, 0.7);
        assert_eq!(apply_clipping(&s, 1.0).unwrap(), s);
        let ramp: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect();
        let r = AudioBuffer::new(ramp.clone(), 8000).unwrap();
        let c = apply_clipping(&r, 0.5).unwrap();
        for (o, i) in c.samples().iter().zip(&ramp) {
            assert_eq!(*o, i.clamp(-0.5, 0.5));
        }
        assert_eq!(c.peak(), 0.5);
        let z = AudioBuffer::silence(10, 8000).unwrap();
        assert_eq!(apply_clipping(&z, 0.3).unwrap(), z);
        assert!(apply_clipping(&s, 0.0).is_err());
        assert!(apply_clipping(&s, 1.1).is_err());
    }

    fn tone_level_db(x: &[f64], f: f64, sf: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (n, v) in x.iter().enumerate() {
            let ph = 2.0 * PI * f * n as f64 / sf;
            re += v * ph.cos();
            im += v * ph.sin();
        }
        20.0 * (2.0 * re.hypot(im) / x.len() as f64).log10()
    }

    #[test]
    fn bandwidth_limitation_two_tone() {
        let sf = 48000.0;
        let x: Vec<f64> = (0..48000)
            .map(|n| {
                let t = n as f64 / sf;
                0.4 * (2.0 * PI * 1000.0 * t).sin() + 0.4 * (2.0 * PI * 10000.0 * t).sin()
            })
            .collect();
        let buf = AudioBuffer::new(x.clone(), 48000).unwrap();
        let y = apply_bandwidth_limitation(&buf, 4000.0).unwrap();
        assert_eq!((y.sample_rate_hz(), y.len()), (48000, buf.len()));
        // measure away from the filter edges
        let mid = &y.samples()[4800..43200];
        let low = tone_level_db(mid, 1000.0, sf) - tone_level_db(&x[4800..43200], 1000.0, sf);
        let high = tone_level_db(mid, 10000.0, sf) - tone_level_db(&x[4800..43200], 10000.0, sf);
        assert!(low.abs() <= 0.1, "{low}");
        assert!(high <= -60.0, "{high}");
    }

    #[test]
    fn nyquist_cutoff_is_passthrough() {
        let s = noise(300, 16000, 12, 0.5);
        assert_eq!(apply_bandwidth_limitation(&s, 8000.0).unwrap(), s);
        assert!(apply_bandwidth_limitation(&s, 8001.0).is_err());
    }

    #[test]
    fn degrade_high_snr_is_nearly_clean() {
        let s = noise(16000, 16000, 13, 0.3);
        let n = noise(16000, 16000, 14, 0.3);
        let out = degrade(&s, &spec(Distortion::None, 60.0), None, &n, &DegradeOptions::default()).unwrap();
        let resid: f64 = out
            .degraded
            .samples()
            .iter()
            .zip(out.reference.samples())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!(10.0 * (resid / out.reference.energy()).log10() <= -60.0 + 1e-9);
    }

    #[test]
    fn clipping_at_peak_equals_plain_mix() {
        let s = noise(8000, 16000, 15, 0.3);
        let n = noise(8000, 16000, 16, 0.3);
        let out = degrade(&s, &spec(Distortion::Clipping { clip_ratio: 1.0 }, 0.0), None, &n, &DegradeOptions::default()).unwrap();
        let m = mix_noise_at_snr(&s, &n, 0.0, 0.0).unwrap();
        assert_eq!(out.degraded, m.mixture);
        assert_eq!(out.reference, m.speech);
    }

    #[test]
    fn degrade_is_deterministic_and_resamples_inputs() {
        let s = noise(8000, 16000, 17, 0.3);
        let n = noise(4000, 8000, 18, 0.3);
        let rir = AudioBuffer::new(vec![0.0, 0.9, 0.3, -0.2, 0.1], 48000).unwrap();
        let sp = DistortionSpec {
            noise_offset_s: 0.1,
            ..spec(Distortion::BandwidthLimitation { cutoff_hz: 4000.0 }, 5.0)
        };
        let opts = DegradeOptions::default();
        let a = degrade(&s, &sp, Some(&rir), &n, &opts).unwrap();
        let b = degrade(&s, &sp, Some(&rir), &n, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.degraded.sample_rate_hz(), 16000);
        assert_eq!(a.degraded.len(), s.len());
        assert_eq!(a.reference.len(), s.len());
    }

    #[test]
    fn invalid_spec_rejected() {
        let s = noise(100, 8000, 1, 0.5);
        let bad = spec(Distortion::Clipping { clip_ratio: 0.0 }, 0.0);
        assert!(degrade(&s, &bad, None, &s, &DegradeOptions::default()).is_err());
        let inf = spec(Distortion::None, f64::INFINITY);
        assert!(degrade(&s, &inf, None, &s, &DegradeOptions::default()).is_err());
    }
}
