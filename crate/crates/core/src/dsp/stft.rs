use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use super::window::hann_periodic;
use super::DspError;
use crate::audio::AudioBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowFn {
    Hann,
    SqrtHann,
    Rectangular,
}

impl WindowFn {
    pub fn samples(self, n: usize) -> Vec<f64> {
        match self {
            WindowFn::Hann => hann_periodic(n),
            WindowFn::SqrtHann => hann_periodic(n).into_iter().map(f64::sqrt).collect(),
            WindowFn::Rectangular => vec![1.0; n],
        }
    }
}

/// STFT parameters expressed in seconds so that one configuration serves
/// every sampling frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfiStftConfig {
    pub window_duration_s: f64,
    pub hop_duration_s: f64,
    pub window: WindowFn,
}

impl Default for SfiStftConfig {
    fn default() -> Self {
        Self {
            window_duration_s: 0.020,
            hop_duration_s: 0.010,
            window: WindowFn::Hann,
        }
    }
}

impl SfiStftConfig {
    /// Frame and hop length in samples at `sf`.
    ///
    /// An odd frame length (441 at 22.05 kHz for 20 ms) is bumped to the next
    /// even number so that the one-sided spectrum has a Nyquist bin.
    pub fn resolve(&self, sf: u32) -> Result<(usize, usize), DspError> {
        if !(self.hop_duration_s > 0.0 && self.hop_duration_s <= self.window_duration_s) {
            return Err(DspError::Parameter(format!(
                "need 0 < hop ({} s) <= window ({} s)",
                self.hop_duration_s, self.window_duration_s
            )));
        }
        let mut n_fft = (self.window_duration_s * sf as f64).round() as usize;
        if n_fft % 2 == 1 {
            n_fft += 1;
        }
        let hop = (self.hop_duration_s * sf as f64).round() as usize;
        if n_fft < 2 || hop == 0 {
            return Err(DspError::Parameter(format!(
                "window/hop too short at {sf} Hz ({n_fft}/{hop} samples)"
            )));
        }
        Ok((n_fft, hop.min(n_fft)))
    }
}

/// Complex STFT frames, row-major `frames x (n_fft/2 + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Vec<Complex64>,
    n_frames: usize,
    pub sample_rate_hz: u32,
    pub n_fft: usize,
    pub hop_samples: usize,
}

impl Spectrogram {
    pub fn zeros(n_frames: usize, sample_rate_hz: u32, n_fft: usize, hop_samples: usize) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); n_frames * (n_fft / 2 + 1)],
            n_frames,
            sample_rate_hz,
            n_fft,
            hop_samples,
        }
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        let f = self.n_bins();
        &self.data[t * f..(t + 1) * f]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [Complex64] {
        let f = self.n_bins();
        &mut self.data[t * f..(t + 1) * f]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks(self.n_bins())
    }
}

/// How the signal is extended before framing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Frames start at sample 0; a signal shorter than one frame yields a
    /// single zero-padded frame.
    None,
    /// `n/2` samples on each side, mirrored about the end samples.
    CenterReflect,
    /// `n/2` zeros on each side.
    CenterZero,
}

fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

fn pad_signal(x: &[f64], half: usize, padding: Padding) -> Vec<f64> {
    match padding {
        Padding::None => x.to_vec(),
        Padding::CenterZero => {
            let mut v = vec![0.0; x.len() + 2 * half];
            v[half..half + x.len()].copy_from_slice(x);
            v
        }
        Padding::CenterReflect => (0..x.len() + 2 * half)
            .map(|i| x[reflect_index(i as isize - half as isize, x.len())])
            .collect(),
    }
}

/// Frames `x` with `window` (length ≤ `n_fft`) and returns one-sided spectra.
///
/// With centre padding the frame count is `1 + len / hop`; without it,
/// `1 + (len - win) / hop` (at least one frame).
pub fn stft_frames(
    x: &[f64],
    n_fft: usize,
    hop: usize,
    window: &[f64],
    padding: Padding,
) -> Vec<Vec<Complex64>> {
    let win = window.len();
    debug_assert!(win <= n_fft && hop > 0);
    if x.is_empty() {
        return Vec::new();
    }
    let padded = pad_signal(x, win / 2, padding);
    let n_frames = match padding {
        Padding::None if x.len() < win => 1,
        Padding::None => 1 + (x.len() - win) / hop,
        _ => 1 + x.len() / hop,
    };
    let mut frame = vec![0.0; win];
    (0..n_frames)
        .map(|t| {
            let start = t * hop;
            for (j, f) in frame.iter_mut().enumerate() {
                *f = padded.get(start + j).copied().unwrap_or(0.0) * window[j];
            }
            fft::rfft(&frame, n_fft)
        })
        .collect()
}

/// Centre-padded (reflection) STFT with window and hop fixed in seconds.
pub fn sfi_stft(x: &AudioBuffer, cfg: &SfiStftConfig) -> Result<Spectrogram, DspError> {
    if x.is_empty() {
        return Err(DspError::EmptyInput);
    }
    let (n_fft, hop) = cfg.resolve(x.sample_rate_hz())?;
    let window = cfg.window.samples(n_fft);
    let frames = stft_frames(x.samples(), n_fft, hop, &window, Padding::CenterReflect);
    let mut spec = Spectrogram::zeros(frames.len(), x.sample_rate_hz(), n_fft, hop);
    for (t, f) in frames.into_iter().enumerate() {
        spec.frame_mut(t).copy_from_slice(&f);
    }
    Ok(spec)
}

/// Weighted overlap-add inverse of [`sfi_stft`], normalised by the summed
/// squared window so that any hop satisfying the non-zero overlap-add
/// condition reconstructs exactly.
pub fn sfi_istft(
    spec: &Spectrogram,
    cfg: &SfiStftConfig,
    target_len: usize,
) -> Result<AudioBuffer, DspError> {
    let (n_fft, hop) = cfg.resolve(spec.sample_rate_hz)?;
    if n_fft != spec.n_fft || hop != spec.hop_samples {
        return Err(DspError::Parameter(format!(
            "spectrogram was computed with n_fft={} hop={}, config resolves to {n_fft}/{hop}",
            spec.n_fft, spec.hop_samples
        )));
    }
    let window = cfg.window.samples(n_fft);
    let half = n_fft / 2;
    let total = (spec.n_frames().max(1) - 1) * hop + n_fft;
    let mut ola = vec![0.0; total];
    let mut envelope = vec![0.0; total];
    for (t, frame) in spec.frames().enumerate() {
        let time = fft::irfft(frame, n_fft);
        let start = t * hop;
        for j in 0..n_fft {
            ola[start + j] += time[j] * window[j];
            envelope[start + j] += window[j] * window[j];
        }
    }
    let peak = envelope.iter().cloned().fold(0.0, f64::max);
    let mut out = Vec::with_capacity(target_len);
    for i in 0..target_len {
        let k = i + half;
        if k >= total {
            out.push(0.0);
            continue;
        }
        if envelope[k] <= 1e-10 * peak.max(f64::MIN_POSITIVE) {
            return Err(DspError::Cola(format!(
                "window envelope vanishes at sample {i} (n_fft={n_fft}, hop={hop})"
            )));
        }
        out.push(ola[k] / envelope[k]);
    }
    AudioBuffer::new(out, spec.sample_rate_hz).map_err(|e| DspError::Parameter(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SFS: [u32; 7] = [8000, 16000, 22050, 24000, 32000, 44100, 48000];

    fn noise(len: usize, sf: u32, seed: u64) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioBuffer::new((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(), sf).unwrap()
    }

    #[test]
    fn resolved_sizes() {
        let cfg = SfiStftConfig::default();
        let sizes: Vec<_> = SFS.iter().map(|&sf| cfg.resolve(sf).unwrap()).collect();
        assert_eq!(
            sizes,
            vec![(160, 80), (320, 160), (442, 221), (480, 240), (640, 320), (882, 441), (960, 480)]
        );
    }

    #[test]
    fn shape_at_16k_and_48k() {
        let cfg = SfiStftConfig::default();
        let s = sfi_stft(&noise(16000, 16000, 1), &cfg).unwrap();
        assert_eq!((s.n_fft, s.hop_samples, s.n_bins()), (320, 160, 161));
        assert_eq!(s.n_frames(), 1 + 16000 / 160);
        let s = sfi_stft(&noise(1000, 48000, 1), &cfg).unwrap();
        assert_eq!((s.n_fft, s.hop_samples, s.n_bins()), (960, 480, 481));
        assert_eq!(s.n_frames(), 1 + 1000 / 480);
    }

    #[test]
    fn empty_input_rejected() {
        let x = AudioBuffer::new(vec![], 16000).unwrap();
        assert_eq!(sfi_stft(&x, &SfiStftConfig::default()), Err(DspError::EmptyInput));
    }

    #[test]
    fn parseval_against_direct_dft() {
        // Rectangular window, hop = window: each frame is a plain DFT of the
        // samples it covers.
        let cfg = SfiStftConfig {
            window_duration_s: 0.004,
            hop_duration_s: 0.004,
            window: WindowFn::Rectangular,
        };
        let x = noise(320, 16000, 7);
        let s = sfi_stft(&x, &cfg).unwrap();
        let n = s.n_fft;
        assert_eq!(n, 64);
        // frame 1 covers x[32..96] after 32 samples of left padding
        let seg = &x.samples()[32..96];
        let mut direct_energy = 0.0;
        for k in 0..=n / 2 {
            let (mut re, mut im) = (0.0, 0.0);
            for (m, v) in seg.iter().enumerate() {
                let ph = -2.0 * std::f64::consts::PI * (k * m) as f64 / n as f64;
                re += v * ph.cos();
                im += v * ph.sin();
            }
            let got = s.frame(1)[k];
            assert!((got.re - re).abs() < 1e-9 && (got.im - im).abs() < 1e-9);
            let w = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
            direct_energy += w * (re * re + im * im);
        }
        let time_energy: f64 = seg.iter().map(|v| v * v).sum::<f64>() * n as f64;
        assert!(((direct_energy - time_energy) / time_energy).abs() < 1e-6);
        let stft_energy: f64 = s
            .frame(1)
            .iter()
            .enumerate()
            .map(|(k, c)| if k == 0 || k == n / 2 { 1.0 } else { 2.0 } * c.norm_sqr())
            .sum();
        assert!(((stft_energy - time_energy) / time_energy).abs() < 1e-6);
    }

    #[test]
    fn round_trip_every_rate() {
        for (i, &sf) in SFS.iter().enumerate() {
            for window in [WindowFn::Hann, WindowFn::SqrtHann] {
                let cfg = SfiStftConfig { window, ..Default::default() };
                let x = noise(sf as usize, sf, i as u64);
                let y = sfi_istft(&sfi_stft(&x, &cfg).unwrap(), &cfg, x.len()).unwrap();
                let err = x.samples().iter().zip(y.samples()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                assert!(err <= 1e-6, "{sf} {window:?}: {err}");
            }
        }
    }

    #[test]
    fn zero_spectrogram_gives_silence() {
        let cfg = SfiStftConfig::default();
        let s = Spectrogram::zeros(11, 8000, 160, 80);
        let y = sfi_istft(&s, &cfg, 800).unwrap();
        assert!(y.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vanishing_envelope_is_reported() {
        // periodic Hann with hop = window leaves a zero at every frame start
        let cfg = SfiStftConfig {
            window_duration_s: 0.02,
            hop_duration_s: 0.02,
            window: WindowFn::Hann,
        };
        let x = noise(800, 8000, 3);
        let s = sfi_stft(&x, &cfg).unwrap();
        assert!(matches!(sfi_istft(&s, &cfg, x.len()), Err(DspError::Cola(_))));
    }

    #[test]
    fn short_input_reflects() {
        let cfg = SfiStftConfig::default();
        let x = noise(30, 8000, 9);
        let y = sfi_istft(&sfi_stft(&x, &cfg).unwrap(), &cfg, 30).unwrap();
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn reflect_indexing() {
        let idx: Vec<usize> = (-3..7).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(idx, vec![3, 2, 1, 0, 1, 2, 3, 2, 1, 0]);
    }
}
