use super::fir::STOPBAND_DB;
use super::window::{kaiser_at, kaiser_beta, sinc};
use super::DspError;
use crate::audio::AudioBuffer;

/// Phase tables larger than this many phases are not precomputed; the
/// kernel is evaluated per output sample instead.
const MAX_TABLE_PHASES: usize = 4096;

/// Passband edge as a fraction of the lower Nyquist frequency.
const PASSBAND_FRACTION: f64 = 0.95;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `round(len * to / from)` in exact integer arithmetic.
pub fn resampled_len(len: usize, from: u32, to: u32) -> usize {
    let num = len as u128 * to as u128;
    let den = from as u128;
    ((2 * num + den) / (2 * den)) as usize
}

/// Band-limited rational resampler with a Kaiser-windowed sinc prototype.
///
/// The passband extends to 0.95 of the lower Nyquist frequency and the
/// stopband (80 dB) starts at the lower Nyquist frequency.
#[derive(Debug, Clone)]
pub struct Resampler {
    from: u32,
    to: u32,
    up: usize,
    down: usize,
    /// Kernel half-width in input samples.
    half: usize,
    /// Normalised cutoff in cycles per input sample.
    fc: f64,
    beta: f64,
    /// `up` rows of `2 * half` taps, or empty when evaluated on the fly.
    table: Vec<f64>,
}

impl Resampler {
    pub fn new(from: u32, to: u32) -> Result<Self, DspError> {
        if from == 0 || to == 0 {
            return Err(DspError::Parameter(format!(
                "sample rates must be positive (from {from}, to {to})"
            )));
        }
        let g = gcd(from as u64, to as u64);
        let up = (to as u64 / g) as usize;
        let down = (from as u64 / g) as usize;
        let low = from.min(to) as f64;
        let passband = PASSBAND_FRACTION * low / 2.0;
        let stopband = low / 2.0;
        let fc = (passband + stopband) / 2.0 / from as f64;
        let transition = (stopband - passband) / from as f64;
        let len = super::fir::kaiser_length(STOPBAND_DB, transition);
        let half = len / 2 + 1;
        let mut r = Self {
            from,
            to,
            up,
            down,
            half,
            fc,
            beta: kaiser_beta(STOPBAND_DB),
            table: Vec::new(),
        };
        if up <= MAX_TABLE_PHASES {
            let width = 2 * half;
            let mut table = Vec::with_capacity(up * width);
            for phase in 0..up {
                let frac = phase as f64 / up as f64;
                table.extend((0..width).map(|j| r.kernel(frac + half as f64 - 1.0 - j as f64)));
            }
            r.table = table;
        }
        Ok(r)
    }

    fn kernel(&self, d: f64) -> f64 {
        2.0 * self.fc * sinc(2.0 * self.fc * d) * kaiser_at(d / self.half as f64, self.beta)
    }

    pub fn from_rate(&self) -> u32 {
        self.from
    }

    pub fn to_rate(&self) -> u32 {
        self.to
    }

    /// Resamples `x`, treating samples outside the signal as zero.
    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        if self.from == self.to {
            return x.to_vec();
        }
        let out_len = resampled_len(x.len(), self.from, self.to);
        if x.is_empty() {
            return Vec::new();
        }
        let width = 2 * self.half;
        // input index i lives at padded[i + half]
        let mut padded = vec![0.0; x.len() + 2 * self.half + 1];
        padded[self.half..self.half + x.len()].copy_from_slice(x);
        let mut out = Vec::with_capacity(out_len);
        let mut scratch = vec![0.0; width];
        for n in 0..out_len {
            let pos = n as u128 * self.down as u128;
            let base = (pos / self.up as u128) as usize;
            let phase = (pos % self.up as u128) as usize;
            // taps j = 0..width cover input indices base - half + 1 + j
            let start = base + 1;
            let window = &padded[start..start + width];
            let coeffs: &[f64] = if self.table.is_empty() {
                let frac = phase as f64 / self.up as f64;
                for (j, c) in scratch.iter_mut().enumerate() {
                    *c = self.kernel(frac + self.half as f64 - 1.0 - j as f64);
                }
                &scratch
            } else {
                &self.table[phase * width..(phase + 1) * width]
            };
            out.push(window.iter().zip(coeffs).map(|(a, b)| a * b).sum());
        }
        out
    }
}

/// Resamples a buffer to `target_sf`. Same-rate input is returned unchanged.
pub fn resample(x: &AudioBuffer, target_sf: u32) -> Result<AudioBuffer, DspError> {
    if target_sf == 0 {
        return Err(DspError::Parameter("target sample rate must be positive".into()));
    }
    if x.sample_rate_hz() == target_sf {
        return Ok(x.clone());
    }
    let r = Resampler::new(x.sample_rate_hz(), target_sf)?;
    Ok(AudioBuffer::new(r.process(x.samples()), target_sf).expect("target rate checked"))
}
