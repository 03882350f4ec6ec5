//! Extended short-time objective intelligibility.
//!
//! Both signals are resampled to 10 kHz, frames more than 40 dB below the
//! loudest reference frame are dropped, and one-third-octave band envelopes
//! are compared over 384 ms segments after row and column normalisation.

use super::{aligned, MetricError};
use crate::audio::AudioBuffer;
use crate::dsp::{self, stft_frames, window::hann_symmetric, Padding};

pub const ESTOI_SF: u32 = 10_000;
const FRAME: usize = 256;
const HOP: usize = FRAME / 2;
const NFFT: usize = 512;
const BANDS: usize = 15;
const MIN_FREQ: f64 = 150.0;
const DYN_RANGE_DB: f64 = 40.0;
/// Frames per segment (384 ms at 10 kHz).
pub const ESTOI_MIN_FRAMES: usize = 30;

/// Hann window of `FRAME + 2` points without its zero end points.
fn analysis_window() -> Vec<f64> {
    let w = hann_symmetric(FRAME + 2);
    w[1..=FRAME].to_vec()
}

fn frame_starts(len: usize) -> impl Iterator<Item = usize> {
    let n = if len >= FRAME { (len - FRAME) / HOP + 1 } else { 0 };
    (0..n).map(|i| i * HOP)
}

/// Drops frames of both signals where the reference is more than
/// `DYN_RANGE_DB` below its loudest frame, and overlap-adds the rest.
fn remove_silent_frames(x: &[f64], y: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let starts: Vec<usize> = frame_starts(x.len()).collect();
    let energy_db: Vec<f64> = starts
        .iter()
        .map(|&s| {
            let e: f64 = x[s..s + FRAME].iter().zip(w).map(|(v, w)| (v * w) * (v * w)).sum();
            20.0 * (e.sqrt() + f64::EPSILON).log10()
        })
        .collect();
    let max = energy_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energy_db)
        .filter(|(_, &e)| e > max - DYN_RANGE_DB)
        .map(|(&s, _)| s)
        .collect();
    if kept.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let out_len = (kept.len() - 1) * HOP + FRAME;
    let mut xo = vec![0.0; out_len];
    let mut yo = vec![0.0; out_len];
    for (i, &s) in kept.iter().enumerate() {
        let o = i * HOP;
        for j in 0..FRAME {
            xo[o + j] += x[s + j] * w[j];
            yo[o + j] += y[s + j] * w[j];
        }
    }
    (xo, yo)
}

/// One-third-octave band matrix: `BANDS` rows of bin ranges `[lo, hi)`.
fn third_octave_bins() -> Vec<(usize, usize)> {
    let freqs: Vec<f64> = (0..=NFFT / 2)
        .map(|k| k as f64 * ESTOI_SF as f64 / NFFT as f64)
        .collect();
    let nearest = |f: f64| {
        freqs
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - f).abs().total_cmp(&(b.1 - f).abs()))
            .map(|(i, _)| i)
            .unwrap()
    };
    (0..BANDS)
        .map(|b| {
            let cf = MIN_FREQ * 2f64.powf(b as f64 / 3.0);
            (nearest(cf * 2f64.powf(-1.0 / 6.0)), nearest(cf * 2f64.powf(1.0 / 6.0)))
        })
        .collect()
}

/// `[frame][band]` envelope magnitudes.
fn band_envelopes(x: &[f64], w: &[f64], bands: &[(usize, usize)]) -> Vec<[f64; BANDS]> {
    stft_frames(x, NFFT, HOP, w, Padding::None)
        .into_iter()
        .map(|spec| {
            let mut row = [0.0; BANDS];
            for (r, &(lo, hi)) in row.iter_mut().zip(bands) {
                *r = spec[lo..hi].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            }
            row
        })
        .collect()
}

/// Subtracts the mean and scales to unit norm; all-constant input becomes zeros.
fn normalize(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    } else {
        v.iter_mut().for_each(|x| *x = 0.0);
    }
}

/// Row-then-column normalised copy of a `BANDS x N` segment.
fn normalized_segment(env: &[[f64; BANDS]]) -> Vec<Vec<f64>> {
    let n = env.len();
    // rows: one band across time
    let mut rows: Vec<Vec<f64>> = (0..BANDS).map(|b| env.iter().map(|f| f[b]).collect()).collect();
    rows.iter_mut().for_each(|r| normalize(r));
    // columns: one frame across bands
    let mut cols: Vec<Vec<f64>> = (0..n).map(|t| rows.iter().map(|r| r[t]).collect()).collect();
    cols.iter_mut().for_each(|c| normalize(c));
    cols
}

/// ESTOI score in [-1, 1].
pub fn estoi(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<f64, MetricError> {
    let (r, e) = aligned(reference, estimate)?;
    let sf = reference.sample_rate_hz();
    let r = dsp::resample(&reference.with_samples(r), ESTOI_SF)?.into_samples();
    let e = dsp::resample(&AudioBuffer::new(e, sf)?, ESTOI_SF)?.into_samples();
    let w = analysis_window();
    let (r, e) = remove_silent_frames(&r, &e, &w);
    let bands = third_octave_bins();
    let x_env = band_envelopes(&r, &w, &bands);
    let y_env = band_envelopes(&e, &w, &bands);
    let frames = frame_starts(r.len()).count();
    if frames < ESTOI_MIN_FRAMES {
        return Err(MetricError::TooShort(format!(
            "{frames} non-silent frames after trimming, need {ESTOI_MIN_FRAMES} (384 ms)"
        )));
    }
    let n = ESTOI_MIN_FRAMES;
    let segments = frames - n + 1;
    let mut total = 0.0;
    for m in 0..segments {
        let xs = normalized_segment(&x_env[m..m + n]);
        let ys = normalized_segment(&y_env[m..m + n]);
        let corr: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>())
            .sum();
        total += corr / n as f64;
    }
    Ok((total / segments as f64).clamp(-1.0, 1.0))
}
