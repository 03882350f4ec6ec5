use super::window::{kaiser_at, kaiser_beta, sinc};
use super::DspError;

/// Stopband attenuation targeted by every low-pass design in the crate.
pub const STOPBAND_DB: f64 = 80.0;

/// Linear-phase FIR filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
}

impl FirFilter {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Group delay in samples, `(len - 1) / 2`.
    pub fn delay_samples(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Complex frequency response magnitude at `freq_hz`.
    pub fn magnitude_at(&self, freq_hz: f64, sf: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz / sf;
        let (re, im) = self
            .taps
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (n, &h)| {
                let phase = w * n as f64;
                (re + h * phase.cos(), im - h * phase.sin())
            });
        re.hypot(im)
    }
}

/// Kaiser's length estimate for `attenuation_db` and a transition band of
/// `transition` cycles/sample, rounded up to an odd count.
pub fn kaiser_length(attenuation_db: f64, transition: f64) -> usize {
    let n = ((attenuation_db - 7.95) / (2.285 * 2.0 * std::f64::consts::PI * transition)).ceil()
        as usize
        + 1;
    n | 1
}

/// Kaiser-windowed sinc low-pass with its -6 dB point at `cutoff_hz`.
///
/// The transition band `transition_hz` is centred on the cutoff; the taps are
/// normalised to unit DC gain.
pub fn design_lowpass(cutoff_hz: f64, sf: u32, transition_hz: f64) -> Result<FirFilter, DspError> {
    let sf_f = sf as f64;
    if !(cutoff_hz > 0.0 && cutoff_hz < sf_f / 2.0) {
        return Err(DspError::Parameter(format!(
            "cutoff {cutoff_hz} Hz must lie in (0, {}) Hz",
            sf_f / 2.0
        )));
    }
    if !(transition_hz > 0.0 && transition_hz.is_finite()) {
        return Err(DspError::Parameter(format!(
            "transition width {transition_hz} Hz must be positive"
        )));
    }
    let len = kaiser_length(STOPBAND_DB, transition_hz / sf_f);
    let beta = kaiser_beta(STOPBAND_DB);
    let fc = cutoff_hz / sf_f;
    let mid = (len - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..len)
        .map(|n| {
            let d = n as f64 - mid;
            2.0 * fc * sinc(2.0 * fc * d) * kaiser_at(d / mid.max(1.0), beta)
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= dc);
    Ok(FirFilter { taps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db(x: f64) -> f64 {
        20.0 * x.log10()
    }

    // Frequency response measured by zero-padded FFT of the taps, read at the
    // bin closest to `f`.
    fn fft_response_db(taps: &[f64], f: f64, sf: f64) -> f64 {
        let n = 1 << 18;
        let spec = crate::dsp::fft::rfft(taps, n);
        let bin = (f / sf * n as f64).round() as usize;
        db(spec[bin].norm())
    }

    #[test]
    fn meets_passband_and_stopband_specs() {
        for &(cutoff, sf) in &[(4000.0, 48000u32), (8000.0, 48000), (11025.0, 44100), (4000.0, 16000)] {
            let tw = 0.05 * cutoff;
            let f = design_lowpass(cutoff, sf, tw).unwrap();
            assert_eq!(f.taps().len() % 2, 1);
            let pass = fft_response_db(f.taps(), 0.5 * cutoff, sf as f64);
            assert!(pass.abs() <= 0.1, "passband {pass} dB");
            let stop = fft_response_db(f.taps(), cutoff + tw, sf as f64);
            assert!(stop <= -80.0, "stopband {stop} dB at {cutoff}/{sf}");
            let sum: f64 = f.taps().iter().sum();
            assert!((sum - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn symmetric_taps() {
        let f = design_lowpass(1000.0, 8000, 200.0).unwrap();
        let t = f.taps();
        for i in 0..t.len() / 2 {
            assert!((t[i] - t[t.len() - 1 - i]).abs() < 1e-15);
        }
        assert_eq!(f.delay_samples(), (t.len() - 1) / 2);
    }

    #[test]
    fn rejects_bad_cutoff() {
        assert!(design_lowpass(8000.0, 16000, 100.0).is_err());
        assert!(design_lowpass(0.0, 16000, 100.0).is_err());
        assert!(design_lowpass(1000.0, 16000, 0.0).is_err());
    }

    #[test]
    fn dtft_matches_fft_readout() {
        let f = design_lowpass(3000.0, 16000, 300.0).unwrap();
        let a = db(f.magnitude_at(1500.0, 16000.0));
        let b = fft_response_db(f.taps(), 1500.0, 16000.0);
        assert!((a - b).abs() < 1e-6);
    }
}
