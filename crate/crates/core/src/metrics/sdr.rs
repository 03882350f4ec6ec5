use super::{aligned, MetricError};
use crate::audio::AudioBuffer;

/// Upper bound reported for (near-)perfect estimates.
pub const SDR_CAP_DB: f64 = 60.0;

/// Plain energy-ratio SDR, `10 log10(|ref|^2 / |ref - est|^2)`, capped at
/// [`SDR_CAP_DB`].
pub fn sdr(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<f64, MetricError> {
    let (r, e) = aligned(reference, estimate)?;
    let signal: f64 = r.iter().map(|v| v * v).sum();
    if signal == 0.0 {
        return Err(MetricError::SilentReference);
    }
    let residual: f64 = r.iter().zip(&e).map(|(a, b)| (a - b) * (a - b)).sum();
    if residual < 1e-12 * signal {
        return Ok(SDR_CAP_DB);
    }
    Ok((10.0 * (signal / residual).log10()).min(SDR_CAP_DB))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn buf(v: Vec<f64>) -> AudioBuffer {
        AudioBuffer::new(v, 16000).unwrap()
    }

    #[test]
    fn identical_hits_cap() {
        let x = buf(vec![0.1, -0.2, 0.3]);
        assert_eq!(sdr(&x, &x).unwrap(), SDR_CAP_DB);
    }

    #[test]
    fn doubled_estimate_is_zero_db() {
        let x = buf(vec![0.1, -0.2, 0.3, 0.05]);
        let y = buf(x.samples().iter().map(|v| 2.0 * v).collect());
        assert!(sdr(&x, &y).unwrap().abs() < 1e-12);
    }

    #[test]
    fn orthogonal_residual_at_twenty_db() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r: Vec<f64> = (0..16000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut w: Vec<f64> = (0..16000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // Gram-Schmidt against r, then scale to 1/100 of its energy
        let rr: f64 = r.iter().map(|v| v * v).sum();
        let proj = w.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / rr;
        w.iter_mut().zip(&r).for_each(|(a, b)| *a -= proj * b);
        let ww: f64 = w.iter().map(|v| v * v).sum();
        let k = (rr / 100.0 / ww).sqrt();
        let est: Vec<f64> = r.iter().zip(&w).map(|(a, b)| a + k * b).collect();
        let v = sdr(&buf(r), &buf(est)).unwrap();
        assert!((v - 20.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn silent_reference_is_error() {
        let z = buf(vec![0.0; 10]);
        assert!(matches!(sdr(&z, &z), Err(MetricError::SilentReference)));
    }

    #[test]
    fn shorter_estimate_is_padded() {
        let x = buf(vec![1.0, 1.0, 1.0, 1.0]);
        let y = buf(vec![1.0, 1.0]);
        // residual energy 2 of 4
        assert!((sdr(&x, &y).unwrap() - 10.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn rate_mismatch_is_error() {
        let x = buf(vec![1.0]);
        let y = AudioBuffer::new(vec![1.0], 8000).unwrap();
        assert!(matches!(sdr(&x, &y), Err(MetricError::SampleRateMismatch(16000, 8000))));
    }
}
