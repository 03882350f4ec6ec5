use super::MetricError;
use crate::audio::AudioBuffer;
use crate::dsp;

/// Rate at which fixed-rate models operate.
pub const WRAPPER_SF: u32 = 48_000;

/// Runs a 48 kHz-only `enhance` on input of any rate: upsample to 48 kHz,
/// enhance, resample back and trim or pad to the input length.
pub fn sfi_wrapper_eval<F, E>(enhance: F, degraded: &AudioBuffer) -> Result<AudioBuffer, MetricError>
where
    F: FnOnce(&AudioBuffer) -> Result<AudioBuffer, E>,
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    let sf = degraded.sample_rate_hz();
    let up = dsp::resample(degraded, WRAPPER_SF)?;
    let enhanced = enhance(&up).map_err(|e| MetricError::Enhance(e.into()))?;
    if enhanced.sample_rate_hz() != WRAPPER_SF {
        return Err(MetricError::Enhance(
            format!("enhancer returned {} Hz, expected {WRAPPER_SF} Hz", enhanced.sample_rate_hz()).into(),
        ));
    }
    Ok(dsp::resample(&enhanced, sf)?.fit_to_len(degraded.len()))
}
