//! Intrusive signal-level metrics and batch evaluation.

mod estoi;
mod lsd;
mod mcd;
mod multires;
mod report;
mod sdr;
mod wrapper;

pub use estoi::{estoi, ESTOI_MIN_FRAMES, ESTOI_SF};
pub use lsd::{lsd, lsd_params};
pub use mcd::{mcd, mcd_from_cepstra, mel_cepstra, MCD_COEFFS, MEL_BANDS};
pub use multires::{multires_l1_loss, MULTIRES_WINDOWS};
pub use report::{
    evaluate_pairlist, Aggregate, Direction, EvalOptions, FileMetrics, Metric, MetricReport,
    ReportMetadata,
};
pub use sdr::{sdr, SDR_CAP_DB};
pub use wrapper::{sfi_wrapper_eval, WRAPPER_SF};

use thiserror::Error;

use crate::audio::{AudioBuffer, AudioError};
use crate::dsp::DspError;

/// Floor added to (or clamping) power values before taking logarithms.
pub const LOG_EPS: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("reference signal is silent; metric undefined")]
    SilentReference,
    #[error("signal too short: {0}")]
    TooShort(String),
    #[error("sample rate mismatch: reference {0} Hz, estimate {1} Hz")]
    SampleRateMismatch(u32, u32),
    #[error("enhancement failed: {0}")]
    Enhance(Box<dyn std::error::Error + Send + Sync>),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

/// Checks rates and returns both signals at a common length, zero-padding
/// the shorter one.
pub(crate) fn aligned(
    reference: &AudioBuffer,
    estimate: &AudioBuffer,
) -> Result<(Vec<f64>, Vec<f64>), MetricError> {
    if reference.sample_rate_hz() != estimate.sample_rate_hz() {
        return Err(MetricError::SampleRateMismatch(
            reference.sample_rate_hz(),
            estimate.sample_rate_hz(),
        ));
    }
    let mut r = reference.samples().to_vec();
    let mut e = estimate.samples().to_vec();
    if r.len() != e.len() {
        log::warn!(
            "length mismatch (reference {}, estimate {}); zero-padding the shorter signal",
            r.len(),
            e.len()
        );
        let n = r.len().max(e.len());
        r.resize(n, 0.0);
        e.resize(n, 0.0);
    }
    Ok((r, e))
}
