//! Numeric kernels shared by every other module: windows, FIR design,
//! rational resampling, linear convolution and the fixed-duration STFT.

mod convolve;
mod fft;
mod fir;
mod resample;
mod stft;
pub mod window;

pub use convolve::{convolve, convolve_direct, convolve_fft, ConvolveMode, FFT_THRESHOLD};
pub use fir::{design_lowpass, kaiser_length, FirFilter, STOPBAND_DB};
pub use resample::{resample, resampled_len, Resampler};
pub use stft::{
    sfi_istft, sfi_stft, stft_frames, Padding, SfiStftConfig, Spectrogram, WindowFn,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("input signal is empty")]
    EmptyInput,
    #[error("overlap-add condition violated: {0}")]
    Cola(String),
}
