//! Mono audio buffers and WAV file I/O.
//!
//! Samples are held as `f64` in memory. Files are RIFF/WAVE with either
//! integer PCM (16 or 24 bit) or IEEE float-32 samples, one channel only.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed WAV file {path}: {msg}")]
    Format { path: String, msg: String },
    #[error("{path}: expected 1 channel, found {channels}")]
    Channels { path: String, channels: u16 },
    #[error("{path}: unsupported encoding {detail}")]
    Encoding { path: String, detail: String },
    #[error("failed to read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {msg}")]
    Write { path: String, msg: String },
    #[error("sample rate must be positive")]
    InvalidSampleRate,
}

/// On-disk sample encoding for [`save_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Pcm16,
    Float32,
}

/// A single-channel signal together with its sampling frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, AudioError> {
        if sample_rate_hz == 0 {
            return Err(AudioError::InvalidSampleRate);
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Buffer of `len` zeros.
    pub fn silence(len: usize, sample_rate_hz: u32) -> Result<Self, AudioError> {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Same sample rate, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Truncates or zero-pads to exactly `len` samples.
    pub fn fit_to_len(mut self, len: usize) -> Self {
        self.samples.resize(len, 0.0);
        self
    }
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn map_hound(path: &Path, err: hound::Error) -> AudioError {
    let p = path_str(path);
    match err {
        // short reads inside the parser surface as non-OS io errors
        hound::Error::IoError(source) if source.raw_os_error().is_none() => {
            AudioError::Format {
                path: p,
                msg: source.to_string(),
            }
        }
        hound::Error::IoError(source) => AudioError::Read { path: p, source },
        hound::Error::Unsupported => AudioError::Encoding {
            path: p,
            detail: "(format tag not PCM or IEEE float)".into(),
        },
        other => AudioError::Format {
            path: p,
            msg: other.to_string(),
        },
    }
}

/// Reads a mono WAV file. Integer PCM is scaled by `2^(bits-1)`.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, AudioError> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(AudioError::Channels {
            path: path_str(path),
            channels: spec.channels,
        });
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = (1i64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| map_hound(path, e))?
        }
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (format, bits) => {
            return Err(AudioError::Encoding {
                path: path_str(path),
                detail: format!("{format:?} {bits}-bit"),
            })
        }
    };
    AudioBuffer::new(samples, spec.sample_rate).map_err(|_| AudioError::Format {
        path: path_str(path),
        msg: "zero sample rate".into(),
    })
}

/// Quantizes to a 16-bit code, rounding half away from zero and saturating.
pub fn quantize_pcm16(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Writes a mono WAV file.
///
/// `Float32` stores each sample cast to `f32`, so only values exactly
/// representable in single precision survive a round trip bit-for-bit.
pub fn save_wav(
    buffer: &AudioBuffer,
    path: impl AsRef<Path>,
    encoding: Encoding,
) -> Result<(), AudioError> {
    let path = path.as_ref();
    let write_err = |e: hound::Error| AudioError::Write {
        path: path_str(path),
        msg: e.to_string(),
    };
    let (bits, format) = match encoding {
        Encoding::Pcm16 => (16, hound::SampleFormat::Int),
        Encoding::Float32 => (32, hound::SampleFormat::Float),
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate_hz,
        bits_per_sample: bits,
        sample_format: format,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(write_err)?;
    for &s in &buffer.samples {
        match encoding {
            Encoding::Pcm16 => writer.write_sample(quantize_pcm16(s)),
            Encoding::Float32 => writer.write_sample(s as f32),
        }
        .map_err(write_err)?;
    }
    writer.finalize().map_err(write_err)
}

/// Reads only the sample rate from a WAV header.
pub fn probe_sample_rate(path: impl AsRef<Path>) -> Result<u32, AudioError> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    Ok(reader.spec().sample_rate)
}
