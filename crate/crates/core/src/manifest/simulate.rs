use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::rng::CounterRng;
use super::{Manifest, ManifestEntry};
use crate::audio::{load_wav, save_wav, AudioBuffer, Encoding};
use crate::distortion::{degrade, DegradeOptions, DegradedPair, DistortionSpec};
use crate::dsp;

const DRAW_CROP: u32 = 0;
const DRAW_NOISE_OFFSET: u32 = 1;

/// Where sources are read from and outputs written to.
#[derive(Debug, Clone)]
pub struct SimulationContext {
    /// Base for relative source paths.
    pub source_root: Option<PathBuf>,
    /// Base for `degraded_out` / `reference_out`.
    pub output_dir: PathBuf,
    /// Chunk length in seconds; 0 keeps whole utterances.
    pub chunk_duration_s: f64,
    pub degrade: DegradeOptions,
}

impl SimulationContext {
    pub fn new(output_dir: impl Into<PathBuf>, chunk_duration_s: f64) -> Self {
        Self {
            source_root: None,
            output_dir: output_dir.into(),
            chunk_duration_s,
            degrade: DegradeOptions::default(),
        }
    }

    fn source(&self, p: &Path) -> PathBuf {
        match &self.source_root {
            Some(r) => r.join(p),
            None => p.to_path_buf(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntryStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct EntryReport {
    pub id: String,
    pub status: EntryStatus,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Default)]
pub struct SimulationReport {
    /// Sorted by id.
    pub entries: Vec<EntryReport>,
}

impl SimulationReport {
    pub fn succeeded(&self) -> usize {
        self.entries.iter().filter(|e| e.status == EntryStatus::Ok).count()
    }

    pub fn failed(&self) -> usize {
        self.entries.len() - self.succeeded()
    }

    pub fn total_elapsed(&self) -> Duration {
        self.entries.iter().map(|e| e.elapsed).sum()
    }

    /// `id \t status \t reason` rows with a header. Timing is left out so
    /// the file is identical across runs.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id\tstatus\treason\n");
        for e in &self.entries {
            let (status, reason) = match &e.status {
                EntryStatus::Ok => ("ok", String::new()),
                EntryStatus::Failed(m) => ("failed", m.replace(['\t', '\n'], " ")),
            };
            let _ = writeln!(out, "{}\t{}\t{}", e.id, status, reason);
        }
        out
    }
}

/// Degrades one entry in memory. The result depends only on the entry,
/// the source bytes, and `ctx.chunk_duration_s` / `ctx.degrade`.
pub fn simulate_pair(entry: &ManifestEntry, ctx: &SimulationContext) -> Result<DegradedPair, String> {
    let speech = load_wav(ctx.source(&entry.speech_path)).map_err(|e| e.to_string())?;
    let noise = load_wav(ctx.source(&entry.noise_path)).map_err(|e| e.to_string())?;
    let rir = match &entry.rir_path {
        Some(p) => Some(load_wav(ctx.source(p)).map_err(|e| e.to_string())?),
        None => None,
    };
    let spec = entry.spec(0.0)?;
    render(
        &speech,
        &noise,
        rir.as_ref(),
        spec,
        entry.output_sf,
        ctx.chunk_duration_s,
        &ctx.degrade,
    )
}

/// Resamples speech to `sf`, crops a chunk and picks a noise offset (both
/// drawn from `spec.seed`), then degrades.
pub(crate) fn render(
    speech: &AudioBuffer,
    noise: &AudioBuffer,
    rir: Option<&AudioBuffer>,
    mut spec: DistortionSpec,
    sf: u32,
    chunk_duration_s: f64,
    opts: &DegradeOptions,
) -> Result<DegradedPair, String> {
    let speech = dsp::resample(speech, sf).map_err(|e| e.to_string())?;
    let rng = CounterRng::new(spec.seed, 0);

    let chunk = (chunk_duration_s * sf as f64).round() as usize;
    let speech = if chunk > 0 && speech.len() > chunk {
        let start = rng.index(DRAW_CROP, speech.len() - chunk + 1);
        speech.with_samples(speech.samples()[start..start + chunk].to_vec())
    } else {
        speech
    };

    let spare_s = noise.duration_s() - speech.duration_s();
    spec.noise_offset_s = if spare_s > 0.0 {
        // whole samples at the noise rate
        let max = (spare_s * noise.sample_rate_hz() as f64).floor() as usize;
        rng.index(DRAW_NOISE_OFFSET, max + 1) as f64 / noise.sample_rate_hz() as f64
    } else {
        0.0
    };
    degrade(&speech, &spec, rir, noise, opts).map_err(|e| e.to_string())
}

/// Runs one entry and writes both float32 files. Partial outputs are
/// removed on failure.
pub fn simulate_entry(entry: &ManifestEntry, ctx: &SimulationContext) -> Result<(), String> {
    let pair = simulate_pair(entry, ctx)?;
    let deg = ctx.output_dir.join(&entry.degraded_out);
    let refp = ctx.output_dir.join(&entry.reference_out);
    let write = || -> Result<(), String> {
        for p in [&deg, &refp] {
            if let Some(dir) = p.parent() {
                std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            }
        }
        save_wav(&pair.degraded, &deg, Encoding::Float32).map_err(|e| e.to_string())?;
        save_wav(&pair.reference, &refp, Encoding::Float32).map_err(|e| e.to_string())
    };
    write().inspect_err(|_| {
        let _ = std::fs::remove_file(&deg);
        let _ = std::fs::remove_file(&refp);
    })
}

/// Simulates every entry on a pool of `workers` threads. Failures are
/// recorded per entry; the batch itself never fails.
pub fn run_manifest(manifest: &Manifest, ctx: &SimulationContext, workers: usize) -> SimulationReport {
    let run = || {
        manifest
            .entries
            .par_iter()
            .map(|e| {
                let t = Instant::now();
                let status = match simulate_entry(e, ctx) {
                    Ok(()) => EntryStatus::Ok,
                    Err(m) => {
                        log::warn!("entry {} failed: {m}", e.id);
                        EntryStatus::Failed(m)
                    }
                };
                EntryReport {
                    id: e.id.clone(),
                    status,
                    elapsed: t.elapsed(),
                }
            })
            .collect::<Vec<_>>()
    };
    let mut entries = match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    SimulationReport { entries }
}
