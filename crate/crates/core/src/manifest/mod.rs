//! Manifest generation and execution.
//!
//! A manifest fixes every random choice of a simulated dataset up front, one
//! JSON record per line, so the dataset can be regenerated byte-for-byte and
//! the entries can be simulated in any order or in parallel.

mod config;
mod dynamic;
pub mod rng;
mod simulate;

pub use config::{DistortionWeights, SimulationConfig};
pub use dynamic::DynamicMixer;
pub use simulate::{
    run_manifest, simulate_entry, simulate_pair, EntryReport, EntryStatus, SimulationContext, SimulationReport,
};

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{probe_sample_rate, AudioError};
use crate::bandwidth::best_matching_sf;
use crate::distortion::{Distortion, DistortionSpec};
use rng::{entry_seed, CounterRng};

pub const FORMAT_NAME: &str = "urgent-forge-manifest";
pub const FORMAT_VERSION: u32 = 1;
/// Overrides the configured master seed when set.
pub const SEED_ENV: &str = "URGENT_FORGE_SEED";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0} list is empty")]
    EmptyList(&'static str),
    #[error("source file not found: {0}")]
    MissingSource(PathBuf),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate entry id {0}")]
    DuplicateId(String),
}

/// First line of every manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader {
    pub format: String,
    pub format_version: u32,
    pub tool_version: String,
    pub config: SimulationConfig,
}

impl ManifestHeader {
    pub fn new(config: SimulationConfig) -> Self {
        Self {
            format: FORMAT_NAME.into(),
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config,
        }
    }
}

/// Recipe for one simulated utterance. Field order is the on-disk order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub speech_path: PathBuf,
    pub noise_path: PathBuf,
    pub rir_path: Option<PathBuf>,
    pub snr_db: f64,
    pub reverb: bool,
    pub kind: String,
    pub cutoff_hz: Option<f64>,
    pub clip_ratio: Option<f64>,
    pub output_sf: u32,
    pub seed: u64,
    pub degraded_out: PathBuf,
    pub reference_out: PathBuf,
}

impl ManifestEntry {
    pub fn distortion(&self) -> Result<Distortion, String> {
        match (self.kind.as_str(), self.cutoff_hz, self.clip_ratio) {
            ("none", None, None) => Ok(Distortion::None),
            ("bandwidth_limitation", Some(cutoff_hz), None) => {
                Ok(Distortion::BandwidthLimitation { cutoff_hz })
            }
            ("clipping", None, Some(clip_ratio)) => Ok(Distortion::Clipping { clip_ratio }),
            (k, c, r) => Err(format!(
                "kind {k:?} inconsistent with cutoff_hz={c:?}, clip_ratio={r:?}"
            )),
        }
    }

    /// The distortion spec with a concrete noise offset.
    pub fn spec(&self, noise_offset_s: f64) -> Result<DistortionSpec, String> {
        Ok(DistortionSpec {
            distortion: self.distortion()?,
            snr_db: self.snr_db,
            rir_path: self.rir_path.clone(),
            noise_path: self.noise_path.clone(),
            noise_offset_s,
            seed: self.seed,
        })
    }

    fn validate(&self) -> Result<(), String> {
        self.distortion()?;
        if self.reverb != self.rir_path.is_some() {
            return Err(format!("reverb={} but rir_path={:?}", self.reverb, self.rir_path));
        }
        if !self.snr_db.is_finite() {
            return Err("snr_db must be finite".into());
        }
        if self.output_sf == 0 {
            return Err("output_sf must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub entries: Vec<ManifestEntry>,
}

/// Source lists; paths are resolved against `root` when relative.
#[derive(Debug, Clone, Default)]
pub struct SourceLists {
    pub speech: Vec<PathBuf>,
    pub noise: Vec<PathBuf>,
    pub rir: Vec<PathBuf>,
    pub root: Option<PathBuf>,
}

impl SourceLists {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.root {
            Some(root) => root.join(p),
            None => p.to_path_buf(),
        }
    }
}

// Draw slots; fixed so adding a new draw never shifts the others.
const DRAW_SPEECH: u32 = 0;
const DRAW_NOISE: u32 = 1;
const DRAW_SNR: u32 = 2;
const DRAW_REVERB: u32 = 3;
const DRAW_RIR: u32 = 4;
const DRAW_KIND: u32 = 5;
const DRAW_PARAM: u32 = 6;

/// Output rate for speech stored at `sf`: itself when allowed, otherwise
/// the lowest allowed rate covering its band.
pub fn output_rate(sf: u32, allowed: &[u32]) -> u32 {
    if allowed.contains(&sf) {
        sf
    } else {
        best_matching_sf(sf as f64 / 2.0, allowed)
    }
}

/// Bandwidth-limitation cutoffs available at `sf`: the Nyquist frequency
/// of every allowed lower rate, or `sf / 2` (a passthrough) if there is none.
pub fn cutoff_candidates(sf: u32, allowed: &[u32]) -> Vec<f64> {
    let c: Vec<f64> = allowed.iter().filter(|&&s| s < sf).map(|&s| s as f64 / 2.0).collect();
    if c.is_empty() {
        vec![sf as f64 / 2.0]
    } else {
        c
    }
}

/// Random parameters of one utterance, shared by the manifest generator and
/// [`DynamicMixer`].
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Recipe {
    pub speech: usize,
    pub noise: usize,
    pub rir: Option<usize>,
    pub snr_db: f64,
    pub distortion: Distortion,
}

pub(crate) fn draw_recipe(
    rng: &CounterRng,
    cfg: &SimulationConfig,
    n_speech: usize,
    n_noise: usize,
    n_rir: usize,
    speech_sf: impl Fn(usize) -> u32,
) -> Recipe {
    let speech = rng.index(DRAW_SPEECH, n_speech);
    let noise = rng.index(DRAW_NOISE, n_noise);
    let snr_db = rng.uniform(DRAW_SNR, cfg.snr_range_db[0], cfg.snr_range_db[1]);
    let rir = (n_rir > 0 && rng.bernoulli(DRAW_REVERB, cfg.reverb_prob))
        .then(|| rng.index(DRAW_RIR, n_rir));
    let out_sf = output_rate(speech_sf(speech), &cfg.allowed_sfs);
    let w = &cfg.distortion_weights;
    let distortion = match rng.categorical(DRAW_KIND, &[w.none, w.bandwidth_limitation, w.clipping]) {
        0 => Distortion::None,
        1 => {
            let c = cutoff_candidates(out_sf, &cfg.allowed_sfs);
            Distortion::BandwidthLimitation {
                cutoff_hz: c[rng.index(DRAW_PARAM, c.len())],
            }
        }
        _ => Distortion::Clipping {
            clip_ratio: rng.uniform(DRAW_PARAM, cfg.clip_ratio_range[0], cfg.clip_ratio_range[1]),
        },
    };
    Recipe {
        speech,
        noise,
        rir,
        snr_db,
        distortion,
    }
}

/// Builds a manifest of `count` entries. Every random choice of entry `i`
/// depends only on `(cfg.master_seed, i)`.
pub fn generate_manifest(
    sources: &SourceLists,
    cfg: &SimulationConfig,
    count: usize,
) -> Result<Manifest, ManifestError> {
    cfg.validate()?;
    if count == 0 {
        return Err(ManifestError::Config("count must be at least 1".into()));
    }
    if sources.speech.is_empty() {
        return Err(ManifestError::EmptyList("speech"));
    }
    if sources.noise.is_empty() {
        return Err(ManifestError::EmptyList("noise"));
    }
    if sources.rir.is_empty() && cfg.reverb_prob > 0.0 {
        return Err(ManifestError::EmptyList("rir"));
    }
    for p in sources.speech.iter().chain(&sources.noise).chain(&sources.rir) {
        if !sources.resolve(p).is_file() {
            return Err(ManifestError::MissingSource(p.clone()));
        }
    }
    let mut rates = HashMap::new();
    for p in &sources.speech {
        if !rates.contains_key(p) {
            rates.insert(p.clone(), probe_sample_rate(sources.resolve(p))?);
        }
    }

    let width = count.to_string().len().max(6);
    let entries = (0..count)
        .map(|i| {
            let rng = CounterRng::new(cfg.master_seed, i as u64);
            let r = draw_recipe(
                &rng,
                cfg,
                sources.speech.len(),
                sources.noise.len(),
                sources.rir.len(),
                |s| rates[&sources.speech[s]],
            );
            let speech_path = sources.speech[r.speech].clone();
            let id = format!("sim_{i:0width$}");
            let (kind, cutoff_hz, clip_ratio) = match r.distortion {
                Distortion::None => ("none", None, None),
                Distortion::BandwidthLimitation { cutoff_hz } => ("bandwidth_limitation", Some(cutoff_hz), None),
                Distortion::Clipping { clip_ratio } => ("clipping", None, Some(clip_ratio)),
            };
            ManifestEntry {
                output_sf: output_rate(rates[&speech_path], &cfg.allowed_sfs),
                speech_path,
                noise_path: sources.noise[r.noise].clone(),
                rir_path: r.rir.map(|k| sources.rir[k].clone()),
                snr_db: r.snr_db,
                reverb: r.rir.is_some(),
                kind: kind.into(),
                cutoff_hz,
                clip_ratio,
                seed: entry_seed(cfg.master_seed, i as u64),
                degraded_out: PathBuf::from("degraded").join(format!("{id}.wav")),
                reference_out: PathBuf::from("reference").join(format!("{id}.wav")),
                id,
            }
        })
        .collect();
    Ok(Manifest {
        header: ManifestHeader::new(cfg.clone()),
        entries,
    })
}

impl Manifest {
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        let io = |source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        };
        let f = std::fs::File::create(path).map_err(io)?;
        self.write(std::io::BufWriter::new(f)).map_err(io)
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, ManifestError> {
        let mut header = None;
        let mut entries: Vec<ManifestEntry> = Vec::new();
        let mut ids = HashSet::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|source| ManifestError::Io {
                path: "<manifest>".into(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |msg: String| ManifestError::Parse { line: i + 1, msg };
            if header.is_none() {
                let h: ManifestHeader = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
                if h.format != FORMAT_NAME || h.format_version != FORMAT_VERSION {
                    return Err(parse_err(format!(
                        "unsupported format {} v{}",
                        h.format, h.format_version
                    )));
                }
                header = Some(h);
                continue;
            }
            let e: ManifestEntry = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
            e.validate().map_err(parse_err)?;
            if !ids.insert(e.id.clone()) {
                return Err(ManifestError::DuplicateId(e.id));
            }
            entries.push(e);
        }
        let header = header.ok_or(ManifestError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        Ok(Self { header, entries })
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let f = std::fs::File::open(path).map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{save_wav, AudioBuffer, Encoding};

    fn write_sources(dir: &Path) -> SourceLists {
        let mk = |name: &str, sf: u32| {
            let p = dir.join(name);
            save_wav(&AudioBuffer::new(vec![0.1; 800], sf).unwrap(), &p, Encoding::Float32).unwrap();
            PathBuf::from(name)
        };
        SourceLists {
            speech: vec![mk("s1.wav", 16000), mk("s2.wav", 48000), mk("s3.wav", 11025)],
            noise: vec![mk("n1.wav", 16000), mk("n2.wav", 8000)],
            rir: vec![mk("r1.wav", 16000)],
            root: Some(dir.to_path_buf()),
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let src = write_sources(dir.path());
        let cfg = SimulationConfig {
            master_seed: 17,
            ..Default::default()
        };
        let a = generate_manifest(&src, &cfg, 50).unwrap().to_jsonl();
        let b = generate_manifest(&src, &cfg, 50).unwrap().to_jsonl();
        assert_eq!(a, b);
        let other = SimulationConfig { master_seed: 18, ..cfg };
        assert_ne!(a, generate_manifest(&src, &other, 50).unwrap().to_jsonl());
    }

    #[test]
    fn prefix_stable_across_counts() {
        let dir = tempfile::tempdir().unwrap();
        let src = write_sources(dir.path());
        let cfg = SimulationConfig::default();
        let a = generate_manifest(&src, &cfg, 10).unwrap();
        let b = generate_manifest(&src, &cfg, 20).unwrap();
        for (x, y) in a.entries.iter().zip(&b.entries) {
            assert_eq!(x.seed, y.seed);
            assert_eq!(x.snr_db, y.snr_db);
            assert_eq!(x.speech_path, y.speech_path);
        }
    }

    #[test]
    fn no_reverb_when_probability_zero() {
        let dir = tempfile::tempdir().unwrap();
        let mut src = write_sources(dir.path());
        src.rir.clear();
        let cfg = SimulationConfig {
            reverb_prob: 0.0,
            ..Default::default()
        };
        let m = generate_manifest(&src, &cfg, 200).unwrap();
        assert!(m.entries.iter().all(|e| e.rir_path.is_none() && !e.reverb));
    }

    #[test]
    fn configuration_errors() {
        let dir = tempfile::tempdir().unwrap();
        let src = write_sources(dir.path());
        let cfg = SimulationConfig::default();
        let mut no_rir = src.clone();
        no_rir.rir.clear();
        assert!(matches!(generate_manifest(&no_rir, &cfg, 5), Err(ManifestError::EmptyList("rir"))));
        let mut no_speech = src.clone();
        no_speech.speech.clear();
        assert!(matches!(generate_manifest(&no_speech, &cfg, 5), Err(ManifestError::EmptyList("speech"))));
        let mut missing = src.clone();
        missing.noise.push("ghost.wav".into());
        assert!(matches!(generate_manifest(&missing, &cfg, 5), Err(ManifestError::MissingSource(_))));
        assert!(matches!(generate_manifest(&src, &cfg, 0), Err(ManifestError::Config(_))));
    }

    #[test]
    fn output_rates_are_allowed() {
        let dir = tempfile::tempdir().unwrap();
        let src = write_sources(dir.path());
        let cfg = SimulationConfig::default();
        let m = generate_manifest(&src, &cfg, 300).unwrap();
        for e in &m.entries {
            assert!(cfg.allowed_sfs.contains(&e.output_sf));
            if let Some(c) = e.cutoff_hz {
                assert!(c <= e.output_sf as f64 / 2.0);
            }
            if let Some(r) = e.clip_ratio {
                assert!((0.1..=0.9).contains(&r));
            }
        }
        // 11.025 kHz speech maps to 16 kHz
        assert!(m.entries.iter().any(|e| e.speech_path == Path::new("s3.wav") && e.output_sf == 16000));
    }

    #[test]
    fn jsonl_round_trip_and_field_order() {
        let dir = tempfile::tempdir().unwrap();
        let src = write_sources(dir.path());
        let m = generate_manifest(&src, &SimulationConfig::default(), 30).unwrap();
        let text = m.to_jsonl();
        let back = Manifest::read(text.as_bytes()).unwrap();
        assert_eq!(back, m);
        let line = text.lines().nth(1).unwrap();
        let keys: Vec<&str> = [
            "id", "speech_path", "noise_path", "rir_path", "snr_db", "reverb", "kind", "cutoff_hz",
            "clip_ratio", "output_sf", "seed", "degraded_out", "reference_out",
        ]
        .to_vec();
        let positions: Vec<usize> = keys.iter().map(|k| line.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn read_rejects_inconsistent_records() {
        let dir = tempfile::tempdir().unwrap();
        let src = write_sources(dir.path());
        let m = generate_manifest(&src, &SimulationConfig::default(), 3).unwrap();
        let mut dup = m.clone();
        dup.entries[1].id = dup.entries[0].id.clone();
        assert!(matches!(Manifest::read(dup.to_jsonl().as_bytes()), Err(ManifestError::DuplicateId(_))));
        let mut bad = m.clone();
        bad.entries[0].kind = "clipping".into();
        bad.entries[0].clip_ratio = None;
        bad.entries[0].cutoff_hz = None;
        assert!(matches!(Manifest::read(bad.to_jsonl().as_bytes()), Err(ManifestError::Parse { line: 2, .. })));
        assert!(Manifest::read("".as_bytes()).is_err());
    }

    #[test]
    fn cutoffs_follow_lower_rates() {
        let allowed = crate::bandwidth::SUPPORTED_SFS;
        assert_eq!(cutoff_candidates(16000, &allowed), vec![4000.0]);
        assert_eq!(cutoff_candidates(8000, &allowed), vec![4000.0]);
        assert_eq!(cutoff_candidates(48000, &allowed).len(), 6);
        assert_eq!(output_rate(11025, &allowed), 16000);
        assert_eq!(output_rate(96000, &allowed), 48000);
    }
}
