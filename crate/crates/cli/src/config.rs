//! Layered configuration: flag > environment > config file > default.
//!
//! Every section keeps optional fields so a file can set any subset; the
//! resolved values are written back as a complete file.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use urgent_forge::distortion::{DegradeOptions, ReverbReference, SnrPower};
use urgent_forge::manifest::{DistortionWeights, SimulationConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<BandwidthSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluate: Option<EvaluateSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthSection {
    pub threshold_db: Option<f64>,
    pub allowed_sfs: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub min_speech_ratio: Option<f64>,
    pub min_ovrl: Option<f64>,
    pub min_sig: Option<f64>,
    pub min_bak: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub snr_range_db: Option<[f64; 2]>,
    pub reverb_prob: Option<f64>,
    pub allowed_sfs: Option<Vec<u32>>,
    pub distortion_weights: Option<DistortionWeights>,
    pub clip_ratio_range: Option<[f64; 2]>,
    pub chunk_duration_s: Option<f64>,
    pub master_seed: Option<Seed>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// "direct_path" or "early_reflections"
    pub reverb_reference: Option<String>,
    pub early_reflections_ms: Option<f64>,
    pub reverberate_noise: Option<bool>,
    /// "full_signal" or "active_frames"
    pub snr_power: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    pub strict_sample_rate: Option<bool>,
    pub duration_weighted: Option<bool>,
}

/// A u64 seed. TOML integers are signed, so seeds above `i64::MAX` are
/// written as strings; both forms are accepted on input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed(pub u64);

impl Serialize for Seed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(self.0) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Seed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => u64::try_from(v)
                .map(Seed)
                .map_err(|_| serde::de::Error::custom("seed must be non-negative")),
            Raw::Str(s) => s
                .trim()
                .parse()
                .map(Seed)
                .map_err(|_| serde::de::Error::custom(format!("invalid seed {s:?}"))),
        }
    }
}

pub fn load(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Writes `cfg` as `config.resolved` inside `dir`.
pub fn write_resolved(dir: &Path, command: &str, cfg: &FileConfig) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let body = toml::to_string(cfg).context("serialising resolved config")?;
    let text = format!("# urgent-forge {} {command}\n{body}", env!("CARGO_PKG_VERSION"));
    let path = dir.join("config.resolved");
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

impl SimulationSection {
    pub fn resolve(&self) -> SimulationConfig {
        let d = SimulationConfig::default();
        SimulationConfig {
            snr_range_db: self.snr_range_db.unwrap_or(d.snr_range_db),
            reverb_prob: self.reverb_prob.unwrap_or(d.reverb_prob),
            allowed_sfs: self.allowed_sfs.clone().unwrap_or(d.allowed_sfs),
            distortion_weights: self.distortion_weights.unwrap_or(d.distortion_weights),
            clip_ratio_range: self.clip_ratio_range.unwrap_or(d.clip_ratio_range),
            chunk_duration_s: self.chunk_duration_s.unwrap_or(d.chunk_duration_s),
            master_seed: self.master_seed.map_or(d.master_seed, |s| s.0),
        }
    }

    pub fn from_config(c: &SimulationConfig) -> Self {
        Self {
            snr_range_db: Some(c.snr_range_db),
            reverb_prob: Some(c.reverb_prob),
            allowed_sfs: Some(c.allowed_sfs.clone()),
            distortion_weights: Some(c.distortion_weights),
            clip_ratio_range: Some(c.clip_ratio_range),
            chunk_duration_s: Some(c.chunk_duration_s),
            master_seed: Some(Seed(c.master_seed)),
        }
    }
}

impl SimulateSection {
    pub fn resolve(&self) -> Result<DegradeOptions> {
        let d = DegradeOptions::default();
        let reverb_reference = match self.reverb_reference.as_deref() {
            None | Some("direct_path") => {
                anyhow::ensure!(
                    self.early_reflections_ms.is_none(),
                    "early_reflections_ms requires reverb_reference = \"early_reflections\""
                );
                d.reverb_reference
            }
            Some("early_reflections") => ReverbReference::EarlyReflections {
                ms: self.early_reflections_ms.unwrap_or(50.0),
            },
            Some(other) => anyhow::bail!("unknown reverb_reference {other:?}"),
        };
        let snr_power = match self.snr_power.as_deref() {
            None | Some("full_signal") => SnrPower::FullSignal,
            Some("active_frames") => SnrPower::ActiveFrames,
            Some(other) => anyhow::bail!("unknown snr_power {other:?}"),
        };
        Ok(DegradeOptions {
            reverb_reference,
            reverberate_noise: self.reverberate_noise.unwrap_or(d.reverberate_noise),
            snr_power,
        })
    }

    pub fn from_options(o: &DegradeOptions) -> Self {
        let (reference, ms) = match o.reverb_reference {
            ReverbReference::DirectPath => ("direct_path", None),
            ReverbReference::EarlyReflections { ms } => ("early_reflections", Some(ms)),
        };
        Self {
            reverb_reference: Some(reference.into()),
            early_reflections_ms: ms,
            reverberate_noise: Some(o.reverberate_noise),
            snr_power: Some(
                match o.snr_power {
                    SnrPower::FullSignal => "full_signal",
                    SnrPower::ActiveFrames => "active_frames",
                }
                .into(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("[simulation]\nreverb_probability = 0.1\n").is_err());
        assert!(toml::from_str::<FileConfig>("[nonsense]\n").is_err());
    }

    #[test]
    fn large_seeds_survive_a_round_trip() {
        let cfg = FileConfig {
            simulation: Some(SimulationSection {
                master_seed: Some(Seed(u64::MAX)),
                ..Default::default()
            }),
            ..Default::default()
        };
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<FileConfig>(&text).unwrap(), cfg);
        let small: FileConfig = toml::from_str("[simulation]\nmaster_seed = 42\n").unwrap();
        assert_eq!(small.simulation.unwrap().master_seed, Some(Seed(42)));
    }

    #[test]
    fn resolved_simulation_round_trips() {
        let c = SimulationConfig {
            master_seed: 9,
            reverb_prob: 0.25,
            ..Default::default()
        };
        assert_eq!(SimulationSection::from_config(&c).resolve(), c);
    }

    #[test]
    fn degrade_options_round_trip() {
        let s = SimulateSection {
            reverb_reference: Some("early_reflections".into()),
            early_reflections_ms: Some(20.0),
            reverberate_noise: Some(true),
            snr_power: Some("active_frames".into()),
        };
        let o = s.resolve().unwrap();
        assert_eq!(SimulateSection::from_options(&o), s);
        assert!(SimulateSection { snr_power: Some("loud".into()), ..Default::default() }.resolve().is_err());
    }
}
