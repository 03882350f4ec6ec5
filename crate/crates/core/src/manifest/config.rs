use serde::{Deserialize, Serialize};

use super::ManifestError;
use crate::bandwidth::SUPPORTED_SFS;

/// Relative weights of the post-mixture distortion kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistortionWeights {
    pub none: f64,
    pub bandwidth_limitation: f64,
    pub clipping: f64,
}

impl Default for DistortionWeights {
    fn default() -> Self {
        Self {
            none: 0.5,
            bandwidth_limitation: 0.25,
            clipping: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub snr_range_db: [f64; 2],
    pub reverb_prob: f64,
    pub allowed_sfs: Vec<u32>,
    pub distortion_weights: DistortionWeights,
    pub clip_ratio_range: [f64; 2],
    /// Length of each simulated utterance; 0 keeps the full speech file.
    pub chunk_duration_s: f64,
    pub master_seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            snr_range_db: [-5.0, 20.0],
            reverb_prob: 0.5,
            allowed_sfs: SUPPORTED_SFS.to_vec(),
            distortion_weights: DistortionWeights::default(),
            clip_ratio_range: [0.1, 0.9],
            chunk_duration_s: 4.0,
            master_seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), ManifestError> {
        let err = |m: String| Err(ManifestError::Config(m));
        let [lo, hi] = self.snr_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return err(format!("snr_range_db [{lo}, {hi}] must be finite with lo <= hi"));
        }
        if !(0.0..=1.0).contains(&self.reverb_prob) {
            return err(format!("reverb_prob {} outside [0, 1]", self.reverb_prob));
        }
        if self.allowed_sfs.is_empty() || self.allowed_sfs.contains(&0) {
            return err("allowed_sfs must list positive rates".into());
        }
        let w = &self.distortion_weights;
        let ws = [w.none, w.bandwidth_limitation, w.clipping];
        if ws.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (ws.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return err(format!("distortion_weights {ws:?} must be non-negative and sum to 1"));
        }
        let [clo, chi] = self.clip_ratio_range;
        if !(clo > 0.0 && clo <= chi && chi <= 1.0) {
            return err(format!("clip_ratio_range [{clo}, {chi}] must satisfy 0 < lo <= hi <= 1"));
        }
        if !(self.chunk_duration_s.is_finite() && self.chunk_duration_s >= 0.0) {
            return err(format!("chunk_duration_s {} must be >= 0", self.chunk_duration_s));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SimulationConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            SimulationConfig { snr_range_db: [10.0, 0.0], ..Default::default() },
            SimulationConfig { reverb_prob: 1.5, ..Default::default() },
            SimulationConfig { allowed_sfs: vec![], ..Default::default() },
            SimulationConfig { clip_ratio_range: [0.0, 0.5], ..Default::default() },
            SimulationConfig {
                distortion_weights: DistortionWeights { none: 0.0, bandwidth_limitation: 0.0, clipping: 0.0 },
                ..Default::default()
            },
            SimulationConfig {
                distortion_weights: DistortionWeights { none: 0.5, bandwidth_limitation: 0.5, clipping: 0.5 },
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<SimulationConfig>(r#"{"snr_rang_db":[0,1]}"#).is_err());
        let c: SimulationConfig = serde_json::from_str(r#"{"reverb_prob":0.0}"#).unwrap();
        assert_eq!(c.snr_range_db, [-5.0, 20.0]);
    }
}
