use super::rng::{entry_seed, CounterRng};
use super::simulate::render;
use super::{draw_recipe, output_rate, SimulationConfig};
use crate::audio::AudioBuffer;
use crate::distortion::{DegradeOptions, DegradedPair, DistortionSpec};

/// On-the-fly mixing: an endless stream of degraded pairs drawn from
/// in-memory sources. Item `i` of a given epoch is the same no matter how
/// many items were taken before it.
pub struct DynamicMixer {
    cfg: SimulationConfig,
    speech: Vec<AudioBuffer>,
    noise: Vec<AudioBuffer>,
    rir: Vec<AudioBuffer>,
    epoch_seed: u64,
    opts: DegradeOptions,
    next: u64,
}

impl DynamicMixer {
    pub fn new(
        cfg: SimulationConfig,
        speech: Vec<AudioBuffer>,
        noise: Vec<AudioBuffer>,
        rir: Vec<AudioBuffer>,
        epoch_seed: u64,
    ) -> Result<Self, super::ManifestError> {
        cfg.validate()?;
        if speech.is_empty() {
            return Err(super::ManifestError::EmptyList("speech"));
        }
        if noise.is_empty() {
            return Err(super::ManifestError::EmptyList("noise"));
        }
        if rir.is_empty() && cfg.reverb_prob > 0.0 {
            return Err(super::ManifestError::EmptyList("rir"));
        }
        Ok(Self {
            cfg,
            speech,
            noise,
            rir,
            epoch_seed,
            opts: DegradeOptions::default(),
            next: 0,
        })
    }

    pub fn with_options(mut self, opts: DegradeOptions) -> Self {
        self.opts = opts;
        self
    }

    /// Item `i` of this epoch.
    pub fn get(&self, i: u64) -> Result<DegradedPair, String> {
        let rng = CounterRng::new(self.epoch_seed, i);
        let r = draw_recipe(&rng, &self.cfg, self.speech.len(), self.noise.len(), self.rir.len(), |s| {
            self.speech[s].sample_rate_hz()
        });
        let speech = &self.speech[r.speech];
        let spec = DistortionSpec {
            distortion: r.distortion,
            snr_db: r.snr_db,
            rir_path: None,
            noise_path: Default::default(),
            noise_offset_s: 0.0,
            seed: entry_seed(self.epoch_seed, i),
        };
        render(
            speech,
            &self.noise[r.noise],
            r.rir.map(|k| &self.rir[k]),
            spec,
            output_rate(speech.sample_rate_hz(), &self.cfg.allowed_sfs),
            self.cfg.chunk_duration_s,
            &self.opts,
        )
    }
}

impl Iterator for DynamicMixer {
    type Item = Result<DegradedPair, String>;

    fn next(&mut self) -> Option<Self::Item> {
        let i = self.next;
        self.next += 1;
        Some(self.get(i))
    }
}
