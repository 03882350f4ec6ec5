//! Speech-activity and quality-score filtering of candidate speech files.
//!
//! Quality scores (OVRL/SIG/BAK) come from an external scorer and are read
//! from a TSV sidecar; only the thresholding happens here.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioBuffer;

pub const VAD_FRAME_S: f64 = 0.030;
pub const VAD_HOP_S: f64 = 0.010;
/// Absolute activity floor, -60 dBFS RMS.
pub const VAD_ABS_FLOOR_DB: f64 = -60.0;
/// Margin above the estimated noise floor, in dB.
pub const VAD_MARGIN_DB: f64 = 10.0;
/// Percentile of frame RMS taken as the noise floor.
pub const VAD_FLOOR_PERCENTILE: f64 = 0.10;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("no quality scores for {0} while score thresholds are active")]
    MissingScore(PathBuf),
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Externally computed quality scores for one file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub ovrl: f64,
    pub sig: f64,
    pub bak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub path: PathBuf,
    pub scores: Scores,
}

/// A file under consideration: its speech-activity ratio and, if the
/// scorer covered it, its quality scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub path: PathBuf,
    pub speech_ratio: f64,
    pub scores: Option<Scores>,
}

/// Thresholds; a score threshold of `-inf` disables that check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub min_speech_ratio: f64,
    pub min_ovrl: f64,
    pub min_sig: f64,
    pub min_bak: f64,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self {
            min_speech_ratio: 0.0,
            min_ovrl: 0.0,
            min_sig: 0.0,
            min_bak: 0.0,
        }
    }
}

impl FilterPolicy {
    pub fn vacuous() -> Self {
        Self {
            min_speech_ratio: 0.0,
            min_ovrl: f64::NEG_INFINITY,
            min_sig: f64::NEG_INFINITY,
            min_bak: f64::NEG_INFINITY,
        }
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if !(0.0..=1.0).contains(&self.min_speech_ratio) {
            return Err(FilterError::Policy(format!(
                "min_speech_ratio {} outside [0, 1]",
                self.min_speech_ratio
            )));
        }
        if [self.min_ovrl, self.min_sig, self.min_bak].iter().any(|t| t.is_nan()) {
            return Err(FilterError::Policy("score thresholds must not be NaN".into()));
        }
        Ok(())
    }

    fn scores_active(&self) -> bool {
        [self.min_ovrl, self.min_sig, self.min_bak]
            .iter()
            .any(|&t| t > f64::NEG_INFINITY)
    }
}

/// First failed criterion, in the fixed checking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    SpeechRatio,
    Ovrl,
    Sig,
    Bak,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::SpeechRatio => "speech_ratio",
            RejectReason::Ovrl => "ovrl",
            RejectReason::Sig => "sig",
            RejectReason::Bak => "bak",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<Candidate>,
    pub rejected: Vec<(Candidate, RejectReason)>,
}

/// Fraction of 30 ms frames (10 ms hop) classified as active by an energy
/// detector.
///
/// A frame is active when its RMS exceeds both -60 dBFS and, if the signal
/// shows at least 10 dB of dynamic range over its noise floor (10th
/// percentile frame RMS), that floor plus 10 dB. A stationary signal has no
/// separable floor, so only the absolute test applies to it.
pub fn speech_activity_ratio(x: &AudioBuffer) -> f64 {
    let sf = x.sample_rate_hz() as f64;
    let win = ((VAD_FRAME_S * sf).round() as usize).max(1);
    let hop = ((VAD_HOP_S * sf).round() as usize).max(1);
    if x.is_empty() {
        return 0.0;
    }
    let rms: Vec<f64> = if x.len() < win {
        vec![(x.energy() / win as f64).sqrt()]
    } else {
        x.samples()
            .windows(win)
            .step_by(hop)
            .map(|f| (f.iter().map(|v| v * v).sum::<f64>() / win as f64).sqrt())
            .collect()
    };
    let mut sorted = rms.clone();
    sorted.sort_by(f64::total_cmp);
    let floor = sorted[((sorted.len() - 1) as f64 * VAD_FLOOR_PERCENTILE).round() as usize];
    let loudest = sorted[sorted.len() - 1];
    let margin = 10f64.powf(VAD_MARGIN_DB / 20.0);
    let abs_floor = 10f64.powf(VAD_ABS_FLOOR_DB / 20.0);
    let threshold = if loudest > floor * margin {
        abs_floor.max(floor * margin)
    } else {
        abs_floor
    };
    rms.iter().filter(|&&r| r > threshold).count() as f64 / rms.len() as f64
}

fn check(c: &Candidate, policy: &FilterPolicy) -> Result<Option<RejectReason>, FilterError> {
    if c.speech_ratio < policy.min_speech_ratio {
        return Ok(Some(RejectReason::SpeechRatio));
    }
    let s = match (c.scores, policy.scores_active()) {
        (Some(s), _) => s,
        (None, true) => return Err(FilterError::MissingScore(c.path.clone())),
        (None, false) => return Ok(None),
    };
    Ok([
        (s.ovrl, policy.min_ovrl, RejectReason::Ovrl),
        (s.sig, policy.min_sig, RejectReason::Sig),
        (s.bak, policy.min_bak, RejectReason::Bak),
    ]
    .into_iter()
    .find(|(v, t, _)| v < t)
    .map(|(_, _, r)| r))
}

/// Partitions `candidates` into kept and rejected sets, preserving order.
pub fn filter_corpus(
    candidates: Vec<Candidate>,
    policy: &FilterPolicy,
) -> Result<FilterOutcome, FilterError> {
    policy.validate()?;
    let mut out = FilterOutcome::default();
    for c in candidates {
        match check(&c, policy)? {
            None => out.kept.push(c),
            Some(r) => out.rejected.push((c, r)),
        }
    }
    Ok(out)
}

/// Reads `path \t ovrl \t sig \t bak` rows. A first row whose score columns
/// are not numeric is treated as a header; blank lines and `#` comments are
/// skipped.
pub fn read_score_tsv(path: &Path) -> Result<Vec<ScoreRecord>, FilterError> {
    let file = std::fs::File::open(path).map_err(|source| FilterError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| FilterError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let err = |msg: String| FilterError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg,
        };
        if cols.len() != 4 {
            return Err(err(format!("expected 4 columns, found {}", cols.len())));
        }
        let parsed: Result<Vec<f64>, _> = cols[1..].iter().map(|c| c.trim().parse::<f64>()).collect();
        let v = match parsed {
            Ok(v) => v,
            Err(_) if out.is_empty() && i == 0 => continue,
            Err(e) => return Err(err(e.to_string())),
        };
        if v.iter().any(|s| !s.is_finite()) {
            return Err(err("scores must be finite".into()));
        }
        out.push(ScoreRecord {
            path: PathBuf::from(cols[0]),
            scores: Scores {
                ovrl: v[0],
                sig: v[1],
                bak: v[2],
            },
        });
    }
    Ok(out)
}

/// Lookup table from path to scores.
pub fn score_index(records: &[ScoreRecord]) -> HashMap<PathBuf, Scores> {
    records.iter().map(|r| (r.path.clone(), r.scores)).collect()
}
