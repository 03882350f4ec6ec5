use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{estoi, lsd, mcd, multires_l1_loss, sdr, MetricError, SDR_CAP_DB};
use crate::audio::{load_wav, AudioBuffer};
use crate::dsp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

impl Direction {
    pub fn arrow(self) -> char {
        match self {
            Direction::HigherIsBetter => '↑',
            Direction::LowerIsBetter => '↓',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SdrDb,
    Estoi,
    McdDb,
    LsdDb,
    MultiresL1,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::SdrDb,
        Metric::Estoi,
        Metric::McdDb,
        Metric::LsdDb,
        Metric::MultiresL1,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Metric::SdrDb => "sdr_db",
            Metric::Estoi => "estoi",
            Metric::McdDb => "mcd_db",
            Metric::LsdDb => "lsd_db",
            Metric::MultiresL1 => "multires_l1",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::SdrDb => "SDR (dB)",
            Metric::Estoi => "ESTOI",
            Metric::McdDb => "MCD (dB)",
            Metric::LsdDb => "LSD (dB)",
            Metric::MultiresL1 => "MR-L1",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Metric::SdrDb | Metric::Estoi => Direction::HigherIsBetter,
            Metric::McdDb | Metric::LsdDb | Metric::MultiresL1 => Direction::LowerIsBetter,
        }
    }

    pub fn compute(self, reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<f64, MetricError> {
        match self {
            Metric::SdrDb => sdr(reference, estimate),
            Metric::Estoi => estoi(reference, estimate),
            Metric::McdDb => mcd(reference, estimate),
            Metric::LsdDb => lsd(reference, estimate),
            Metric::MultiresL1 => multires_l1_loss(reference, estimate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileMetrics {
    pub id: String,
    pub reference: PathBuf,
    pub estimate: PathBuf,
    /// Reference duration, when it could be loaded.
    pub duration_s: Option<f64>,
    pub values: BTreeMap<Metric, f64>,
    pub errors: BTreeMap<Metric, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metric: Metric,
    pub mean: Option<f64>,
    pub count: usize,
    pub failures: usize,
}

/// Parameters a reader needs to interpret the numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool_version: String,
    pub directions: BTreeMap<Metric, Direction>,
    pub sdr_variant: String,
    pub sdr_cap_db: f64,
    pub estoi: String,
    pub mcd: String,
    pub lsd: String,
    pub multires_l1: String,
    pub weighting: String,
}

impl ReportMetadata {
    fn new(duration_weighted: bool) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            directions: Metric::ALL.iter().map(|m| (*m, m.direction())).collect(),
            sdr_variant: "plain energy ratio, no distortion filter".into(),
            sdr_cap_db: SDR_CAP_DB,
            estoi: "10 kHz, 256-sample frames, 512-point FFT, 15 third-octave bands from 150 Hz, N=30"
                .into(),
            mcd: "25 ms hann / 10 ms hop, 80 mel bands, c1..c13, no DTW".into(),
            lsd: "hann 2048/512 (>=32 kHz) or 1024/256, eps 1e-10".into(),
            multires_l1: "time L1 + mean of magnitude L1 at windows 256/512/768/1024, hop w/2".into(),
            weighting: if duration_weighted { "duration" } else { "unweighted" }.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metadata: ReportMetadata,
    pub per_file: Vec<FileMetrics>,
    pub aggregate: Vec<Aggregate>,
    pub files: usize,
    pub failed_files: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Fail a pair whose rates differ instead of resampling the estimate.
    pub strict_sample_rate: bool,
    /// Weight aggregate means by reference duration.
    pub duration_weighted: bool,
}

impl MetricReport {
    pub fn from_files(per_file: Vec<FileMetrics>, duration_weighted: bool) -> Self {
        let aggregate = Metric::ALL
            .iter()
            .map(|&m| {
                let mut sum = 0.0;
                let mut weight = 0.0;
                let mut count = 0;
                for f in &per_file {
                    if let Some(v) = f.values.get(&m) {
                        let w = if duration_weighted { f.duration_s.unwrap_or(0.0) } else { 1.0 };
                        sum += w * v;
                        weight += w;
                        count += 1;
                    }
                }
                Aggregate {
                    metric: m,
                    mean: (weight > 0.0).then(|| sum / weight),
                    count,
                    failures: per_file.len() - count,
                }
            })
            .collect();
        Self {
            metadata: ReportMetadata::new(duration_weighted),
            files: per_file.len(),
            failed_files: per_file.iter().filter(|f| !f.errors.is_empty()).count(),
            per_file,
            aggregate,
        }
    }

    pub fn mean(&self, metric: Metric) -> Option<f64> {
        self.aggregate.iter().find(|a| a.metric == metric).and_then(|a| a.mean)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Human-readable table, one row per pair plus the mean row, with
    /// direction markers in the header.
    pub fn to_table(&self) -> String {
        let id_w = self.per_file.iter().map(|f| f.id.len()).max().unwrap_or(0).max(4);
        let headers: Vec<String> = Metric::ALL
            .iter()
            .map(|m| format!("{} {}", m.label(), m.direction().arrow()))
            .collect();
        let widths: Vec<usize> = headers.iter().map(|h| h.chars().count().max(10)).collect();
        let mut out = String::new();
        let _ = write!(out, "{:<id_w$}", "id");
        for (h, w) in headers.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", h, w = w);
        }
        out.push('\n');
        let cell = |v: Option<f64>| v.map_or_else(|| "ERR".to_string(), |v| format!("{v:.4}"));
        for f in &self.per_file {
            let _ = write!(out, "{:<id_w$}", f.id);
            for (m, w) in Metric::ALL.iter().zip(&widths) {
                let _ = write!(out, "  {:>w$}", cell(f.values.get(m).copied()), w = w);
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<id_w$}", "mean");
        for (m, w) in Metric::ALL.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", cell(self.mean(*m)).replace("ERR", "-"), w = w);
        }
        out.push('\n');
        out
    }
}

fn evaluate_pair(id: String, reference: &PathBuf, estimate: &PathBuf, opts: &EvalOptions) -> FileMetrics {
    let mut fm = FileMetrics {
        id,
        reference: reference.clone(),
        estimate: estimate.clone(),
        duration_s: None,
        values: BTreeMap::new(),
        errors: BTreeMap::new(),
    };
    let loaded = (|| -> Result<(AudioBuffer, AudioBuffer), MetricError> {
        let r = load_wav(reference)?;
        let mut e = load_wav(estimate)?;
        if e.sample_rate_hz() != r.sample_rate_hz() {
            if opts.strict_sample_rate {
                return Err(MetricError::SampleRateMismatch(r.sample_rate_hz(), e.sample_rate_hz()));
            }
            e = dsp::resample(&e, r.sample_rate_hz())?;
        }
        Ok((r, e))
    })();
    match loaded {
        Ok((r, e)) => {
            fm.duration_s = Some(r.duration_s());
            for m in Metric::ALL {
                match m.compute(&r, &e) {
                    Ok(v) => {
                        fm.values.insert(m, v);
                    }
                    Err(err) => {
                        fm.errors.insert(m, err.to_string());
                    }
                }
            }
        }
        Err(err) => {
            let msg = err.to_string();
            for m in Metric::ALL {
                fm.errors.insert(m, msg.clone());
            }
        }
    }
    fm
}

/// Scores every `(reference, estimate)` pair in parallel. Failures are
/// recorded per pair and metric; the report keeps input order.
pub fn evaluate_pairlist(pairs: &[(PathBuf, PathBuf)], opts: &EvalOptions) -> MetricReport {
    let width = pairs.len().max(1).to_string().len().max(4);
    let per_file: Vec<FileMetrics> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (r, e))| evaluate_pair(format!("{:0width$}", i + 1), r, e, opts))
        .collect();
    MetricReport::from_files(per_file, opts.duration_weighted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(id: &str, vals: &[(Metric, f64)], dur: f64) -> FileMetrics {
        FileMetrics {
            id: id.into(),
            reference: "r.wav".into(),
            estimate: "e.wav".into(),
            duration_s: Some(dur),
            values: vals.iter().cloned().collect(),
            errors: BTreeMap::new(),
        }
    }

    #[test]
    fn aggregates_are_plain_means() {
        let files = vec![
            fm("a", &[(Metric::SdrDb, 10.0), (Metric::LsdDb, 1.0)], 1.0),
            fm("b", &[(Metric::SdrDb, 20.0)], 3.0),
        ];
        let r = MetricReport::from_files(files.clone(), false);
        assert_eq!(r.mean(Metric::SdrDb), Some(15.0));
        assert_eq!(r.mean(Metric::LsdDb), Some(1.0));
        assert_eq!(r.mean(Metric::Estoi), None);
        let w = MetricReport::from_files(files, true);
        assert_eq!(w.mean(Metric::SdrDb), Some(17.5));
        assert_eq!(w.metadata.weighting, "duration");
    }

    #[test]
    fn empty_report() {
        let r = evaluate_pairlist(&[], &EvalOptions::default());
        assert_eq!(r.files, 0);
        assert!(r.aggregate.iter().all(|a| a.mean.is_none() && a.count == 0));
    }

    #[test]
    fn directions_follow_convention() {
        assert_eq!(Metric::SdrDb.direction(), Direction::HigherIsBetter);
        assert_eq!(Metric::Estoi.direction(), Direction::HigherIsBetter);
        assert_eq!(Metric::McdDb.direction(), Direction::LowerIsBetter);
        assert_eq!(Metric::LsdDb.direction(), Direction::LowerIsBetter);
        let table = MetricReport::from_files(vec![], false).to_table();
        assert!(table.contains("SDR (dB) ↑") && table.contains("ESTOI ↑"));
        assert!(table.contains("MCD (dB) ↓") && table.contains("LSD (dB) ↓"));
    }

    #[test]
    fn missing_files_are_recorded() {
        let r = evaluate_pairlist(&[("/nonexistent/a.wav".into(), "/nonexistent/b.wav".into())], &EvalOptions::default());
        assert_eq!(r.failed_files, 1);
        assert_eq!(r.per_file[0].errors.len(), 5);
        assert!(r.to_table().contains("ERR"));
    }
}
