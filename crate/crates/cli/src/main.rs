use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

mod commands;
mod config;
mod io;

/// Speech degradation simulation and objective evaluation.
#[derive(Debug, Parser)]
#[command(name = "urgent-forge")]
struct Cli {
    /// TOML configuration file; flags and environment variables override it.
    #[arg(long, global = true, env = "URGENT_FORGE_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate effective bandwidth and the matching sample rate per file.
    Bandwidth(BandwidthArgs),
    /// Filter speech files by activity ratio and quality scores.
    Filter(FilterArgs),
    /// Generate a simulation manifest from source lists.
    Manifest(ManifestArgs),
    /// Run a manifest and write degraded/reference pairs.
    Simulate(SimulateArgs),
    /// Score estimates against references.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    /// Audio files to analyze.
    pub paths: Vec<PathBuf>,
    /// File listing one audio path per line.
    #[arg(long)]
    pub list: Option<PathBuf>,
    /// Power threshold below the spectral peak, in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold_db: Option<f64>,
    /// Write the TSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write each file resampled to its matching rate into this directory.
    #[arg(long)]
    pub normalize_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// TSV of `path, ovrl, sig, bak` from an external scorer.
    #[arg(long)]
    pub scores: PathBuf,
    /// Base directory for relative audio paths in the score file.
    #[arg(long)]
    pub audio_root: Option<PathBuf>,
    /// Minimum fraction of active frames.
    #[arg(long)]
    pub min_speech_ratio: Option<f64>,
    /// Minimum OVRL score; `-inf` disables the check.
    #[arg(long, allow_hyphen_values = true)]
    pub min_ovrl: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub min_sig: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub min_bak: Option<f64>,
    /// Output directory for kept.tsv and rejected.tsv.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads (default: one per core).
    #[arg(long, env = "URGENT_FORGE_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ManifestArgs {
    /// File listing speech paths, one per line.
    #[arg(long)]
    pub speech: PathBuf,
    /// File listing noise paths.
    #[arg(long)]
    pub noise: PathBuf,
    /// File listing RIR paths (may be omitted when reverb_prob is 0).
    #[arg(long)]
    pub rir: Option<PathBuf>,
    /// Base directory for relative source paths.
    #[arg(long)]
    pub source_root: Option<PathBuf>,
    /// Number of entries.
    #[arg(long)]
    pub count: usize,
    /// Master seed.
    #[arg(long, env = "URGENT_FORGE_SEED")]
    pub seed: Option<u64>,
    /// Probability that an entry is reverberated.
    #[arg(long)]
    pub reverb_prob: Option<f64>,
    /// Chunk length in seconds; 0 keeps whole utterances.
    #[arg(long)]
    pub chunk_duration_s: Option<f64>,
    /// Manifest path (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Base directory for relative source paths.
    #[arg(long)]
    pub source_root: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long, env = "URGENT_FORGE_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// TSV of `reference, estimate` paths.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Output directory for report.json and report.txt.
    #[arg(long)]
    pub out: PathBuf,
    /// Fail pairs with differing sample rates instead of resampling.
    #[arg(long)]
    pub strict_sample_rate: bool,
    /// Weight aggregate means by reference duration.
    #[arg(long)]
    pub duration_weighted: bool,
    /// Worker threads (default: one per core).
    #[arg(long, env = "URGENT_FORGE_WORKERS")]
    pub workers: Option<usize>,
}

fn version() -> String {
    format!(
        "{} (manifest format {} v{})",
        env!("CARGO_PKG_VERSION"),
        urgent_forge::manifest::FORMAT_NAME,
        urgent_forge::manifest::FORMAT_VERSION
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = Cli::command().version(&*version().leak()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let file = match config::load(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Bandwidth(a) => commands::bandwidth(a, file),
        Command::Filter(a) => commands::filter(a, file),
        Command::Manifest(a) => commands::manifest(a, file),
        Command::Simulate(a) => commands::simulate(a, file),
        Command::Evaluate(a) => commands::evaluate(a, file),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("{n} item(s) failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
