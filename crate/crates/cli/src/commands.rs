use std::fmt::Write as _;

use anyhow::{Context, Result};
use rayon::prelude::*;
use urgent_forge::audio::{load_wav, save_wav, Encoding};
use urgent_forge::bandwidth::{best_matching_sf, estimate_effective_bandwidth, BandwidthOptions};
use urgent_forge::corpus_filter::{
    filter_corpus, read_score_tsv, speech_activity_ratio, Candidate, FilterPolicy, Scores,
};
use urgent_forge::dsp;
use urgent_forge::manifest::{generate_manifest, run_manifest, Manifest, SimulationContext, SourceLists};
use urgent_forge::metrics::{evaluate_pairlist, EvalOptions};

use crate::config::{
    write_resolved, BandwidthSection, EvaluateSection, FileConfig, FilterSection, SimulateSection,
    SimulationSection,
};
use crate::io;
use crate::{BandwidthArgs, EvaluateArgs, FilterArgs, ManifestArgs, SimulateArgs};

/// Each command returns the number of failed items; errors are fatal.
pub type Outcome = Result<usize>;

fn check_workers(w: Option<usize>) -> Result<Option<usize>> {
    anyhow::ensure!(w != Some(0), "workers must be at least 1");
    Ok(w)
}

pub fn bandwidth(args: BandwidthArgs, file: FileConfig) -> Outcome {
    let section = file.bandwidth.unwrap_or_default();
    let d = BandwidthOptions::default();
    let opts = BandwidthOptions {
        threshold_db: args.threshold_db.or(section.threshold_db).unwrap_or(d.threshold_db),
        allowed_sfs: section.allowed_sfs.unwrap_or(d.allowed_sfs),
    };
    anyhow::ensure!(opts.threshold_db < 0.0, "threshold_db must be negative");
    anyhow::ensure!(!opts.allowed_sfs.is_empty(), "allowed_sfs must not be empty");
    let mut allowed = opts.allowed_sfs.clone();
    allowed.sort_unstable();

    let mut paths = args.paths.clone();
    if let Some(list) = &args.list {
        paths.extend(io::read_list(list)?);
    }

    let rows: Vec<Result<(f64, u32), String>> = paths
        .par_iter()
        .map(|p| {
            let x = load_wav(p).map_err(|e| e.to_string())?;
            let est = estimate_effective_bandwidth(&x, opts.threshold_db).map_err(|e| format!("{}: {e}", p.display()))?;
            let sf = best_matching_sf(est.effective_bw_hz, &allowed);
            if let Some(dir) = &args.normalize_dir {
                let name = p.file_name().context("path has no file name").map_err(|e| e.to_string())?;
                let y = dsp::resample(&x, sf).map_err(|e| e.to_string())?;
                std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
                save_wav(&y, dir.join(name), Encoding::Float32).map_err(|e| e.to_string())?;
            }
            Ok((est.effective_bw_hz, sf))
        })
        .collect();

    let mut out = String::new();
    let mut failed = 0;
    for (p, r) in paths.iter().zip(&rows) {
        match r {
            Ok((bw, sf)) => {
                let _ = writeln!(out, "{}\t{bw:.1}\t{sf}", p.display());
            }
            Err(e) => {
                failed += 1;
                log::error!("{}: {e}", p.display());
                let _ = writeln!(out, "{}\tERROR\tERROR", p.display());
            }
        }
    }

    let resolved = FileConfig {
        bandwidth: Some(BandwidthSection {
            threshold_db: Some(opts.threshold_db),
            allowed_sfs: Some(opts.allowed_sfs),
        }),
        ..Default::default()
    };
    match &args.out {
        Some(path) => {
            io::write(path, &out)?;
            write_resolved(&io::parent_dir(path), "bandwidth", &resolved)?;
        }
        None => print!("{out}"),
    }
    if let Some(dir) = &args.normalize_dir {
        write_resolved(dir, "bandwidth", &resolved)?;
    }
    Ok(failed)
}

fn scores_cols(s: Option<Scores>) -> String {
    match s {
        Some(s) => format!("{}\t{}\t{}", s.ovrl, s.sig, s.bak),
        None => "\t\t".into(),
    }
}

pub fn filter(args: FilterArgs, file: FileConfig) -> Outcome {
    let section = file.filter.unwrap_or_default();
    let d = FilterPolicy::default();
    let policy = FilterPolicy {
        min_speech_ratio: args.min_speech_ratio.or(section.min_speech_ratio).unwrap_or(d.min_speech_ratio),
        min_ovrl: args.min_ovrl.or(section.min_ovrl).unwrap_or(d.min_ovrl),
        min_sig: args.min_sig.or(section.min_sig).unwrap_or(d.min_sig),
        min_bak: args.min_bak.or(section.min_bak).unwrap_or(d.min_bak),
    };
    policy.validate()?;
    let records = read_score_tsv(&args.scores)?;
    let pool = io::pool(check_workers(args.workers)?)?;

    let ratios: Vec<Result<f64, String>> = pool.install(|| {
        records
            .par_iter()
            .map(|r| {
                let x = load_wav(io::resolve(args.audio_root.as_deref(), &r.path)).map_err(|e| e.to_string())?;
                Ok(speech_activity_ratio(&x))
            })
            .collect()
    });

    let mut candidates = Vec::new();
    let mut unreadable = Vec::new();
    for (r, ratio) in records.iter().zip(ratios) {
        match ratio {
            Ok(speech_ratio) => candidates.push(Candidate {
                path: r.path.clone(),
                speech_ratio,
                scores: Some(r.scores),
            }),
            Err(e) => {
                log::error!("{e}");
                unreadable.push(r);
            }
        }
    }
    let outcome = filter_corpus(candidates, &policy)?;

    let mut kept = String::from("path\tspeech_ratio\tovrl\tsig\tbak\n");
    for c in &outcome.kept {
        let _ = writeln!(kept, "{}\t{:.4}\t{}", c.path.display(), c.speech_ratio, scores_cols(c.scores));
    }
    let mut rejected = String::from("path\treason\tspeech_ratio\tovrl\tsig\tbak\n");
    for (c, why) in &outcome.rejected {
        let _ = writeln!(
            rejected,
            "{}\t{}\t{:.4}\t{}",
            c.path.display(),
            why.as_str(),
            c.speech_ratio,
            scores_cols(c.scores)
        );
    }
    for r in &unreadable {
        let _ = writeln!(rejected, "{}\tunreadable\t\t{}", r.path.display(), scores_cols(Some(r.scores)));
    }
    io::write(&args.out_dir.join("kept.tsv"), &kept)?;
    io::write(&args.out_dir.join("rejected.tsv"), &rejected)?;
    write_resolved(
        &args.out_dir,
        "filter",
        &FileConfig {
            filter: Some(FilterSection {
                min_speech_ratio: Some(policy.min_speech_ratio),
                min_ovrl: Some(policy.min_ovrl),
                min_sig: Some(policy.min_sig),
                min_bak: Some(policy.min_bak),
            }),
            ..Default::default()
        },
    )?;
    eprintln!(
        "kept {} of {} ({} rejected, {} unreadable)",
        outcome.kept.len(),
        records.len(),
        outcome.rejected.len(),
        unreadable.len()
    );
    Ok(unreadable.len())
}

pub fn manifest(args: ManifestArgs, file: FileConfig) -> Outcome {
    let mut cfg = file.simulation.unwrap_or_default().resolve();
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(p) = args.reverb_prob {
        cfg.reverb_prob = p;
    }
    if let Some(c) = args.chunk_duration_s {
        cfg.chunk_duration_s = c;
    }
    let sources = SourceLists {
        speech: io::read_list(&args.speech)?,
        noise: io::read_list(&args.noise)?,
        rir: match &args.rir {
            Some(p) => io::read_list(p)?,
            None => Vec::new(),
        },
        root: args.source_root.clone(),
    };
    let m = generate_manifest(&sources, &cfg, args.count)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    m.save(&args.out)?;
    write_resolved(
        &io::parent_dir(&args.out),
        "manifest",
        &FileConfig {
            simulation: Some(SimulationSection::from_config(&cfg)),
            ..Default::default()
        },
    )?;
    eprintln!("wrote {} entries to {}", m.entries.len(), args.out.display());
    Ok(0)
}

pub fn simulate(args: SimulateArgs, file: FileConfig) -> Outcome {
    let opts = file.simulate.unwrap_or_default().resolve()?;
    let workers = check_workers(args.workers)?.unwrap_or_else(rayon::current_num_threads);
    let m = Manifest::load(&args.manifest)?;
    m.header.config.validate()?;
    let ctx = SimulationContext {
        source_root: args.source_root.clone(),
        output_dir: args.out.clone(),
        chunk_duration_s: m.header.config.chunk_duration_s,
        degrade: opts,
    };
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let report = run_manifest(&m, &ctx, workers);
    io::write(&args.out.join("report.tsv"), &report.to_tsv())?;
    write_resolved(
        &args.out,
        "simulate",
        &FileConfig {
            simulation: Some(SimulationSection::from_config(&m.header.config)),
            simulate: Some(SimulateSection::from_options(&opts)),
            ..Default::default()
        },
    )?;
    eprintln!(
        "{} ok, {} failed, {:.2} s of worker time",
        report.succeeded(),
        report.failed(),
        report.total_elapsed().as_secs_f64()
    );
    Ok(report.failed())
}

pub fn evaluate(args: EvaluateArgs, file: FileConfig) -> Outcome {
    let section = file.evaluate.unwrap_or_default();
    // boolean flags can only switch on; the file decides otherwise
    let opts = EvalOptions {
        strict_sample_rate: args.strict_sample_rate || section.strict_sample_rate.unwrap_or(false),
        duration_weighted: args.duration_weighted || section.duration_weighted.unwrap_or(false),
    };
    let pairs = io::read_pairs(&args.pairs)?;
    let pool = io::pool(check_workers(args.workers)?)?;
    let report = pool.install(|| evaluate_pairlist(&pairs, &opts));
    let table = report.to_table();
    io::write(&args.out.join("report.json"), &report.to_json())?;
    io::write(&args.out.join("report.txt"), &table)?;
    write_resolved(
        &args.out,
        "evaluate",
        &FileConfig {
            evaluate: Some(EvaluateSection {
                strict_sample_rate: Some(opts.strict_sample_rate),
                duration_weighted: Some(opts.duration_weighted),
            }),
            ..Default::default()
        },
    )?;
    print!("{table}");
    for f in report.per_file.iter().filter(|f| !f.errors.is_empty()) {
        for (m, e) in &f.errors {
            log::error!("pair {} {}: {e}", f.id, m.key());
        }
    }
    Ok(report.failed_files)
}
