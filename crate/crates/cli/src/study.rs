//! Full study runs over cached or synthetic subjects.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use lrp_transfer::eval::{cell_svg, channel_union, csv_bytes, prepare_subject, run_subject, StudyReport, SubjectTrials};
use lrp_transfer::ingest::load_dataset;
use lrp_transfer::onset::label_onsets;
use lrp_transfer::preprocess::{PreprocessParams, WindowGrid};
use lrp_transfer::synth::{prepare_synthetic_subject, SynthConfig};
use lrp_transfer::{ChannelSet, SessionData};

use crate::config::{session_files, RunConfig};
use crate::output::{write_file, write_manifest};
use crate::AtPath;

/// Session caches named by `data`, sorted by path.
pub fn session_paths(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths = cfg.data.sessions.clone();
    if let Some(dir) = &cfg.data.cache_dir {
        paths.extend(session_files(dir)?);
    }
    paths.sort();
    paths.dedup();
    Ok(paths)
}

/// Loads caches and labels onsets, grouped by subject in name order.
pub fn load_subjects(paths: &[PathBuf], onset: &lrp_transfer::onset::OnsetParams) -> anyhow::Result<BTreeMap<String, Vec<SessionData>>> {
    let mut out: BTreeMap<String, Vec<SessionData>> = BTreeMap::new();
    for p in paths {
        let mut s = load_dataset(p).with_context(|| AtPath(p.clone()))?;
        for (t, r) in s.trials.clone().iter().zip(label_onsets(&mut s, onset)) {
            if let Err(e) = r {
                if t.valid {
                    log::warn!("{} trial {}: {e}", p.display(), t.index);
                }
            }
        }
        out.entry(s.subject_id.clone()).or_default().push(s);
    }
    Ok(out)
}

/// A finished study with the configuration it ran under.
pub struct StudyRun {
    pub config: RunConfig,
    pub report: StudyReport,
}

fn run_one(subject: &SubjectTrials, cfg: &RunConfig, sets: &[ChannelSet], results: &mut Vec<lrp_transfer::eval::SplitResult>) -> anyhow::Result<()> {
    if !subject.skipped.is_empty() {
        log::warn!("{}: {} trial(s) could not be windowed", subject.subject, subject.skipped.len());
    }
    let r = run_subject(subject, &cfg.conditions, sets, &cfg.eval).with_context(|| format!("subject {}", subject.subject))?;
    log::info!("{}: {} splits", subject.subject, r.len());
    results.extend(r);
    Ok(())
}

fn run_inner(cfg: &RunConfig) -> anyhow::Result<StudyReport> {
    let sets = cfg.selected_sets()?;
    let union = channel_union(&sets);
    let (grid, params) = (WindowGrid::default(), PreprocessParams::default());
    let mut results = Vec::new();
    if let Some(s) = &cfg.synth {
        for &seed in &s.seeds {
            for k in 0..s.subjects {
                let base = SynthConfig {
                    seed,
                    subject: k,
                    ..s.generator.clone()
                };
                let subject = prepare_synthetic_subject(&base, &union, &grid, &params, &cfg.onset)?;
                run_one(&subject, cfg, &sets, &mut results)?;
            }
        }
    } else {
        let paths = session_paths(cfg)?;
        if paths.is_empty() {
            bail!("no session caches found; set data.cache_dir, data.sessions, a [synth] section or ${}", crate::config::DATA_DIR_ENV);
        }
        for (id, sessions) in load_subjects(&paths, &cfg.onset)? {
            let subject = prepare_subject(&id, &sessions, &union, &grid, &params)?;
            run_one(&subject, cfg, &sets, &mut results)?;
        }
    }
    Ok(StudyReport::from_results(results, &cfg.channel_sets))
}

/// Runs every configured subject, condition and channel set.
pub fn run_study(cfg: &RunConfig) -> anyhow::Result<StudyRun> {
    let mut cfg = cfg.clone();
    cfg.resolve_data_dir();
    cfg.validate()?;
    let report = match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building the worker pool")?
            .install(|| run_inner(&cfg))?,
        None => run_inner(&cfg)?,
    };
    Ok(StudyRun { config: cfg, report })
}

fn cells_csv(report: &StudyReport) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["condition", "channel_set", "n", "mean_ba", "sd_ba", "mean_tpr", "mean_tnr", "imbalanced"])?;
    for c in &report.cells {
        w.write_record([
            c.condition.to_string(),
            c.channel_set.clone(),
            c.n.to_string(),
            c.mean_ba.to_string(),
            c.sd_ba.to_string(),
            c.mean_tpr.to_string(),
            c.mean_tnr.to_string(),
            c.imbalanced.to_string(),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)
}

/// Writes `results.csv`, `cells.csv`, box plots, `config.toml` and
/// `manifest.json` into `dir`. Returns the config hash.
pub fn write_study(run: &StudyRun, dir: &Path) -> anyhow::Result<String> {
    fs::create_dir_all(dir).with_context(|| AtPath(dir.to_path_buf()))?;
    let mut outputs = Vec::new();
    let mut put = |name: String, bytes: &[u8]| -> anyhow::Result<()> {
        let p = dir.join(name);
        write_file(&p, bytes)?;
        outputs.push(p);
        Ok(())
    };
    put("results.csv".into(), &csv_bytes(&run.report.results))?;
    put("cells.csv".into(), &cells_csv(&run.report)?)?;
    if run.config.formats.svg {
        for c in &run.report.cells {
            let ba: Vec<f64> = run
                .report
                .results
                .iter()
                .filter(|r| r.condition == c.condition && r.channel_set == c.channel_set)
                .map(|r| r.ba)
                .collect();
            put(format!("{}_{}.svg", c.condition, c.channel_set), cell_svg(c.condition, &c.channel_set, &ba).as_bytes())?;
        }
    }
    put("config.toml".into(), run.config.to_toml().as_bytes())?;
    write_manifest(&dir.join("manifest.json"), "run-study", &run.config, &outputs)
}
