use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use lrp_transfer::ingest::EventCodes;
use lrp_transfer::synth::SynthConfig;
use lrp_transfer::MovementCondition;
use lrp_transfer_cli::commands::{self, read_toml};
use lrp_transfer_cli::config::{apply_override, session_files, DATA_DIR_ENV};
use lrp_transfer_cli::{error_json, run_study, write_study, RunConfig};

#[derive(Parser)]
#[command(name = "lrp-transfer", version, about = "Movement-intention classifier transfer between bilateral and unilateral reaching")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunOpts {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set eval.train.fold_seed=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunOpts {
    fn load(&self) -> anyhow::Result<RunConfig> {
        RunConfig::load(self.config.as_deref(), &self.overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Read a BrainVision recording and motion CSV into a session cache.
    Ingest {
        /// BrainVision header (.vhdr).
        #[arg(long)]
        eeg: PathBuf,
        #[arg(long)]
        motion: PathBuf,
        #[arg(long)]
        subject: String,
        #[arg(long)]
        task: MovementCondition,
        #[arg(long)]
        set: usize,
        /// Motion sampling rate when the CSV does not declare one.
        #[arg(long)]
        motion_rate: Option<f64>,
        /// Trigger codes (TOML with keys of the event-code table).
        #[arg(long)]
        codes: Option<PathBuf>,
        /// Extra files stored opaquely in the cache (e.g. EMG).
        #[arg(long = "attach")]
        attachments: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label movement onsets and write the trial table as CSV.
    Onsets {
        /// Session caches; defaults to every cache in $LRPX_DATA_DIR.
        caches: Vec<PathBuf>,
        #[command(flatten)]
        run: RunOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a classifier on the sessions of one movement task.
    Train {
        caches: Vec<PathBuf>,
        #[arg(long)]
        condition: MovementCondition,
        #[arg(long)]
        channel_set: String,
        /// Training set indices (comma separated); default all.
        #[arg(long, value_delimiter = ',')]
        sets: Vec<usize>,
        #[command(flatten)]
        run: RunOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved classifier on sessions of one movement task.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        caches: Vec<PathBuf>,
        #[arg(long)]
        test_condition: MovementCondition,
        /// Test set indices (comma separated); default all.
        #[arg(long, value_delimiter = ',')]
        sets: Vec<usize>,
        #[command(flatten)]
        run: RunOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every condition, channel set and leave-one-set-out split.
    RunStudy {
        #[command(flatten)]
        run: RunOpts,
        /// Output directory (overrides `output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic sessions with known onsets and planted potentials.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        subjects: usize,
        /// Generator settings (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a generator key, e.g. `--set snr=0.5`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Also write BrainVision triplets and motion CSVs.
        #[arg(long)]
        brainvision: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn caches_or_env(caches: Vec<PathBuf>) -> anyhow::Result<Vec<PathBuf>> {
    if !caches.is_empty() {
        return Ok(caches);
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => session_files(&PathBuf::from(dir)),
        None => bail!("no session caches given and ${DATA_DIR_ENV} is not set"),
    }
}

fn run(cli: Cli) -> anyhow::Result<Vec<PathBuf>> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("building the worker pool")?;
    }
    match cli.command {
        Command::Ingest {
            eeg,
            motion,
            subject,
            task,
            set,
            motion_rate,
            codes,
            attachments,
            out,
        } => commands::ingest(&commands::IngestArgs {
            eeg,
            motion,
            subject,
            task,
            set,
            motion_rate,
            codes: read_toml::<EventCodes>(codes.as_deref())?,
            attachments,
            out,
        }),
        Command::Onsets { caches, run, out } => {
            let cfg = run.load()?;
            commands::onsets(&commands::OnsetsArgs {
                caches: caches_or_env(caches)?,
                params: cfg.onset,
                out,
            })
        }
        Command::Train {
            caches,
            condition,
            channel_set,
            sets,
            run,
            out,
        } => {
            let cfg = run.load()?;
            commands::train(&commands::TrainArgs {
                caches: caches_or_env(caches)?,
                condition,
                channel_set,
                channels_file: cfg.channels_file,
                sets,
                train: cfg.eval.train,
                onset: cfg.onset,
                out,
            })
        }
        Command::Evaluate {
            model,
            caches,
            test_condition,
            sets,
            run,
            out,
        } => {
            let cfg = run.load()?;
            commands::evaluate(&commands::EvaluateArgs {
                model,
                caches: caches_or_env(caches)?,
                test_condition,
                sets,
                relabel: cfg.eval.relabel,
                onset: cfg.onset,
                out,
            })
        }
        Command::RunStudy { run, out } => {
            let mut cfg = run.load()?;
            if out.is_some() {
                cfg.output = out;
            }
            if cli.jobs.is_some() {
                cfg.jobs = cli.jobs;
            }
            let Some(dir) = cfg.output.clone() else {
                bail!("no output directory: pass --out or set `output`");
            };
            let study = run_study(&cfg)?;
            let hash = write_study(&study, &dir)?;
            for c in &study.report.cells {
                println!(
                    "{} {:<12} n={:<3} BA {:.3} ± {:.3}  TPR {:.3}  TNR {:.3}{}",
                    c.condition,
                    c.channel_set,
                    c.n,
                    c.mean_ba,
                    c.sd_ba,
                    c.mean_tpr,
                    c.mean_tnr,
                    if c.imbalanced { "  (imbalanced)" } else { "" }
                );
            }
            println!("config {hash}");
            Ok(vec![dir])
        }
        Command::Synth {
            seed,
            subjects,
            config,
            overrides,
            brainvision,
            out,
        } => {
            let mut table: toml::Table = match &config {
                Some(p) => toml::Table::try_from(read_toml::<SynthConfig>(Some(p))?)?,
                None => toml::Table::new(),
            };
            for o in &overrides {
                apply_override(&mut table, o)?;
            }
            let generator: SynthConfig = toml::Value::Table(table).try_into().context("invalid generator settings")?;
            generator.validate()?;
            if subjects == 0 {
                bail!("--subjects must be at least 1");
            }
            commands::synth(&commands::SynthArgs {
                seed,
                subjects,
                generator,
                brainvision,
                out,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                log::info!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
