//! `fraggen`: preprocessing, training, sampling and evaluation from the shell.
//!
//! Progress goes to stderr; results go to files under the work directory.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fraggen::pipeline::{self, Overrides, PipelineConfig, PipelineError, Workdir};

/// Exit status for a config file that cannot be read or parsed.
const EXIT_CONFIG: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fraggen",
    version,
    about = "Fragment-based molecular generation"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Masking threshold: fragments seen fewer than K times are masked.
    #[arg(long, global = true)]
    k: Option<u64>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    sample_count: Option<usize>,
    /// Disable low-frequency masking.
    #[arg(long, global = true)]
    no_lfm: bool,
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean and fragment a SMILES corpus into <workdir>/fragments.txt.
    Preprocess {
        corpus: Option<PathBuf>,
        /// Use only the first N molecules.
        #[arg(long)]
        max_molecules: Option<usize>,
    },
    /// Fragment every molecule of a SMILES file, without filtering.
    Fragment {
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Build the vocabulary from the preprocessed corpus.
    Vocab,
    /// Train skip-gram fragment embeddings.
    Embed,
    /// Train the sequence model.
    Train,
    /// Sample molecules from the trained model.
    Sample,
    /// Score samples: validity, novelty, uniqueness and feature distributions.
    Eval,
    /// Corpus statistics of the preprocessed corpus.
    Stats,
    /// Every stage in order, skipping stages whose artifacts are current.
    Pipeline {
        corpus: Option<PathBuf>,
        #[arg(long)]
        max_molecules: Option<usize>,
        /// Also run without masking under <workdir>/nolfm.
        #[arg(long)]
        ablation: bool,
    },
}

enum Failure {
    Config(anyhow::Error),
    Stage(PipelineError),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Stage(e)
    }
}

fn load_config(global: &GlobalArgs, corpus: Option<PathBuf>) -> Result<PipelineConfig> {
    let base = match &global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            PipelineConfig::from_toml(&text)
                .map_err(anyhow::Error::msg)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => PipelineConfig::default(),
    };
    let overrides = Overrides {
        corpus,
        workdir: global.workdir.clone(),
        seed: global.seed,
        k: global.k,
        epochs: global.epochs,
        sample_count: global.sample_count,
        no_lfm: global.no_lfm,
    };
    Ok(base.apply(&overrides))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (corpus, max_molecules) = match &cli.command {
        Command::Preprocess {
            corpus,
            max_molecules,
        }
        | Command::Pipeline {
            corpus,
            max_molecules,
            ..
        } => (corpus.clone(), *max_molecules),
        _ => (None, None),
    };
    let mut cfg = load_config(&cli.global, corpus).map_err(Failure::Config)?;
    if max_molecules.is_some() {
        cfg.max_molecules = max_molecules;
    }
    let wd = Workdir::new(&cfg.workdir);
    match cli.command {
        Command::Preprocess { .. } => {
            let a = pipeline::run_preprocess(&cfg, &wd)?;
            log::info!("kept {} of {} molecules", a.kept, a.input);
        }
        Command::Fragment { input, output } => {
            let n = pipeline::fragment_file(&input, &output, cfg.min_fragment_atoms)?;
            log::info!("fragmented {n} molecules into {}", output.display());
        }
        Command::Vocab => {
            pipeline::run_vocab(&cfg, &wd)?;
        }
        Command::Embed => {
            pipeline::run_embed(&cfg, &wd)?;
        }
        Command::Train => {
            pipeline::run_train(&cfg, &wd)?;
        }
        Command::Sample => {
            pipeline::run_sample(&cfg, &wd)?;
        }
        Command::Eval => {
            pipeline::run_eval(&cfg, &wd)?;
        }
        Command::Stats => {
            pipeline::run_stats(&cfg, &wd)?;
        }
        Command::Pipeline { ablation, .. } => {
            cfg.ablation |= ablation;
            let summary = pipeline::run_pipeline(&cfg)?;
            let ran: Vec<&str> = summary
                .stages
                .iter()
                .filter(|(_, ran)| *ran)
                .map(|(s, _)| s.name())
                .collect();
            log::info!(
                "stages run: {}",
                if ran.is_empty() {
                    "none".into()
                } else {
                    ran.join(", ")
                }
            );
            let m = &summary.metrics;
            log::info!(
                "valid {:.3} novel {:.3} unique {:.3}",
                m.valid,
                m.novel,
                m.unique
            );
            if let Some(off) = &summary.ablation {
                log::info!(
                    "no masking: valid {:.3} novel {:.3} unique {:.3}",
                    off.valid,
                    off.novel,
                    off.unique
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Stage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
