//! `mgmt`: extract, run, predict, synth and evaluate from the command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mgmt_predict::error::{Error, Result};
use mgmt_predict::pipeline::{cmd_evaluate, cmd_extract, cmd_predict, cmd_run, cmd_synth, PipelineConfig};

#[derive(Parser)]
#[command(name = "mgmt", version, about = "MGMT methylation prediction from segmented MR volumes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract radiomic features for every subject of a manifest.
    Extract {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Select features, cross-validate and write the model bundle.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        latent: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Predict probabilities with a model bundle.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        latent: Option<PathBuf>,
    },
    /// Write a synthetic cohort (images, manifest, labels, latent vectors).
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_subjects: Option<usize>,
        /// Remove all class effects.
        #[arg(long)]
        null: bool,
    },
    /// AUC of a predictions CSV against a labels CSV.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<PipelineConfig> {
    let mut config = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(dir) = &common.out_dir {
        config.out_dir = dir.clone();
    }
    if common.workers.is_some() {
        config.workers = common.workers;
    }
    Ok(config)
}

fn set(slot: &mut Option<PathBuf>, value: Option<PathBuf>) {
    if value.is_some() {
        *slot = value;
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Extract { common, manifest } => {
            let mut config = load(&common)?;
            set(&mut config.manifest, manifest);
            let outcome = cmd_extract(&config)?;
            println!("{}", outcome.path.display());
            if !outcome.skipped.is_empty() {
                for (id, reason) in &outcome.skipped {
                    eprintln!("skip report: {id}: {reason}");
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::Run { common, features, latent, labels } => {
            let mut config = load(&common)?;
            set(&mut config.features, features);
            set(&mut config.latent, latent);
            set(&mut config.labels, labels);
            let outcome = cmd_run(&config)?;
            println!("{}", outcome.report.auc);
        }
        Command::Predict { common, bundle, features, latent } => {
            let mut config = load(&common)?;
            set(&mut config.bundle, bundle);
            set(&mut config.features, features);
            set(&mut config.latent, latent);
            let rows = cmd_predict(&config)?;
            eprintln!("predicted {} subjects", rows.len());
        }
        Command::Synth { common, n_subjects, null } => {
            let mut config = load(&common)?;
            if let Some(n) = n_subjects {
                config.synthetic.n_subjects = n;
            }
            if null {
                config.synthetic = config.synthetic.null();
            }
            let files = cmd_synth(&config)?;
            println!("{}", files.manifest.display());
        }
        Command::Evaluate { common, predictions, labels } => {
            let mut config = load(&common)?;
            set(&mut config.predictions, predictions);
            set(&mut config.labels, labels);
            let outcome = cmd_evaluate(&config)?;
            if !outcome.unlabelled.is_empty() {
                eprintln!("{} predicted subjects have no label", outcome.unlabelled.len());
            }
            println!("{}", outcome.auc);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Error::exit_code(&e) as u8)
        }
    }
}
