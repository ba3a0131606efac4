//! `gsn`: train, sample from, and analyze walkback-trained chain models.
//!
//! Every subcommand takes a flat key=value config file plus a few flag
//! overrides, logs its fully resolved configuration, and confines its
//! writes to the --out directory. See `config.rs` for the key schema.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "gsn", version, about = "Generative chain models: train, sample, verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key=value config file; `#` starts a comment.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed; overrides the config `seed` key.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory; every file this run writes lands inside it.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model; writes checkpoint.gsn, its checksum, and a per-epoch report.
    Train {
        #[command(flatten)]
        common: Common,
        /// Override the config `epochs` key.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Run the free sampling chain of a checkpoint; writes CSV and a PGM grid.
    Sample {
        #[command(flatten)]
        common: Common,
    },
    /// Sample with some coordinates held at fixed values (conditional completion).
    Inpaint {
        #[command(flatten)]
        common: Common,
    },
    /// Score generated samples against held-out data with a Parzen-window density.
    EvalParzen {
        #[command(flatten)]
        common: Common,
    },
    /// Build the exact transition operator of a 1-layer binary checkpoint and analyze it.
    AnalyzeChain {
        #[command(flatten)]
        common: Common,
    },
    /// Run the chain-property verification batteries; nonzero exit on any failure.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Train { common, .. }
            | Command::Sample { common }
            | Command::Inpaint { common }
            | Command::EvalParzen { common }
            | Command::AnalyzeChain { common }
            | Command::Verify { common } => common,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = cli.command.common();
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::empty(),
    };
    if let Some(seed) = common.seed {
        cfg.set("seed", seed);
    }
    if let Command::Train { epochs: Some(epochs), .. } = &cli.command {
        cfg.set("epochs", epochs);
    }

    let out = common.out.clone();
    std::fs::create_dir_all(&out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    let resolved = cfg.resolved_text();
    println!("resolved config:");
    for line in resolved.lines() {
        println!("  {line}");
    }
    std::fs::write(out.join("resolved.cfg"), &resolved)
        .with_context(|| format!("cannot write {}", out.join("resolved.cfg").display()))?;

    match &cli.command {
        Command::Train { .. } => commands::cmd_train(&cfg, &out),
        Command::Sample { .. } => commands::cmd_sample(&cfg, &out),
        Command::Inpaint { .. } => commands::cmd_inpaint(&cfg, &out),
        Command::EvalParzen { .. } => commands::cmd_eval_parzen(&cfg, &out),
        Command::AnalyzeChain { .. } => commands::cmd_analyze_chain(&cfg, &out),
        Command::Verify { .. } => commands::cmd_verify(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
