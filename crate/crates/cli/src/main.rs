//! Command-line driver for the citation modeling pipeline.
//!
//! Exit codes: 0 success, 1 usage or configuration problem, 2 missing or
//! invalid input data, 3 numerical failure beyond the configured budget.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{NumericalFailure, WindowChoice};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "citecast",
    version,
    about = "Cluster citation trajectories, fit growth models, score forecasts"
)]
struct Cli {
    /// TOML run configuration; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic corpus with known generating models.
    Synth {
        /// Number of papers to generate.
        #[arg(long)]
        n_papers: Option<usize>,
        /// Yearly count noise: none or poisson.
        #[arg(long)]
        noise: Option<String>,
        /// Relative parameter jitter in [0, 1).
        #[arg(long)]
        jitter: Option<f64>,
    },
    /// Build yearly cumulative histories from raw CSVs and filter the sample.
    Ingest {
        /// Citation pair CSV (citing_id, cited_id, citing_date).
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Paper metadata CSV (paper_id, publication_date, journal).
        #[arg(long)]
        metadata: Option<PathBuf>,
    },
    /// Cluster cumulative citation shapes into classes.
    Cluster,
    /// Fit every configured model to each sampled paper.
    Fit {
        /// Which year window to fit on.
        #[arg(long, value_enum)]
        window: WindowChoice,
    },
    /// Write per-model predicted counts on the full year grid.
    Predict {
        /// Which fits to predict from.
        #[arg(long, value_enum)]
        window: WindowChoice,
    },
    /// Score fits and forecasts; write figure-ready tables.
    Evaluate,
    /// Merge run artifacts into a single JSON report.
    Report,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let mut cfg = match RunConfig::load(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Cmd::Synth { n_papers, noise, jitter } => {
            if let Some(n) = n_papers {
                cfg.synth.n_papers = *n;
            }
            if let Some(noise) = noise {
                cfg.synth.noise = noise.clone();
            }
            if let Some(j) = jitter {
                cfg.synth.param_jitter = *j;
            }
        }
        Cmd::Ingest { pairs, metadata } => {
            if let Some(p) = pairs {
                cfg.paths.pairs = Some(p.clone());
            }
            if let Some(m) = metadata {
                cfg.paths.metadata = Some(m.clone());
            }
        }
        _ => {}
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }

    let result = match cli.command {
        Cmd::Synth { .. } => commands::synth_cmd(&cfg),
        Cmd::Ingest { .. } => commands::ingest_cmd(&cfg),
        Cmd::Cluster => commands::cluster_cmd(&cfg),
        Cmd::Fit { window } => commands::fit_cmd(&cfg, window),
        Cmd::Predict { window } => commands::predict_cmd(&cfg, window),
        Cmd::Evaluate => commands::evaluate_cmd(&cfg),
        Cmd::Report => commands::report_cmd(&cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<NumericalFailure>().is_some() {
        return 3;
    }
    if let Some(citecast_core::Error::Numerical(_)) = e.downcast_ref::<citecast_core::Error>() {
        return 3;
    }
    2
}
