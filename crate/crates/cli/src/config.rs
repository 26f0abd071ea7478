//! Run configuration: a TOML file with every knob, each with a sensible
//! default, overridable by command-line flags. The fully resolved
//! configuration is written next to the outputs of every command so a run
//! can be reproduced from its artifacts alone.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use citecast_core::ModelKind;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every stochastic stage derives its own stream from it.
    pub seed: u64,
    /// Observation horizon in whole years.
    pub horizon: usize,
    /// Where all artifacts are written.
    pub out_dir: PathBuf,
    pub paths: PathsConfig,
    pub filter: FilterConfig,
    pub clustering: ClusteringConfig,
    pub fit: FitSection,
    pub evaluation: EvaluationConfig,
    pub synth: SynthSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            horizon: 50,
            out_dir: PathBuf::from("out"),
            paths: PathsConfig::default(),
            filter: FilterConfig::default(),
            clustering: ClusteringConfig::default(),
            fit: FitSection::default(),
            evaluation: EvaluationConfig::default(),
            synth: SynthSection::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Citation pair CSV; defaults to <out_dir>/pairs.csv.
    pub pairs: Option<PathBuf>,
    /// Paper metadata CSV; defaults to <out_dir>/metadata.csv.
    pub metadata: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_citations: u64,
    pub window_years: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { min_citations: 10, window_years: 5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub k: usize,
    pub restarts: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig { k: 4, restarts: 100 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub full_window: [usize; 2],
    pub train_window: [usize; 2],
    pub n_starts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub wsb_m: f64,
    pub sir_step: f64,
    pub models: Vec<ModelKind>,
    /// Pin ARIMA orders as [p, d, q] instead of AIC selection.
    pub arima_orders: Option<[usize; 3]>,
    /// Maximum tolerated fraction of non-converged fits before the fit
    /// command reports numerical failure.
    pub failure_budget: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            full_window: [1, 50],
            train_window: [1, 10],
            n_starts: 16,
            max_iters: 2000,
            tol: 1e-8,
            wsb_m: 30.0,
            sir_step: 0.01,
            models: vec![ModelKind::Wsb, ModelKind::Sir, ModelKind::Arima, ModelKind::Naive],
            arima_orders: None,
            failure_budget: 0.25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Log-scale bin count for predicted-vs-actual scatter summaries.
    pub scatter_bins: usize,
    /// Bin count for the MAPE-by-citation-volume table.
    pub mape_bins: usize,
    /// Width of the goodness-of-fit histogram bins.
    pub pw_bin_width: f64,
    /// Years summarized in the per-class boxplot table.
    pub boxplot_years: Vec<usize>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            scatter_bins: 20,
            mape_bins: 5,
            pw_bin_width: 0.02,
            boxplot_years: vec![2, 5, 10, 20, 30, 50],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub n_papers: usize,
    /// "none" or "poisson".
    pub noise: String,
    pub param_jitter: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection { n_papers: 200, noise: "poisson".into(), param_jitter: 0.1 }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config file {}", p.display()))?;
                let cfg: RunConfig = toml::from_str(&text)
                    .with_context(|| format!("cannot parse config file {}", p.display()))?;
                cfg.validate()?;
                Ok(cfg)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        anyhow::ensure!(self.horizon >= 1, "horizon must be at least 1");
        anyhow::ensure!(
            self.filter.window_years <= self.horizon,
            "filter window ({}) cannot exceed the horizon ({})",
            self.filter.window_years,
            self.horizon
        );
        for (name, w) in [("full_window", self.fit.full_window), ("train_window", self.fit.train_window)] {
            anyhow::ensure!(
                w[0] >= 1 && w[0] <= w[1] && w[1] <= self.horizon,
                "{name} {:?} must satisfy 1 <= start <= end <= horizon",
                w
            );
        }
        anyhow::ensure!(!self.fit.models.is_empty(), "fit.models cannot be empty");
        anyhow::ensure!(
            (0.0..=1.0).contains(&self.fit.failure_budget),
            "failure_budget must lie in [0, 1]"
        );
        anyhow::ensure!(
            self.synth.noise == "none" || self.synth.noise == "poisson",
            "synth.noise must be 'none' or 'poisson', got '{}'",
            self.synth.noise
        );
        anyhow::ensure!(
            (0.0..1.0).contains(&self.synth.param_jitter),
            "synth.param_jitter must lie in [0, 1)"
        );
        Ok(())
    }

    pub fn pairs_path(&self) -> PathBuf {
        self.paths.pairs.clone().unwrap_or_else(|| self.out_dir.join("pairs.csv"))
    }

    pub fn metadata_path(&self) -> PathBuf {
        self.paths.metadata.clone().unwrap_or_else(|| self.out_dir.join("metadata.csv"))
    }

    pub fn fit_config(&self, window: [usize; 2]) -> citecast_core::FitConfig {
        citecast_core::FitConfig {
            window: (window[0], window[1]),
            n_starts: self.fit.n_starts,
            max_iters: self.fit.max_iters,
            tol: self.fit.tol,
            seed: self.seed,
            wsb_m: self.fit.wsb_m,
            sir_step: self.fit.sir_step,
            arima_orders: self.fit.arima_orders.map(|o| (o[0], o[1], o[2])),
        }
    }
}
