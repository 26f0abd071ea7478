//! The seven pipeline commands. Each one reads its inputs from the output
//! directory (or explicit paths), writes its artifacts back there along with
//! the resolved configuration, and prints a one-line summary. Commands are
//! composable: synth -> ingest -> cluster -> fit -> predict -> evaluate ->
//! report, with predict optional.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use citecast_core::report as formats;
use citecast_core::{
    citation_data, clustering, evaluation, fitting, synth, CitationHistory, ClassAssignment,
    FitResult, ModelKind, NoiseKind, SynthSpec, WksScore,
};

use crate::config::RunConfig;

/// Raised when fits fail numerically beyond the configured budget; the
/// driver maps it to its own exit code.
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "numerical failure: {}", self.0)
    }
}

impl std::error::Error for NumericalFailure {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum WindowChoice {
    Full,
    Train,
}

impl WindowChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            WindowChoice::Full => "full",
            WindowChoice::Train => "train",
        }
    }

    fn window(self, cfg: &RunConfig) -> [usize; 2] {
        match self {
            WindowChoice::Full => cfg.fit.full_window,
            WindowChoice::Train => cfg.fit.train_window,
        }
    }
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
    ))
}

fn open(path: &Path, hint: &str) -> Result<File> {
    File::open(path).with_context(|| format!("cannot read {} ({hint})", path.display()))
}

fn prepare_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create output directory {}", cfg.out_dir.display()))?;
    formats::write_json(create(&out_path(cfg, "resolved_config.json"))?, cfg)?;
    Ok(())
}

fn read_sample(cfg: &RunConfig) -> Result<Vec<CitationHistory>> {
    let path = out_path(cfg, "sample.json");
    let histories = formats::read_histories_json(open(&path, "run ingest first")?)
        .with_context(|| format!("cannot parse {}", path.display()))?;
    if histories.is_empty() {
        bail!("sample at {} is empty; nothing survived the filter", path.display());
    }
    Ok(histories)
}

fn read_assignment(cfg: &RunConfig) -> Result<ClassAssignment> {
    let labels = formats::read_assignment_csv(open(
        &out_path(cfg, "assignment.csv"),
        "run cluster first",
    )?)?;
    let centroids = formats::read_centroids_json(open(
        &out_path(cfg, "centroids.json"),
        "run cluster first",
    )?)?;
    Ok(ClassAssignment { labels, centroids: centroids.centroids, wcss: centroids.wcss })
}

pub fn synth_cmd(cfg: &RunConfig) -> Result<()> {
    prepare_out_dir(cfg)?;
    let noise = match cfg.synth.noise.as_str() {
        "none" => NoiseKind::None,
        _ => NoiseKind::Poisson,
    };
    let spec = SynthSpec {
        templates: synth::class_templates().to_vec(),
        n_papers: cfg.synth.n_papers,
        horizon: cfg.horizon,
        noise,
        param_jitter: cfg.synth.param_jitter,
        seed: cfg.seed,
        sir_step: cfg.fit.sir_step,
    };
    let cohort = synth::generate_cohort(&spec)?;
    let dataset = synth::cohort_dataset(&cohort);

    formats::write_pairs_csv(create(&cfg.pairs_path())?, &dataset.events)?;
    formats::write_metadata_csv(create(&cfg.metadata_path())?, &dataset.papers)?;
    formats::write_truth_csv(create(&out_path(cfg, "truth.csv"))?, &cohort.truths())?;

    println!(
        "synth: {} papers, {} citation events, noise {}",
        dataset.papers.len(),
        dataset.events.len(),
        cfg.synth.noise
    );
    Ok(())
}

pub fn ingest_cmd(cfg: &RunConfig) -> Result<()> {
    prepare_out_dir(cfg)?;
    let pairs = open(&cfg.pairs_path(), "citation pair CSV")?;
    let metadata = open(&cfg.metadata_path(), "paper metadata CSV")?;
    let (dataset, report) = citation_data::ingest(pairs, metadata)?;
    if dataset.papers.is_empty() {
        bail!("no valid papers in {}", cfg.metadata_path().display());
    }
    let histories = citation_data::build_histories(&dataset, cfg.horizon)?;
    let sample = citation_data::filter_sample(
        &histories,
        cfg.filter.min_citations,
        cfg.filter.window_years,
    )?;

    formats::write_histories_json(create(&out_path(cfg, "histories.json"))?, &histories)?;
    formats::write_histories_json(create(&out_path(cfg, "sample.json"))?, &sample)?;
    formats::write_json(
        create(&out_path(cfg, "ingest_report.json"))?,
        &serde_json::json!({
            "report": report,
            "histories": histories.len(),
            "sample_size": sample.len(),
            "min_citations": cfg.filter.min_citations,
            "filter_window_years": cfg.filter.window_years,
        }),
    )?;

    println!(
        "ingest: {} papers, {} events kept ({} rows dropped); sample {} of {} histories",
        report.papers_loaded,
        report.events_loaded,
        report.dropped,
        sample.len(),
        histories.len()
    );
    Ok(())
}

pub fn cluster_cmd(cfg: &RunConfig) -> Result<()> {
    prepare_out_dir(cfg)?;
    let sample = read_sample(cfg)?;
    let shapes = clustering::make_shapes(&sample)?;
    let assignment =
        clustering::kmeans_cluster(&shapes, cfg.clustering.k, cfg.clustering.restarts, cfg.seed)?;

    let years: Vec<usize> = cfg
        .evaluation
        .boxplot_years
        .iter()
        .copied()
        .filter(|&t| t <= cfg.horizon)
        .collect();
    let stats = clustering::class_statistics(&assignment, &sample, &years)?;
    let odds = clustering::top_decile_odds(&assignment, &sample)?;

    formats::write_assignment_csv(create(&out_path(cfg, "assignment.csv"))?, &assignment.labels)?;
    formats::write_centroids_json(create(&out_path(cfg, "centroids.json"))?, &assignment)?;
    formats::write_class_stats_csv(create(&out_path(cfg, "class_stats.csv"))?, &stats)?;
    formats::write_class_summary_csv(create(&out_path(cfg, "class_summary.csv"))?, &stats, &odds)?;

    let sizes: Vec<usize> = stats.iter().map(|s| s.size).collect();
    println!(
        "cluster: k = {}, sizes {:?}, wcss {:.6}",
        cfg.clustering.k, sizes, assignment.wcss
    );
    Ok(())
}

pub fn fit_cmd(cfg: &RunConfig, window: WindowChoice) -> Result<()> {
    prepare_out_dir(cfg)?;
    let sample = read_sample(cfg)?;
    let fit_config = cfg.fit_config(window.window(cfg));
    let results = fitting::fit_cohort(&sample, &cfg.fit.models, &fit_config)?;

    let failed = results.iter().filter(|r| !r.converged).count();
    let fraction = failed as f64 / results.len() as f64;

    let tag = window.as_str();
    formats::write_fits_json(create(&out_path(cfg, &format!("fits_{tag}.json")))?, &results)?;
    formats::write_fits_csv(create(&out_path(cfg, &format!("fits_{tag}.csv")))?, &results)?;

    println!(
        "fit[{tag}]: {} fits over {} papers x {} models, {} non-converged ({:.1}%)",
        results.len(),
        sample.len(),
        cfg.fit.models.len(),
        failed,
        100.0 * fraction
    );
    if fraction > cfg.fit.failure_budget {
        return Err(NumericalFailure(format!(
            "{failed} of {} fits failed to converge ({:.1}% > budget {:.1}%)",
            results.len(),
            100.0 * fraction,
            100.0 * cfg.fit.failure_budget
        ))
        .into());
    }
    Ok(())
}

fn read_fits(cfg: &RunConfig, window: WindowChoice) -> Result<Vec<FitResult>> {
    let path = out_path(cfg, &format!("fits_{}.json", window.as_str()));
    formats::read_fits_json(open(&path, "run fit first")?)
        .with_context(|| format!("cannot parse {}", path.display()))
}

fn fits_present(cfg: &RunConfig, window: WindowChoice) -> bool {
    out_path(cfg, &format!("fits_{}.json", window.as_str())).exists()
}

pub fn predict_cmd(cfg: &RunConfig, window: WindowChoice) -> Result<()> {
    prepare_out_dir(cfg)?;
    let sample = read_sample(cfg)?;
    let fits = read_fits(cfg, window)?;
    let rows = prediction_rows(cfg, window, &sample, &fits)?;
    let tag = window.as_str();
    formats::write_predictions_csv(
        create(&out_path(cfg, &format!("predictions_{tag}.csv")))?,
        &rows,
    )?;
    println!("predict[{tag}]: {} prediction rows over years 0..={}", rows.len(), cfg.horizon);
    Ok(())
}

fn prediction_rows(
    cfg: &RunConfig,
    window: WindowChoice,
    sample: &[CitationHistory],
    fits: &[FitResult],
) -> Result<Vec<formats::PredictionRow>> {
    let fit_config = cfg.fit_config(window.window(cfg));
    let by_id: BTreeMap<&str, &CitationHistory> =
        sample.iter().map(|h| (h.paper_id.as_str(), h)).collect();
    fits.iter()
        .map(|fit| {
            let history = by_id.get(fit.paper_id.as_str()).with_context(|| {
                format!("fit for '{}' has no matching paper in the sample", fit.paper_id)
            })?;
            let counts = history.counts_f64();
            let predicted = fitting::predicted_counts(&counts, fit, &fit_config, cfg.horizon)?;
            Ok(formats::PredictionRow {
                paper_id: fit.paper_id.clone(),
                model: fit.model,
                counts: predicted,
            })
        })
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn evaluate_cmd(cfg: &RunConfig) -> Result<()> {
    prepare_out_dir(cfg)?;
    let sample = read_sample(cfg)?;
    let assignment = read_assignment(cfg)?;
    if !fits_present(cfg, WindowChoice::Full) && !fits_present(cfg, WindowChoice::Train) {
        bail!(
            "no fit results in {}; run 'fit --window full' or 'fit --window train' first",
            cfg.out_dir.display()
        );
    }

    let index_of: BTreeMap<&str, usize> = sample
        .iter()
        .enumerate()
        .map(|(i, h)| (h.paper_id.as_str(), i))
        .collect();
    let class_of: BTreeMap<&str, usize> = assignment
        .labels
        .iter()
        .map(|l| (l.paper_id.as_str(), l.class_index))
        .collect();
    let totals: Vec<f64> = sample.iter().map(|h| h.total() as f64).collect();

    let mut summary = serde_json::Map::new();
    summary.insert("n_sample".into(), sample.len().into());
    summary.insert("horizon".into(), cfg.horizon.into());

    // Class structure block (sizes, early fractions, top-decile odds).
    let years: Vec<usize> = cfg
        .evaluation
        .boxplot_years
        .iter()
        .copied()
        .filter(|&t| t <= cfg.horizon)
        .collect();
    let stats = clustering::class_statistics(&assignment, &sample, &years)?;
    let odds = clustering::top_decile_odds(&assignment, &sample)?;
    summary.insert(
        "classes".into(),
        serde_json::to_value(
            stats
                .iter()
                .zip(&odds)
                .map(|(s, &o)| {
                    serde_json::json!({
                        "class_index": s.class_index,
                        "size": s.size,
                        "mean_early_fraction": s.mean_early_fraction,
                        "top_decile_odds": o,
                    })
                })
                .collect::<Vec<_>>(),
        )?,
    );

    // Goodness of fit on the full window.
    if fits_present(cfg, WindowChoice::Full) {
        let fits = read_fits(cfg, WindowChoice::Full)?;
        let fit_config = cfg.fit_config(cfg.fit.full_window);
        let mut scores = Vec::with_capacity(fits.len());
        for fit in &fits {
            let &i = index_of.get(fit.paper_id.as_str()).with_context(|| {
                format!("fit for '{}' has no matching paper in the sample", fit.paper_id)
            })?;
            let counts = sample[i].counts_f64();
            let predicted = fitting::predicted_counts(&counts, fit, &fit_config, cfg.horizon)?;
            let w = evaluation::weighted_ks(&counts, &predicted, (0, cfg.horizon))?;
            scores.push(WksScore { paper_id: fit.paper_id.clone(), model: fit.model, w });
        }
        let hists = evaluation::pw_histograms(&scores, &assignment, cfg.evaluation.pw_bin_width)?;
        formats::write_pw_csv(create(&out_path(cfg, "fig4_pw.csv"))?, &hists)?;
        formats::write_pw_dat(create(&out_path(cfg, "fig4_pw.dat"))?, &hists)?;

        let mut medians = serde_json::Map::new();
        for model in scores.iter().map(|s| s.model).collect::<std::collections::BTreeSet<_>>() {
            let mut ws: Vec<f64> =
                scores.iter().filter(|s| s.model == model).map(|s| s.w).collect();
            medians.insert(model.to_string(), median(&mut ws).into());
        }
        summary.insert(
            "goodness_of_fit".into(),
            serde_json::json!({ "n_scores": scores.len(), "median_w": medians }),
        );
        println!("evaluate: scored {} full-window fits", scores.len());
    }

    // Forecast quality from the training window.
    if fits_present(cfg, WindowChoice::Train) {
        let fits = read_fits(cfg, WindowChoice::Train)?;
        let rows = prediction_rows(cfg, WindowChoice::Train, &sample, &fits)?;

        // Per model: aligned (actual total, predicted total, class) triples.
        let mut per_model: BTreeMap<ModelKind, Vec<(usize, f64)>> = BTreeMap::new();
        for row in &rows {
            let &i = index_of.get(row.paper_id.as_str()).unwrap();
            per_model.entry(row.model).or_default().push((i, row.counts[cfg.horizon]));
        }

        let mut scatter_blocks = Vec::new();
        let mut mape_rows = Vec::new();
        let mut forecast_summary = serde_json::Map::new();
        let mut naive_under = serde_json::Value::Null;

        for (&model, entries) in &per_model {
            let actual: Vec<f64> = entries.iter().map(|&(i, _)| totals[i]).collect();
            let predicted: Vec<f64> = entries.iter().map(|&(_, p)| p).collect();

            let scatter = evaluation::binned_scatter(&actual, &predicted, cfg.evaluation.scatter_bins)?;

            let classes: Vec<usize> = entries
                .iter()
                .map(|&(i, _)| *class_of.get(sample[i].paper_id.as_str()).unwrap_or(&0))
                .collect();
            let mut class_groups: Vec<(String, Vec<usize>)> = (1..=assignment.k())
                .map(|c| (format!("class_{c}"), Vec::new()))
                .collect();
            for (j, &c) in classes.iter().enumerate() {
                if c >= 1 {
                    class_groups[c - 1].1.push(j);
                }
            }
            let by_class = evaluation::grouped_mape(&actual, &predicted, &class_groups)?;
            let bin_groups = evaluation::log_bin_partition(&actual, cfg.evaluation.mape_bins)?;
            let by_bin = evaluation::grouped_mape(&actual, &predicted, &bin_groups)?;

            let mut class_eps = serde_json::Map::new();
            for e in &by_class {
                class_eps.insert(e.group.clone(), e.epsilon.into());
                mape_rows.push(formats::MapeRow {
                    model,
                    grouping: "by_class".into(),
                    group: e.group.clone(),
                    n: e.n,
                    epsilon: e.epsilon,
                });
            }
            for e in &by_bin {
                mape_rows.push(formats::MapeRow {
                    model,
                    grouping: "by_citation_bin".into(),
                    group: e.group.clone(),
                    n: e.n,
                    epsilon: e.epsilon,
                });
            }

            if model == ModelKind::Naive {
                let under = predicted
                    .iter()
                    .zip(&actual)
                    .filter(|&(p, a)| *p <= *a + 1e-9)
                    .count() as f64
                    / actual.len().max(1) as f64;
                naive_under = under.into();
            }

            forecast_summary.insert(
                model.to_string(),
                serde_json::json!({
                    "n": actual.len(),
                    "overestimation_fraction": scatter.overestimation_fraction,
                    "within_one_sigma_fraction": scatter.within_fraction,
                    "n_eligible_bins": scatter.n_eligible_bins,
                    "mape_by_class": class_eps,
                }),
            );
            scatter_blocks.push((model, scatter));
        }

        formats::write_scatter_csv(create(&out_path(cfg, "fig6_scatter.csv"))?, &scatter_blocks)?;
        formats::write_scatter_dat(create(&out_path(cfg, "fig6_scatter.dat"))?, &scatter_blocks)?;
        formats::write_mape_csv(create(&out_path(cfg, "fig7_mape.csv"))?, &mape_rows)?;
        formats::write_mape_dat(create(&out_path(cfg, "fig7_mape.dat"))?, &mape_rows)?;

        summary.insert("forecast".into(), forecast_summary.into());
        summary.insert("naive_underestimate_fraction".into(), naive_under);
        println!(
            "evaluate: forecast tables for {} models over {} papers",
            per_model.len(),
            sample.len()
        );
    }

    summary.insert("config".into(), serde_json::to_value(cfg)?);
    formats::write_json(
        create(&out_path(cfg, "summary.json"))?,
        &serde_json::Value::Object(summary),
    )?;
    Ok(())
}

pub fn report_cmd(cfg: &RunConfig) -> Result<()> {
    prepare_out_dir(cfg)?;
    let mut report = serde_json::Map::new();
    let mut present = Vec::new();
    let mut missing = Vec::new();

    for (key, file) in [
        ("ingest", "ingest_report.json"),
        ("summary", "summary.json"),
    ] {
        let path = out_path(cfg, file);
        if path.exists() {
            let value: serde_json::Value = formats::read_json(File::open(&path)?)?;
            report.insert(key.into(), value);
            present.push(file);
        } else {
            missing.push(file);
        }
    }

    for window in [WindowChoice::Full, WindowChoice::Train] {
        if fits_present(cfg, window) {
            let fits = read_fits(cfg, window)?;
            let mut by_model = serde_json::Map::new();
            for model in fits.iter().map(|f| f.model).collect::<std::collections::BTreeSet<_>>() {
                let subset: Vec<&FitResult> = fits.iter().filter(|f| f.model == model).collect();
                let converged = subset.iter().filter(|f| f.converged).count();
                let mut objectives: Vec<f64> = subset.iter().map(|f| f.objective).collect();
                by_model.insert(
                    model.to_string(),
                    serde_json::json!({
                        "n": subset.len(),
                        "converged": converged,
                        "median_objective": median(&mut objectives),
                    }),
                );
            }
            let key = format!("fits_{}", window.as_str());
            present.push(if window == WindowChoice::Full { "fits_full.json" } else { "fits_train.json" });
            report.insert(key, by_model.into());
        }
    }

    if report.is_empty() {
        bail!("nothing to report in {}; run the pipeline first", cfg.out_dir.display());
    }
    report.insert("config".into(), serde_json::to_value(cfg)?);
    formats::write_json(
        create(&out_path(cfg, "run_report.json"))?,
        &serde_json::Value::Object(report),
    )?;
    println!(
        "report: merged [{}]{}",
        present.join(", "),
        if missing.is_empty() {
            String::new()
        } else {
            format!("; absent: [{}]", missing.join(", "))
        }
    );
    Ok(())
}
