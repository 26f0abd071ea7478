//! Fitting models to citation histories.
//!
//! All models minimize least squares on the cumulative counts over an
//! integer-year window. The curve models (lognormal and epidemic) are
//! non-convex, so each fit runs Nelder-Mead from several starting points
//! drawn from small per-parameter tables, crossed at random; positive
//! parameters are searched in log space so the simplex can never wander into
//! invalid territory. The start draw is seeded from the run seed, the paper
//! id, and the model name, which makes every fit reproducible in isolation
//! and independent of thread scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::citation_data::CitationHistory;
use crate::error::{Error, Result};
use crate::models::{arima, naive, sir, wsb};
use crate::models::{ModelKind, ModelParams, NaiveParams, SirParams, WsbParams};
use crate::optimize::{nelder_mead, NelderMead};
use crate::seed;

pub const DEFAULT_N_STARTS: usize = 16;

pub const WSB_LAMBDA_STARTS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
pub const WSB_SIGMA_STARTS: [f64; 3] = [0.5, 1.0, 2.0];
pub const SIR_S0_MULTIPLIERS: [f64; 4] = [1.0, 2.0, 5.0, 10.0];
pub const SIR_BETA_STARTS: [f64; 3] = [0.5, 1.0, 2.0];
pub const SIR_GAMMA_STARTS: [f64; 3] = [0.1, 0.5, 1.0];

fn wsb_mu_starts() -> [f64; 4] {
    [0.0, 3.0f64.ln(), 8.0f64.ln(), 20.0f64.ln()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Integer-year fit window, inclusive on both ends. Starts at 1 or
    /// later: year 0 is the publication year and carries no curve signal.
    pub window: (usize, usize),
    pub n_starts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Shared reference count for the lognormal model.
    pub wsb_m: f64,
    /// RK4 step bound for the epidemic model, years.
    pub sir_step: f64,
    /// Pin ARIMA orders instead of selecting by AIC.
    pub arima_orders: Option<(usize, usize, usize)>,
}

impl FitConfig {
    pub fn new(window: (usize, usize)) -> Self {
        FitConfig {
            window,
            n_starts: DEFAULT_N_STARTS,
            max_iters: 2000,
            tol: 1e-8,
            seed: 42,
            wsb_m: wsb::DEFAULT_M,
            sir_step: sir::DEFAULT_STEP_YEARS,
            arima_orders: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (t0, t1) = self.window;
        if t0 < 1 || t0 > t1 {
            return Err(Error::InvalidInput(format!(
                "fit window must satisfy 1 <= start <= end, got ({t0}, {t1})"
            )));
        }
        if self.n_starts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidInput("n_starts and max_iters must be positive".into()));
        }
        let bad = |v: f64| v.is_nan() || v <= 0.0;
        if bad(self.tol) || bad(self.wsb_m) || bad(self.sir_step) {
            return Err(Error::InvalidInput("tol, wsb_m and sir_step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub paper_id: String,
    pub model: ModelKind,
    pub params: ModelParams,
    /// Sum of squared errors over the fit window.
    pub objective: f64,
    pub converged: bool,
    pub n_evals: usize,
}

fn per_fit_rng(config: &FitConfig, paper_id: &str, model: ModelKind) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed::mix(&[
        config.seed,
        seed::fnv1a(paper_id.as_bytes()),
        seed::fnv1a(model.as_str().as_bytes()),
    ]))
}

/// Random crossings of the per-axis start tables, deduplicated, in draw
/// order. Always non-empty.
fn draw_starts(tables: &[&[f64]], n_starts: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut seen: Vec<Vec<usize>> = Vec::new();
    let mut starts = Vec::new();
    for _ in 0..n_starts {
        let combo: Vec<usize> = tables.iter().map(|t| rng.gen_range(0..t.len())).collect();
        if seen.contains(&combo) {
            continue;
        }
        starts.push(combo.iter().zip(tables).map(|(&i, t)| t[i]).collect());
        seen.push(combo);
    }
    starts
}

struct MultistartOutcome {
    x: Vec<f64>,
    value: f64,
    converged: bool,
    n_evals: usize,
}

fn multistart<F>(mut objective: F, starts: &[Vec<f64>], opts: &NelderMead) -> MultistartOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let mut best: Option<MultistartOutcome> = None;
    let mut total_evals = 0usize;
    for start in starts {
        let m = nelder_mead(&mut objective, start, opts);
        total_evals += m.fn_evals;
        let better = match &best {
            None => true,
            Some(b) => m.value < b.value,
        };
        if better {
            best = Some(MultistartOutcome {
                x: m.x,
                value: m.value,
                converged: m.converged,
                n_evals: 0,
            });
        }
    }
    let mut out = best.expect("at least one start");
    out.n_evals = total_evals;
    out
}

/// Fits one model to a real-valued cumulative series indexed by integer
/// year. `counts[t]` is the cumulative count at year t; the slice must cover
/// the fit window.
pub fn fit_series(
    paper_id: &str,
    counts: &[f64],
    model: ModelKind,
    config: &FitConfig,
) -> Result<FitResult> {
    config.validate()?;
    let (t0, t1) = config.window;
    if counts.len() <= t1 {
        return Err(Error::InvalidInput(format!(
            "history of '{paper_id}' has {} years, window ends at {t1}",
            counts.len().saturating_sub(1)
        )));
    }
    if counts.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "history of '{paper_id}' contains negative or non-finite counts"
        )));
    }

    let opts = NelderMead { max_iters: config.max_iters, tol: config.tol };
    let window_counts = &counts[t0..=t1];

    match model {
        ModelKind::Wsb => {
            let m = config.wsb_m;
            let ln_t: Vec<f64> = (t0..=t1).map(|t| (t as f64).ln()).collect();
            let objective = |u: &[f64]| -> f64 {
                let lambda = u[0].exp();
                let inv_sigma = (-u[2]).exp();
                if !lambda.is_finite() || !inv_sigma.is_finite() {
                    return f64::INFINITY;
                }
                let mu = u[1];
                let mut sse = 0.0;
                for (lt, &c) in ln_t.iter().zip(window_counts) {
                    let z = (lt - mu) * inv_sigma;
                    let pred = m * ((lambda * wsb::normal_cdf(z)).exp() - 1.0);
                    let e = c - pred;
                    sse += e * e;
                }
                sse
            };
            let mut rng = per_fit_rng(config, paper_id, model);
            let mu_table = wsb_mu_starts();
            let raw = draw_starts(
                &[&WSB_LAMBDA_STARTS, &mu_table, &WSB_SIGMA_STARTS],
                config.n_starts,
                &mut rng,
            );
            let starts: Vec<Vec<f64>> = raw
                .iter()
                .map(|s| vec![s[0].ln(), s[1], s[2].ln()])
                .collect();
            let out = multistart(objective, &starts, &opts);
            let params = WsbParams {
                lambda: out.x[0].exp(),
                mu: out.x[1],
                sigma: out.x[2].exp(),
                m,
            };
            Ok(FitResult {
                paper_id: paper_id.to_string(),
                model,
                params: ModelParams::Wsb(params),
                objective: out.value,
                converged: out.converged,
                n_evals: out.n_evals,
            })
        }
        ModelKind::Sir => {
            let step = config.sir_step;
            let mut scratch: Vec<f64> = Vec::with_capacity(t1 + 1);
            let objective = move |u: &[f64]| -> f64 {
                let s0 = u[0].exp();
                let beta = u[1].exp();
                let gamma = u[2].exp();
                if !(s0.is_finite() && beta.is_finite() && gamma.is_finite()) || s0 > 1e12 {
                    return f64::INFINITY;
                }
                let p = SirParams { s0, beta, gamma, i0: sir::DEFAULT_I0 };
                if sir::susceptibles_at_years_into(&p, t1, step, &mut scratch).is_err() {
                    return f64::INFINITY;
                }
                let mut sse = 0.0;
                for t in t0..=t1 {
                    let pred = s0 - scratch[t];
                    let e = counts[t] - pred;
                    sse += e * e;
                }
                sse
            };
            let c_end = counts[t1].max(1.0);
            let s0_table: Vec<f64> = SIR_S0_MULTIPLIERS.iter().map(|m| m * c_end).collect();
            let mut rng = per_fit_rng(config, paper_id, model);
            let raw = draw_starts(
                &[&s0_table, &SIR_BETA_STARTS, &SIR_GAMMA_STARTS],
                config.n_starts,
                &mut rng,
            );
            let starts: Vec<Vec<f64>> = raw
                .iter()
                .map(|s| vec![s[0].ln(), s[1].ln(), s[2].ln()])
                .collect();
            let out = multistart(objective, &starts, &opts);
            let params = SirParams {
                s0: out.x[0].exp(),
                beta: out.x[1].exp(),
                gamma: out.x[2].exp(),
                i0: sir::DEFAULT_I0,
            };
            Ok(FitResult {
                paper_id: paper_id.to_string(),
                model,
                params: ModelParams::Sir(params),
                objective: out.value,
                converged: out.converged,
                n_evals: out.n_evals,
            })
        }
        ModelKind::Arima => {
            let fit = arima::fit_internal(window_counts, config.arima_orders)?;
            let fitted = arima::fitted_values(&fit.params, window_counts);
            let objective: f64 = window_counts
                .iter()
                .zip(&fitted)
                .map(|(c, f)| (c - f) * (c - f))
                .sum();
            Ok(FitResult {
                paper_id: paper_id.to_string(),
                model,
                params: ModelParams::Arima(fit.params),
                objective,
                converged: fit.converged,
                n_evals: 0,
            })
        }
        ModelKind::Naive => {
            let c_train = counts[t1];
            let objective: f64 = window_counts.iter().map(|c| (c - c_train) * (c - c_train)).sum();
            Ok(FitResult {
                paper_id: paper_id.to_string(),
                model,
                params: ModelParams::Naive(NaiveParams { c_train: c_train.round() as u64 }),
                objective,
                converged: true,
                n_evals: 1,
            })
        }
    }
}

/// Fits one model to an integer-count history.
pub fn fit_model(history: &CitationHistory, model: ModelKind, config: &FitConfig) -> Result<FitResult> {
    fit_series(&history.paper_id, &history.counts_f64(), model, config)
}

/// Fits every (paper, model) pair, papers outermost, in parallel. Output
/// order is deterministic: the same order the pairs were formed in.
pub fn fit_cohort(
    histories: &[CitationHistory],
    models: &[ModelKind],
    config: &FitConfig,
) -> Result<Vec<FitResult>> {
    config.validate()?;
    if histories.is_empty() || models.is_empty() {
        return Err(Error::InvalidInput("nothing to fit".into()));
    }
    let pairs: Vec<(usize, ModelKind)> = histories
        .iter()
        .enumerate()
        .flat_map(|(i, _)| models.iter().map(move |&m| (i, m)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(i, model)| fit_model(&histories[i], model, config))
        .collect()
}

/// Evaluates a fitted model on the full integer-year grid 0..=horizon.
///
/// Curve models are evaluated from their closed form or integrated
/// trajectory. The ARIMA model reproduces its one-step-ahead fitted values
/// inside the fit window (actual values fill the warmup prefix before it)
/// and forecasts with zero future innovations beyond it. The naive model is
/// constant everywhere.
pub fn predicted_counts(
    counts: &[f64],
    result: &FitResult,
    config: &FitConfig,
    horizon: usize,
) -> Result<Vec<f64>> {
    let (t0, t1) = config.window;
    if horizon < t1 {
        return Err(Error::InvalidInput(format!(
            "horizon {horizon} shorter than fit window end {t1}"
        )));
    }
    if counts.len() <= t1 {
        return Err(Error::InvalidInput("history does not cover the fit window".into()));
    }
    match &result.params {
        ModelParams::Wsb(p) => {
            let grid: Vec<f64> = (0..=horizon).map(|t| t as f64).collect();
            wsb::wsb_counts(p, &grid)
        }
        ModelParams::Sir(p) => sir::sir_counts_at_years(p, horizon, config.sir_step),
        ModelParams::Naive(p) => Ok(naive::naive_counts(p, horizon + 1)),
        ModelParams::Arima(p) => {
            let train = &counts[t0..=t1];
            let fitted = arima::fitted_values(p, train);
            let forecast = arima::forecast(p, train, horizon - t1);
            let mut out = Vec::with_capacity(horizon + 1);
            out.extend_from_slice(&counts[..t0]);
            out.extend_from_slice(&fitted);
            out.extend_from_slice(&forecast);
            debug_assert_eq!(out.len(), horizon + 1);
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_wsb_series(p: &WsbParams, horizon: usize) -> Vec<f64> {
        let grid: Vec<f64> = (0..=horizon).map(|t| t as f64).collect();
        wsb::wsb_counts(p, &grid).unwrap()
    }

    fn full_config() -> FitConfig {
        FitConfig { seed: 7, ..FitConfig::new((1, 50)) }
    }

    #[test]
    fn wsb_fit_recovers_exact_curve() {
        let truth = WsbParams::new(1.8, 1.0, 0.8, 30.0).unwrap();
        let counts = exact_wsb_series(&truth, 50);
        let fit = fit_series("exact", &counts, ModelKind::Wsb, &full_config()).unwrap();
        let ModelParams::Wsb(got) = &fit.params else { panic!() };
        assert!(fit.converged);
        assert!((got.lambda - truth.lambda).abs() / truth.lambda < 1e-3, "lambda {}", got.lambda);
        assert!((got.mu - truth.mu).abs() / truth.mu.abs() < 1e-3, "mu {}", got.mu);
        assert!((got.sigma - truth.sigma).abs() / truth.sigma < 1e-3, "sigma {}", got.sigma);
        assert!(fit.objective < 1e-8, "objective {}", fit.objective);
    }

    #[test]
    fn wsb_fit_survives_rounding_to_integers() {
        let truth = WsbParams::new(2.0, 0.8, 0.9, 30.0).unwrap();
        let counts: Vec<f64> = exact_wsb_series(&truth, 50).iter().map(|c| c.round()).collect();
        let fit = fit_series("rounded", &counts, ModelKind::Wsb, &full_config()).unwrap();
        let ModelParams::Wsb(got) = &fit.params else { panic!() };
        for (name, est, want) in [
            ("lambda", got.lambda, truth.lambda),
            ("mu", got.mu, truth.mu),
            ("sigma", got.sigma, truth.sigma),
        ] {
            assert!(
                (est - want).abs() / want.abs() < 0.02,
                "{name}: {est} vs {want}"
            );
        }
    }

    #[test]
    fn sir_fit_recovers_exact_curve() {
        let truth = SirParams::new(500.0, 0.35, 0.07).unwrap();
        let counts = sir::sir_counts_at_years(&truth, 50, 0.01).unwrap();
        let fit = fit_series("sir_exact", &counts, ModelKind::Sir, &full_config()).unwrap();
        let ModelParams::Sir(got) = &fit.params else { panic!() };
        for (name, est, want) in [
            ("s0", got.s0, truth.s0),
            ("beta", got.beta, truth.beta),
            ("gamma", got.gamma, truth.gamma),
        ] {
            assert!((est - want).abs() / want < 0.01, "{name}: {est} vs {want}");
        }
        assert_eq!(got.i0, 1.0);
    }

    #[test]
    fn more_starts_never_fit_worse() {
        // A slow, late-rising series with an awkward shape.
        let truth = WsbParams::new(3.5, 2.6, 0.4, 30.0).unwrap();
        let counts: Vec<f64> = exact_wsb_series(&truth, 50).iter().map(|c| c.round()).collect();
        let one = FitConfig { n_starts: 1, ..full_config() };
        let many = FitConfig { n_starts: 24, ..full_config() };
        let f1 = fit_series("hard", &counts, ModelKind::Wsb, &one).unwrap();
        let f24 = fit_series("hard", &counts, ModelKind::Wsb, &many).unwrap();
        assert!(f24.objective <= f1.objective + 1e-9);
    }

    #[test]
    fn naive_fit_takes_window_end_count() {
        let counts: Vec<f64> = (0..=20).map(|t| (t * 2) as f64).collect();
        let config = FitConfig::new((1, 10));
        let fit = fit_series("n", &counts, ModelKind::Naive, &config).unwrap();
        let ModelParams::Naive(p) = &fit.params else { panic!() };
        assert_eq!(p.c_train, 20);
        let pred = predicted_counts(&counts, &fit, &config, 20).unwrap();
        assert!(pred.iter().all(|&v| v == 20.0));
    }

    #[test]
    fn arima_fit_produces_full_grid_predictions() {
        let counts: Vec<f64> = (0..=50).map(|t| (t as f64).powf(1.3) * 3.0).collect();
        let config = FitConfig::new((1, 10));
        let fit = fit_series("a", &counts, ModelKind::Arima, &config).unwrap();
        assert!(matches!(fit.params, ModelParams::Arima(_)));
        assert!(fit.objective.is_finite());
        let pred = predicted_counts(&counts, &fit, &config, 50).unwrap();
        assert_eq!(pred.len(), 51);
        assert_eq!(pred[0], counts[0]); // warmup prefix is the actual series
        // Forecast region never decreases.
        for w in pred[10..].windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
    }

    #[test]
    fn same_seed_gives_bitwise_identical_fits() {
        let truth = WsbParams::new(1.2, 1.4, 1.1, 30.0).unwrap();
        let counts: Vec<f64> = exact_wsb_series(&truth, 50).iter().map(|c| c.round()).collect();
        let a = fit_series("p1", &counts, ModelKind::Wsb, &full_config()).unwrap();
        let b = fit_series("p1", &counts, ModelKind::Wsb, &full_config()).unwrap();
        assert_eq!(a, b);
        let other_paper = fit_series("p2", &counts, ModelKind::Wsb, &full_config()).unwrap();
        // Different paper id draws different starts; the answer is close but
        // the eval trace need not match.
        let ModelParams::Wsb(pa) = &a.params else { panic!() };
        let ModelParams::Wsb(pb) = &other_paper.params else { panic!() };
        assert!((pa.lambda - pb.lambda).abs() < 0.05);
    }

    #[test]
    fn cohort_is_paper_major_and_complete() {
        let truth = WsbParams::new(1.5, 1.0, 0.9, 30.0).unwrap();
        let counts: Vec<u64> = exact_wsb_series(&truth, 50).iter().map(|c| c.round() as u64).collect();
        let histories: Vec<CitationHistory> = (0..3)
            .map(|i| CitationHistory { paper_id: format!("p{i}"), counts: counts.clone() })
            .collect();
        let models = [ModelKind::Naive, ModelKind::Wsb];
        let config = FitConfig { n_starts: 4, ..full_config() };
        let results = fit_cohort(&histories, &models, &config).unwrap();
        assert_eq!(results.len(), 6);
        assert_eq!(results[0].paper_id, "p0");
        assert_eq!(results[0].model, ModelKind::Naive);
        assert_eq!(results[1].model, ModelKind::Wsb);
        assert_eq!(results[4].paper_id, "p2");
    }

    #[test]
    fn window_validation_catches_misuse() {
        let counts = vec![0.0; 20];
        let bad = FitConfig::new((0, 10));
        assert!(fit_series("x", &counts, ModelKind::Naive, &bad).is_err());
        let beyond = FitConfig::new((1, 25));
        assert!(fit_series("x", &counts, ModelKind::Naive, &beyond).is_err());
        let config = FitConfig::new((1, 10));
        let fit = fit_series("x", &counts, ModelKind::Naive, &config).unwrap();
        assert!(predicted_counts(&counts, &fit, &config, 5).is_err());
    }
}
