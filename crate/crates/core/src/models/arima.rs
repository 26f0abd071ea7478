//! Integrated ARMA forecasting on the cumulative series itself.
//!
//! The series is differenced `d` times, an ARMA(p, q) with mean term is
//! estimated on the result by conditional sum of squares (presample errors
//! fixed at zero, the first p differenced values taken as given), and
//! forecasts are produced with future innovations set to zero, then summed
//! back up `d` times. The search runs in partial-autocorrelation coordinates,
//! which keeps every AR iterate causal and every MA iterate invertible;
//! without that constraint short series admit explosive MA fits that drive
//! the conditional sum of squares to zero. Orders are picked by AIC over a
//! small grid: p and q from {0, 1, 2}, d from {1, 2}. A candidate whose AR
//! polynomial has a root on or near the unit circle (modulus <= 1.001) is
//! still discarded as non-causal. If every candidate is discarded, the fit
//! falls back to a random walk with drift, which is always well defined.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, NelderMead};

pub const ORDER_GRID_P: [usize; 3] = [0, 1, 2];
pub const ORDER_GRID_D: [usize; 2] = [1, 2];
pub const ORDER_GRID_Q: [usize; 3] = [0, 1, 2];

/// AR roots must sit strictly outside the circle of this radius.
pub const MIN_AR_ROOT_MODULUS: f64 = 1.001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaParams {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub ar_coeffs: Vec<f64>,
    pub ma_coeffs: Vec<f64>,
    /// Mean of the differenced series; with d = 1 this is the drift per step.
    pub intercept: f64,
    /// Innovation variance estimate from the conditional sum of squares.
    pub sigma2: f64,
    pub aic: f64,
}

/// Applies `d` rounds of first differencing.
pub fn difference(series: &[f64], d: usize) -> Vec<f64> {
    let mut x = series.to_vec();
    for _ in 0..d {
        x = x.windows(2).map(|w| w[1] - w[0]).collect();
    }
    x
}

/// Conditional sum of squares plus one-step predictions of the differenced
/// series. The first max(p, ...) = p values are conditioned on: their
/// predictions equal the observations and their residuals are zero.
fn css_pass(
    x: &[f64],
    p: usize,
    mean: f64,
    ar: &[f64],
    ma: &[f64],
    xhat: &mut Vec<f64>,
    resid: &mut Vec<f64>,
) -> f64 {
    let m = x.len();
    xhat.clear();
    resid.clear();
    xhat.reserve(m);
    resid.reserve(m);
    let mut css = 0.0;
    for t in 0..m {
        if t < p {
            xhat.push(x[t]);
            resid.push(0.0);
            continue;
        }
        let mut pred = mean;
        for (i, &phi) in ar.iter().enumerate() {
            pred += phi * (x[t - 1 - i] - mean);
        }
        for (j, &theta) in ma.iter().enumerate() {
            if t > j {
                pred += theta * resid[t - 1 - j];
            }
        }
        let e = x[t] - pred;
        xhat.push(pred);
        resid.push(e);
        css += e * e;
    }
    css
}

fn mean_of(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Maps unconstrained coordinates to the coefficients of a causal AR
/// polynomial. tanh bounds each partial autocorrelation inside (-1, 1) and
/// the Durbin recursion turns the sequence into coefficients whose roots all
/// lie outside the unit circle, so the optimizer can roam freely without
/// wandering into explosive models.
fn pacf_to_ar(u: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(u.len());
    for (k, &uk) in u.iter().enumerate() {
        let rk = uk.tanh();
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - rk * prev[k - 1 - j];
        }
        phi.push(rk);
    }
    phi
}

/// Invertible MA coefficients from unconstrained coordinates. The polynomial
/// 1 + theta_1 z + ... + theta_q z^q is invertible exactly when
/// 1 - (-theta_1) z - ... is causal, so reuse the AR map and flip signs.
fn ma_from_pacf(u: &[f64]) -> Vec<f64> {
    pacf_to_ar(u).into_iter().map(|c| -c).collect()
}

struct CssFit {
    mean: f64,
    ar: Vec<f64>,
    ma: Vec<f64>,
    css: f64,
    aic: f64,
    n_eff: usize,
    converged: bool,
}

fn fit_css(x: &[f64], p: usize, q: usize) -> Option<CssFit> {
    let m = x.len();
    let n_eff = m.checked_sub(p)?;
    if n_eff < p + q + 2 {
        return None; // not enough residual degrees of freedom
    }

    let (mean, ar, ma, css, converged) = if p == 0 && q == 0 {
        let mean = mean_of(x);
        let css: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
        (mean, Vec::new(), Vec::new(), css, true)
    } else {
        let mut u0 = vec![mean_of(x)];
        for i in 0..p {
            u0.push(0.1 / (i + 1) as f64);
        }
        for j in 0..q {
            u0.push(0.1 / (j + 1) as f64);
        }
        let mut xhat = Vec::new();
        let mut resid = Vec::new();
        let objective = |u: &[f64]| -> f64 {
            let mean = u[0];
            let ar = pacf_to_ar(&u[1..1 + p]);
            let ma = ma_from_pacf(&u[1 + p..1 + p + q]);
            css_pass(x, p, mean, &ar, &ma, &mut xhat, &mut resid)
        };
        let minimum = nelder_mead(objective, &u0, &NelderMead { max_iters: 4000, tol: 1e-8 });
        let mean = minimum.x[0];
        let ar = pacf_to_ar(&minimum.x[1..1 + p]);
        let ma = ma_from_pacf(&minimum.x[1 + p..1 + p + q]);
        (mean, ar, ma, minimum.value, minimum.converged)
    };

    if !css.is_finite() {
        return None;
    }
    let sigma2 = (css / n_eff as f64).max(1e-300);
    // Gaussian CSS log-likelihood up to constants; k counts mean, AR, MA and
    // the innovation variance.
    let k = (p + q + 2) as f64;
    let aic = n_eff as f64 * sigma2.ln() + 2.0 * k;
    Some(CssFit { mean, ar, ma, css, aic, n_eff, converged })
}

/// Roots of a real polynomial c[0] + c[1] z + ... + c[n] z^n with c[n] != 0,
/// by Durand-Kerner iteration.
fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let monic: Vec<Complex64> = coeffs
        .iter()
        .map(|&c| Complex64::new(c / lead, 0.0))
        .collect();
    let eval = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for k in (0..deg).rev() {
            acc = acc * z + monic[k];
        }
        acc
    };

    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (1..=deg).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..500 {
        let mut worst = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                continue;
            }
            let delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            worst = worst.max(delta.norm());
        }
        if worst < 1e-13 {
            break;
        }
    }
    roots
}

/// True when every root of 1 - phi_1 z - ... - phi_p z^p lies strictly
/// outside the unit circle, with a small safety margin.
pub fn ar_is_causal(ar_coeffs: &[f64]) -> bool {
    let mut coeffs = vec![1.0];
    coeffs.extend(ar_coeffs.iter().map(|&c| -c));
    while coeffs.len() > 1 && coeffs.last().unwrap().abs() < 1e-10 {
        coeffs.pop();
    }
    if coeffs.len() == 1 {
        return true;
    }
    polynomial_roots(&coeffs)
        .iter()
        .all(|z| z.norm() > MIN_AR_ROOT_MODULUS)
}

/// Random walk with drift on the once-differenced series. The fallback when
/// no grid candidate is causal; it cannot itself fail.
pub fn random_walk_fallback(series: &[f64]) -> ArimaParams {
    let x = difference(series, 1);
    let mean = mean_of(&x);
    let css: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let n_eff = x.len();
    let sigma2 = (css / n_eff as f64).max(1e-300);
    ArimaParams {
        p: 0,
        d: 1,
        q: 0,
        ar_coeffs: Vec::new(),
        ma_coeffs: Vec::new(),
        intercept: mean,
        sigma2,
        aic: n_eff as f64 * sigma2.ln() + 4.0,
    }
}

fn validate_series(series: &[f64]) -> Result<()> {
    if series.len() < 8 {
        return Err(Error::InvalidInput(format!(
            "need at least 8 observations to fit, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("series contains non-finite values".into()));
    }
    Ok(())
}

pub(crate) struct ArimaFit {
    pub params: ArimaParams,
    pub converged: bool,
}

pub(crate) fn fit_internal(series: &[f64], orders: Option<(usize, usize, usize)>) -> Result<ArimaFit> {
    validate_series(series)?;

    let candidates: Vec<(usize, usize, usize)> = match orders {
        Some((p, d, q)) => {
            if d == 0 || d > 2 || p > 4 || q > 4 {
                return Err(Error::InvalidInput(format!(
                    "unsupported orders ({p}, {d}, {q}); d must be 1 or 2, p and q at most 4"
                )));
            }
            vec![(p, d, q)]
        }
        None => {
            let mut grid = Vec::new();
            for &d in &ORDER_GRID_D {
                for &p in &ORDER_GRID_P {
                    for &q in &ORDER_GRID_Q {
                        grid.push((p, d, q));
                    }
                }
            }
            grid
        }
    };

    let mut best: Option<(ArimaFit, f64)> = None;
    for (p, d, q) in candidates {
        if series.len() < d + 1 {
            continue;
        }
        let x = difference(series, d);
        let Some(fit) = fit_css(&x, p, q) else { continue };
        if fit.aic.is_nan() || !ar_is_causal(&fit.ar) {
            continue;
        }
        let candidate = ArimaFit {
            params: ArimaParams {
                p,
                d,
                q,
                ar_coeffs: fit.ar.clone(),
                ma_coeffs: fit.ma.clone(),
                intercept: fit.mean,
                sigma2: (fit.css / fit.n_eff as f64).max(1e-300),
                aic: fit.aic,
            },
            converged: fit.converged,
        };
        let better = match &best {
            None => true,
            Some((_, best_aic)) => fit.aic < *best_aic,
        };
        if better {
            best = Some((candidate, fit.aic));
        }
    }

    match best {
        Some((fit, _)) => Ok(fit),
        None => Ok(ArimaFit { params: random_walk_fallback(series), converged: true }),
    }
}

/// In-sample one-step-ahead predictions on the original (undifferenced)
/// scale. The first d + p values are a warmup where the prediction is taken
/// to be the observation itself.
pub fn fitted_values(params: &ArimaParams, series: &[f64]) -> Vec<f64> {
    let n = series.len();
    let d = params.d;
    let x = difference(series, d);
    let mut xhat = Vec::new();
    let mut resid = Vec::new();
    css_pass(
        &x,
        params.p,
        params.intercept,
        &params.ar_coeffs,
        &params.ma_coeffs,
        &mut xhat,
        &mut resid,
    );

    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        if t < d + params.p {
            out.push(series[t]);
        } else {
            out.push(xhat[t - d] + undiff_history_term(series, t, d));
        }
    }
    out
}

/// The part of y_t recoverable from past observations alone:
/// y_t = x_t + sum_{j=1..d} (-1)^(j+1) C(d, j) y_{t-j}.
fn undiff_history_term(history: &[f64], t: usize, d: usize) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0f64;
    for j in 1..=d {
        binom = binom * (d - j + 1) as f64 / j as f64;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        acc += sign * binom * history[t - j];
    }
    acc
}

/// Forecasts `steps_ahead` values past the end of the series. Future
/// innovations are zero; the differenced forecasts are integrated back and
/// then clamped so the result never decreases (cumulative counts cannot
/// fall below the last observed value).
pub fn forecast(params: &ArimaParams, series: &[f64], steps_ahead: usize) -> Vec<f64> {
    if steps_ahead == 0 {
        return Vec::new();
    }
    let d = params.d;
    let mut x = difference(series, d);
    let mut xhat = Vec::new();
    let mut resid = Vec::new();
    css_pass(
        &x,
        params.p,
        params.intercept,
        &params.ar_coeffs,
        &params.ma_coeffs,
        &mut xhat,
        &mut resid,
    );

    let m = x.len();
    for h in 0..steps_ahead {
        let t = m + h;
        let mut pred = params.intercept;
        for (i, &phi) in params.ar_coeffs.iter().enumerate() {
            pred += phi * (x[t - 1 - i] - params.intercept);
        }
        for (j, &theta) in params.ma_coeffs.iter().enumerate() {
            let idx = t - 1 - j;
            if idx < m {
                pred += theta * resid[idx];
            } // future innovations are zero
        }
        x.push(pred);
        resid.push(0.0);
    }

    let mut y = series.to_vec();
    for h in 0..steps_ahead {
        let t = series.len() + h;
        let next = x[m + h] + undiff_history_term(&y, t, d);
        y.push(next);
    }

    let mut out = y[series.len()..].to_vec();
    let mut floor = *series.last().unwrap();
    for v in out.iter_mut() {
        if *v < floor {
            *v = floor;
        }
        floor = *v;
    }
    out
}

/// Fits (with AIC order selection unless `orders` pins them) and forecasts in
/// one call.
pub fn arima_fit_forecast(
    series: &[f64],
    orders: Option<(usize, usize, usize)>,
    steps_ahead: usize,
) -> Result<(ArimaParams, Vec<f64>)> {
    let fit = fit_internal(series, orders)?;
    let fc = forecast(&fit.params, series, steps_ahead);
    Ok((fit.params, fc))
}
