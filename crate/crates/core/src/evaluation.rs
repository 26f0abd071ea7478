//! Goodness-of-fit and forecast-error measures.
//!
//! Fit quality uses a weighted Kolmogorov-Smirnov distance on cumulative
//! curves: the raw gap |c(t) - chat(t)| at each integer year is divided by
//! sqrt((1 + c(t)) * (c(T) - c(t) + 1)), which inflates tolerance where the
//! curve is near its floor or ceiling and tightens it mid-rise, then the
//! maximum over the window is taken. Forecast error uses the mean absolute
//! percentage error over a group of papers at a single evaluation year.
//! Binned scatter summaries compare predicted against actual totals across
//! the citation volume spectrum on a log grid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clustering::ClassAssignment;
use crate::error::{Error, Result};
use crate::models::ModelKind;

/// Weighted KS distance between an actual cumulative series and a predicted
/// one over integer years `window.0..=window.1`. Slices are indexed by year;
/// the normalization anchors at the window's right edge.
pub fn weighted_ks(actual: &[f64], predicted: &[f64], window: (usize, usize)) -> Result<f64> {
    let (t0, t1) = window;
    if t0 > t1 {
        return Err(Error::InvalidInput(format!("window ({t0}, {t1}) is reversed")));
    }
    if actual.len() <= t1 || predicted.len() <= t1 {
        return Err(Error::InvalidInput(format!(
            "window end {t1} outside series of lengths {} and {}",
            actual.len(),
            predicted.len()
        )));
    }
    let c_end = actual[t1];
    if !c_end.is_finite() || actual[t0..=t1].iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Domain("actual counts must be finite and non-negative".into()));
    }
    let mut w = 0.0f64;
    for t in t0..=t1 {
        let p = predicted[t];
        if !p.is_finite() {
            return Err(Error::Domain(format!("predicted count at t = {t} is not finite")));
        }
        let weight = ((1.0 + actual[t]) * (c_end - actual[t] + 1.0)).sqrt();
        w = w.max((actual[t] - p).abs() / weight);
    }
    Ok(w)
}

/// One scored fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WksScore {
    pub paper_id: String,
    pub model: ModelKind,
    pub w: f64,
}

/// Density histogram of w values for one (class, model) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwHistogram {
    pub class_index: usize,
    pub model: ModelKind,
    pub bin_width: f64,
    pub n: usize,
    pub counts: Vec<usize>,
    /// Normalized so that sum(densities) * bin_width = 1.
    pub densities: Vec<f64>,
}

/// Groups scores by (class, model) and histograms each group. Papers
/// missing from the assignment are an error; fits and clustering must come
/// from the same sample.
pub fn pw_histograms(
    scores: &[WksScore],
    assignment: &ClassAssignment,
    bin_width: f64,
) -> Result<Vec<PwHistogram>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidInput(format!("bin width must be positive, got {bin_width}")));
    }
    let class_of: BTreeMap<&str, usize> = assignment
        .labels
        .iter()
        .map(|l| (l.paper_id.as_str(), l.class_index))
        .collect();

    let mut groups: BTreeMap<(usize, ModelKind), Vec<f64>> = BTreeMap::new();
    for s in scores {
        let Some(&class) = class_of.get(s.paper_id.as_str()) else {
            return Err(Error::InvalidInput(format!(
                "paper '{}' has a score but no class assignment",
                s.paper_id
            )));
        };
        if !(s.w >= 0.0 && s.w.is_finite()) {
            return Err(Error::Domain(format!("score for '{}' is {}", s.paper_id, s.w)));
        }
        groups.entry((class, s.model)).or_default().push(s.w);
    }

    let mut out = Vec::with_capacity(groups.len());
    for ((class_index, model), ws) in groups {
        let max_w = ws.iter().cloned().fold(0.0f64, f64::max);
        let n_bins = ((max_w / bin_width).floor() as usize + 1).max(1);
        let mut counts = vec![0usize; n_bins];
        for &w in &ws {
            let bin = ((w / bin_width).floor() as usize).min(n_bins - 1);
            counts[bin] += 1;
        }
        let n = ws.len();
        let densities = counts
            .iter()
            .map(|&c| c as f64 / (n as f64 * bin_width))
            .collect();
        out.push(PwHistogram { class_index, model, bin_width, n, counts, densities });
    }
    Ok(out)
}

/// Mean absolute percentage error over a set of (actual, predicted) pairs.
/// Every actual must be strictly positive.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.is_empty() || actual.len() != predicted.len() {
        return Err(Error::InvalidInput(format!(
            "need matching non-empty slices, got {} and {}",
            actual.len(),
            predicted.len()
        )));
    }
    let mut acc = 0.0;
    for (&a, &p) in actual.iter().zip(predicted) {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!(
                "percentage error undefined for actual value {a}"
            )));
        }
        if !p.is_finite() {
            return Err(Error::Domain("predicted value is not finite".into()));
        }
        acc += (a - p).abs() / a;
    }
    Ok(acc / actual.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapeEntry {
    pub group: String,
    pub n: usize,
    pub epsilon: f64,
}

/// MAPE within each index group. Groups index into the full slices; an
/// out-of-range index is an error, an empty group is skipped.
pub fn grouped_mape(
    actual: &[f64],
    predicted: &[f64],
    groups: &[(String, Vec<usize>)],
) -> Result<Vec<MapeEntry>> {
    let mut out = Vec::with_capacity(groups.len());
    for (name, idx) in groups {
        if idx.is_empty() {
            continue;
        }
        let mut a = Vec::with_capacity(idx.len());
        let mut p = Vec::with_capacity(idx.len());
        for &i in idx {
            if i >= actual.len() || i >= predicted.len() {
                return Err(Error::InvalidInput(format!("group '{name}' index {i} out of range")));
            }
            a.push(actual[i]);
            p.push(predicted[i]);
        }
        out.push(MapeEntry { group: name.clone(), n: idx.len(), epsilon: mape(&a, &p)? });
    }
    Ok(out)
}

/// Index partition by class, in class order. Indices refer to positions in
/// the assignment's label list.
pub fn class_partition(assignment: &ClassAssignment) -> Vec<(String, Vec<usize>)> {
    let k = assignment.k();
    let mut groups: Vec<(String, Vec<usize>)> = (1..=k)
        .map(|c| (format!("class_{c}"), Vec::new()))
        .collect();
    for (i, l) in assignment.labels.iter().enumerate() {
        groups[l.class_index - 1].1.push(i);
    }
    groups
}

/// Partitions indices into logarithmic bins of `values`. All values must be
/// strictly positive. Every index lands in exactly one group; empty bins are
/// dropped.
pub fn log_bin_partition(values: &[f64], n_bins: usize) -> Result<Vec<(String, Vec<usize>)>> {
    let edges = log_edges(values, n_bins)?;
    let mut groups: Vec<(String, Vec<usize>)> = edges
        .windows(2)
        .map(|e| (format!("({:.6},{:.6}]", e[0], e[1]), Vec::new()))
        .collect();
    for (i, &v) in values.iter().enumerate() {
        groups[log_bin_of(v, &edges)].1.push(i);
    }
    Ok(groups.into_iter().filter(|(_, idx)| !idx.is_empty()).collect())
}

fn log_edges(values: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    if n_bins == 0 || values.is_empty() {
        return Err(Error::InvalidInput("need at least one bin and one value".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("log bins need positive values, got {v}")));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        return Ok(vec![lo, hi]);
    }
    let ratio = (hi / lo).powf(1.0 / n_bins as f64);
    let mut edges: Vec<f64> = (0..=n_bins).map(|j| lo * ratio.powi(j as i32)).collect();
    edges[0] = lo;
    *edges.last_mut().unwrap() = hi;
    Ok(edges)
}

fn log_bin_of(v: f64, edges: &[f64]) -> usize {
    let n = edges.len() - 1;
    if n == 0 {
        return 0;
    }
    let lo = edges[0];
    let hi = edges[n];
    if v >= hi {
        return n - 1;
    }
    let frac = (v.ln() - lo.ln()) / (hi.ln() - lo.ln());
    ((frac * n as f64).floor() as usize).min(n - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterBin {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    /// Mean of the actual values that fell in this bin.
    pub bin_center: f64,
    pub mean_pred: f64,
    /// Population standard deviation of the predictions in the bin.
    pub std_pred: f64,
    pub within_one_sigma: bool,
    /// Bins with fewer than 3 members are reported but flagged, and excluded
    /// from the within-one-sigma headline fraction.
    pub low_n: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedScatter {
    pub bins: Vec<ScatterBin>,
    /// Fraction of papers whose prediction strictly exceeds the actual.
    pub overestimation_fraction: f64,
    /// Among bins with n >= 3, the fraction whose mean prediction sits
    /// within one standard deviation of the bin center.
    pub within_fraction: f64,
    pub n_eligible_bins: usize,
}

/// Bins papers by actual value on a log grid and summarizes predictions per
/// bin. With a perfect predictor every bin's mean prediction equals its
/// center exactly.
pub fn binned_scatter(actual: &[f64], predicted: &[f64], n_bins: usize) -> Result<BinnedScatter> {
    if actual.is_empty() || actual.len() != predicted.len() {
        return Err(Error::InvalidInput(format!(
            "need matching non-empty slices, got {} and {}",
            actual.len(),
            predicted.len()
        )));
    }
    for &p in predicted {
        if !p.is_finite() {
            return Err(Error::Domain("predicted value is not finite".into()));
        }
    }
    let edges = log_edges(actual, n_bins)?;
    let n_edges_bins = edges.len() - 1;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_edges_bins.max(1)];
    for (i, &a) in actual.iter().enumerate() {
        members[log_bin_of(a, &edges)].push(i);
    }

    let mut bins = Vec::new();
    let mut eligible = 0usize;
    let mut within = 0usize;
    for (j, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let n = idx.len();
        let bin_center = idx.iter().map(|&i| actual[i]).sum::<f64>() / n as f64;
        let mean_pred = idx.iter().map(|&i| predicted[i]).sum::<f64>() / n as f64;
        let var = idx
            .iter()
            .map(|&i| (predicted[i] - mean_pred) * (predicted[i] - mean_pred))
            .sum::<f64>()
            / n as f64;
        let std_pred = var.sqrt();
        let within_one_sigma = (mean_pred - bin_center).abs() <= std_pred;
        let low_n = n < 3;
        if !low_n {
            eligible += 1;
            if within_one_sigma {
                within += 1;
            }
        }
        bins.push(ScatterBin {
            lo: edges[j.min(edges.len() - 2)],
            hi: edges[(j + 1).min(edges.len() - 1)],
            n,
            bin_center,
            mean_pred,
            std_pred,
            within_one_sigma,
            low_n,
        });
    }

    let over = predicted
        .iter()
        .zip(actual)
        .filter(|(p, a)| p > a)
        .count() as f64
        / actual.len() as f64;
    let within_fraction = if eligible > 0 { within as f64 / eligible as f64 } else { 0.0 };

    Ok(BinnedScatter {
        bins,
        overestimation_fraction: over,
        within_fraction,
        n_eligible_bins: eligible,
    })
}
