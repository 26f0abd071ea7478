//! File formats for pipeline artifacts.
//!
//! CSV files carry the row-oriented artifacts (assignments, fits, figures);
//! JSON carries nested ones (histories, centroids, full fit parameters).
//! Alongside each figure CSV a plain whitespace table (.dat) is written for
//! gnuplot, with `#` comment headers and blank-line-separated blocks, one
//! block per series.
//!
//! Writers take any `io::Write`; readers any `io::Read`. Numbers are written
//! with Rust's shortest round-trip float formatting, so rewriting the same
//! data yields byte-identical files.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::citation_data::{CitationEvent, CitationHistory, PaperRecord};
use crate::clustering::{ClassAssignment, ClassLabel, ClassSummary};
use crate::error::{Error, Result};
use crate::evaluation::{BinnedScatter, PwHistogram};
use crate::fitting::FitResult;
use crate::models::ModelKind;
use crate::synth::TruthRecord;

/// Fixed number of generic parameter columns in fits.csv; wide enough for
/// the largest model (ARIMA with p = q = 2 uses all eight).
pub const FITS_CSV_PARAM_COLUMNS: usize = 8;

pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<R: Read, T: DeserializeOwned>(r: R) -> Result<T> {
    Ok(serde_json::from_reader(r)?)
}

pub fn write_histories_json<W: Write>(w: W, histories: &[CitationHistory]) -> Result<()> {
    write_json(w, &histories)
}

pub fn read_histories_json<R: Read>(r: R) -> Result<Vec<CitationHistory>> {
    read_json(r)
}

pub fn write_pairs_csv<W: Write>(w: W, events: &[CitationEvent]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["citing_id", "cited_id", "citing_date"])?;
    for e in events {
        wtr.write_record([
            e.citing_id.as_str(),
            e.cited_id.as_str(),
            &e.citing_date.format("%Y-%m-%d").to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_metadata_csv<W: Write>(w: W, papers: &[PaperRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["paper_id", "publication_date", "journal"])?;
    for p in papers {
        wtr.write_record([
            p.paper_id.as_str(),
            &p.publication_date.format("%Y-%m-%d").to_string(),
            p.journal.as_deref().unwrap_or(""),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn params_to_kv(truth: &TruthRecord) -> String {
    truth
        .params
        .flat()
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_truth_csv<W: Write>(w: W, truths: &[TruthRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["paper_id", "model", "true_params", "true_class"])?;
    for t in truths {
        wtr.write_record([
            t.paper_id.as_str(),
            t.model.as_str(),
            &params_to_kv(t),
            &t.class_index.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub paper_id: String,
    pub model: ModelKind,
    pub params: Vec<(String, f64)>,
    pub class_index: usize,
}

pub fn read_truth_csv<R: Read>(r: R) -> Result<Vec<TruthRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let params = row[2]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|kv| {
                let (k, v) = kv.split_once('=').ok_or_else(|| {
                    Error::Ingest(format!("bad parameter field '{kv}' in truth file"))
                })?;
                let v: f64 = v
                    .parse()
                    .map_err(|_| Error::Ingest(format!("bad number '{v}' in truth file")))?;
                Ok((k.to_string(), v))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(TruthRow {
            paper_id: row[0].to_string(),
            model: row[1].parse()?,
            params,
            class_index: row[3]
                .parse()
                .map_err(|_| Error::Ingest(format!("bad class '{}' in truth file", &row[3])))?,
        });
    }
    Ok(out)
}

pub fn write_assignment_csv<W: Write>(w: W, labels: &[ClassLabel]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["paper_id", "class_index"])?;
    for l in labels {
        wtr.write_record([l.paper_id.as_str(), &l.class_index.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_assignment_csv<R: Read>(r: R) -> Result<Vec<ClassLabel>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        out.push(ClassLabel {
            paper_id: row[0].to_string(),
            class_index: row[1]
                .parse()
                .map_err(|_| Error::Ingest(format!("bad class index '{}'", &row[1])))?,
        });
    }
    Ok(out)
}

/// Centroid file payload; carries the objective so an assignment can be
/// reconstituted without rerunning the clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidsFile {
    pub wcss: f64,
    pub centroids: Vec<Vec<f64>>,
}

pub fn write_centroids_json<W: Write>(w: W, assignment: &ClassAssignment) -> Result<()> {
    write_json(
        w,
        &CentroidsFile { wcss: assignment.wcss, centroids: assignment.centroids.clone() },
    )
}

pub fn read_centroids_json<R: Read>(r: R) -> Result<CentroidsFile> {
    read_json(r)
}

/// Long-format boxplot table: one row per (class, year).
pub fn write_class_stats_csv<W: Write>(w: W, summaries: &[ClassSummary]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["class_index", "t", "min", "q1", "median", "q3", "max"])?;
    for s in summaries {
        for b in &s.boxes {
            wtr.write_record([
                s.class_index.to_string(),
                b.t.to_string(),
                b.min.to_string(),
                b.q1.to_string(),
                b.median.to_string(),
                b.q3.to_string(),
                b.max.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// One row per class: size, early-citation share, top-decile membership.
pub fn write_class_summary_csv<W: Write>(
    w: W,
    summaries: &[ClassSummary],
    top_decile_odds: &[f64],
) -> Result<()> {
    if summaries.len() != top_decile_odds.len() {
        return Err(Error::InvalidInput(
            "class summaries and odds must have matching lengths".into(),
        ));
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["class_index", "size", "mean_early_fraction", "top_decile_odds"])?;
    for (s, &odds) in summaries.iter().zip(top_decile_odds) {
        wtr.write_record([
            s.class_index.to_string(),
            s.size.to_string(),
            s.mean_early_fraction.to_string(),
            odds.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_fits_json<W: Write>(w: W, fits: &[FitResult]) -> Result<()> {
    write_json(w, &fits)
}

pub fn read_fits_json<R: Read>(r: R) -> Result<Vec<FitResult>> {
    read_json(r)
}

/// Flat view of the fits. Parameter columns are generic (param1..param8,
/// blank when a model uses fewer); the JSON artifact keeps the names.
pub fn write_fits_csv<W: Write>(w: W, fits: &[FitResult]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["paper_id".to_string(), "model".to_string()];
    for i in 1..=FITS_CSV_PARAM_COLUMNS {
        header.push(format!("param{i}"));
    }
    header.push("objective".into());
    header.push("converged".into());
    wtr.write_record(&header)?;

    for f in fits {
        let flat = f.params.flat();
        if flat.len() > FITS_CSV_PARAM_COLUMNS {
            return Err(Error::InvalidInput(format!(
                "{} fit of '{}' has {} parameters, column budget is {FITS_CSV_PARAM_COLUMNS}",
                f.model,
                f.paper_id,
                flat.len()
            )));
        }
        let mut row = vec![f.paper_id.clone(), f.model.to_string()];
        for i in 0..FITS_CSV_PARAM_COLUMNS {
            row.push(flat.get(i).map(|(_, v)| v.to_string()).unwrap_or_default());
        }
        row.push(f.objective.to_string());
        row.push(f.converged.to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub paper_id: String,
    pub model: ModelKind,
    /// Predicted cumulative counts at years 0..=horizon.
    pub counts: Vec<f64>,
}

pub fn write_predictions_csv<W: Write>(w: W, rows: &[PredictionRow]) -> Result<()> {
    let horizon = rows.first().map(|r| r.counts.len()).unwrap_or(1) - 1;
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["paper_id".to_string(), "model".to_string()];
    for t in 0..=horizon {
        header.push(format!("t{t}"));
    }
    wtr.write_record(&header)?;
    for r in rows {
        if r.counts.len() != horizon + 1 {
            return Err(Error::InvalidInput(format!(
                "prediction row for '{}' has {} years, expected {}",
                r.paper_id,
                r.counts.len(),
                horizon + 1
            )));
        }
        let mut row = vec![r.paper_id.clone(), r.model.to_string()];
        row.extend(r.counts.iter().map(|v| v.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_predictions_csv<R: Read>(r: R) -> Result<Vec<PredictionRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let counts = row
            .iter()
            .skip(2)
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Ingest(format!("bad count '{s}' in predictions")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(PredictionRow { paper_id: row[0].to_string(), model: row[1].parse()?, counts });
    }
    Ok(out)
}

pub fn write_pw_csv<W: Write>(w: W, histograms: &[PwHistogram]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["class_index", "model", "bin_lo", "bin_hi", "count", "density", "n"])?;
    for h in histograms {
        for (j, (&count, &density)) in h.counts.iter().zip(&h.densities).enumerate() {
            let lo = j as f64 * h.bin_width;
            let hi = (j + 1) as f64 * h.bin_width;
            wtr.write_record([
                h.class_index.to_string(),
                h.model.to_string(),
                lo.to_string(),
                hi.to_string(),
                count.to_string(),
                density.to_string(),
                h.n.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Gnuplot table of the same histograms: one indexed block per
/// (class, model), columns bin_center and density.
pub fn write_pw_dat<W: Write>(mut w: W, histograms: &[PwHistogram]) -> Result<()> {
    writeln!(w, "# goodness-of-fit distributions")?;
    writeln!(w, "# columns: w_bin_center density")?;
    for h in histograms {
        writeln!(w, "# class {} model {} (n = {})", h.class_index, h.model, h.n)?;
        for (j, &density) in h.densities.iter().enumerate() {
            let center = (j as f64 + 0.5) * h.bin_width;
            writeln!(w, "{center} {density}")?;
        }
        writeln!(w)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_scatter_csv<W: Write>(w: W, per_model: &[(ModelKind, BinnedScatter)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "model",
        "bin_lo",
        "bin_hi",
        "n",
        "bin_center",
        "mean_pred",
        "std_pred",
        "within_one_sigma",
        "low_n",
    ])?;
    for (model, scatter) in per_model {
        for b in &scatter.bins {
            wtr.write_record([
                model.to_string(),
                b.lo.to_string(),
                b.hi.to_string(),
                b.n.to_string(),
                b.bin_center.to_string(),
                b.mean_pred.to_string(),
                b.std_pred.to_string(),
                b.within_one_sigma.to_string(),
                b.low_n.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_scatter_dat<W: Write>(mut w: W, per_model: &[(ModelKind, BinnedScatter)]) -> Result<()> {
    writeln!(w, "# predicted vs actual, log-binned")?;
    writeln!(w, "# columns: bin_center mean_pred std_pred n within_one_sigma(0/1)")?;
    for (model, scatter) in per_model {
        writeln!(
            w,
            "# model {model} (overestimation fraction {:.6})",
            scatter.overestimation_fraction
        )?;
        for b in &scatter.bins {
            writeln!(
                w,
                "{} {} {} {} {}",
                b.bin_center,
                b.mean_pred,
                b.std_pred,
                b.n,
                u8::from(b.within_one_sigma)
            )?;
        }
        writeln!(w)?;
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapeRow {
    pub model: ModelKind,
    pub grouping: String,
    pub group: String,
    pub n: usize,
    pub epsilon: f64,
}

pub fn write_mape_csv<W: Write>(w: W, rows: &[MapeRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["model", "grouping", "group", "n", "epsilon"])?;
    for r in rows {
        wtr.write_record([
            r.model.to_string(),
            r.grouping.clone(),
            r.group.clone(),
            r.n.to_string(),
            r.epsilon.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_mape_dat<W: Write>(mut w: W, rows: &[MapeRow]) -> Result<()> {
    writeln!(w, "# forecast error by group")?;
    writeln!(w, "# columns: group_ordinal epsilon n  (group name in trailing comment)")?;
    let mut block: Option<(ModelKind, String)> = None;
    let mut ordinal = 0usize;
    for r in rows {
        let key = (r.model, r.grouping.clone());
        if block.as_ref() != Some(&key) {
            if block.is_some() {
                writeln!(w)?;
                writeln!(w)?;
            }
            writeln!(w, "# model {} grouping {}", r.model, r.grouping)?;
            block = Some(key);
            ordinal = 0;
        }
        ordinal += 1;
        writeln!(w, "{ordinal} {} {} # {}", r.epsilon, r.n, r.group)?;
    }
    if block.is_some() {
        writeln!(w)?;
        writeln!(w)?;
    }
    Ok(())
}
