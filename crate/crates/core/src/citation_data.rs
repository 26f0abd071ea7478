//! Loading citation graphs and turning them into yearly cumulative counts.
//!
//! Two CSV inputs describe a corpus: a pair file with one row per citation
//! (`citing_id,cited_id,citing_date`) and a metadata file with one row per
//! paper (`paper_id,publication_date,journal`). Dates are ISO `YYYY-MM-DD`.
//! Ingest is forgiving about individual rows (malformed rows are dropped and
//! tallied, never fatal) but strict about schema: a missing or wrong header
//! is an error for the whole file.
//!
//! Elapsed time is measured in whole years since the cited paper's
//! publication: year t covers days [t*365.25, (t+1)*365.25). A citation on
//! the publication day itself lands in year 0.

use std::collections::HashMap;
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAIRS_HEADER: [&str; 3] = ["citing_id", "cited_id", "citing_date"];
pub const METADATA_HEADER: [&str; 3] = ["paper_id", "publication_date", "journal"];

/// Average Gregorian year length in days; used for year binning.
pub const DAYS_PER_YEAR: f64 = 365.25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub publication_date: NaiveDate,
    /// Empty journal fields are preserved as None.
    pub journal: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationEvent {
    pub citing_id: String,
    pub cited_id: String,
    pub citing_date: NaiveDate,
}

/// A parsed corpus. `events` only contains citations to known papers that
/// respect causality (citing date on or after the cited publication date).
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub papers: Vec<PaperRecord>,
    pub events: Vec<CitationEvent>,
}

/// Row-level accounting from one ingest run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub papers_loaded: usize,
    pub events_loaded: usize,
    pub malformed_metadata_rows: usize,
    pub malformed_pair_rows: usize,
    pub duplicate_papers: usize,
    pub unknown_cited: usize,
    pub causality_violations: usize,
    /// Sum of all dropped-row tallies above.
    pub dropped: usize,
}

/// Cumulative citation counts on the integer-year grid. `counts[t]` is the
/// number of citations received in years 0 through t inclusive, so the
/// vector has horizon + 1 entries and never decreases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationHistory {
    pub paper_id: String,
    pub counts: Vec<u64>,
}

impl CitationHistory {
    pub fn horizon(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }

    pub fn total(&self) -> u64 {
        *self.counts.last().unwrap_or(&0)
    }

    pub fn counts_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

/// Whole years elapsed from `from` to `to`; negative if `to` precedes `from`.
pub fn elapsed_years(from: NaiveDate, to: NaiveDate) -> i64 {
    let days = (to - from).num_days();
    (days as f64 / DAYS_PER_YEAR).floor() as i64
}

fn check_header(got: &csv::StringRecord, want: &[&str; 3], what: &str) -> Result<()> {
    let fields: Vec<&str> = got.iter().map(str::trim).collect();
    if fields != want {
        return Err(Error::Ingest(format!(
            "{what} header must be '{}', got '{}'",
            want.join(","),
            fields.join(",")
        )));
    }
    Ok(())
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

/// Parses both CSV sources and cross-checks them. Individual bad rows are
/// dropped and tallied in the report; schema-level problems are errors.
pub fn ingest<P: Read, M: Read>(pairs: P, metadata: M) -> Result<(Dataset, IngestReport)> {
    let mut report = IngestReport::default();

    let mut papers: Vec<PaperRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    let mut meta_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(metadata);
    check_header(
        meta_reader.headers().map_err(|e| Error::Ingest(format!("metadata: {e}")))?,
        &METADATA_HEADER,
        "metadata",
    )?;
    for row in meta_reader.records() {
        let Ok(row) = row else {
            report.malformed_metadata_rows += 1;
            continue;
        };
        if row.len() != 3 {
            report.malformed_metadata_rows += 1;
            continue;
        }
        let paper_id = row[0].trim().to_string();
        let Some(date) = parse_date(&row[1]) else {
            report.malformed_metadata_rows += 1;
            continue;
        };
        if paper_id.is_empty() {
            report.malformed_metadata_rows += 1;
            continue;
        }
        if index.contains_key(&paper_id) {
            report.duplicate_papers += 1;
            continue;
        }
        let journal = match row[2].trim() {
            "" => None,
            j => Some(j.to_string()),
        };
        index.insert(paper_id.clone(), papers.len());
        papers.push(PaperRecord { paper_id, publication_date: date, journal });
    }

    let mut events: Vec<CitationEvent> = Vec::new();
    let mut pair_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(pairs);
    check_header(
        pair_reader.headers().map_err(|e| Error::Ingest(format!("pairs: {e}")))?,
        &PAIRS_HEADER,
        "pairs",
    )?;
    for row in pair_reader.records() {
        let Ok(row) = row else {
            report.malformed_pair_rows += 1;
            continue;
        };
        if row.len() != 3 {
            report.malformed_pair_rows += 1;
            continue;
        }
        let citing_id = row[0].trim().to_string();
        let cited_id = row[1].trim().to_string();
        let Some(citing_date) = parse_date(&row[2]) else {
            report.malformed_pair_rows += 1;
            continue;
        };
        if citing_id.is_empty() || cited_id.is_empty() {
            report.malformed_pair_rows += 1;
            continue;
        }
        let Some(&cited_idx) = index.get(&cited_id) else {
            report.unknown_cited += 1;
            continue;
        };
        if citing_date < papers[cited_idx].publication_date {
            report.causality_violations += 1;
            continue;
        }
        events.push(CitationEvent { citing_id, cited_id, citing_date });
    }

    report.papers_loaded = papers.len();
    report.events_loaded = events.len();
    report.dropped = report.malformed_metadata_rows
        + report.malformed_pair_rows
        + report.duplicate_papers
        + report.unknown_cited
        + report.causality_violations;

    Ok((Dataset { papers, events }, report))
}

/// Bins every event into elapsed years relative to the cited paper and
/// accumulates. One history per paper, in metadata order; events past the
/// horizon are ignored.
pub fn build_histories(dataset: &Dataset, horizon: usize) -> Result<Vec<CitationHistory>> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1 year".into()));
    }
    let index: HashMap<&str, usize> = dataset
        .papers
        .iter()
        .enumerate()
        .map(|(i, p)| (p.paper_id.as_str(), i))
        .collect();

    let mut increments = vec![vec![0u64; horizon + 1]; dataset.papers.len()];
    for ev in &dataset.events {
        let Some(&idx) = index.get(ev.cited_id.as_str()) else {
            return Err(Error::InvalidInput(format!(
                "event cites '{}' which is not in the dataset",
                ev.cited_id
            )));
        };
        let t = elapsed_years(dataset.papers[idx].publication_date, ev.citing_date);
        if t < 0 {
            return Err(Error::InvalidInput(format!(
                "event predates publication of '{}'",
                ev.cited_id
            )));
        }
        let t = t as usize;
        if t <= horizon {
            increments[idx][t] += 1;
        }
    }

    Ok(dataset
        .papers
        .iter()
        .zip(increments)
        .map(|(paper, inc)| {
            let mut counts = inc;
            for t in 1..counts.len() {
                counts[t] += counts[t - 1];
            }
            CitationHistory { paper_id: paper.paper_id.clone(), counts }
        })
        .collect())
}

/// Keeps histories with at least `min_citations` accumulated by the end of
/// year `window_years`. The boundary is inclusive.
pub fn filter_sample(
    histories: &[CitationHistory],
    min_citations: u64,
    window_years: usize,
) -> Result<Vec<CitationHistory>> {
    for h in histories {
        if window_years > h.horizon() {
            return Err(Error::InvalidInput(format!(
                "filter window {window_years}y exceeds the {}y horizon of '{}'",
                h.horizon(),
                h.paper_id
            )));
        }
    }
    Ok(histories
        .iter()
        .filter(|h| h.counts[window_years] >= min_citations)
        .cloned()
        .collect())
}
