//! Citation-history modeling toolkit.
//!
//! The pipeline this crate implements: ingest raw citation pairs into yearly
//! cumulative histories ([`citation_data`]), group papers by the shape of
//! their accumulation ([`clustering`]), fit four competing count models per
//! paper ([`models`], [`fitting`]), and score fits and forecasts
//! ([`evaluation`]). A synthetic-data generator with known ground truth
//! ([`synth`]) exercises everything end to end, and [`report`] pins the file
//! formats the command-line driver reads and writes.
//!
//! All randomness flows from explicit seeds and all parallel reductions are
//! order-stable, so every public entry point is deterministic: same inputs,
//! same bytes out.

pub mod citation_data;
pub mod clustering;
pub mod error;
pub mod evaluation;
pub mod fitting;
pub mod models;
pub mod optimize;
pub mod report;
pub(crate) mod seed;
pub mod synth;

pub use citation_data::{CitationEvent, CitationHistory, Dataset, IngestReport, PaperRecord};
pub use clustering::{ClassAssignment, ClassLabel, ClassSummary, CumulativeShape};
pub use error::{Error, Result};
pub use evaluation::{BinnedScatter, MapeEntry, PwHistogram, WksScore};
pub use fitting::{FitConfig, FitResult};
pub use models::{ArimaParams, ModelKind, ModelParams, NaiveParams, SirParams, WsbParams};
pub use synth::{NoiseKind, SynthCohort, SynthSpec, TruthRecord};
