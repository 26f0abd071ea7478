//! Cumulative citation-count models.
//!
//! Every model maps years-since-publication to a predicted cumulative count
//! c-hat(t). Four are provided: a lognormal adoption curve ([`wsb`]), an
//! epidemic compartment model ([`sir`]), an integrated ARMA forecaster on the
//! cumulative series ([`arima`]), and a constant baseline ([`naive`]).

pub mod arima;
pub mod naive;
pub mod sir;
pub mod wsb;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use arima::ArimaParams;
pub use naive::NaiveParams;
pub use sir::{SirParams, SirState};
pub use wsb::WsbParams;

use crate::error::{Error, Result};

/// Identifies one of the four model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Wsb,
    Sir,
    Arima,
    Naive,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Wsb, ModelKind::Sir, ModelKind::Arima, ModelKind::Naive];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Wsb => "wsb",
            ModelKind::Sir => "sir",
            ModelKind::Arima => "arima",
            ModelKind::Naive => "naive",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wsb" => Ok(ModelKind::Wsb),
            "sir" => Ok(ModelKind::Sir),
            "arima" => Ok(ModelKind::Arima),
            "naive" => Ok(ModelKind::Naive),
            other => Err(Error::InvalidInput(format!("unknown model '{other}'"))),
        }
    }
}

/// Fitted parameters for any model family, tagged for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Wsb(WsbParams),
    Sir(SirParams),
    Arima(ArimaParams),
    Naive(NaiveParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Wsb(_) => ModelKind::Wsb,
            ModelParams::Sir(_) => ModelKind::Sir,
            ModelParams::Arima(_) => ModelKind::Arima,
            ModelParams::Naive(_) => ModelKind::Naive,
        }
    }

    /// Flat parameter list in a stable per-family order, for CSV export.
    pub fn flat(&self) -> Vec<(String, f64)> {
        match self {
            ModelParams::Wsb(p) => vec![
                ("lambda".into(), p.lambda),
                ("mu".into(), p.mu),
                ("sigma".into(), p.sigma),
                ("m".into(), p.m),
            ],
            ModelParams::Sir(p) => vec![
                ("s0".into(), p.s0),
                ("beta".into(), p.beta),
                ("gamma".into(), p.gamma),
                ("i0".into(), p.i0),
            ],
            ModelParams::Arima(p) => {
                let mut out = vec![
                    ("p".into(), p.p as f64),
                    ("d".into(), p.d as f64),
                    ("q".into(), p.q as f64),
                    ("intercept".into(), p.intercept),
                ];
                for (i, c) in p.ar_coeffs.iter().enumerate() {
                    out.push((format!("ar{}", i + 1), *c));
                }
                for (i, c) in p.ma_coeffs.iter().enumerate() {
                    out.push((format!("ma{}", i + 1), *c));
                }
                out
            }
            ModelParams::Naive(p) => vec![("c_train".into(), p.c_train as f64)],
        }
    }
}
