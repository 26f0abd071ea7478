//! Constant baseline: the forecast is whatever the count was at the end of
//! the training window. Since real cumulative counts never decrease, this
//! baseline can only err on the low side, which makes it a useful one-sided
//! yardstick for the dynamic models.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaiveParams {
    /// Cumulative count at the end of the training window.
    pub c_train: u64,
}

/// c-hat(t) = c_train for every t.
pub fn naive_counts(params: &NaiveParams, n_points: usize) -> Vec<f64> {
    vec![params.c_train as f64; n_points]
}
