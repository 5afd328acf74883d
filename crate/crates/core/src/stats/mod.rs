//! Trial statistics: period summaries, change-score difference-in-differences,
//! Benjamini–Hochberg adjustment and exchangeable-correlation GEE.
//!
//! Every estimator reads a [`StepPanel`], which can be built from an
//! in-memory [`TrialLog`](crate::sim::TrialLog) or from exported CSVs, so
//! the two paths give identical results.

mod bh;
mod did;
mod gee;
mod ols;
mod panel;
mod summary;

pub use bh::bh_adjust;
pub use did::{did_regression, primary_comparisons, table4, RegressionResult};
pub use gee::{gee_fit, table6_design, GeeCluster, GeeData, GeeOptions, GeeResult, TABLE6_COVARIATES};
pub use ols::{ols_fit, OlsFit};
pub use panel::{daily_means, DailyMean, ParticipantSeries, StepPanel};
pub use summary::{summarize_periods, PeriodCell, PeriodSummary};

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("design matrix is rank deficient")]
    Singular,
    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },
}

/// Two-sided p-value of a z statistic under the standard normal.
pub fn normal_p_value(z: f64) -> f64 {
    if !z.is_finite() {
        return if z.is_nan() { f64::NAN } else { 0.0 };
    }
    (2.0 * Normal::standard().sf(z.abs())).min(1.0)
}
