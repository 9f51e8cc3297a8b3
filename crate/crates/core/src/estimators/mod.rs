//! Tail-index and extremal-index estimation plus stationarity diagnostics.
//!
//! Every estimator is a pure function of its input. Degenerate input (ties
//! at the top, too few exceedances, thresholds that nothing or everything
//! crosses) is rejected with an error instead of producing NaN.

mod extremal;
mod hill;
mod report;
mod stationarity;

pub use extremal::{
    blocks_default_threshold, blocks_theta, default_block_len, level_theta, intervals_theta, quantile,
    LevelEstimate, ThetaEstimate, BLOCK_EXCEEDANCE_RATE, MIN_LEVEL_REPLICATES,
};
pub use hill::{default_grid, default_m, hill_estimate, hill_plot, HillConfig};
pub use report::{
    block_resample, level_theta_with_ci, estimate, hill_plot_for, percentile_ci, write_hill_plot_csv,
    LevelSummary, Diagnostics, EstimationConfig, EstimationReport, HillSummary, ThetaSummary,
};
pub use stationarity::{
    ks_one_sample, ks_pvalue, ks_two_sample, stationarity_diagnostic, StationarityReport, MIN_STATIONARITY_LEN,
    STATIONARITY_LEVEL,
};
