use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::extremal::{
    blocks_default_threshold, blocks_theta, default_block_len, level_theta, intervals_theta, quantile,
    LevelEstimate, ThetaEstimate,
};
use super::hill::{hill_estimate, hill_plot, HillConfig};
use crate::error::{Error, Result};
use crate::heavy_tail::{threshold_u, ThresholdSequence};
use crate::seed::{self, label};

fn default_quantile() -> f64 {
    0.95
}

fn default_resamples() -> usize {
    200
}

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    #[serde(default)]
    pub hill: HillConfig,
    /// Quantile level of the intervals-estimator threshold.
    #[serde(default = "default_quantile")]
    pub threshold_quantile: f64,
    /// Blocks-estimator block length; defaults to `ceil(sqrt(n))`.
    #[serde(default)]
    pub block_len: Option<usize>,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_level")]
    pub ci_level: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            hill: HillConfig::default(),
            threshold_quantile: default_quantile(),
            block_len: None,
            bootstrap_resamples: default_resamples(),
            ci_level: default_level(),
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_quantile > 0.0 && self.threshold_quantile < 1.0) {
            return Err(Error::Config(format!("threshold quantile {} outside (0, 1)", self.threshold_quantile)));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Config(format!("confidence level {} outside (0, 1)", self.ci_level)));
        }
        if self.block_len == Some(0) {
            return Err(Error::Config("block length must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillSummary {
    pub m: usize,
    pub k_hat: f64,
    pub ci: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaSummary {
    pub threshold: f64,
    pub estimate: ThetaEstimate,
    pub ci: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub estimate: LevelEstimate,
    pub ci: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub exceedances: usize,
    pub block_len: usize,
    pub blocks_with_exceedance: usize,
    /// Resamples that produced every estimate.
    pub bootstrap_resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub n: usize,
    pub hill: HillSummary,
    pub intervals: ThetaSummary,
    pub blocks: ThetaSummary,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub level: Vec<LevelSummary>,
    pub diagnostics: Diagnostics,
}

impl EstimationReport {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

/// Moving-block bootstrap resample of `series` with blocks of length `b`.
pub fn block_resample(series: &[f64], b: usize, rng: &mut seed::Rng) -> Vec<f64> {
    let n = series.len();
    let b = b.clamp(1, n.max(1));
    let mut out = Vec::with_capacity(n + b);
    while out.len() < n {
        let start = rng.random_range(0..=n - b);
        out.extend_from_slice(&series[start..start + b]);
    }
    out.truncate(n);
    out
}

/// Percentile interval, widened if needed so that it contains `point`.
pub fn percentile_ci(mut values: Vec<f64>, level: f64, point: f64) -> [f64; 2] {
    if values.is_empty() {
        return [point, point];
    }
    values.sort_unstable_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let lo = quantile(&values, tail).unwrap_or(point);
    let hi = quantile(&values, 1.0 - tail).unwrap_or(point);
    [lo.min(point), hi.max(point)]
}

struct Point {
    k: f64,
    intervals: f64,
    blocks: f64,
}

fn point_estimates(series: &[f64], cfg: &EstimationConfig, b: usize) -> Result<(f64, ThetaSummary, ThetaSummary)> {
    let n = series.len();
    let k = hill_estimate(series, cfg.hill.m_for(n))?;
    let u = quantile(series, cfg.threshold_quantile)?;
    let intervals = intervals_theta(series, u)?;
    let ub = blocks_default_threshold(series, b)?;
    let blocks = blocks_theta(series, ub, b)?;
    let ti = ThetaSummary { threshold: u, estimate: intervals, ci: [intervals.theta; 2] };
    let tb = ThetaSummary { threshold: ub, estimate: blocks, ci: [blocks.theta; 2] };
    Ok((k, ti, tb))
}

/// Hill, intervals and blocks estimates of one series with block-bootstrap
/// confidence intervals.
pub fn estimate(series: &[f64], cfg: &EstimationConfig, seed: u64) -> Result<EstimationReport> {
    cfg.validate()?;
    let n = series.len();
    let m = cfg.hill.m_for(n);
    let b = cfg.block_len.unwrap_or_else(|| default_block_len(n));
    let (k_hat, mut intervals, mut blocks) = point_estimates(series, cfg, b)?;

    let boot: Vec<Point> = (0..cfg.bootstrap_resamples)
        .into_par_iter()
        .filter_map(|r| {
            let mut rng = seed::rng(seed, &[label::BOOTSTRAP, r as u64]);
            let s = block_resample(series, b, &mut rng);
            let (k, i, bl) = point_estimates(&s, cfg, b).ok()?;
            Some(Point { k, intervals: i.estimate.theta, blocks: bl.estimate.theta })
        })
        .collect();

    let hill_ci = percentile_ci(boot.iter().map(|p| p.k).collect(), cfg.ci_level, k_hat);
    intervals.ci = percentile_ci(boot.iter().map(|p| p.intervals).collect(), cfg.ci_level, intervals.estimate.theta);
    blocks.ci = percentile_ci(boot.iter().map(|p| p.blocks).collect(), cfg.ci_level, blocks.estimate.theta);
    Ok(EstimationReport {
        n,
        hill: HillSummary { m, k_hat, ci: hill_ci },
        diagnostics: Diagnostics {
            exceedances: intervals.estimate.exceedances,
            block_len: b,
            blocks_with_exceedance: blocks.estimate.blocks.unwrap_or(0),
            bootstrap_resamples: boot.len(),
        },
        intervals,
        blocks,
        level: Vec::new(),
    })
}

/// Level-based estimate with a bootstrap interval from resampling whole
/// replicates, which are independent.
pub fn level_theta_with_ci<S: AsRef<[f64]> + Sync>(
    replicates: &[S],
    k1: f64,
    y: f64,
    resamples: usize,
    ci_level: f64,
    seed: u64,
) -> Result<LevelSummary> {
    let estimate = level_theta(replicates, k1, y)?;
    let n = replicates[0].as_ref().len();
    let u = threshold_u(n, &ThresholdSequence::new(y, k1)?);
    let counts: Vec<usize> = replicates
        .iter()
        .map(|s| s.as_ref().iter().filter(|&&x| x > u).count())
        .collect();
    let r = counts.len();
    let thetas: Vec<f64> = (0..resamples)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = seed::rng(seed, &[label::LEVEL, y.to_bits(), i as u64]);
            let (mut below, mut exc) = (0usize, 0usize);
            for _ in 0..r {
                let c = counts[rng.random_range(0..r)];
                exc += c;
                below += usize::from(c == 0);
            }
            (below > 0 && exc > 0).then(|| (-(below as f64 / r as f64).ln() / (exc as f64 / r as f64)).clamp(0.0, 1.0))
        })
        .collect();
    Ok(LevelSummary { ci: percentile_ci(thetas, ci_level, estimate.theta), estimate })
}

/// Hill-plot rows `(m, k̂(m))` as CSV.
pub fn write_hill_plot_csv<W: Write>(points: &[(usize, f64)], mut w: W) -> Result<()> {
    writeln!(w, "m,k_hat")?;
    for (m, k) in points {
        writeln!(w, "{m},{k}")?;
    }
    Ok(())
}

/// Hill plot over the configured (or default) grid.
pub fn hill_plot_for(series: &[f64], cfg: &HillConfig) -> Result<Vec<(usize, f64)>> {
    hill_plot(series, &cfg.grid_for(series.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_armax_column, gen_iid_column};
    use crate::heavy_tail::ParetoLaw;

    #[test]
    fn report_contains_points_and_reproduces() {
        let x = gen_armax_column(20_000, 1.0, 0.5, 3).unwrap();
        let cfg = EstimationConfig { bootstrap_resamples: 50, ..Default::default() };
        let r = estimate(&x, &cfg, 9).unwrap();
        assert_eq!(r.hill.m, 141);
        for (ci, p) in [
            (r.hill.ci, r.hill.k_hat),
            (r.intervals.ci, r.intervals.estimate.theta),
            (r.blocks.ci, r.blocks.estimate.theta),
        ] {
            assert!(ci[0] <= p && p <= ci[1], "{ci:?} {p}");
        }
        assert!(r.intervals.ci[0] >= 0.0 && r.intervals.ci[1] <= 1.0);
        assert_eq!(r.diagnostics.bootstrap_resamples, 50);
        assert_eq!(r, estimate(&x, &cfg, 9).unwrap());
        let mut json = Vec::new();
        r.write_json(&mut json).unwrap();
        let back: EstimationReport = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn bootstrap_interval_covers_truth_usually() {
        let law = ParetoLaw::standard(2.0).unwrap();
        let cfg = EstimationConfig { bootstrap_resamples: 100, ..Default::default() };
        let covered = (0..20)
            .filter(|&s| {
                let r = estimate(&gen_iid_column(10_000, &law, s), &cfg, s).unwrap();
                r.hill.ci[0] <= 2.0 && 2.0 <= r.hill.ci[1]
            })
            .count();
        assert!(covered >= 15, "{covered}");
    }

    #[test]
    fn resample_uses_whole_blocks() {
        let x: Vec<f64> = (0..100).map(f64::from).collect();
        let mut rng = seed::rng(1, &[]);
        let s = block_resample(&x, 10, &mut rng);
        assert_eq!(s.len(), 100);
        for chunk in s.chunks(10) {
            assert!(chunk.windows(2).all(|w| w[1] == w[0] + 1.0));
        }
    }

    #[test]
    fn ci_is_widened_to_contain_point() {
        assert_eq!(percentile_ci(vec![1.0, 2.0, 3.0], 0.9, 5.0)[1], 5.0);
        assert_eq!(percentile_ci(vec![], 0.9, 0.3), [0.3, 0.3]);
    }

    #[test]
    fn level_interval() {
        let law = ParetoLaw::standard(1.0).unwrap();
        let reps: Vec<Vec<f64>> = (0..500).map(|s| gen_iid_column(500, &law, s)).collect();
        let s = level_theta_with_ci(&reps, 1.0, 1.0, 200, 0.95, 1).unwrap();
        assert!(s.ci[0] <= s.estimate.theta && s.estimate.theta <= s.ci[1]);
        assert!(s.ci[0] < 1.0 && s.ci[1] > 0.8, "{s:?}");
    }

    #[test]
    fn hill_plot_csv() {
        let mut out = Vec::new();
        write_hill_plot_csv(&[(5, 1.25), (10, 1.5)], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "m,k_hat\n5,1.25\n10,1.5\n");
    }
}
