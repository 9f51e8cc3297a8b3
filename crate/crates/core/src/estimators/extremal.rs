use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heavy_tail::{threshold_u, ThresholdSequence};

/// Expected exceedances per block used by [`blocks_default_threshold`].
pub const BLOCK_EXCEEDANCE_RATE: f64 = 0.2;

/// Minimum replicate count for the level-based check.
pub const MIN_LEVEL_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    /// Clamped to `[0, 1]`.
    pub theta: f64,
    /// Value before clamping.
    pub raw: f64,
    pub exceedances: usize,
    /// Blocks containing an exceedance (blocks estimator only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
}

impl ThetaEstimate {
    fn new(raw: f64, exceedances: usize, blocks: Option<usize>) -> Self {
        Self { theta: raw.clamp(0.0, 1.0), raw, exceedances, blocks }
    }
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sample: &[f64], p: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InsufficientData { need: 1, got: 0 });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("quantile level {p} outside [0, 1]")));
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(Error::Estimation("sample contains NaN".into()));
    }
    let h = p * (sample.len() - 1) as f64;
    let lo = h.floor() as usize;
    let mut v = sample.to_vec();
    let (_, &mut a, upper) = v.select_nth_unstable_by(lo, f64::total_cmp);
    let frac = h - lo as f64;
    if frac == 0.0 || upper.is_empty() {
        return Ok(a);
    }
    let b = upper.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(a + frac * (b - a))
}

/// Interexceedance-times estimator for the extremal index.
///
/// With `T_i` the gaps between successive exceedance positions:
/// `2 (ΣT)^2 / ((N-1) ΣT^2)` when every gap is at most 2, otherwise
/// `2 (Σ(T-1))^2 / ((N-1) Σ(T-1)(T-2))`.
pub fn intervals_theta(series: &[f64], u: f64) -> Result<ThetaEstimate> {
    let pos: Vec<usize> = series.iter().enumerate().filter(|(_, &x)| x > u).map(|(i, _)| i).collect();
    let n_exc = pos.len();
    if n_exc < 2 {
        return Err(Error::InsufficientData { need: 2, got: n_exc });
    }
    let gaps: Vec<f64> = pos.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let nm1 = (n_exc - 1) as f64;
    let raw = if max_gap <= 2.0 {
        let s: f64 = gaps.iter().sum();
        let s2: f64 = gaps.iter().map(|t| t * t).sum();
        2.0 * s * s / (nm1 * s2)
    } else {
        let s: f64 = gaps.iter().map(|t| t - 1.0).sum();
        let s2: f64 = gaps.iter().map(|t| (t - 1.0) * (t - 2.0)).sum();
        2.0 * s * s / (nm1 * s2)
    };
    Ok(ThetaEstimate::new(raw, n_exc, None))
}

/// Blocks estimator: blocks of length `b` holding an exceedance, over total
/// exceedances. A trailing partial block counts as a block.
pub fn blocks_theta(series: &[f64], u: f64, b: usize) -> Result<ThetaEstimate> {
    if b == 0 || b > series.len() {
        return Err(Error::Domain(format!("block length {b} outside 1..={}", series.len())));
    }
    let mut exceedances = 0usize;
    let mut blocks = 0usize;
    for chunk in series.chunks(b) {
        let k = chunk.iter().filter(|&&x| x > u).count();
        exceedances += k;
        blocks += usize::from(k > 0);
    }
    if exceedances == 0 {
        return Err(Error::InsufficientData { need: 1, got: 0 });
    }
    Ok(ThetaEstimate::new(blocks as f64 / exceedances as f64, exceedances, Some(blocks)))
}

pub fn default_block_len(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(1)
}

/// Threshold with about [`BLOCK_EXCEEDANCE_RATE`] expected exceedances per
/// block of length `b`. At a fixed 95% level and `b ~ sqrt(n)`, nearly every
/// block holds an exceedance and the ratio degenerates to `1/(0.05 b)`.
pub fn blocks_default_threshold(series: &[f64], b: usize) -> Result<f64> {
    let p = (1.0 - BLOCK_EXCEEDANCE_RATE / b as f64).max(0.0);
    quantile(series, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub y: f64,
    pub threshold: f64,
    /// Fraction of replicates whose maximum stays at or below the threshold.
    pub p_hat: f64,
    /// Mean exceedance count per replicate.
    pub tau_hat: f64,
    pub theta: f64,
    pub raw: f64,
}

/// `-ln(p̂)/τ̂` at `u_n(y) = y n^{1/k1}` from `R` independent replicates of
/// common length `n`.
pub fn level_theta<S: AsRef<[f64]>>(replicates: &[S], k1: f64, y: f64) -> Result<LevelEstimate> {
    let r = replicates.len();
    if r < MIN_LEVEL_REPLICATES {
        return Err(Error::InsufficientData { need: MIN_LEVEL_REPLICATES, got: r });
    }
    let n = replicates[0].as_ref().len();
    if n == 0 || replicates.iter().any(|s| s.as_ref().len() != n) {
        return Err(Error::Estimation("replicates must share a nonzero length".into()));
    }
    let u = threshold_u(n, &ThresholdSequence::new(y, k1)?);
    let mut below = 0usize;
    let mut exceedances = 0usize;
    for s in replicates {
        let k = s.as_ref().iter().filter(|&&x| x > u).count();
        exceedances += k;
        below += usize::from(k == 0);
    }
    if below == 0 {
        return Err(Error::ThresholdTooLow { threshold: u });
    }
    if exceedances == 0 {
        return Err(Error::ThresholdTooHigh { threshold: u });
    }
    let p_hat = below as f64 / r as f64;
    let tau_hat = exceedances as f64 / r as f64;
    let raw = -p_hat.ln() / tau_hat;
    Ok(LevelEstimate { y, threshold: u, p_hat, tau_hat, theta: raw.clamp(0.0, 1.0), raw })
}
