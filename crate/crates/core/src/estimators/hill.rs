use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of upper order statistics, plus an optional grid for Hill plots.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HillConfig {
    /// Defaults to `floor(sqrt(n))`.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub grid: Option<Vec<usize>>,
}

impl HillConfig {
    pub fn m_for(&self, n: usize) -> usize {
        self.m.unwrap_or_else(|| default_m(n))
    }

    pub fn grid_for(&self, n: usize) -> Vec<usize> {
        self.grid.clone().unwrap_or_else(|| default_grid(n))
    }
}

pub fn default_m(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(1)
}

/// About twenty log-spaced values of `m` between 5 and `n/2`.
pub fn default_grid(n: usize) -> Vec<usize> {
    let hi = (n / 2).max(1);
    let lo = 5.min(hi);
    let mut grid: Vec<usize> = (0..20)
        .map(|i| {
            let t = i as f64 / 19.0;
            ((lo as f64).ln() * (1.0 - t) + (hi as f64).ln() * t).exp().round() as usize
        })
        .filter(|&m| m >= 1 && m < n)
        .collect();
    grid.dedup();
    grid
}

fn check(sample: &[f64], m: usize) -> Result<()> {
    if m == 0 || m >= sample.len() {
        return Err(Error::Estimation(format!("Hill needs 1 <= m < n, got m = {m}, n = {}", sample.len())));
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(Error::Estimation("sample contains NaN".into()));
    }
    Ok(())
}

fn from_mean_log_ratio(mean: f64) -> Result<f64> {
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::Estimation("top order statistics are tied; Hill estimate undefined".into()));
    }
    Ok(1.0 / mean)
}

/// `[ (1/m) sum_{i<=m} ln(X_(i) / X_(m+1)) ]^(-1)` over descending order
/// statistics.
pub fn hill_estimate(sample: &[f64], m: usize) -> Result<f64> {
    check(sample, m)?;
    let mut v = sample.to_vec();
    let (top, &mut pivot, _) = v.select_nth_unstable_by(m, |a, b| b.total_cmp(a));
    if !(pivot > 0.0) {
        return Err(Error::Estimation(format!("order statistic X_(m+1) = {pivot} is not positive")));
    }
    let ln_pivot = pivot.ln();
    let mean = top.iter().map(|x| x.ln() - ln_pivot).sum::<f64>() / m as f64;
    from_mean_log_ratio(mean)
}

/// `(m, k̂(m))` for every `m` of the grid that fits the sample.
pub fn hill_plot(sample: &[f64], grid: &[usize]) -> Result<Vec<(usize, f64)>> {
    let max_m = grid.iter().copied().filter(|&m| m < sample.len()).max().unwrap_or(0);
    check(sample, max_m.max(1))?;
    let mut sorted = sample.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    if !(sorted[max_m] > 0.0) {
        return Err(Error::Estimation("Hill plot reaches nonpositive order statistics".into()));
    }
    let logs: Vec<f64> = sorted[..=max_m].iter().map(|x| x.ln()).collect();
    let mut prefix = Vec::with_capacity(logs.len() + 1);
    prefix.push(0.0);
    for l in &logs {
        prefix.push(prefix.last().unwrap() + l);
    }
    grid.iter()
        .copied()
        .filter(|&m| m >= 1 && m < sample.len())
        .map(|m| {
            let mean = (prefix[m] - m as f64 * logs[m]) / m as f64;
            from_mean_log_ratio(mean).map(|k| (m, k))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heavy_tail::ParetoLaw;
    use crate::generators::gen_iid_column;
    use proptest::prelude::*;
    use std::f64::consts::E;

    #[test]
    fn hand_computed() {
        let k = hill_estimate(&[E * E, E, 1.0], 2).unwrap();
        assert!((k - 2.0 / 3.0).abs() < 1e-12);
        let k = hill_estimate(&[1.0, E, E * E], 2).unwrap();
        assert!((k - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(hill_estimate(&[3.0, 3.0, 3.0, 1.0], 2).is_err());
        assert!(hill_estimate(&[3.0, 2.0], 2).is_err());
        assert!(hill_estimate(&[3.0, 2.0], 0).is_err());
        assert!(hill_estimate(&[3.0, 2.0, 0.0], 2).is_err());
        assert!(hill_estimate(&[3.0, f64::NAN, 1.0], 1).is_err());
    }

    #[test]
    fn pareto_replicates() {
        let law = ParetoLaw::standard(1.5).unwrap();
        let n = 100_000;
        let m = default_m(n);
        let ks: Vec<f64> = (0..20).map(|s| hill_estimate(&gen_iid_column(n, &law, 100 + s), m).unwrap()).collect();
        let mean = ks.iter().sum::<f64>() / ks.len() as f64;
        assert!((1.4..=1.6).contains(&mean), "{mean}");
    }

    #[test]
    fn plot_matches_pointwise() {
        let x = gen_iid_column(5_000, &ParetoLaw::standard(2.0).unwrap(), 1);
        let grid = default_grid(x.len());
        assert!(grid.len() > 10);
        for (m, k) in hill_plot(&x, &grid).unwrap() {
            assert!((k - hill_estimate(&x, m).unwrap()).abs() < 1e-9 * k);
        }
    }

    proptest! {
        #[test]
        fn scale_and_power_laws(
            seed in 0u64..1_000,
            c in 0.001f64..1_000.0,
            p in 0.1f64..5.0,
        ) {
            let x = gen_iid_column(500, &ParetoLaw::standard(1.2).unwrap(), seed);
            let k = hill_estimate(&x, 30).unwrap();
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            prop_assert!((hill_estimate(&scaled, 30).unwrap() - k).abs() < 1e-9 * k);
            let powered: Vec<f64> = x.iter().map(|v| v.powf(p)).collect();
            prop_assert!((hill_estimate(&powered, 30).unwrap() - k / p).abs() < 1e-9 * k / p);
        }
    }
}
