use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STATIONARITY_LEVEL: f64 = 0.01;
pub const MIN_STATIONARITY_LEN: usize = 100;

/// One-sample Kolmogorov-Smirnov distance against a continuous cdf.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov-Smirnov distance between empirical cdfs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value of a KS distance `d` with effective sample size
/// `n_eff` (`n` for one sample, `n1 n2 / (n1 + n2)` for two), using the
/// small-sample correction `(sqrt(n) + 0.12 + 0.11/sqrt(n)) d`.
pub fn ks_pvalue(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub statistic: f64,
    pub p_value: f64,
    pub level: f64,
    pub reject: bool,
}

/// Two-sample KS comparison of odd-position against even-position terms
/// (1-based positions, so the first term is odd).
pub fn stationarity_diagnostic(series: &[f64]) -> Result<StationarityReport> {
    if series.len() < MIN_STATIONARITY_LEN {
        return Err(Error::InsufficientData { need: MIN_STATIONARITY_LEN, got: series.len() });
    }
    let odd: Vec<f64> = series.iter().step_by(2).copied().collect();
    let even: Vec<f64> = series.iter().skip(1).step_by(2).copied().collect();
    let statistic = ks_two_sample(&odd, &even);
    let (n1, n2) = (odd.len() as f64, even.len() as f64);
    let p_value = ks_pvalue(statistic, n1 * n2 / (n1 + n2));
    Ok(StationarityReport { statistic, p_value, level: STATIONARITY_LEVEL, reject: p_value < STATIONARITY_LEVEL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_iid_column;
    use crate::heavy_tail::ParetoLaw;

    #[test]
    fn identical_halves_give_zero() {
        let s: Vec<f64> = (0..200).map(|i| (i / 2) as f64).collect();
        let r = stationarity_diagnostic(&s).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject);
        assert!(stationarity_diagnostic(&s[..99]).is_err());
    }

    #[test]
    fn two_sample_hand_values() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pvalue_known_points() {
        // Kolmogorov distribution: P(K > 1.3581) = 0.05, P(K > 1.6276) = 0.01.
        let n: f64 = 1e12;
        assert!((ks_pvalue(1.3581 / n.sqrt(), n) - 0.05).abs() < 1e-4);
        assert!((ks_pvalue(1.6276 / n.sqrt(), n) - 0.01).abs() < 1e-4);
        assert_eq!(ks_pvalue(0.0, 100.0), 1.0);
    }

    #[test]
    fn one_sample_uniform_grid() {
        let s: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_one_sample(&s, |x| x) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn iid_rarely_rejected() {
        let law = ParetoLaw::standard(1.0).unwrap();
        let rejects = (0..200)
            .filter(|&s| stationarity_diagnostic(&gen_iid_column(1_000, &law, s)).unwrap().reject)
            .count();
        assert!(rejects <= 10, "{rejects}");
    }
}
