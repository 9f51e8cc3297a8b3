//! Row statistics of the array: weighted sums `Y_n(z, N_n)` and weighted
//! maxima `Y*_n(z, N_n)`, plus the closed-form extremal index of the
//! aggregates under independent dominating columns.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::generators::SeriesMatrix;

/// Positive, bounded weights, one per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::Domain("weight vector is empty".into()));
        }
        if let Some(bad) = z.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!("weights must be positive and finite, got {bad}")));
        }
        Ok(Self(z))
    }

    /// `len` copies of `c`, as in the network application where every
    /// weight equals the damping factor.
    pub fn constant(c: f64, len: usize) -> Result<Self> {
        Self::new(vec![c; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSeries {
    pub sums: Vec<f64>,
    pub maxima: Vec<f64>,
    pub weights: Vec<f64>,
    /// Hex SHA-256 prefix of the source matrix.
    pub fingerprint: String,
}

impl AggregateSeries {
    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Weighted sum and maximum of every row. With `include_q` the
/// personalization value is added to the sum and joins the maximum.
pub fn row_aggregate(matrix: &SeriesMatrix, z: &WeightVector, include_q: bool) -> Result<AggregateSeries> {
    let need = matrix.max_row_length();
    if z.len() < need {
        return Err(Error::Config(format!("{} weights cannot cover rows of length {need}", z.len())));
    }
    let q = if include_q {
        Some(matrix.personalization().ok_or_else(|| {
            Error::Config("personalization requested but the matrix has no Q column".into())
        })?)
    } else {
        None
    };
    let w = z.as_slice();
    let mut sums = Vec::with_capacity(matrix.rows());
    let mut maxima = Vec::with_capacity(matrix.rows());
    for n in 0..matrix.rows() {
        let (mut s, mut m) = (0.0f64, 0.0f64);
        for (v, zi) in matrix.row(n).zip(w) {
            let t = zi * v;
            s += t;
            m = m.max(t);
        }
        if let Some(q) = q {
            s += q[n];
            m = m.max(q[n]);
        }
        sums.push(s);
        maxima.push(m);
    }
    Ok(AggregateSeries {
        sums,
        maxima,
        weights: w.to_vec(),
        fingerprint: hex_digest(&matrix.content_bytes()),
    })
}

/// Prefix maxima `M_n = max(Y_1, ..., Y_n)`.
pub fn running_maxima(series: &[f64]) -> Vec<f64> {
    series
        .iter()
        .scan(f64::NEG_INFINITY, |acc, &v| {
            *acc = acc.max(v);
            Some(*acc)
        })
        .collect()
}

/// `sum_j θ_j z_j^k1 / sum_j z_j^k1`.
pub fn predicted_theta(thetas: &[f64], zs: &[f64], k1: f64) -> Result<f64> {
    if thetas.is_empty() || thetas.len() != zs.len() {
        return Err(Error::Domain(format!(
            "need equally long nonempty θ and z lists, got {} and {}",
            thetas.len(),
            zs.len()
        )));
    }
    if thetas.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::Domain("extremal indices must lie in [0, 1]".into()));
    }
    if zs.iter().any(|z| !(*z > 0.0 && z.is_finite())) || !(k1 > 0.0) {
        return Err(Error::Domain("weights and k1 must be positive".into()));
    }
    let (num, den) = thetas.iter().zip(zs).fold((0.0, 0.0), |(num, den), (t, z)| {
        let w = z.powf(k1);
        (num + t * w, den + w)
    });
    Ok(num / den)
}

/// One `(n, y)` cell of the condition report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionPoint {
    pub n: usize,
    pub y: f64,
    pub threshold: f64,
    /// Estimated `sum_{j<d} P{z_j M^(j) > u, z_{j+1} M^(j+1) <= u, ..., z_d M^(d) <= u}`.
    pub left: f64,
    /// Estimated `P{z_d M^(d) <= u}`.
    pub right: f64,
    pub ratio: f64,
    /// 95% binomial half-width of `left`.
    pub left_half_width: f64,
    pub wide: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub replicates: usize,
    pub points: Vec<ConditionPoint>,
    /// No replicate produced a single left-side event.
    pub identically_zero: bool,
    /// Per y: ratio at the largest n minus ratio at the smallest n.
    pub trend: Vec<(f64, f64)>,
}

/// Monte Carlo estimate of both sides of the condition under which
/// dependent dominating columns pass on the extremal index of the last one.
///
/// Thresholds are `u_n = y n^(1/k1)` for every `y` in `y_grid` and every
/// prefix length in `n_grid`.
pub fn check_cluster_condition(
    replicates: &[SeriesMatrix],
    z: &WeightVector,
    k1: f64,
    y_grid: &[f64],
    n_grid: &[usize],
) -> Result<ConditionReport> {
    let Some(first) = replicates.first() else {
        return Err(Error::InsufficientData { need: 1, got: 0 });
    };
    let d = first.dominating();
    if d < 2 {
        return Err(Error::Config("condition needs at least two dominating columns".into()));
    }
    if replicates.iter().any(|m| m.dominating() != d) {
        return Err(Error::Config("replicates disagree on the dominating count".into()));
    }
    if z.len() < d {
        return Err(Error::Config("weights do not cover the dominating columns".into()));
    }
    let rows = replicates.iter().map(SeriesMatrix::rows).min().unwrap_or(0);
    if let Some(&n) = n_grid.iter().find(|&&n| n == 0 || n > rows) {
        return Err(Error::Config(format!("prefix length {n} outside 1..={rows}")));
    }
    let zs = &z.as_slice()[..d];
    let mut left = vec![0usize; n_grid.len() * y_grid.len()];
    let mut right = vec![0usize; n_grid.len() * y_grid.len()];
    for m in replicates {
        let prefix: Vec<Vec<f64>> = (0..d).map(|j| running_maxima(m.column(j))).collect();
        for (a, &n) in n_grid.iter().enumerate() {
            let weighted: Vec<f64> = (0..d).map(|j| zs[j] * prefix[j][n - 1]).collect();
            for (b, &y) in y_grid.iter().enumerate() {
                let u = y * (n as f64).powf(1.0 / k1);
                let cell = a * y_grid.len() + b;
                for j in 0..d - 1 {
                    if weighted[j] > u && weighted[j + 1..].iter().all(|&w| w <= u) {
                        left[cell] += 1;
                    }
                }
                if weighted[d - 1] <= u {
                    right[cell] += 1;
                }
            }
        }
    }
    let r = replicates.len() as f64;
    let mut points = Vec::new();
    for (a, &n) in n_grid.iter().enumerate() {
        for (b, &y) in y_grid.iter().enumerate() {
            let cell = a * y_grid.len() + b;
            let l = left[cell] as f64 / r;
            let rt = right[cell] as f64 / r;
            let hw = 1.96 * (l * (1.0 - l) / r).sqrt();
            points.push(ConditionPoint {
                n,
                y,
                threshold: y * (n as f64).powf(1.0 / k1),
                left: l,
                right: rt,
                ratio: if rt > 0.0 { l / rt } else { f64::INFINITY },
                left_half_width: hw,
                wide: l > 0.0 && hw > l,
            });
        }
    }
    let trend = y_grid
        .iter()
        .map(|&y| {
            let of_y: Vec<&ConditionPoint> = points.iter().filter(|p| p.y == y).collect();
            let lo = of_y.iter().min_by_key(|p| p.n).map_or(0.0, |p| p.ratio);
            let hi = of_y.iter().max_by_key(|p| p.n).map_or(0.0, |p| p.ratio);
            (y, hi - lo)
        })
        .collect();
    Ok(ConditionReport {
        replicates: replicates.len(),
        identically_zero: left.iter().all(|&c| c == 0),
        points,
        trend,
    })
}

/// Two-column `sum,max` CSV preceded by `# key=value` metadata lines.
pub fn write_aggregate_csv<W: Write>(series: &AggregateSeries, meta: &[(&str, String)], mut w: W) -> Result<()> {
    let weights: Vec<String> = series.weights.iter().map(f64::to_string).collect();
    writeln!(w, "# weights={}", weights.join(" "))?;
    writeln!(w, "# fingerprint={}", series.fingerprint)?;
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "sum,max")?;
    for (s, m) in series.sums.iter().zip(&series.maxima) {
        writeln!(w, "{s},{m}")?;
    }
    Ok(())
}

/// Reads the CSV written by [`write_aggregate_csv`].
pub fn read_aggregate_csv<R: std::io::BufRead>(r: R) -> Result<AggregateSeries> {
    let mut out = AggregateSeries { sums: vec![], maxima: vec![], weights: vec![], fingerprint: String::new() };
    let mut header = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(meta) = t.strip_prefix('#') {
            match meta.trim().split_once('=') {
                Some(("weights", v)) => {
                    out.weights = v
                        .split_whitespace()
                        .map(|x| x.parse().map_err(|_| Error::Parse(format!("line {}: bad weight {x:?}", i + 1))))
                        .collect::<Result<_>>()?;
                }
                Some(("fingerprint", v)) => out.fingerprint = v.to_string(),
                _ => {}
            }
            continue;
        }
        if !header {
            if t != "sum,max" {
                return Err(Error::Parse(format!("line {}: expected header sum,max", i + 1)));
            }
            header = true;
            continue;
        }
        let (s, m) = t
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected two fields", i + 1)))?;
        let p = |x: &str| x.trim().parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad number {x:?}", i + 1)));
        out.sums.push(p(s)?);
        out.maxima.push(p(m)?);
    }
    Ok(out)
}
