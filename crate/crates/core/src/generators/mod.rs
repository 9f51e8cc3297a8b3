//! Construction of the doubly-indexed array `Y[n, i]` with row lengths `N_n`.
//!
//! Each column is a stationary sequence with a prescribed tail index and
//! extremal index. Stationarity and the extremal index come from a
//! max-autoregressive recursion on unit Fréchet innovations,
//!
//! ```text
//! X_m = max((1 - θ) X_{m-1}, θ Z_m),   Z_m ~ Fréchet(1)
//! ```
//!
//! whose stationary marginal is again unit Fréchet and whose extremal index
//! is `θ`. A monotone probability-integral transform then maps the marginal
//! onto Pareto(k) without changing the clustering of exceedances.
//!
//! Dominating columns (tail index `k1`) come first. Across them a
//! [`DependenceScenario`] fixes the joint structure: independent, identical
//! copies, cumulative sums, or alternating duplication of odd rows.

mod io;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heavy_tail::{chi_upper_bound, row_cap, ParetoLaw, TailProfile};
use crate::seed::{self, label, Rng};

pub use io::{read_matrix_binary, read_matrix_csv, write_matrix_binary, write_matrix_csv};

/// Steps discarded before a max-autoregressive column starts emitting.
pub const BURN_IN: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Dominating,
    NonDominating,
}

/// Law of one column of the array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub tail_index: f64,
    pub extremal_index: f64,
    pub role: ColumnRole,
}

impl ColumnSpec {
    /// Coefficient `1 - θ` of the max-autoregressive recursion.
    pub fn dependence_param(&self) -> f64 {
        1.0 - self.extremal_index
    }
}

/// Law of the row lengths: `N = floor(U^(-1/alpha))` clamped to `[min, cap]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowLengthLaw {
    pub alpha: f64,
    #[serde(default)]
    pub cap: Option<usize>,
    #[serde(default = "one")]
    pub min: usize,
}

fn one() -> usize {
    1
}

impl RowLengthLaw {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, cap: None, min: 1 }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn with_min(mut self, min: usize) -> Self {
        self.min = min;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::Config(format!("row-length tail index must be positive, got {}", self.alpha)));
        }
        if self.min == 0 {
            return Err(Error::Config("row-length minimum must be at least 1".into()));
        }
        if let Some(cap) = self.cap {
            if cap < self.min {
                return Err(Error::Config(format!("row-length cap {cap} below minimum {}", self.min)));
            }
        }
        Ok(())
    }

    pub fn draw(&self, rng: &mut Rng) -> usize {
        let u: f64 = rng.random();
        // Tiny alpha can overflow to +inf; saturate and let the cap decide.
        let raw = (1.0 - u).powf(-1.0 / self.alpha).floor();
        let raw = if raw >= usize::MAX as f64 { usize::MAX } else { raw as usize };
        let capped = self.cap.map_or(raw, |c| raw.min(c));
        capped.max(self.min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Mutually independent dominating columns.
    Independent,
    /// Every dominating column aliases column 1.
    Identical,
    /// Dominating column `i` is the sum of columns `1..i-1`.
    Cumulative,
    /// Odd rows duplicate column 1 across the dominating columns; even rows
    /// keep independent values.
    Alternating,
}

/// Number of dominating columns, fixed or drawn once per replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum DominatingCount {
    Fixed { d: usize },
    Random { support: Vec<usize>, probabilities: Vec<f64> },
}

impl DominatingCount {
    pub fn max(&self) -> usize {
        match self {
            Self::Fixed { d } => *d,
            Self::Random { support, .. } => support.iter().copied().max().unwrap_or(0),
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Self::Random { .. })
    }

    fn validate(&self, columns: usize) -> Result<()> {
        match self {
            Self::Fixed { d } => {
                if *d == 0 {
                    return Err(Error::Config("dominating count must be at least 1".into()));
                }
            }
            Self::Random { support, probabilities } => {
                if support.is_empty() || support.len() != probabilities.len() {
                    return Err(Error::Config("random dominating count needs matching support and probabilities".into()));
                }
                if support.iter().any(|&d| d == 0 || d >= columns) {
                    return Err(Error::Config(format!(
                        "random dominating count support must lie in 1..{}",
                        columns.saturating_sub(1)
                    )));
                }
                let total: f64 = probabilities.iter().sum();
                if probabilities.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config("dominating count probabilities must be nonnegative and sum to 1".into()));
                }
            }
        }
        Ok(())
    }

    /// Draws the count for one replicate.
    pub fn draw(&self, rng: &mut Rng) -> usize {
        match self {
            Self::Fixed { d } => *d,
            Self::Random { support, probabilities } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (&d, &p) in support.iter().zip(probabilities) {
                    acc += p;
                    if u < acc {
                        return d;
                    }
                }
                *support.last().expect("validated nonempty")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceScenario {
    pub kind: ScenarioKind,
    pub d: DominatingCount,
}

impl DependenceScenario {
    pub fn fixed(kind: ScenarioKind, d: usize) -> Self {
        Self { kind, d: DominatingCount::Fixed { d } }
    }
}

/// Law of the personalization column `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum PersonalizationLaw {
    /// Every row gets the same value, e.g. `(1 - c) / n` for uniform
    /// preferences.
    Uniform { value: f64 },
    /// i.i.d. Pareto(beta) values.
    Pareto { beta: f64, scale: f64 },
}

impl PersonalizationLaw {
    pub fn generate(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        match *self {
            Self::Uniform { value } => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(Error::Config(format!("personalization value must be nonnegative, got {value}")));
                }
                Ok(vec![value; n])
            }
            Self::Pareto { beta, scale } => {
                let law = ParetoLaw::new(beta, scale)?;
                Ok(gen_iid_column(n, &law, seed))
            }
        }
    }
}

/// Everything needed to generate one replicate of the array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixConfig {
    pub profile: TailProfile,
    pub scenario: DependenceScenario,
    pub rows: usize,
    pub row_law: RowLengthLaw,
    /// Row-cap exponent; when present the row lengths are capped at
    /// `l_N = floor(N^chi)`.
    #[serde(default)]
    pub chi: Option<f64>,
    #[serde(default)]
    pub personalization: Option<PersonalizationLaw>,
    pub seed: u64,
}

/// The array `Y[n, i]` together with its row lengths.
///
/// Columns are stored whole. Cells past a row's length are structural
/// zeros. Dominating columns are active in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMatrix {
    row_lengths: Vec<usize>,
    columns: Vec<Vec<f64>>,
    q: Option<Vec<f64>>,
    dominating: usize,
}

impl SeriesMatrix {
    /// Assembles a matrix, checking shapes and the active-cell invariant.
    pub fn from_parts(
        row_lengths: Vec<usize>,
        columns: Vec<Vec<f64>>,
        q: Option<Vec<f64>>,
        dominating: usize,
    ) -> Result<Self> {
        let rows = row_lengths.len();
        if columns.is_empty() {
            return Err(Error::Domain("matrix needs at least one column".into()));
        }
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Domain("column lengths differ from the number of rows".into()));
        }
        if let Some(q) = &q {
            if q.len() != rows {
                return Err(Error::Domain("personalization column has the wrong length".into()));
            }
            if q.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Domain("personalization values must be finite and nonnegative".into()));
            }
        }
        if dominating > columns.len() {
            return Err(Error::Domain("more dominating columns than columns".into()));
        }
        for (n, &len) in row_lengths.iter().enumerate() {
            if len == 0 || len > columns.len() {
                return Err(Error::Domain(format!("row {} has length {len}", n + 1)));
            }
            if len < dominating {
                return Err(Error::Domain(format!("row {} misses a dominating column", n + 1)));
            }
            for (j, col) in columns.iter().enumerate() {
                let v = col[n];
                if j < len && !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Domain(format!("cell ({}, {}) = {v} is not finite and nonnegative", n + 1, j + 1)));
                }
                if j >= len && v != 0.0 {
                    return Err(Error::Domain(format!("inactive cell ({}, {}) is nonzero", n + 1, j + 1)));
                }
            }
        }
        Ok(Self { row_lengths, columns, q, dominating })
    }

    pub fn rows(&self) -> usize {
        self.row_lengths.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn dominating(&self) -> usize {
        self.dominating
    }

    pub fn row_lengths(&self) -> &[usize] {
        &self.row_lengths
    }

    pub fn max_row_length(&self) -> usize {
        self.row_lengths.iter().copied().max().unwrap_or(0)
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn personalization(&self) -> Option<&[f64]> {
        self.q.as_deref()
    }

    /// Active cells of row `n` (0-based).
    pub fn row(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        self.columns[..self.row_lengths[n]].iter().map(move |c| c[n])
    }

    /// Cell value, zero when inactive.
    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.columns[j][n]
    }

    /// Bytes that identify the content, used for fingerprints.
    pub(crate) fn content_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        io::encode_binary(self, &mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

/// i.i.d. draws from `law`.
pub fn gen_iid_column(n: usize, law: &ParetoLaw, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed, &[]);
    (0..n).map(|_| law.sample(&mut rng)).collect()
}

fn frechet(rng: &mut Rng) -> f64 {
    let u: f64 = rng.random();
    -1.0 / u.ln()
}

/// Unit-Fréchet max-autoregressive path with extremal index `theta`.
pub(crate) fn armax_frechet_path(n: usize, theta: f64, rng: &mut Rng) -> Vec<f64> {
    let a = 1.0 - theta;
    let mut x = frechet(rng);
    for _ in 0..BURN_IN {
        x = (a * x).max(theta * frechet(rng));
    }
    (0..n)
        .map(|_| {
            x = (a * x).max(theta * frechet(rng));
            x
        })
        .collect()
}

/// Maps a unit-Fréchet value onto the Pareto law through the survival
/// function, `S(x) = 1 - exp(-1/x)`.
pub(crate) fn frechet_to_pareto(x: f64, law: &ParetoLaw) -> f64 {
    let s = -(-1.0 / x).exp_m1();
    law.value_at_survival(s)
}

/// Stationary column with Pareto(k) marginals and extremal index `theta`.
pub fn gen_armax_column(n: usize, k: f64, theta: f64, seed: u64) -> Result<Vec<f64>> {
    let law = ParetoLaw::standard(k)?;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Domain(format!("extremal index must lie in (0, 1], got {theta}")));
    }
    let mut rng = seed::rng(seed, &[]);
    Ok(armax_frechet_path(n, theta, &mut rng)
        .into_iter()
        .map(|x| frechet_to_pareto(x, &law))
        .collect())
}

/// Row lengths drawn i.i.d. from `law`.
pub fn gen_row_lengths(rows: usize, law: &RowLengthLaw, seed: u64) -> Result<Vec<usize>> {
    law.validate()?;
    let mut rng = seed::rng(seed, &[]);
    Ok((0..rows).map(|_| law.draw(&mut rng)).collect())
}

/// Outcome of the tail-domination check on row lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationCheck {
    pub pass: bool,
    /// `chi * alpha - 1`; positive when row lengths past `l_n` are
    /// negligible against exceedances of `u_n`.
    pub margin: f64,
}

/// With constant slowly varying parts `P{N_n > l_n} ~ n^(-chi alpha)` and
/// `P{Y > u_n} ~ 1/n`, so the first is negligible iff `chi alpha > 1`.
pub fn check_domination(k1: f64, alpha: f64, chi: f64) -> Result<DominationCheck> {
    if !(k1 > 0.0 && alpha > 0.0 && chi > 0.0) {
        return Err(Error::Config(format!(
            "domination check needs positive k1, alpha, chi (got {k1}, {alpha}, {chi})"
        )));
    }
    let margin = chi * alpha - 1.0;
    Ok(DominationCheck { pass: margin > 0.0, margin })
}

/// Rewrites row lengths given the generated columns, e.g. to make long rows
/// coincide with large values. Results are clamped back into the law's
/// range afterwards.
pub trait RowLengthCoupling {
    fn couple(&self, columns: &[Vec<f64>], lengths: &mut [usize]);
}

/// Column laws in force when `d` columns dominate. Listed dominating columns
/// past `d` fall back to tail index `k`.
pub fn resolve_columns(profile: &TailProfile, d: usize) -> Vec<ColumnSpec> {
    profile
        .per_column
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i < d {
                ColumnSpec { tail_index: profile.k1, extremal_index: c.extremal_index, role: ColumnRole::Dominating }
            } else {
                let tail_index = if c.tail_index == profile.k1 { profile.k } else { c.tail_index };
                ColumnSpec { tail_index, extremal_index: c.extremal_index, role: ColumnRole::NonDominating }
            }
        })
        .collect()
}

pub fn gen_matrix(cfg: &MatrixConfig) -> Result<SeriesMatrix> {
    gen_matrix_inner(cfg, None)
}

pub fn gen_matrix_with_coupling(cfg: &MatrixConfig, coupling: &dyn RowLengthCoupling) -> Result<SeriesMatrix> {
    gen_matrix_inner(cfg, Some(coupling))
}

/// Validates the configuration and returns the effective row-length law.
pub fn effective_row_law(cfg: &MatrixConfig, d: usize) -> Result<RowLengthLaw> {
    cfg.profile.validate()?;
    cfg.row_law.validate()?;
    let columns = cfg.profile.len();
    cfg.scenario.d.validate(columns)?;
    if d > cfg.profile.dominating_count() {
        return Err(Error::Config(format!(
            "{d} dominating columns requested but the profile lists {}",
            cfg.profile.dominating_count()
        )));
    }
    if cfg.scenario.kind == ScenarioKind::Cumulative && d < 2 {
        return Err(Error::Config("cumulative scenario needs at least two dominating columns".into()));
    }
    if cfg.rows == 0 {
        return Err(Error::Config("matrix needs at least one row".into()));
    }
    let mut cap = cfg.row_law.cap.unwrap_or(columns).min(columns);
    if let Some(chi) = cfg.chi {
        let chi_max = chi_upper_bound(cfg.profile.k1, cfg.profile.k)?;
        cap = cap.min(row_cap(cfg.rows, chi, chi_max)?);
    }
    let min = cfg.row_law.min.max(d);
    if min > columns {
        return Err(Error::Config(format!("row minimum {min} exceeds the {columns} available columns")));
    }
    Ok(RowLengthLaw { alpha: cfg.row_law.alpha, cap: Some(cap.max(min)), min })
}

fn gen_matrix_inner(cfg: &MatrixConfig, coupling: Option<&dyn RowLengthCoupling>) -> Result<SeriesMatrix> {
    let d = cfg.scenario.d.draw(&mut seed::rng(cfg.seed, &[label::DOMINATING_COUNT]));
    let law = effective_row_law(cfg, d)?;
    let specs = resolve_columns(&cfg.profile, d);
    let n = cfg.rows;

    let mut columns = Vec::with_capacity(specs.len());
    for (j, spec) in specs.iter().enumerate() {
        let derived = j > 0
            && j < d
            && matches!(cfg.scenario.kind, ScenarioKind::Identical | ScenarioKind::Cumulative);
        if derived {
            columns.push(Vec::new());
            continue;
        }
        let s = seed::derive(cfg.seed, &[label::COLUMN, j as u64]);
        columns.push(gen_armax_column(n, spec.tail_index, spec.extremal_index, s)?);
    }
    match cfg.scenario.kind {
        ScenarioKind::Independent => {}
        ScenarioKind::Identical => {
            for j in 1..d {
                columns[j] = columns[0].clone();
            }
        }
        ScenarioKind::Cumulative => {
            for j in 1..d {
                let mut acc = vec![0.0; n];
                for col in &columns[..j] {
                    for (a, v) in acc.iter_mut().zip(col) {
                        *a += v;
                    }
                }
                columns[j] = acc;
            }
        }
        ScenarioKind::Alternating => {
            // Rows 1, 3, 5, ... (0-based even indices) coincide.
            for j in 1..d {
                for m in (0..n).step_by(2) {
                    columns[j][m] = columns[0][m];
                }
            }
        }
    }

    let mut lengths = gen_row_lengths(n, &law, seed::derive(cfg.seed, &[label::ROW_LENGTHS]))?;
    if let Some(c) = coupling {
        c.couple(&columns, &mut lengths);
        let cap = law.cap.expect("effective law is capped");
        for len in lengths.iter_mut() {
            *len = (*len).clamp(law.min, cap);
        }
    }
    for (m, &len) in lengths.iter().enumerate() {
        for col in columns[len..].iter_mut() {
            col[m] = 0.0;
        }
    }

    let q = cfg
        .personalization
        .map(|p| p.generate(n, seed::derive(cfg.seed, &[label::PERSONALIZATION])))
        .transpose()?;
    SeriesMatrix::from_parts(lengths, columns, q, d)
}
