//! Scenario configuration, verification pipelines and verdict reports.
//!
//! A scenario is a TOML file (see `configs/` at the repository root). The
//! same file drives the array pipeline and, when it has a `[network]`
//! table, the network pipeline. Every number a pipeline emits is a function
//! of the file and its seed.

mod pipeline;
mod report;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregation::{hex_digest, WeightVector};
use crate::error::{Error, Result};
use crate::estimators::{EstimationConfig, MIN_LEVEL_REPLICATES};
use crate::generators::{check_domination, DependenceScenario, DominatingCount, PersonalizationLaw, RowLengthLaw, ScenarioKind};
use crate::heavy_tail::{chi_upper_bound, TailProfile};
use crate::network::{DominatingAttachment, OverlapMode};

pub use pipeline::{run, run_network_pipeline, run_array_pipeline, array_matrix_config};
pub use report::{
    emit_report, Claim, EstimateRow, Format, HillPlot, PipelineKind, Rule, VerdictReport,
};

fn one() -> usize {
    1
}

fn default_y_grid() -> Vec<f64> {
    vec![0.8, 1.0, 1.5]
}

fn default_c() -> f64 {
    0.85
}

/// Verdict tolerances. They are copied into every claim they govern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Allowed `|k̂ - k1|` for the mean Hill estimate.
    pub tail_index: f64,
    /// Allowed gap between the mean Hill estimates of sums and maxima.
    pub tail_agreement: f64,
    /// Allowed `|θ̂ - θ|` for the mean intervals estimate.
    pub theta: f64,
    /// The random-d spread across the y-grid must exceed this multiple of
    /// the fixed-d baseline spread.
    pub y_spread_factor: f64,
    /// Minimum rejection rate of the stationarity test on alternating
    /// scenarios.
    pub stationarity_power: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tail_index: 0.15, tail_agreement: 0.1, theta: 0.1, y_spread_factor: 2.0, stationarity_power: 0.9 }
    }
}

/// Members of `community` shared with the earlier community `with`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapSpec {
    pub community: usize,
    pub with: usize,
    pub members: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkBlock {
    /// Damping factor; every weight of the root sums equals it.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub dominating: DominatingAttachment,
    /// Members per community; defaults to the number of roots.
    #[serde(default)]
    pub community_size: Option<usize>,
    #[serde(default)]
    pub overlaps: Vec<OverlapSpec>,
    #[serde(default)]
    pub overlap_mode: OverlapMode,
    /// Root values `Q_i`; defaults to `(1 - c) / n` for every root.
    #[serde(default)]
    pub personalization: Option<PersonalizationLaw>,
    /// Also solve both recursions on the whole graph and report how far the
    /// solutions are from the one-step sequences.
    #[serde(default)]
    pub full_solve: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replicates: usize,
    /// Rows of the array, or roots of the graph.
    pub rows: usize,
    /// Column laws; in the network pipeline, community laws.
    pub profile: TailProfile,
    /// Required by the array pipeline.
    #[serde(default)]
    pub scenario: Option<DependenceScenario>,
    /// Required by the array pipeline.
    #[serde(default)]
    pub weights: Option<WeightVector>,
    /// Row-length law; in the network pipeline, the in-degree law.
    pub row_law: RowLengthLaw,
    /// Row-cap exponent.
    pub chi: f64,
    #[serde(default = "default_y_grid")]
    pub y_grid: Vec<f64>,
    #[serde(default)]
    pub estimation: EstimationConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub network: Option<NetworkBlock>,
    /// Output directory used when none is given on the command line.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex digest of the canonical JSON form, seed and replicate count
    /// included.
    pub fn fingerprint(&self) -> Result<String> {
        Ok(hex_digest(&serde_json::to_vec(self)?))
    }

    pub fn is_network(&self) -> bool {
        self.network.is_some()
    }

    pub fn scenario_or_default(&self) -> DependenceScenario {
        self.scenario.clone().unwrap_or_else(|| {
            DependenceScenario::fixed(ScenarioKind::Independent, self.profile.dominating_count())
        })
    }

    /// Checks every invariant before any computation runs.
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.rows == 0 {
            return Err(Error::Config("rows must be at least 1".into()));
        }
        self.profile.validate()?;
        self.row_law.validate()?;
        let chi_max = chi_upper_bound(self.profile.k1, self.profile.k)?;
        if !(self.chi > 0.0 && self.chi < chi_max) {
            return Err(Error::Config(format!("chi = {} outside (0, {chi_max})", self.chi)));
        }
        let dom = check_domination(self.profile.k1, self.row_law.alpha, self.chi)?;
        if !dom.pass {
            return Err(Error::Config(format!(
                "row lengths are not dominated: chi * alpha - 1 = {} <= 0",
                dom.margin
            )));
        }
        if self.y_grid.is_empty() || self.y_grid.iter().any(|y| !(*y > 0.0 && y.is_finite())) {
            return Err(Error::Config("y-grid must be nonempty and positive".into()));
        }
        self.estimation.validate()?;
        match &self.network {
            Some(net) => {
                if !(net.c > 0.0 && net.c < 1.0) {
                    return Err(Error::Config(format!("damping factor {} outside (0, 1)", net.c)));
                }
                if net.community_size == Some(0) {
                    return Err(Error::Config("community size must be positive".into()));
                }
                self.network_graph_config(0)?.validate()?;
            }
            None => {
                let scenario = self
                    .scenario
                    .as_ref()
                    .ok_or_else(|| Error::Config("array pipeline needs a [scenario] table".into()))?;
                let weights = self
                    .weights
                    .as_ref()
                    .ok_or_else(|| Error::Config("array pipeline needs weights".into()))?;
                if weights.len() < self.profile.len() {
                    return Err(Error::Config(format!(
                        "{} weights for {} columns",
                        weights.len(),
                        self.profile.len()
                    )));
                }
                if scenario.d.is_random() && self.replicates < MIN_LEVEL_REPLICATES {
                    return Err(Error::Config(format!(
                        "random dominating count needs at least {MIN_LEVEL_REPLICATES} replicates"
                    )));
                }
                if let DominatingCount::Random { support, .. } = &scenario.d {
                    if scenario.kind == ScenarioKind::Cumulative && support.contains(&1) {
                        return Err(Error::Config("cumulative scenario needs d >= 2 throughout".into()));
                    }
                }
                effective_check(self)?;
            }
        }
        Ok(())
    }
}

/// Runs the generator's own checks on replicate 0 without generating.
fn effective_check(cfg: &ScenarioConfig) -> Result<()> {
    let m = array_matrix_config(cfg, 0, None)?;
    crate::generators::effective_row_law(&m, m.scenario.d.max())?;
    Ok(())
}
