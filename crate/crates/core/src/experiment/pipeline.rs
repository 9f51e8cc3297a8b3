use rayon::prelude::*;

use super::report::{Claim, EstimateRow, HillPlot, PipelineKind, Rule, VerdictReport};
use super::ScenarioConfig;
use crate::aggregation::{check_cluster_condition, predicted_theta, row_aggregate, WeightVector};
use crate::error::{Error, Result};
use crate::estimators::{
    blocks_default_threshold, blocks_theta, default_block_len, level_theta, hill_estimate, hill_plot_for,
    intervals_theta, quantile, stationarity_diagnostic, EstimationConfig, MIN_LEVEL_REPLICATES,
};
use crate::generators::{
    gen_matrix, ColumnRole, ColumnSpec, DependenceScenario, DominatingCount, MatrixConfig, PersonalizationLaw,
    ScenarioKind,
};
use crate::network::{build_community_graph, root_score_series, CommunitySpec, GraphConfig, Overlap, RootMode};
use crate::seed::{self, label};

const SERIES: [&str; 2] = ["sum", "max"];

/// Point estimates for one aggregate series.
#[derive(Debug, Clone, Copy)]
struct SeriesEstimates {
    k_hat: f64,
    intervals: f64,
    blocks: f64,
}

fn estimate_series(x: &[f64], cfg: &EstimationConfig) -> Result<SeriesEstimates> {
    let n = x.len();
    let k_hat = hill_estimate(x, cfg.hill.m_for(n))?;
    let intervals = intervals_theta(x, quantile(x, cfg.threshold_quantile)?)?.theta;
    let b = cfg.block_len.unwrap_or_else(|| default_block_len(n));
    let blocks = blocks_theta(x, blocks_default_threshold(x, b)?, b)?.theta;
    Ok(SeriesEstimates { k_hat, intervals, blocks })
}

/// Mean and normal-approximation 95% interval of the mean.
fn mean_ci(v: &[f64]) -> (f64, [f64; 2]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, [mean, mean]);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let hw = 1.96 * (var / n).sqrt();
    (mean, [mean - hw, mean + hw])
}

struct Replicate {
    d: usize,
    est: [SeriesEstimates; 2],
    reject: [bool; 2],
    ks: [f64; 2],
    /// Largest left-side frequency of the dependence condition, and whether
    /// it was identically zero (cumulative scenarios only).
    condition: Option<(f64, bool)>,
    /// Extra per-replicate rows (e.g. full-solve gaps).
    extra: Vec<EstimateRow>,
    series: Option<[Vec<f64>; 2]>,
}

impl Replicate {
    fn rows(&self, r: usize, out: &mut Vec<EstimateRow>) {
        for (s, e) in SERIES.iter().zip(&self.est) {
            for (estimator, value) in [("hill", e.k_hat), ("intervals", e.intervals), ("blocks", e.blocks)] {
                out.push(EstimateRow {
                    replicate: Some(r),
                    series: (*s).into(),
                    estimator: estimator.into(),
                    d: Some(self.d),
                    y: None,
                    value,
                });
            }
        }
        for (s, &ks) in SERIES.iter().zip(&self.ks) {
            out.push(EstimateRow {
                replicate: Some(r),
                series: (*s).into(),
                estimator: "odd_even_ks".into(),
                d: Some(self.d),
                y: None,
                value: ks,
            });
        }
        out.extend(self.extra.iter().cloned());
    }
}

/// The matrix configuration of replicate `r`; with `fixed_d` the dominating
/// count is pinned (baseline runs use their own seed stream).
pub fn array_matrix_config(cfg: &ScenarioConfig, r: usize, fixed_d: Option<usize>) -> Result<MatrixConfig> {
    let scenario = cfg
        .scenario
        .clone()
        .ok_or_else(|| Error::Config("array pipeline needs a [scenario] table".into()))?;
    let (scenario, seed) = match fixed_d {
        None => (scenario, seed::derive(cfg.seed, &[label::REPLICATE, r as u64])),
        Some(d) => (
            DependenceScenario { kind: scenario.kind, d: DominatingCount::Fixed { d } },
            seed::derive(cfg.seed, &[label::BASELINE, d as u64, r as u64]),
        ),
    };
    Ok(MatrixConfig {
        profile: cfg.profile.clone(),
        scenario,
        rows: cfg.rows,
        row_law: cfg.row_law,
        chi: Some(cfg.chi),
        personalization: None,
        seed,
    })
}

fn array_replicate(cfg: &ScenarioConfig, r: usize, fixed_d: Option<usize>, keep: bool) -> Result<Replicate> {
    let mcfg = array_matrix_config(cfg, r, fixed_d)?;
    let weights = cfg.weights.as_ref().expect("validated");
    let matrix = gen_matrix(&mcfg)?;
    let agg = row_aggregate(&matrix, weights, false)?;
    let est = [estimate_series(&agg.sums, &cfg.estimation)?, estimate_series(&agg.maxima, &cfg.estimation)?];
    let st = [stationarity_diagnostic(&agg.sums)?, stationarity_diagnostic(&agg.maxima)?];
    let condition = if mcfg.scenario.kind == ScenarioKind::Cumulative {
        let n_grid = [(cfg.rows / 10).max(1), cfg.rows];
        let rep = check_cluster_condition(std::slice::from_ref(&matrix), weights, cfg.profile.k1, &cfg.y_grid, &n_grid)?;
        let largest = rep.points.iter().map(|p| p.left).fold(0.0, f64::max);
        Some((largest, rep.identically_zero))
    } else {
        None
    };
    Ok(Replicate {
        d: matrix.dominating(),
        est,
        reject: [st[0].reject, st[1].reject],
        ks: [st[0].statistic, st[1].statistic],
        condition,
        extra: Vec::new(),
        series: keep.then_some([agg.sums, agg.maxima]),
    })
}

fn run_replicates(
    n: usize,
    keep: impl Fn(usize) -> bool + Sync,
    f: impl Fn(usize, bool) -> Result<Replicate> + Sync,
) -> Result<Vec<Replicate>> {
    (0..n).into_par_iter().map(|r| f(r, keep(r))).collect()
}

/// Level-based estimates over the y-grid; `Err` carries the first failure.
fn level_grid(series: &[&[f64]], k1: f64, y_grid: &[f64]) -> Result<Vec<f64>> {
    y_grid.iter().map(|&y| level_theta(series, k1, y).map(|e| e.raw)).collect()
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn common_claims(report: &mut VerdictReport, reps: &[Replicate], k1: f64, cfg: &ScenarioConfig, overlap_rule: bool) {
    let tol = cfg.tolerances;
    let mut cis = Vec::new();
    let mut means = Vec::new();
    for (i, s) in SERIES.iter().enumerate() {
        let ks: Vec<f64> = reps.iter().map(|r| r.est[i].k_hat).collect();
        let (mean, ci) = mean_ci(&ks);
        report.push_claim(Claim::within(
            &format!("tail_index_{s}"),
            &format!("mean Hill estimate of the {s} aggregates equals the minimum tail index"),
            k1,
            mean,
            ci,
            tol.tail_index,
        ));
        cis.push(ci);
        means.push(mean);
    }
    let diff = means[0] - means[1];
    let desc = "sums and maxima share one tail index";
    if overlap_rule {
        report.push_claim(Claim::overlap("tail_agreement", desc, cis[0], cis[1], diff));
    } else {
        let d: Vec<f64> = reps.iter().map(|r| r.est[0].k_hat - r.est[1].k_hat).collect();
        let (_, ci) = mean_ci(&d);
        report.push_claim(Claim::within("tail_agreement", desc, 0.0, diff, ci, tol.tail_agreement));
    }
}

fn theta_claims(report: &mut VerdictReport, reps: &[Replicate], predicted: f64, tol: f64, note: &str) {
    for (i, s) in SERIES.iter().enumerate() {
        let th: Vec<f64> = reps.iter().map(|r| r.est[i].intervals).collect();
        let (mean, ci) = mean_ci(&th);
        report.push_claim(
            Claim::within(
                &format!("extremal_index_{s}"),
                &format!("mean intervals estimate of the {s} aggregates matches the predicted extremal index"),
                predicted,
                mean,
                ci,
                tol,
            )
            .with_note(note),
        );
    }
}

fn hill_plots(report: &mut VerdictReport, reps: &[Replicate], cfg: &EstimationConfig) -> Result<()> {
    if let Some([sums, maxima]) = reps.first().and_then(|r| r.series.as_ref()) {
        for (s, x) in SERIES.iter().zip([sums, maxima]) {
            report.hill_plots.push(HillPlot { series: (*s).into(), points: hill_plot_for(x, &cfg.hill)? });
        }
    }
    Ok(())
}

/// Pooled level-based rows for both series; failures are skipped.
fn level_rows(report: &mut VerdictReport, reps: &[Replicate], k1: f64, y_grid: &[f64], d: Option<usize>) {
    for (i, s) in SERIES.iter().enumerate() {
        let series: Vec<&[f64]> = reps.iter().filter_map(|r| r.series.as_ref().map(|x| x[i].as_slice())).collect();
        for &y in y_grid {
            if let Ok(e) = level_theta(&series, k1, y) {
                report.estimates.push(EstimateRow {
                    replicate: None,
                    series: (*s).into(),
                    estimator: "level".into(),
                    d,
                    y: Some(y),
                    value: e.raw,
                });
            }
        }
    }
}

/// Generates, aggregates and estimates every replicate of an array
/// scenario and judges the claims that apply to it.
pub fn run_array_pipeline(cfg: &ScenarioConfig) -> Result<VerdictReport> {
    if cfg.is_network() {
        return Err(Error::Config("configuration describes a network experiment".into()));
    }
    cfg.validate()?;
    let scenario = cfg.scenario.clone().expect("validated");
    let weights = cfg.weights.clone().expect("validated");
    let k1 = cfg.profile.k1;
    let pooled = cfg.replicates >= MIN_LEVEL_REPLICATES;
    let reps = run_replicates(cfg.replicates, |r| pooled || r == 0, |r, keep| array_replicate(cfg, r, None, keep))?;

    let mut report = VerdictReport::new(cfg.name.clone(), PipelineKind::Array, cfg.fingerprint()?, cfg.seed, cfg.replicates);
    for (r, rep) in reps.iter().enumerate() {
        rep.rows(r, &mut report.estimates);
    }
    common_claims(&mut report, &reps, k1, cfg, false);

    match (&scenario.d, scenario.kind) {
        (DominatingCount::Fixed { d }, kind) if kind != ScenarioKind::Alternating => {
            let d = *d;
            let thetas = cfg.profile.dominating_thetas();
            let (predicted, note) = match kind {
                ScenarioKind::Independent => (
                    predicted_theta(&thetas[..d], &weights.as_slice()[..d], k1)?,
                    "weighted combination of the dominating extremal indices",
                ),
                ScenarioKind::Identical => (thetas[0], "identical dominating columns keep the first column's index"),
                _ => (
                    thetas[0],
                    "every cumulative column is a multiple of the first, so the last one has the first one's index",
                ),
            };
            theta_claims(&mut report, &reps, predicted, cfg.tolerances.theta, note);
        }
        _ => {}
    }

    if scenario.kind == ScenarioKind::Alternating {
        for (i, s) in SERIES.iter().enumerate() {
            let rate = reps.iter().filter(|r| r.reject[i]).count() as f64 / reps.len() as f64;
            report.push_claim(Claim::at_least(
                &format!("nonstationary_{s}"),
                &format!("odd and even {s} aggregates differ in law (rejection rate of the KS test)"),
                rate,
                cfg.tolerances.stationarity_power,
            ));
        }
    }

    if scenario.kind == ScenarioKind::Cumulative {
        let largest = reps.iter().filter_map(|r| r.condition.map(|c| c.0)).fold(0.0, f64::max);
        let zero = reps.iter().all(|r| r.condition.is_some_and(|c| c.1));
        report.push_claim(Claim::identically_zero(
            "condition_left_zero",
            "no replicate has an earlier dominating maximum above the level while all later ones stay below",
            largest,
            zero,
        ));
    }

    if pooled {
        level_rows(&mut report, &reps, k1, &cfg.y_grid, None);
    }

    if let DominatingCount::Random { support, .. } = &scenario.d {
        random_d_claims(&mut report, cfg, &reps, support)?;
    }

    hill_plots(&mut report, &reps, &cfg.estimation)?;
    Ok(report)
}

fn random_d_claims(report: &mut VerdictReport, cfg: &ScenarioConfig, reps: &[Replicate], support: &[usize]) -> Result<()> {
    let k1 = cfg.profile.k1;
    let mut ds: Vec<usize> = support.to_vec();
    ds.sort_unstable();
    ds.dedup();
    let baselines: Vec<(usize, Vec<Replicate>)> = ds
        .iter()
        .map(|&d| Ok((d, run_replicates(cfg.replicates, |_| true, |r, keep| array_replicate(cfg, r, Some(d), keep))?)))
        .collect::<Result<_>>()?;
    for (d, b) in &baselines {
        level_rows(report, b, k1, &cfg.y_grid, Some(*d));
    }
    for (i, s) in SERIES.iter().enumerate() {
        let id = format!("y_dependence_{s}");
        let desc = format!(
            "Level-based estimate of the {s} aggregates varies with the level constant y beyond the fixed-d baseline"
        );
        let pick = |rs: &[Replicate]| -> Vec<Vec<f64>> { rs.iter().filter_map(|r| r.series.as_ref().map(|x| x[i].clone())).collect() };
        let random = pick(reps);
        let random_refs: Vec<&[f64]> = random.iter().map(Vec::as_slice).collect();
        let mut baseline = 0.0f64;
        let mut failure = None;
        for (d, b) in &baselines {
            let series = pick(b);
            let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
            match level_grid(&refs, k1, &cfg.y_grid) {
                Ok(v) => baseline = baseline.max(spread(&v)),
                Err(e) => failure = Some(format!("baseline d = {d}: {e}")),
            }
        }
        let claim = match (level_grid(&random_refs, k1, &cfg.y_grid), failure) {
            (Ok(v), None) => Claim::exceeds_multiple(&id, &desc, spread(&v), baseline, cfg.tolerances.y_spread_factor)
                .with_note("spread = max - min of the estimate over the y-grid; reference = largest fixed-d spread"),
            (Err(e), _) => Claim::failed(&id, &desc, Rule::ExceedsMultiple, cfg.tolerances.y_spread_factor, e.to_string()),
            (_, Some(f)) => Claim::failed(&id, &desc, Rule::ExceedsMultiple, cfg.tolerances.y_spread_factor, f),
        };
        report.push_claim(claim);
    }
    Ok(())
}

impl ScenarioConfig {
    /// Graph configuration of replicate `r` of a network scenario.
    pub fn network_graph_config(&self, r: usize) -> Result<GraphConfig> {
        let net = self.network.as_ref().ok_or_else(|| Error::Config("no [network] table".into()))?;
        let d = self.profile.dominating_count();
        let size = net.community_size.unwrap_or(self.rows);
        let mut communities: Vec<CommunitySpec> = self
            .profile
            .per_column
            .iter()
            .enumerate()
            .map(|(i, c)| CommunitySpec {
                size,
                column: ColumnSpec {
                    tail_index: c.tail_index,
                    extremal_index: c.extremal_index,
                    role: if i < d { ColumnRole::Dominating } else { ColumnRole::NonDominating },
                },
                overlap: None,
            })
            .collect();
        for o in &net.overlaps {
            let target = communities
                .get_mut(o.community)
                .ok_or_else(|| Error::Config(format!("overlap names missing community {}", o.community)))?;
            target.overlap = Some(Overlap { with: o.with, members: o.members });
        }
        Ok(GraphConfig {
            n_roots: self.rows,
            communities,
            attachment: self.row_law,
            dominating: net.dominating,
            overlap_mode: net.overlap_mode,
            personalization: net
                .personalization
                .unwrap_or(PersonalizationLaw::Uniform { value: (1.0 - net.c) / self.rows as f64 }),
            seed: seed::derive(self.seed, &[label::REPLICATE, r as u64]),
        })
    }
}

fn network_replicate(cfg: &ScenarioConfig, r: usize, keep: bool) -> Result<Replicate> {
    let net = cfg.network.as_ref().expect("validated");
    let g = build_community_graph(&cfg.network_graph_config(r)?)?;
    let agg = root_score_series(&g, net.c, RootMode::OneStep)?;
    let est = [estimate_series(&agg.sums, &cfg.estimation)?, estimate_series(&agg.maxima, &cfg.estimation)?];
    let st = [stationarity_diagnostic(&agg.sums)?, stationarity_diagnostic(&agg.maxima)?];
    let mut extra = Vec::new();
    if net.full_solve {
        let full = root_score_series(&g, net.c, RootMode::FullSolve { tol: 1e-10 })?;
        let gap = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
        };
        for (s, (a, b)) in SERIES.iter().zip([(&agg.sums, &full.sums), (&agg.maxima, &full.maxima)]) {
            extra.push(EstimateRow {
                replicate: Some(r),
                series: (*s).into(),
                estimator: "full_solve_relative_gap".into(),
                d: None,
                y: None,
                value: gap(a, b),
            });
        }
    }
    Ok(Replicate {
        d: cfg.profile.dominating_count(),
        est,
        reject: [st[0].reject, st[1].reject],
        ks: [st[0].statistic, st[1].statistic],
        condition: None,
        extra,
        series: keep.then_some([agg.sums, agg.maxima]),
    })
}

/// Builds graphs, extracts the one-step root sequences of both recursions
/// and judges tail and extremal index claims.
pub fn run_network_pipeline(cfg: &ScenarioConfig) -> Result<VerdictReport> {
    let net = cfg.network.as_ref().ok_or_else(|| Error::Config("network pipeline needs a [network] table".into()))?;
    cfg.validate()?;
    let k1 = cfg.profile.k1;
    let reps = run_replicates(cfg.replicates, |r| r == 0, |r, keep| network_replicate(cfg, r, keep))?;

    let mut report = VerdictReport::new(cfg.name.clone(), PipelineKind::Network, cfg.fingerprint()?, cfg.seed, cfg.replicates);
    for (r, rep) in reps.iter().enumerate() {
        rep.rows(r, &mut report.estimates);
    }
    common_claims(&mut report, &reps, k1, cfg, true);

    let thetas = cfg.profile.dominating_thetas();
    let d = thetas.len();
    if d == 1 {
        theta_claims(&mut report, &reps, thetas[0], cfg.tolerances.theta, "unique dominating community");
    } else if net.dominating == crate::network::DominatingAttachment::All {
        let z = WeightVector::constant(net.c, d)?;
        let predicted = predicted_theta(&thetas, z.as_slice(), k1)?;
        theta_claims(&mut report, &reps, predicted, cfg.tolerances.theta, "independent dominating communities, equal weights c");
    }
    hill_plots(&mut report, &reps, &cfg.estimation)?;
    Ok(report)
}

/// Runs whichever pipeline the configuration describes.
pub fn run(cfg: &ScenarioConfig) -> Result<VerdictReport> {
    if cfg.is_network() {
        run_network_pipeline(cfg)
    } else {
        run_array_pipeline(cfg)
    }
}
