use std::path::PathBuf;

use proptest::prelude::*;

use tailsim_core::aggregation::{row_aggregate, WeightVector};
use tailsim_core::experiment::{run, run_array_pipeline, run_network_pipeline, PipelineKind, ScenarioConfig, VerdictReport};
use tailsim_core::generators::{gen_matrix, DominatingCount};
use tailsim_core::Error;

fn configs() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

const SMALL: &str = r#"
name = "small"
seed = 5
replicates = 3
rows = 5000
weights = [1.0, 2.0, 1.0]
chi = 0.2

[profile]
k1 = 1.0
k = 3.0
per_column = [
    { tail_index = 1.0, extremal_index = 0.4 },
    { tail_index = 1.0, extremal_index = 0.8 },
    { tail_index = 3.0, extremal_index = 1.0 },
]

[scenario]
kind = "independent"
d = { type = "fixed", d = 2 }

[row_law]
alpha = 6.0
min = 2
"#;

const SMALL_NETWORK: &str = r#"
name = "small-net"
seed = 9
replicates = 2
rows = 2000
chi = 0.4

[profile]
k1 = 1.0
k = 3.0
per_column = [
    { tail_index = 1.0, extremal_index = 0.5 },
    { tail_index = 3.0, extremal_index = 0.9 },
]

[row_law]
alpha = 3.0

[network]
full_solve = true
"#;

fn small() -> ScenarioConfig {
    ScenarioConfig::from_toml_str(SMALL).unwrap()
}

fn json(r: &VerdictReport) -> Vec<u8> {
    let mut out = Vec::new();
    r.write_json(&mut out).unwrap();
    out
}

#[test]
fn shipped_configs_load_and_validate() {
    let paths = configs();
    assert_eq!(paths.len(), 8);
    for p in paths {
        let cfg = ScenarioConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(ScenarioConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap(), cfg);
    }
}

#[test]
fn array_pipeline_is_deterministic() {
    let cfg = small();
    let a = run(&cfg).unwrap();
    assert_eq!(json(&a), json(&run(&cfg).unwrap()));
    assert_eq!(a.pipeline, PipelineKind::Array);
    let ids: Vec<&str> = a.claims.iter().map(|c| c.id.as_str()).collect();
    assert_eq!(
        ids,
        ["tail_index_sum", "tail_index_max", "tail_agreement", "extremal_index_sum", "extremal_index_max"]
    );
    assert_eq!(a.claims[3].predicted, Some((0.4 + 2.0 * 0.8) / 3.0));
    assert_eq!(a.hill_plots.len(), 2);

    let mut other = cfg.clone();
    other.seed += 1;
    let b = run(&other).unwrap();
    assert_ne!(a.fingerprint, b.fingerprint);
    assert_ne!(a.estimates, b.estimates);
}

#[test]
fn replicate_count_does_not_change_earlier_replicates() {
    let cfg = small();
    let mut more = cfg.clone();
    more.replicates = 5;
    let a = run(&cfg).unwrap();
    let b = run(&more).unwrap();
    let first = |r: &VerdictReport| r.estimates.iter().filter(|e| e.replicate == Some(0)).cloned().collect::<Vec<_>>();
    assert_eq!(first(&a), first(&b));
}

#[test]
fn network_pipeline_runs_small() {
    let cfg = ScenarioConfig::from_toml_str(SMALL_NETWORK).unwrap();
    let r = run(&cfg).unwrap();
    assert_eq!(r.pipeline, PipelineKind::Network);
    assert!(r.claims.iter().any(|c| c.id == "extremal_index_sum" && c.predicted == Some(0.5)));
    let gaps: Vec<f64> =
        r.estimates.iter().filter(|e| e.estimator == "full_solve_relative_gap").map(|e| e.value).collect();
    assert_eq!(gaps.len(), 4);
    assert!(gaps.iter().all(|g| g.is_finite() && *g >= 0.0));
    assert_eq!(json(&r), json(&run(&cfg).unwrap()));
    assert!(matches!(run_array_pipeline(&cfg), Err(Error::Config(_))));
    assert!(matches!(run_network_pipeline(&small()), Err(Error::Config(_))));
}

fn rejected(edit: impl FnOnce(&mut ScenarioConfig)) -> bool {
    let mut cfg = small();
    edit(&mut cfg);
    cfg.validate().is_err() && run(&cfg).is_err()
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    assert!(rejected(|c| c.replicates = 0));
    assert!(rejected(|c| c.rows = 0));
    assert!(rejected(|c| c.chi = 0.5));
    assert!(rejected(|c| c.chi = 0.0));
    assert!(rejected(|c| c.row_law.alpha = 4.0));
    assert!(rejected(|c| c.scenario = None));
    assert!(rejected(|c| c.weights = None));
    assert!(rejected(|c| c.weights = Some(WeightVector::constant(1.0, 2).unwrap())));
    assert!(rejected(|c| c.y_grid = vec![]));
    assert!(rejected(|c| c.y_grid = vec![1.0, -1.0]));
    assert!(rejected(|c| {
        c.scenario.as_mut().unwrap().d = DominatingCount::Random { support: vec![1, 2], probabilities: vec![0.5, 0.5] }
    }));
    assert!(!rejected(|_| {}));
}

#[test]
fn malformed_toml_is_a_config_error() {
    assert!(matches!(ScenarioConfig::from_toml_str("name = 1"), Err(Error::Config(_))));
    assert!(matches!(ScenarioConfig::from_toml_str(&SMALL.replace("chi = 0.2", "")), Err(Error::Config(_))));
    assert!(matches!(
        ScenarioConfig::load(std::path::Path::new("/nonexistent/config.toml")),
        Err(Error::Io(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn aggregates_scale_with_weights(seed in any::<u64>(), c in 0.1f64..10.0) {
        let mut cfg = small();
        cfg.seed = seed;
        cfg.rows = 300;
        let m = gen_matrix(&tailsim_core::experiment::array_matrix_config(&cfg, 0, None).unwrap()).unwrap();
        let one = row_aggregate(&m, &WeightVector::constant(1.0, 3).unwrap(), false).unwrap();
        let scaled = row_aggregate(&m, &WeightVector::constant(c, 3).unwrap(), false).unwrap();
        for i in 0..m.rows() {
            prop_assert!((scaled.sums[i] - c * one.sums[i]).abs() <= 1e-9 * scaled.sums[i].abs().max(1.0));
            prop_assert!((scaled.maxima[i] - c * one.maxima[i]).abs() <= 1e-9 * scaled.maxima[i].abs().max(1.0));
            prop_assert!(one.maxima[i] <= one.sums[i]);
        }
    }
}
