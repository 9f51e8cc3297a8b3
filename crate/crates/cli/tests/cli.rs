use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
name = "cli-small"
seed = 3
replicates = 2
rows = 3000
weights = [1.0, 1.0, 1.0]
chi = 0.2

[profile]
k1 = 1.0
k = 3.0
per_column = [
    { tail_index = 1.0, extremal_index = 0.5 },
    { tail_index = 1.0, extremal_index = 0.5 },
    { tail_index = 3.0, extremal_index = 1.0 },
]

[scenario]
kind = "identical"
d = { type = "fixed", d = 2 }

[row_law]
alpha = 6.0
min = 2

[estimation]
bootstrap_resamples = 20
"#;

const SMALL_NETWORK: &str = r#"
name = "cli-net"
seed = 4
replicates = 2
rows = 1000
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
c = 0.85
"#;

fn tailsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailsim")).args(args).current_dir(cwd).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn files_with(dir: &Path, suffix: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(suffix))
        .collect();
    v.sort();
    v
}

#[test]
fn verify_writes_reproducible_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("out");
    let out_s = out.to_string_lossy().into_owned();
    let o = tailsim(&["verify", "--config", &cfg, "--out", &out_s, "--format", "json,csv"], tmp.path());
    assert!(o.status.code().is_some_and(|c| c == 0 || c == 1), "{}", String::from_utf8_lossy(&o.stderr));
    let verdict = files_with(&out, ".verdict.json");
    assert_eq!(verdict.len(), 1);
    assert_eq!(files_with(&out, ".claims.csv").len(), 1);
    assert_eq!(files_with(&out, ".estimates.csv").len(), 1);
    assert_eq!(files_with(&out, ".runtime.txt").len(), 1);
    assert_eq!(files_with(&out, ".csv").iter().filter(|p| p.to_string_lossy().contains(".hill-")).count(), 2);

    let first = std::fs::read(&verdict[0]).unwrap();
    let o2 = tailsim(&["verify", "--config", &cfg, "--out", &out_s], tmp.path());
    assert_eq!(o.status.code(), o2.status.code());
    assert_eq!(std::fs::read(&verdict[0]).unwrap(), first);

    let text = String::from_utf8(first).unwrap();
    let all_pass = text.contains("\"all_pass\": true");
    assert_eq!(o.status.success(), all_pass);

    let o3 = tailsim(&["verify", "--config", &cfg, "--out", &out_s, "--seed", "99"], tmp.path());
    assert!(o3.status.code().is_some_and(|c| c == 0 || c == 1));
    assert_eq!(files_with(&out, ".verdict.json").len(), 2);
}

#[test]
fn failing_claims_set_exit_status_and_report_reads_them_back() {
    let tmp = tempfile::tempdir().unwrap();
    let strict = format!("{SMALL}\n[tolerances]\ntail_index = 0.0\n");
    let cfg = write_config(tmp.path(), "strict.toml", &strict);
    let out = tmp.path().join("out");
    let out_s = out.to_string_lossy().into_owned();
    let o = tailsim(&["verify", "--config", &cfg, "--out", &out_s], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL  tail_index_sum"));

    let verdict = files_with(&out, ".verdict.json").remove(0);
    let csv_dir = tmp.path().join("csv");
    let o = tailsim(
        &["report", "--input", &verdict.to_string_lossy(), "--format", "csv", "--out", &csv_dir.to_string_lossy()],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let claims = std::fs::read_to_string(files_with(&csv_dir, ".claims.csv").remove(0)).unwrap();
    assert!(claims.starts_with("id,rule,predicted,estimate"));
    assert!(claims.contains("tail_index_sum,abs_diff_le,1,"));
}

#[test]
fn generate_aggregate_estimate_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let o = tailsim(&["generate", "--config", &cfg, "--out", "arrays"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let arrays = files_with(&tmp.path().join("arrays"), ".tsmx");
    assert_eq!(arrays.len(), 2);

    let o = tailsim(&["generate", "--config", &cfg, "--out", "csv-arrays", "--format", "csv"], tmp.path());
    assert!(o.status.success());
    let csv_arrays = files_with(&tmp.path().join("csv-arrays"), ".csv");
    assert_eq!(csv_arrays.len(), 2);

    let inputs: Vec<String> = [&arrays[0], &csv_arrays[0]].iter().map(|p| p.to_string_lossy().into_owned()).collect();
    let o = tailsim(&["aggregate", "--config", &cfg, "--out", "agg", "--input", &inputs[0], &inputs[1]], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let aggs = files_with(&tmp.path().join("agg"), ".agg.csv");
    assert_eq!(aggs.len(), 2);
    // The same replicate through either array format aggregates identically
    // apart from the recorded source.
    let body = |p: &Path| -> String {
        std::fs::read_to_string(p).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(body(&aggs[0]), body(&aggs[1]));

    let agg = aggs[0].to_string_lossy().into_owned();
    let o = tailsim(&["estimate", "--config", &cfg, "--input", &agg, "--series", "max", "--out", "est", "--format", "json,csv"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let est = files_with(&tmp.path().join("est"), ".estimate.json");
    assert_eq!(est.len(), 1);
    let text = std::fs::read_to_string(&est[0]).unwrap();
    for key in ["\"hill\"", "\"intervals\"", "\"blocks\"", "\"diagnostics\""] {
        assert!(text.contains(key), "{key} missing");
    }
    let hill = std::fs::read_to_string(files_with(&tmp.path().join("est"), ".hill.csv").remove(0)).unwrap();
    assert!(hill.starts_with("m,k_hat\n"));
}

#[test]
fn network_writes_graph_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "net.toml", SMALL_NETWORK);
    let o = tailsim(&["network", "--config", &cfg, "--out", "net"], tmp.path());
    assert!(o.status.code().is_some_and(|c| c == 0 || c == 1), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("net");
    for suffix in [".verdict.json", ".graph.edges", ".graph.labels", ".graph.weights.csv", ".roots.agg.csv"] {
        assert_eq!(files_with(&dir, suffix).len(), 1, "{suffix}");
    }
    let edges = std::fs::read_to_string(files_with(&dir, ".graph.edges").remove(0)).unwrap();
    assert!(edges.starts_with("# vertices="));

    // Each verb refuses the other kind of scenario.
    assert_eq!(tailsim(&["verify", "--config", &cfg], tmp.path()).status.code(), Some(2));
    let small = write_config(tmp.path(), "small.toml", SMALL);
    assert_eq!(tailsim(&["network", "--config", &small], tmp.path()).status.code(), Some(2));
}

#[test]
fn bad_input_exits_with_status_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.toml", &SMALL.replace("chi = 0.2", "chi = 0.9"));
    let o = tailsim(&["verify", "--config", &bad], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("chi"));
    assert_eq!(tailsim(&["verify"], tmp.path()).status.code(), Some(2));
    assert_eq!(tailsim(&["report", "--input", "missing.json"], tmp.path()).status.code(), Some(2));
}
