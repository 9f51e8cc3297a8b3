//! `tailsim`: generate arrays, aggregate them, estimate tail and extremal
//! indices, and run verification pipelines from a scenario file.
//!
//! Every verb reads and writes plain files, so stages can be re-run one at
//! a time. `verify` and `network` exit with status 0 only if every claim in
//! the report passes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tailsim_core::aggregation::{read_aggregate_csv, row_aggregate, write_aggregate_csv};
use tailsim_core::estimators::{estimate, hill_plot_for, stationarity_diagnostic, write_hill_plot_csv, EstimationConfig};
use tailsim_core::experiment::{emit_report, run, array_matrix_config, Format, ScenarioConfig, VerdictReport};
use tailsim_core::generators::{gen_matrix, read_matrix_binary, read_matrix_csv, write_matrix_binary, write_matrix_csv};
use tailsim_core::network::{build_community_graph, root_score_series, write_community_labels, write_edge_list, write_scores_csv, RootMode};

#[derive(Debug, Parser)]
#[command(name = "tailsim", version, about = "Extremes of randomly weighted sums and maxima of heavy-tailed series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Series {
    Sum,
    Max,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the replicate count.
    #[arg(long)]
    replicates: Option<usize>,
    /// Output directory; defaults to the scenario's `output`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output formats; repeat or separate with commas.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json")]
    format: Vec<OutFormat>,
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig> {
        let path = self.config.as_ref().context("--config is required")?;
        let mut cfg = ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.replicates {
            cfg.replicates = r;
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: Option<&ScenarioConfig>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.and_then(|c| c.output.clone()))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    fn formats(&self) -> Vec<Format> {
        let mut f: Vec<Format> = self.format.iter().map(|&f| f.into()).collect();
        f.dedup();
        f
    }

    fn wants(&self, f: OutFormat) -> bool {
        self.format.contains(&f)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate replicate arrays (binary files; CSV with `--format csv`).
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Weighted row sums and maxima of array files, using the scenario
    /// weights.
    Aggregate {
        #[command(flatten)]
        common: Common,
        /// Array files (`.csv` or binary).
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Add the personalization column to sums and maxima.
        #[arg(long)]
        with_q: bool,
    },
    /// Hill, intervals and blocks estimates with bootstrap intervals for an
    /// aggregate file.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Aggregate CSV written by `aggregate`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "sum")]
        series: Series,
    },
    /// Run the array pipeline and judge its claims.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Run the network pipeline; also writes the replicate-0 graph.
    Network {
        #[command(flatten)]
        common: Common,
    },
    /// Print (and optionally convert) a verdict file.
    Report {
        #[command(flatten)]
        common: Common,
        /// Verdict JSON written by `verify` or `network`.
        #[arg(long)]
        input: PathBuf,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn stem_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
}

fn generate(common: &Common) -> Result<()> {
    let cfg = common.scenario()?;
    if cfg.is_network() {
        bail!("`generate` works on array scenarios; use `network` for graph scenarios");
    }
    cfg.validate()?;
    let dir = common.out_dir(Some(&cfg));
    std::fs::create_dir_all(&dir)?;
    let csv = common.wants(OutFormat::Csv);
    for r in 0..cfg.replicates {
        let m = gen_matrix(&array_matrix_config(&cfg, r, None)?)?;
        let path = dir.join(format!("{}-r{r}.{}", cfg.name, if csv { "csv" } else { "tsmx" }));
        let mut w = create(&path)?;
        if csv {
            write_matrix_csv(&m, &mut w)?;
        } else {
            write_matrix_binary(&m, &mut w)?;
        }
        w.flush()?;
        println!("{}", path.display());
    }
    Ok(())
}

fn aggregate(common: &Common, inputs: &[PathBuf], with_q: bool) -> Result<()> {
    let cfg = common.scenario()?;
    let weights = cfg.weights.clone().context("scenario has no weights")?;
    let dir = common.out_dir(Some(&cfg));
    std::fs::create_dir_all(&dir)?;
    for input in inputs {
        let reader = BufReader::new(File::open(input).with_context(|| format!("opening {}", input.display()))?);
        let m = if input.extension().is_some_and(|e| e == "csv") {
            read_matrix_csv(reader)?
        } else {
            read_matrix_binary(reader)?
        };
        let agg = row_aggregate(&m, &weights, with_q)?;
        // The extension stays in the name so binary and CSV copies of one
        // replicate do not overwrite each other.
        let name = input.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into());
        let path = dir.join(format!("{name}.agg.csv"));
        let mut w = create(&path)?;
        write_aggregate_csv(&agg, &[("source", input.display().to_string())], &mut w)?;
        w.flush()?;
        println!("{}", path.display());
    }
    Ok(())
}

fn estimate_cmd(common: &Common, input: &Path, series: Series) -> Result<()> {
    let (est_cfg, seed, cfg) = match &common.config {
        Some(_) => {
            let cfg = common.scenario()?;
            (cfg.estimation.clone(), cfg.seed, Some(cfg))
        }
        None => (EstimationConfig::default(), common.seed.unwrap_or(0), None),
    };
    let agg = read_aggregate_csv(BufReader::new(File::open(input).with_context(|| format!("opening {}", input.display()))?))?;
    let (x, label) = match series {
        Series::Sum => (&agg.sums, "sum"),
        Series::Max => (&agg.maxima, "max"),
    };
    let report = estimate(x, &est_cfg, seed)?;
    let stationarity = stationarity_diagnostic(x).ok();
    let dir = common.out_dir(cfg.as_ref());
    std::fs::create_dir_all(&dir)?;
    let stem = format!("{}.{label}", stem_of(input));
    if common.wants(OutFormat::Json) {
        let path = dir.join(format!("{stem}.estimate.json"));
        let mut w = create(&path)?;
        report.write_json(&mut w)?;
        writeln!(w)?;
        w.flush()?;
        println!("{}", path.display());
    }
    if common.wants(OutFormat::Csv) {
        let path = dir.join(format!("{stem}.hill.csv"));
        let mut w = create(&path)?;
        write_hill_plot_csv(&hill_plot_for(x, &est_cfg.hill)?, &mut w)?;
        w.flush()?;
        println!("{}", path.display());
    }
    eprintln!(
        "k_hat = {:.4} [{:.4}, {:.4}]  theta(intervals) = {:.4} [{:.4}, {:.4}]  theta(blocks) = {:.4} [{:.4}, {:.4}]",
        report.hill.k_hat,
        report.hill.ci[0],
        report.hill.ci[1],
        report.intervals.estimate.theta,
        report.intervals.ci[0],
        report.intervals.ci[1],
        report.blocks.estimate.theta,
        report.blocks.ci[0],
        report.blocks.ci[1],
    );
    if let Some(s) = stationarity {
        eprintln!("odd/even KS statistic = {:.4}, p = {:.4}, reject = {}", s.statistic, s.p_value, s.reject);
    }
    Ok(())
}

fn print_summary(report: &VerdictReport) {
    println!("{} ({:?}, {} replicates, fingerprint {})", report.name, report.pipeline, report.replicates, report.fingerprint);
    for c in &report.claims {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        println!(
            "  {:<5} {:<24} predicted {:>8}  estimate {:>8}  tolerance {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.id,
            fmt(c.predicted),
            fmt(c.estimate),
            c.tolerance
        );
    }
}

fn verify(common: &Common, want_network: bool) -> Result<bool> {
    let cfg = common.scenario()?;
    if want_network && !cfg.is_network() {
        bail!("scenario has no [network] table; use `verify`");
    }
    if !want_network && cfg.is_network() {
        bail!("scenario describes a network experiment; use `network`");
    }
    let started = Instant::now();
    let report = run(&cfg)?;
    let elapsed = started.elapsed();
    let dir = common.out_dir(Some(&cfg));
    for p in emit_report(&report, &common.formats(), &dir)? {
        println!("{}", p.display());
    }
    // Kept out of the verdict so that reruns stay byte-identical.
    std::fs::write(dir.join(format!("{}.runtime.txt", report.stem())), format!("{:.3}\n", elapsed.as_secs_f64()))?;
    if want_network {
        write_graph(&cfg, &dir, &report.stem())?;
    }
    print_summary(&report);
    eprintln!("runtime {:.1}s", elapsed.as_secs_f64());
    Ok(report.all_pass)
}

fn write_graph(cfg: &ScenarioConfig, dir: &Path, stem: &str) -> Result<()> {
    let g = build_community_graph(&cfg.network_graph_config(0)?)?;
    let c = cfg.network.as_ref().map_or(0.85, |n| n.c);
    let mut w = create(&dir.join(format!("{stem}.graph.edges")))?;
    write_edge_list(&g, &mut w)?;
    w.flush()?;
    let mut w = create(&dir.join(format!("{stem}.graph.labels")))?;
    write_community_labels(&g, &mut w)?;
    w.flush()?;
    let mut w = create(&dir.join(format!("{stem}.graph.weights.csv")))?;
    write_scores_csv(&g, g.weights(), &mut w)?;
    w.flush()?;
    let roots = root_score_series(&g, c, RootMode::OneStep)?;
    let mut w = create(&dir.join(format!("{stem}.roots.agg.csv")))?;
    write_aggregate_csv(&roots, &[("replicate", "0".into())], &mut w)?;
    w.flush()?;
    Ok(())
}

fn report_cmd(common: &Common, input: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let report = VerdictReport::from_json(&text).context("parsing verdict file")?;
    print_summary(&report);
    if common.wants(OutFormat::Csv) {
        let formats = [Format::Csv];
        for p in emit_report(&report, &formats, &common.out_dir(None))? {
            println!("{}", p.display());
        }
    }
    Ok(report.all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Generate { common } => generate(common).map(|_| true),
        Command::Aggregate { common, input, with_q } => aggregate(common, input, *with_q).map(|_| true),
        Command::Estimate { common, input, series } => estimate_cmd(common, input, *series).map(|_| true),
        Command::Verify { common } => verify(common, false),
        Command::Network { common } => verify(common, true),
        Command::Report { common, input } => report_cmd(common, input),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
