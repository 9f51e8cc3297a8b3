use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::write_hill_plot_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    Array,
    Network,
}

/// How a claim's estimate is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `|estimate - predicted| <= tolerance`.
    AbsDiffLe,
    /// The two confidence intervals behind the estimate intersect.
    CiOverlap,
    /// `estimate >= tolerance`.
    AtLeast,
    /// `estimate > tolerance * reference`.
    ExceedsMultiple,
    /// No replicate produced a single event.
    IdenticallyZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub description: String,
    pub rule: Rule,
    pub predicted: Option<f64>,
    pub estimate: Option<f64>,
    pub ci: Option<[f64; 2]>,
    /// Comparison value for relative rules (e.g. a baseline spread).
    pub reference: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub note: Option<String>,
}

impl Claim {
    fn base(id: &str, description: &str, rule: Rule, tolerance: f64) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            rule,
            predicted: None,
            estimate: None,
            ci: None,
            reference: None,
            tolerance,
            pass: false,
            note: None,
        }
    }

    pub fn within(id: &str, description: &str, predicted: f64, estimate: f64, ci: [f64; 2], tolerance: f64) -> Self {
        Self {
            predicted: Some(predicted),
            estimate: Some(estimate),
            ci: Some(ci),
            pass: (estimate - predicted).abs() <= tolerance,
            ..Self::base(id, description, Rule::AbsDiffLe, tolerance)
        }
    }

    pub fn overlap(id: &str, description: &str, a: [f64; 2], b: [f64; 2], difference: f64) -> Self {
        Self {
            predicted: Some(0.0),
            estimate: Some(difference),
            ci: Some([a[0].max(b[0]), a[1].min(b[1])]),
            pass: a[0] <= b[1] && b[0] <= a[1],
            ..Self::base(id, description, Rule::CiOverlap, 0.0)
        }
    }

    pub fn at_least(id: &str, description: &str, estimate: f64, threshold: f64) -> Self {
        Self {
            estimate: Some(estimate),
            pass: estimate >= threshold,
            ..Self::base(id, description, Rule::AtLeast, threshold)
        }
    }

    pub fn exceeds_multiple(id: &str, description: &str, estimate: f64, reference: f64, factor: f64) -> Self {
        Self {
            estimate: Some(estimate),
            reference: Some(reference),
            pass: estimate > factor * reference,
            ..Self::base(id, description, Rule::ExceedsMultiple, factor)
        }
    }

    pub fn identically_zero(id: &str, description: &str, largest: f64, zero: bool) -> Self {
        Self {
            predicted: Some(0.0),
            estimate: Some(largest),
            pass: zero,
            ..Self::base(id, description, Rule::IdenticallyZero, 0.0)
        }
    }

    /// A claim that could not be evaluated.
    pub fn failed(id: &str, description: &str, rule: Rule, tolerance: f64, note: String) -> Self {
        Self { note: Some(note), ..Self::base(id, description, rule, tolerance) }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// One estimate in long format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    /// `None` for estimates pooled over replicates.
    pub replicate: Option<usize>,
    pub series: String,
    pub estimator: String,
    /// Dominating count in force, when it matters.
    pub d: Option<usize>,
    pub y: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillPlot {
    pub series: String,
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub name: String,
    pub pipeline: PipelineKind,
    /// Digest of the effective configuration.
    pub fingerprint: String,
    pub seed: u64,
    pub replicates: usize,
    pub all_pass: bool,
    pub claims: Vec<Claim>,
    pub estimates: Vec<EstimateRow>,
    pub hill_plots: Vec<HillPlot>,
}

impl VerdictReport {
    pub fn new(name: String, pipeline: PipelineKind, fingerprint: String, seed: u64, replicates: usize) -> Self {
        Self { name, pipeline, fingerprint, seed, replicates, all_pass: true, claims: Vec::new(), estimates: Vec::new(), hill_plots: Vec::new() }
    }

    pub fn push_claim(&mut self, claim: Claim) {
        self.all_pass &= claim.pass;
        self.claims.push(claim);
    }

    /// File stem shared by every emitted file.
    pub fn stem(&self) -> String {
        let name: String = self
            .name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        format!("{name}-{}", self.fingerprint)
    }

    pub fn write_claims_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "id,rule,predicted,estimate,ci_low,ci_high,reference,tolerance,pass")?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.claims {
            let rule = serde_json::to_value(c.rule)?;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                c.id,
                rule.as_str().unwrap_or_default(),
                opt(c.predicted),
                opt(c.estimate),
                opt(c.ci.map(|x| x[0])),
                opt(c.ci.map(|x| x[1])),
                opt(c.reference),
                c.tolerance,
                c.pass
            )?;
        }
        Ok(())
    }

    pub fn write_estimates_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "replicate,series,estimator,d,y,value")?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for e in &self.estimates {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                opt(e.replicate.map(|r| r.to_string())),
                e.series,
                e.estimator,
                opt(e.d.map(|d| d.to_string())),
                opt(e.y.map(|y| y.to_string())),
                e.value
            )?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes the report into `dir`: `<stem>.verdict.json` for JSON, and
/// `<stem>.claims.csv`, `<stem>.estimates.csv` and one
/// `<stem>.hill-<series>.csv` per Hill plot for CSV.
pub fn emit_report(report: &VerdictReport, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = report.stem();
    let mut written = Vec::new();
    for format in formats {
        match format {
            Format::Json => {
                let p = dir.join(format!("{stem}.verdict.json"));
                let mut w = create(&p)?;
                report.write_json(&mut w)?;
                w.flush()?;
                written.push(p);
            }
            Format::Csv => {
                let p = dir.join(format!("{stem}.claims.csv"));
                let mut w = create(&p)?;
                report.write_claims_csv(&mut w)?;
                w.flush()?;
                written.push(p);
                let p = dir.join(format!("{stem}.estimates.csv"));
                let mut w = create(&p)?;
                report.write_estimates_csv(&mut w)?;
                w.flush()?;
                written.push(p);
                for plot in &report.hill_plots {
                    let p = dir.join(format!("{stem}.hill-{}.csv", plot.series));
                    let mut w = create(&p)?;
                    write_hill_plot_csv(&plot.points, &mut w)?;
                    w.flush()?;
                    written.push(p);
                }
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claim_rules() {
        assert!(Claim::within("a", "", 0.5, 0.58, [0.5, 0.6], 0.1).pass);
        assert!(!Claim::within("a", "", 0.5, 0.61, [0.5, 0.7], 0.1).pass);
        assert!(Claim::overlap("b", "", [0.9, 1.1], [1.05, 1.2], 0.1).pass);
        assert!(!Claim::overlap("b", "", [0.9, 1.0], [1.05, 1.2], 0.1).pass);
        assert!(Claim::at_least("c", "", 0.9, 0.9).pass);
        assert!(!Claim::exceeds_multiple("d", "", 0.2, 0.1, 2.0).pass);
        assert!(Claim::exceeds_multiple("d", "", 0.21, 0.1, 2.0).pass);
    }

    #[test]
    fn empty_report_is_valid_json() {
        let r = VerdictReport::new("empty".into(), PipelineKind::Array, "00".into(), 1, 1);
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&r, &[Format::Json], dir.path()).unwrap();
        let back: VerdictReport = serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(back.claims.is_empty() && back.all_pass);
    }

    #[test]
    fn both_formats_written() {
        let mut r = VerdictReport::new("two formats".into(), PipelineKind::Network, "ab".into(), 1, 1);
        r.push_claim(Claim::at_least("power", "", 0.95, 0.9));
        r.estimates.push(EstimateRow { replicate: Some(0), series: "sum".into(), estimator: "hill".into(), d: None, y: None, value: 1.0 });
        r.hill_plots.push(HillPlot { series: "sum".into(), points: vec![(5, 1.0)] });
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&r, &[Format::Json, Format::Csv], dir.path()).unwrap();
        let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(
            names,
            [
                "two_formats-ab.verdict.json",
                "two_formats-ab.claims.csv",
                "two_formats-ab.estimates.csv",
                "two_formats-ab.hill-sum.csv"
            ]
        );
        let claims = std::fs::read_to_string(&files[1]).unwrap();
        assert_eq!(claims.lines().nth(1).unwrap(), "power,at_least,,0.95,,,,0.9,true");
        assert!(std::fs::read_to_string(&files[2]).unwrap().contains("0,sum,hill,,,1\n"));
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        std::fs::write(&file, "x").unwrap();
        let r = VerdictReport::new("x".into(), PipelineKind::Array, "00".into(), 1, 1);
        assert!(matches!(emit_report(&r, &[Format::Json], &file.join("sub")), Err(crate::Error::Io(_))));
    }
}
