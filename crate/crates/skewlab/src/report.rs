//! Verification outcomes, report bundles and their JSON / CSV forms.

use crate::localtime::ResidualReport;
use crate::seed::SeedSpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const HYPOTHESIS_PREFIX: &str = "hypothesis-not-met: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Pass,
    Fail,
    /// The theorem under test does not apply to the supplied process.
    HypothesisNotMet,
}

/// One verification outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ReportRecord", from = "ReportRecord")]
pub struct TestReport {
    pub suite: String,
    pub statistic: f64,
    pub threshold: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: Option<SeedSpec>,
    pub status: Status,
    pub detail: String,
}

impl TestReport {
    pub fn new(suite: impl Into<String>, statistic: f64, threshold: f64, pass: bool) -> Self {
        Self {
            suite: suite.into(),
            statistic,
            threshold,
            n_paths: 1,
            n_steps: 0,
            seed: None,
            status: if pass { Status::Pass } else { Status::Fail },
            detail: String::new(),
        }
    }

    pub fn sizes(mut self, n_paths: usize, n_steps: usize) -> Self {
        self.n_paths = n_paths;
        self.n_steps = n_steps;
        self
    }

    pub fn seeded(mut self, seed: &SeedSpec) -> Self {
        self.seed = Some(seed.clone());
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn renamed(mut self, suite: impl Into<String>) -> Self {
        self.suite = suite.into();
        self
    }

    /// Marks the report as not applicable, keeping the computed numbers.
    pub fn hypothesis_not_met(mut self, why: &str) -> Self {
        self.status = Status::HypothesisNotMet;
        if self.detail.is_empty() {
            self.detail = why.to_string();
        } else {
            self.detail = format!("{why}; {}", self.detail);
        }
        self
    }

    pub fn pass(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Wire form: `pass` is a boolean and a hypothesis failure is carried by a
/// detail prefix.
#[derive(Serialize, Deserialize)]
struct ReportRecord {
    suite: String,
    statistic: f64,
    threshold: f64,
    n_paths: usize,
    n_steps: usize,
    seed: Option<SeedSpec>,
    pass: bool,
    detail: String,
}

fn finite(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(f64::MIN, f64::MAX)
    }
}

impl From<TestReport> for ReportRecord {
    fn from(r: TestReport) -> Self {
        let detail = match r.status {
            Status::HypothesisNotMet => format!("{HYPOTHESIS_PREFIX}{}", r.detail),
            _ => r.detail,
        };
        ReportRecord {
            suite: r.suite,
            statistic: finite(r.statistic),
            threshold: finite(r.threshold),
            n_paths: r.n_paths,
            n_steps: r.n_steps,
            seed: r.seed,
            pass: r.status == Status::Pass,
            detail,
        }
    }
}

impl From<ReportRecord> for TestReport {
    fn from(r: ReportRecord) -> Self {
        let (status, detail) = match r.detail.strip_prefix(HYPOTHESIS_PREFIX) {
            Some(rest) if !r.pass => (Status::HypothesisNotMet, rest.to_string()),
            _ => (if r.pass { Status::Pass } else { Status::Fail }, r.detail),
        };
        TestReport {
            suite: r.suite,
            statistic: r.statistic,
            threshold: r.threshold,
            n_paths: r.n_paths,
            n_steps: r.n_steps,
            seed: r.seed,
            status,
            detail,
        }
    }
}

/// Rows `(t, value, series)` destined for one plot-data CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    pub name: String,
    pub rows: Vec<(f64, f64, String)>,
}

impl CurveSet {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            rows: Vec::new(),
        }
    }

    pub fn push_series(&mut self, series: &str, points: impl IntoIterator<Item = (f64, f64)>) {
        self.rows.extend(points.into_iter().map(|(t, v)| (t, v, series.to_string())));
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,value,series\n");
        for (t, v, series) in &self.rows {
            let _ = writeln!(s, "{t},{v},{series}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: BTreeMap<String, String>,
    pub master_seed: u64,
    pub version: String,
    pub timestamp: u64,
}

impl Provenance {
    pub fn new(config: BTreeMap<String, String>, master_seed: u64) -> Self {
        Self {
            config,
            master_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub provenance: Provenance,
    pub reports: Vec<TestReport>,
    #[serde(default)]
    pub residuals: Vec<ResidualReport>,
    #[serde(default, skip_serializing)]
    pub curves: Vec<CurveSet>,
}

impl ReportBundle {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            provenance,
            reports: Vec::new(),
            residuals: Vec::new(),
            curves: Vec::new(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(TestReport::pass)
    }

    /// 0 when everything passes, 3 when the only problems are hypotheses not
    /// met, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.reports.iter().any(|r| r.status == Status::Fail) {
            1
        } else if self.reports.iter().any(|r| r.status == Status::HypothesisNotMet) {
            3
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serialises") + "\n"
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("suite,statistic,threshold,n_paths,n_steps,seed,pass\n");
        for r in &self.reports {
            let rec = ReportRecord::from(r.clone());
            let seed = rec.seed.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                csv_field(&rec.suite),
                rec.statistic,
                rec.threshold,
                rec.n_paths,
                rec.n_steps,
                csv_field(&seed),
                rec.pass
            );
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (json | csv)")),
        }
    }
}

/// Writes `report.json` or `report.csv` into `dir`, plus one
/// `curves/<name>.csv` per curve set. Returns the written paths.
pub fn emit_report(bundle: &ReportBundle, format: Format, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let (name, body) = match format {
        Format::Json => ("report.json", bundle.to_json()),
        Format::Csv => ("report.csv", bundle.to_csv()),
    };
    let p = dir.join(name);
    std::fs::write(&p, body)?;
    written.push(p);
    if !bundle.curves.is_empty() {
        let cdir = dir.join("curves");
        std::fs::create_dir_all(&cdir)?;
        for c in &bundle.curves {
            let p = cdir.join(format!("{}.csv", c.name));
            std::fs::write(&p, c.to_csv())?;
            written.push(p);
        }
    }
    Ok(written)
}
