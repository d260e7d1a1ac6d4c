//! Experiment configuration: flat `key=value` text with dotted keys.
//!
//! ```text
//! # comments start with '#'
//! suite=skew_law
//! schedule.boundaries=0,0.5
//! schedule.values=0.3,0.8
//! steps=4096,16384,65536
//! tolerance.qp=0.05
//! ```

use crate::report::Format;
use crate::signed_measure::ModelFamily;
use crate::signflip::AlphaSchedule;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use thiserror::Error;

pub const OUT_ENV: &str = "SKEWLAB_OUT";
pub const DEFAULT_OUT: &str = "skewlab-out";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config key `{key}`: {msg}")]
pub struct ConfigError {
    pub key: String,
    pub msg: String,
}

impl ConfigError {
    fn new(key: &str, msg: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Identities,
    Martingale,
    SigmaH,
    SkewLaw,
    SkewResidual,
    Representation,
    All,
}

impl Suite {
    pub const LIST: [Suite; 7] = [
        Suite::Identities,
        Suite::Martingale,
        Suite::SigmaH,
        Suite::SkewLaw,
        Suite::SkewResidual,
        Suite::Representation,
        Suite::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Martingale => "martingale",
            Suite::SigmaH => "sigma_h",
            Suite::SkewLaw => "skew_law",
            Suite::SkewResidual => "skew_residual",
            Suite::Representation => "representation",
            Suite::All => "all",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Suite::Identities => {
                "Pathwise identities on coupled bridge-refined meshes: Tanaka residual against the \
                 bridge local-time estimator, balayage with k = cos(gamma) and k = 1, and the \
                 f(v) M transform. Reports per-level medians and the bound at the finest mesh."
            }
            Suite::Martingale => {
                "qp residual and drift tests for the (Q,P)-martingale zoo under the chosen model, \
                 negative controls, and the equivalence theorems for |M|, Z^alpha M, \
                 quadratic-variation characterisation and |M| from Z^{1/2} M."
            }
            Suite::SigmaH => {
                "Class membership (carried-by, qp residual, start at 0) for |W| and W + 2 L(D), \
                 the W + t control, and the equivalences X <-> |X|, X <-> Z^alpha X, \
                 X <-> D Z^{1/2} X and X <-> D int X dX."
            }
            Suite::SkewLaw => {
                "Terminal law of Z^alpha |B| at t = 1 (trivial model): sign probability, one-sample \
                 KS against the closed-form law and, for constant alpha, two-sample KS against the \
                 skew random walk."
            }
            Suite::SkewResidual => {
                "Skew SDE residual on coupled meshes for the configured schedule: per-level medians \
                 of the sup norm, the bound at the finest mesh and the driver's quadratic variation."
            }
            Suite::Representation => {
                "Optional representation D_T (M_T - M_gamma_T) 1_A = E[D_oo M_oo 1{gbar < T} 1_A] for \
                 M = W (trivial model) and M = W - W_gamma (shifted Brownian density), \
                 T in {0.5, 1}."
            }
            Suite::All => "Every suite above, in order.",
        }
    }

    /// Concrete suites selected by this selector.
    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Suite::LIST[..6].to_vec(),
            s => vec![s],
        }
    }

    fn mesh_study(self) -> bool {
        matches!(self, Suite::Identities | Suite::SkewResidual)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::LIST
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub qp: f64,
    pub carried: f64,
    pub dilation: usize,
    pub drift: f64,
    pub ks_level: f64,
    /// `|P(X > 0) - p|` allowed in the skew-law suite.
    pub sign: f64,
    /// Added to the two-sample critical value against the lattice walk.
    pub lattice: f64,
    /// Bound on the finest-mesh median of the identity residuals.
    pub identity: f64,
    /// Bound on the finest-mesh median of the skew SDE residual.
    pub sde: f64,
    /// Fraction of pathwise checks that must pass.
    pub quorum: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            qp: 0.05,
            carried: 0.05,
            dilation: 2,
            drift: 4.0,
            ks_level: 0.01,
            sign: 0.01,
            lattice: 0.005,
            identity: 0.05,
            sde: 0.1,
            quorum: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub model: ModelFamily,
    pub schedule: AlphaSchedule,
    pub n_paths: usize,
    /// Paths for pathwise checks (residual medians, class membership).
    pub pathwise_paths: usize,
    /// Mesh levels; empty means the suite default.
    pub n_steps: Vec<usize>,
    pub master_seed: u64,
    pub out: PathBuf,
    pub format: Format,
    pub tolerance: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            suite: Suite::All,
            model: ModelFamily::ShiftedBrownian,
            schedule: AlphaSchedule::constant(0.7).expect("valid alpha"),
            n_paths: 10_000,
            pathwise_paths: 32,
            n_steps: Vec::new(),
            master_seed: 20_240_601,
            out: std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from),
            format: Format::Json,
            tolerance: Tolerances::default(),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| ConfigError::new(key, format!("cannot parse `{v}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    v.split(',').map(|x| parse_num(key, x)).collect()
}

fn positive(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::new(key, "must be positive"))
    }
}

/// `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line, format!("line {} is not key=value", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Applies pairs in order; later keys override earlier ones.
    pub fn apply<I, K, V>(&mut self, pairs: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut alpha: Option<f64> = None;
        let mut bounds: Option<Vec<f64>> = None;
        let mut values: Option<Vec<f64>> = None;
        for (k, v) in pairs {
            let (k, v) = (k.as_ref(), v.as_ref());
            let t = &mut self.tolerance;
            match k {
                "suite" => self.suite = v.parse().map_err(|e: String| ConfigError::new(k, e))?,
                "model" => self.model = v.parse().map_err(|e: crate::error::Error| ConfigError::new(k, e.to_string()))?,
                "alpha" => alpha = Some(parse_num(k, v)?),
                "schedule.boundaries" => bounds = Some(parse_list(k, v)?),
                "schedule.values" => values = Some(parse_list(k, v)?),
                "paths" => self.n_paths = parse_num(k, v)?,
                "pathwise_paths" => self.pathwise_paths = parse_num(k, v)?,
                "steps" => self.n_steps = parse_list(k, v)?,
                "seed" => self.master_seed = parse_num(k, v)?,
                "out" => self.out = PathBuf::from(v),
                "format" => self.format = v.parse().map_err(|e: String| ConfigError::new(k, e))?,
                "tolerance.qp" => t.qp = positive(k, parse_num(k, v)?)?,
                "tolerance.carried" => t.carried = positive(k, parse_num(k, v)?)?,
                "tolerance.dilation" => t.dilation = parse_num(k, v)?,
                "tolerance.drift" => t.drift = positive(k, parse_num(k, v)?)?,
                "tolerance.ks_level" => t.ks_level = positive(k, parse_num(k, v)?)?,
                "tolerance.sign" => t.sign = positive(k, parse_num(k, v)?)?,
                "tolerance.lattice" => t.lattice = parse_num(k, v)?,
                "tolerance.identity" => t.identity = positive(k, parse_num(k, v)?)?,
                "tolerance.sde" => t.sde = positive(k, parse_num(k, v)?)?,
                "tolerance.quorum" => t.quorum = positive(k, parse_num(k, v)?)?,
                other => return Err(ConfigError::new(other, "unknown key")),
            }
        }
        match (alpha, bounds, values) {
            (_, Some(b), Some(v)) => {
                self.schedule = AlphaSchedule::piecewise(b, v).map_err(|e| ConfigError::new("schedule", e.to_string()))?
            }
            (_, Some(_), None) => return Err(ConfigError::new("schedule.values", "missing")),
            (_, None, Some(_)) => return Err(ConfigError::new("schedule.boundaries", "missing")),
            (Some(a), None, None) => {
                self.schedule = AlphaSchedule::constant(a).map_err(|e| ConfigError::new("alpha", e.to_string()))?
            }
            (None, None, None) => {}
        }
        self.validate()
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply(parse_config_text(text)?)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_paths < crate::stats::MIN_LAW_SAMPLES {
            return Err(ConfigError::new(
                "paths",
                format!("at least {} paths are needed", crate::stats::MIN_LAW_SAMPLES),
            ));
        }
        if self.pathwise_paths == 0 {
            return Err(ConfigError::new("pathwise_paths", "must be positive"));
        }
        if let Some(&n) = self.n_steps.iter().find(|&&n| n == 0) {
            return Err(ConfigError::new("steps", format!("must be positive, got {n}")));
        }
        let mut sorted = self.n_steps.clone();
        sorted.sort_unstable();
        if let Some(&lo) = sorted.first() {
            if sorted.iter().any(|&n| n % lo != 0 || !(n / lo).is_power_of_two()) {
                return Err(ConfigError::new("steps", "mesh levels must differ by powers of 2"));
            }
        }
        self.schedule
            .check_horizon(1.0)
            .map_err(|e| ConfigError::new("schedule", e.to_string()))?;
        if self.tolerance.quorum > 1.0 {
            return Err(ConfigError::new("tolerance.quorum", "must be at most 1"));
        }
        Ok(())
    }

    /// Sorted mesh levels for `suite`.
    pub fn steps_for(&self, suite: Suite) -> Vec<usize> {
        let mut s = if self.n_steps.is_empty() {
            if suite.mesh_study() {
                vec![1 << 12, 1 << 14, 1 << 16]
            } else {
                vec![1 << 12]
            }
        } else {
            self.n_steps.clone()
        };
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Single mesh for suites that are not mesh studies: the finest level.
    pub fn single_steps(&self, suite: Suite) -> usize {
        *self.steps_for(suite).last().expect("nonempty")
    }

    /// Canonical `key -> value` echo for the provenance block.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut m = BTreeMap::new();
        m.insert("suite".into(), self.suite.to_string());
        m.insert("model".into(), self.model.to_string());
        match &self.schedule {
            AlphaSchedule::Constant(a) => {
                m.insert("alpha".into(), a.get().to_string());
            }
            AlphaSchedule::Piecewise { boundaries, values } => {
                m.insert("schedule.boundaries".into(), join(boundaries));
                let v: Vec<f64> = values.iter().map(|a| a.get()).collect();
                m.insert("schedule.values".into(), join(&v));
            }
        }
        m.insert("paths".into(), self.n_paths.to_string());
        m.insert("pathwise_paths".into(), self.pathwise_paths.to_string());
        let steps: Vec<String> = self.n_steps.iter().map(usize::to_string).collect();
        m.insert("steps".into(), steps.join(","));
        m.insert("seed".into(), self.master_seed.to_string());
        m.insert(
            "format".into(),
            match self.format {
                Format::Json => "json",
                Format::Csv => "csv",
            }
            .into(),
        );
        let t = &self.tolerance;
        for (k, v) in [
            ("qp", t.qp),
            ("carried", t.carried),
            ("drift", t.drift),
            ("ks_level", t.ks_level),
            ("sign", t.sign),
            ("lattice", t.lattice),
            ("identity", t.identity),
            ("sde", t.sde),
            ("quorum", t.quorum),
        ] {
            m.insert(format!("tolerance.{k}"), v.to_string());
        }
        m.insert("tolerance.dilation".into(), t.dilation.to_string());
        m
    }
}
