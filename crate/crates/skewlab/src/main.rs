use clap::{Parser, Subcommand};
use skewlab::config::{parse_config_text, ExperimentConfig, Suite};
use skewlab::report::emit_report;
use skewlab::runner::run_experiment;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "skewlab", version, about = "Sign-flip skew Brownian motion and signed-measure martingale checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the selected suites and write the report bundle.
    Run(RunArgs),
    /// Print the suite selectors.
    ListSuites,
    /// Explain what a suite checks.
    Describe { suite: String },
}

#[derive(clap::Args)]
struct RunArgs {
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    /// Comma-separated mesh levels.
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// json | csv
    #[arg(long)]
    format: Option<String>,
    /// Any other config key, e.g. `--set tolerance.qp=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, String> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            pairs.extend(parse_config_text(&text).map_err(|e| e.to_string())?);
        }
        let flags = [
            ("suite", &self.suite),
            ("seed", &self.seed),
            ("paths", &self.paths),
            ("steps", &self.steps),
            ("alpha", &self.alpha),
            ("format", &self.format),
        ];
        pairs.extend(flags.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))));
        if let Some(out) = &self.out {
            pairs.push(("out".into(), out.display().to_string()));
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            pairs.push((k.trim().into(), v.trim().into()));
        }
        let mut config = ExperimentConfig::default();
        config.apply(pairs).map_err(|e| e.to_string())?;
        Ok(config)
    }
}

fn run(args: &RunArgs) -> ExitCode {
    let config = match args.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(USAGE_ERROR);
        }
    };
    let bundle = match run_experiment(&config) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(USAGE_ERROR);
        }
    };
    for r in &bundle.reports {
        let status = match r.status {
            skewlab::report::Status::Pass => "PASS",
            skewlab::report::Status::Fail => "FAIL",
            skewlab::report::Status::HypothesisNotMet => "N/A ",
        };
        let threshold = if r.threshold >= f64::MAX { "-".to_string() } else { format!("{:.6}", r.threshold) };
        println!("{status} {:<60} {:>12.6} / {threshold}", r.suite, r.statistic);
    }
    match emit_report(&bundle, config.format, &config.out) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {}: {e}", config.out.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::from(bundle.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(&args),
        Command::ListSuites => {
            for s in Suite::LIST {
                println!("{s}");
            }
            ExitCode::SUCCESS
        }
        Command::Describe { suite } => match suite.parse::<Suite>() {
            Ok(s) => {
                println!("{s}: {}", s.describe());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(USAGE_ERROR)
            }
        },
    }
}
