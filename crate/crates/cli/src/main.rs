use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use mapcap::ErrorClass;
use sha2::{Digest, Sha256};

mod commands;
mod scenario;

use scenario::Scenario;

/// Markov additive capacity models: dependence control, analytic bounds and
/// Monte-Carlo validation.
#[derive(Debug, Parser)]
#[command(name = "mapcap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the scenario's `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed; overrides the scenario's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for simulation. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Simulate capacity paths, the fluid queue and empirical tails.
    Simulate,
    /// Transient, delay, backlog and delay-constrained rate bounds.
    Bounds,
    /// Transition plan realising the scenario's copulas.
    Control,
    /// Convex-order and adjustment-coefficient comparison of two models.
    Order,
    /// Analytic delay bounds against the simulated queue.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Bounds => "bounds",
            Self::Control => "control",
            Self::Order => "order",
            Self::Validate => "validate",
        }
    }
}

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_UNSTABLE: u8 = 4;
pub const EXIT_NUMERIC: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(path: &str, msg: &str) -> Self {
        let at = if path.is_empty() || path == "." { String::new() } else { format!(" at `{path}`") };
        Self {
            code: EXIT_CONFIG,
            message: format!("config error{at}: {msg}"),
        }
    }

    /// A library error, classified into an exit code and tagged with the
    /// config field it came from.
    pub fn at(path: &str, err: mapcap::Error) -> Self {
        let code = match err.class() {
            ErrorClass::Config => EXIT_CONFIG,
            ErrorClass::Infeasible => EXIT_INFEASIBLE,
            ErrorClass::Unstable => EXIT_UNSTABLE,
            ErrorClass::Numeric => EXIT_NUMERIC,
        };
        Self {
            code,
            message: format!("{path}: {err}"),
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Artifact files of one run.
pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn create(dir: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialise");
        text.push('\n');
        self.write(name, &text)
    }
}

fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("", "missing --config"))?;
    let text = std::fs::read_to_string(config_path).map_err(|e| CliError {
        code: EXIT_CONFIG,
        message: format!("cannot read {}: {e}", config_path.display()),
    })?;
    let scenario = Scenario::parse(&text)?;
    let built = scenario.build_model()?;
    let seed = cli.seed.unwrap_or(scenario.seed);

    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads", "must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config("--threads", &e.to_string()))?;
    }

    let dir = cli
        .out
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut out = Output::create(dir.clone())?;
    let summary = match cli.command {
        Command::Simulate => commands::simulate(&scenario, &built, seed, &mut out)?,
        Command::Bounds => commands::bounds(&scenario, &built, &mut out)?,
        Command::Control => commands::control(&built, &mut out)?,
        Command::Order => commands::order(&scenario, &built, &mut out)?,
        Command::Validate => commands::validate(&scenario, &built, seed, &mut out)?,
    };

    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = serde_json::json!({
        "tool": "mapcap",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": cli.command.name(),
        "scenario": scenario.name,
        "config_path": config_path.display().to_string(),
        "config_sha256": format!("{:x}", Sha256::digest(text.as_bytes())),
        "seed": seed,
        "threads": cli.threads.unwrap_or_else(rayon::current_num_threads),
        "created_unix": created,
        "files": out.files.clone(),
        "summary": summary,
    });
    out.write_json("manifest.json", &manifest)?;
    Ok(dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(dir) => {
            eprintln!("mapcap {}: wrote {}", cli.command.name(), dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
