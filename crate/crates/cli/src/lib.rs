//! `heliox` command line: run one scenario, write its tables and a
//! `summary.json` into an output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod defaults;
pub mod figures;
pub mod run;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};
use thiserror::Error;

use heliox_core::dft::DftError;
use heliox_core::lindblad::LindbladError;
use heliox_core::scenarios::ScenarioError;

use config::{load_config_file, parse_overrides, resolve, ScenarioName};
use defaults::DefaultsFile;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Failure classes, each with its own exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Guard(String),
    #[error("{0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 1,
            Self::Validation(_) => 2,
            Self::NotConverged(_) => 3,
            Self::Guard(_) => 4,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            Self::Io(_) => "io_error",
            Self::Validation(_) => "invalid_input",
            Self::NotConverged(_) => "not_converged",
            Self::Guard(_) => "guard_abort",
        }
    }
}

impl From<DftError> for RunError {
    fn from(e: DftError) -> Self {
        let msg = e.to_string();
        match e {
            DftError::NotConverged { .. } | DftError::Calibration { .. } | DftError::UnboundDuringEvolution { .. } => {
                Self::NotConverged(msg)
            }
            DftError::Diverged { .. } => Self::Guard(msg),
            _ => Self::Validation(msg),
        }
    }
}

impl From<LindbladError> for RunError {
    fn from(e: LindbladError) -> Self {
        let msg = e.to_string();
        match e {
            LindbladError::GuardAbort { .. } | LindbladError::StepTooLarge { .. } => Self::Guard(msg),
            _ => Self::Validation(msg),
        }
    }
}

impl From<ScenarioError> for RunError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Engine(e) => e.into(),
            ScenarioError::Dft(e) => e.into(),
            ScenarioError::Invalid(m) => Self::Validation(m),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "heliox", version, about = "Electron bubbles in liquid helium: DFT and open-system dynamics")]
pub struct Cli {
    #[arg(value_enum)]
    pub scenario: ScenarioName,
    /// JSON config file; `--key value` overrides win over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: heliox_out/<scenario>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Threads for sweeps.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Scenario parameters as `--key value` or `--key=value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
    pub overrides: Vec<String>,
}

impl Cli {
    /// Pull the global flags back out of the override list; clap hands every
    /// argument after the first unknown flag to `overrides`.
    fn hoist_globals(&mut self) -> Result<(), RunError> {
        let mut rest = Vec::new();
        let mut it = std::mem::take(&mut self.overrides).into_iter();
        while let Some(arg) = it.next() {
            let (flag, inline) = match arg.split_once('=') {
                Some((f, v)) => (f.to_string(), Some(v.to_string())),
                None => (arg.clone(), None),
            };
            if !matches!(flag.as_str(), "--config" | "--out" | "--workers") {
                rest.push(arg);
                continue;
            }
            let value = match inline {
                Some(v) => v,
                None => it.next().ok_or_else(|| RunError::Validation(format!("{flag} needs a value")))?,
            };
            match flag.as_str() {
                "--config" => self.config = Some(value.into()),
                "--out" => self.out = Some(value.into()),
                _ => {
                    let n = value
                        .parse()
                        .map_err(|_| RunError::Validation(format!("--workers expects a positive integer, got {value:?}")))?;
                    self.workers = Some(n);
                }
            }
        }
        self.overrides = rest;
        Ok(())
    }
}

struct Prepared {
    resolved: config::ResolvedConfig,
    defaults: DefaultsFile,
    defaults_source: String,
    out: PathBuf,
    workers: Option<usize>,
}

fn prepare(mut cli: Cli) -> Result<Prepared, RunError> {
    cli.hoist_globals()?;
    if cli.workers == Some(0) {
        return Err(RunError::Validation("--workers must be at least 1".into()));
    }
    let file = cli.config.as_deref().map(load_config_file).transpose()?;
    let overrides = parse_overrides(&cli.overrides)?;
    let resolved = resolve(cli.scenario, file, overrides)?;
    let (defaults, defaults_source) = DefaultsFile::load()?;
    let out = cli.out.unwrap_or_else(|| Path::new("heliox_out").join(cli.scenario.as_str()));
    Ok(Prepared { resolved, defaults, defaults_source, out, workers: cli.workers })
}

fn write_json(path: &Path, value: &Value) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| RunError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn summary(p: &Prepared, status: &str, code: i32, reason: Option<String>, wall: f64) -> serde_json::Map<String, Value> {
    let uses_dft = p.resolved.echo.get("scattering_length_nm").and_then(Value::as_f64);
    let mut m = serde_json::Map::new();
    m.insert("schema_version".into(), json!(SUMMARY_SCHEMA_VERSION));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("scenario".into(), json!(p.resolved.scenario.as_str()));
    m.insert("status".into(), json!(status));
    m.insert("exit_code".into(), json!(code));
    m.insert("reason".into(), json!(reason));
    m.insert("config".into(), p.resolved.echo.clone());
    m.insert("defaults_filled".into(), json!(p.resolved.defaults_filled));
    m.insert(
        "dft_params".into(),
        match uses_dft {
            Some(a) => json!({"source": p.defaults_source, "params": p.defaults.params(a)}),
            None => Value::Null,
        },
    );
    m.insert("wall_time_s".into(), json!(wall));
    m
}

fn execute(p: &Prepared) -> Result<run::Outcome, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = p.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| RunError::Io(e.to_string()))?;
    pool.install(|| run::execute(&p.resolved.config, &p.defaults))
}

fn finish(p: &Prepared, outcome: run::Outcome, wall: f64) -> Result<(), RunError> {
    std::fs::create_dir_all(&p.out)?;
    let mut artifacts = Vec::new();
    for (name, table) in &outcome.tables {
        table.write_csv(&p.out.join(name)).map_err(|e| RunError::Io(e.to_string()))?;
        artifacts.push(name.clone());
    }
    if outcome.uses_dft {
        let text = serde_json::to_string_pretty(&p.defaults).map_err(|e| RunError::Io(e.to_string()))?;
        std::fs::write(p.out.join("params.defaults.json"), text + "\n")?;
        artifacts.push("params.defaults.json".into());
    }
    artifacts.push("summary.json".into());
    let mut m = summary(p, "ok", 0, None, wall);
    m.insert("results".into(), outcome.results);
    m.insert("diagnostics".into(), outcome.diagnostics);
    m.insert("artifacts".into(), json!(artifacts));
    write_json(&p.out.join("summary.json"), &Value::Object(m))
}

fn report(e: &RunError) {
    eprintln!("heliox: {}: {e}", e.status());
}

/// Parse `args` (program name first), run and return the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    // nothing touches the disk until the inputs are known to be valid
    let prepared = match prepare(cli) {
        Ok(p) => p,
        Err(e) => {
            report(&e);
            return e.exit_code();
        }
    };
    let start = Instant::now();
    let result = execute(&prepared);
    let wall = start.elapsed().as_secs_f64();
    match result {
        Ok(outcome) => match finish(&prepared, outcome, wall) {
            Ok(()) => 0,
            Err(e) => {
                report(&e);
                e.exit_code()
            }
        },
        Err(e) => {
            report(&e);
            if matches!(e, RunError::NotConverged(_) | RunError::Guard(_)) {
                let mut m = summary(&prepared, e.status(), e.exit_code(), Some(e.to_string()), wall);
                m.insert("results".into(), Value::Null);
                m.insert("diagnostics".into(), Value::Null);
                m.insert("artifacts".into(), json!(["summary.json"]));
                let written = std::fs::create_dir_all(&prepared.out)
                    .map_err(RunError::from)
                    .and_then(|_| write_json(&prepared.out.join("summary.json"), &Value::Object(m)));
                if let Err(io) = written {
                    report(&io);
                }
            }
            e.exit_code()
        }
    }
}
