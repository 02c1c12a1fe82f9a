//! Experiment harness around the `kawahara` crate: TOML-configured
//! scenarios, binary checkpoints, CSV/JSON outputs and parameter sweeps.
//!
//! Outputs are deterministic for a given configuration and seed; wall-clock
//! timestamps go only to the sidecar `run.log`.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod profiles;
pub mod scenarios;
pub mod sweep;

pub use config::{Scenario, ScenarioConfig};
pub use error::CliError;

use serde_json::Value;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Target {
    Evolve,
    RadiusTrack,
    AclAudit,
    Soliton,
    MultiplierCheck,
    Budget,
    Sweep,
}

impl From<Scenario> for Target {
    fn from(s: Scenario) -> Self {
        match s {
            Scenario::Evolve => Target::Evolve,
            Scenario::RadiusTrack => Target::RadiusTrack,
            Scenario::AclAudit => Target::AclAudit,
            Scenario::Soliton => Target::Soliton,
            Scenario::MultiplierCheck => Target::MultiplierCheck,
            Scenario::Budget => Target::Budget,
        }
    }
}

impl Target {
    pub fn scenario(self) -> Option<Scenario> {
        Some(match self {
            Target::Evolve => Scenario::Evolve,
            Target::RadiusTrack => Scenario::RadiusTrack,
            Target::AclAudit => Scenario::AclAudit,
            Target::Soliton => Scenario::Soliton,
            Target::MultiplierCheck => Scenario::MultiplierCheck,
            Target::Budget => Scenario::Budget,
            Target::Sweep => return None,
        })
    }

    pub fn name(self) -> &'static str {
        self.scenario().map_or("sweep", Scenario::name)
    }
}

/// One command-line invocation.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub target: Target,
    pub config: PathBuf,
    pub overrides: Vec<(String, toml::Value)>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Loads the configuration with every override applied.
pub fn resolve(inv: &Invocation) -> Result<ScenarioConfig, CliError> {
    let mut cfg = config::load(&inv.config, &inv.overrides)?;
    if let Some(out) = &inv.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = inv.seed {
        cfg.seed = seed;
    }
    if let Some(s) = inv.target.scenario() {
        cfg.scenario = Some(s);
    }
    Ok(cfg)
}

fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn log_line(out: &Path, line: &str) -> Result<(), CliError> {
    let path = out.join("run.log");
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| CliError::io(&path, e))?;
    writeln!(f, "{:.3} {line}", unix_seconds()).map_err(|e| CliError::io(&path, e))
}

/// Runs an invocation, bracketing it with entries in `<out>/run.log`.
/// Returns the summary and the exit code (non-zero only for sweeps with
/// failed members).
pub fn run_logged(inv: &Invocation) -> Result<(Value, u8), CliError> {
    let cfg = resolve(inv)?;
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    log_line(
        &out,
        &format!(
            "start {} config={} seed={}",
            inv.target.name(),
            inv.config.display(),
            cfg.seed
        ),
    )?;
    let result = match inv.target.scenario() {
        Some(s) => scenarios::run(s, &cfg, &out).map(|v| (v, 0)),
        None => sweep::run_sweep(inv, &cfg, &out).and_then(|(index, code)| {
            let path = out.join("sweep.json");
            let text = serde_json::to_string_pretty(&index).expect("JSON values serialize") + "\n";
            std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            Ok((index, code))
        }),
    };
    let status = match &result {
        Ok((_, 0)) => "ok".to_string(),
        Ok((_, code)) => format!("finished with failed members (exit {code})"),
        Err(e) => format!("failed (exit {}): {e}", e.exit_code()),
    };
    // the run outcome takes priority over a log write failure
    let logged = log_line(&out, &format!("end {status}"));
    let result = result?;
    logged?;
    Ok(result)
}
