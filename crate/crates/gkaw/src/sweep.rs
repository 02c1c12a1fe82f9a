//! Parallel one-parameter sweeps.

use crate::config::{self, ScenarioConfig};
use crate::error::CliError;
use crate::{run_logged, Invocation, Target};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::Path;

pub const THREADS_ENV: &str = "GKAW_THREADS";

/// Worker count: `GKAW_THREADS` when set to a positive integer, else rayon's default.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
    }
}

/// Runs the `[sweep]` scenario once per value, each in `out/run-NNN`, and
/// writes `sweep.json` indexing the runs. Returns the largest exit code.
pub fn run_sweep(
    inv: &Invocation,
    base: &ScenarioConfig,
    out: &Path,
) -> Result<(Value, u8), CliError> {
    let sweep = base
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config("the sweep command needs a [sweep] table".into()))?;
    if sweep.values.is_empty() {
        return Err(CliError::Config("sweep.values is empty".into()));
    }
    // validate every member before starting any
    let mut members = Vec::with_capacity(sweep.values.len());
    for (i, value) in sweep.values.iter().enumerate() {
        let mut overrides = inv.overrides.clone();
        overrides.push((sweep.parameter.clone(), value.clone()));
        let member = Invocation {
            target: Target::from(sweep.scenario),
            config: inv.config.clone(),
            overrides,
            out: Some(out.join(format!("run-{i:03}"))),
            seed: inv.seed,
        };
        config::load(&member.config, &member.overrides)?;
        members.push((i, value.clone(), member));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(usize, toml::Value, Result<Value, CliError>)> = pool.install(|| {
        members
            .into_par_iter()
            .map(|(i, value, member)| (i, value, run_logged(&member).map(|(v, _)| v)))
            .collect()
    });
    let mut worst = 0u8;
    let runs: Vec<Value> = results
        .into_iter()
        .map(|(i, value, res)| {
            let code = res.as_ref().map_or_else(CliError::exit_code, |_| 0);
            worst = worst.max(code);
            json!({
                "index": i,
                "value": serde_json::to_value(&value).unwrap_or(Value::Null),
                "dir": format!("run-{i:03}"),
                "exit_code": code,
                "error": res.err().map(|e| e.to_string()),
            })
        })
        .collect();
    let index = json!({
        "scenario": sweep.scenario.name(),
        "parameter": sweep.parameter,
        "runs": runs,
    });
    Ok((index, worst))
}
