//! Run configuration.
//!
//! Precedence, lowest to highest: built-in defaults, the TOML file,
//! `--set key=value` overrides in command-line order, then the dedicated
//! `--out` and `--seed` flags. The scenario named on the command line
//! replaces any `scenario` key in the file.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Evolve,
    RadiusTrack,
    AclAudit,
    Soliton,
    MultiplierCheck,
    Budget,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Evolve => "evolve",
            Scenario::RadiusTrack => "radius-track",
            Scenario::AclAudit => "acl-audit",
            Scenario::Soliton => "soliton",
            Scenario::MultiplierCheck => "multiplier-check",
            Scenario::Budget => "budget",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        <Scenario as clap::ValueEnum>::from_str(s, false)
            .map_err(|_| CliError::Config(format!("unknown scenario '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scenario: Option<Scenario>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub grid: GridConfig,
    pub equation: EquationConfig,
    pub initial: InitialData,
    pub gevrey: GevreyConfig,
    pub run: RunConfig,
    pub soliton: SolitonConfig,
    pub multiplier: MultiplierConfig,
    pub budget: BudgetConfig,
    pub sweep: Option<SweepConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            seed: 0,
            output_dir: PathBuf::from("out"),
            grid: GridConfig::default(),
            equation: EquationConfig::default(),
            initial: InitialData::default(),
            gevrey: GevreyConfig::default(),
            run: RunConfig::default(),
            soliton: SolitonConfig::default(),
            multiplier: MultiplierConfig::default(),
            budget: BudgetConfig::default(),
            sweep: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_points: usize,
    pub period: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_points: 1024,
            period: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquationConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for EquationConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Sech,
    Sech2,
    Sech4,
    Gaussian,
    TwoSolitonSum,
    FromCheckpoint,
}

/// Initial data. Shape parameters not used by a profile are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialData {
    pub profile: Profile,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    /// Second pulse of `two_soliton_sum`.
    pub amplitude2: f64,
    pub width2: f64,
    pub center2: f64,
    /// Checkpoint file for `from_checkpoint`.
    pub path: Option<PathBuf>,
    /// Relative amplitude of a seeded smooth perturbation, `u0 (1 + noise r(x))`,
    /// with `r` drawn on the lowest `noise_modes` box modes.
    pub noise: f64,
    pub noise_modes: usize,
}

impl Default for InitialData {
    fn default() -> Self {
        Self {
            profile: Profile::Sech2,
            amplitude: 1.0,
            width: 1.0,
            center: 0.0,
            amplitude2: 0.5,
            width2: 1.0,
            center2: 10.0,
            path: None,
            noise: 0.0,
            noise_modes: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GevreyConfig {
    pub sigma: f64,
    pub s: f64,
    pub rho: f64,
    pub noise_floor: f64,
    pub min_modes: usize,
}

impl Default for GevreyConfig {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            s: 0.0,
            rho: 1.0,
            noise_floor: kawahara::gevrey::DEFAULT_NOISE_FLOOR,
            min_modes: kawahara::gevrey::MIN_FIT_MODES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtPolicy {
    /// Use `run.dt` as given.
    Fixed,
    /// Halve `run.dt` until the setup convergence check passes.
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dt: f64,
    pub dt_policy: DtPolicy,
    pub t_end: f64,
    pub observer_stride: usize,
    pub nonlinear: bool,
    pub dealias: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            dt_policy: DtPolicy::Fixed,
            t_end: 10.0,
            observer_stride: 1000,
            nonlinear: true,
            dealias: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolitonConfig {
    /// Wave speed; derived from the equation for the `sech4` profile when absent.
    pub speed: Option<f64>,
    pub transits: f64,
}

impl Default for SolitonConfig {
    fn default() -> Self {
        Self {
            speed: None,
            transits: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiplierConfig {
    /// Dyadic blocks as exponent triples `[k1, k2, k3]`, `N_j = 2^{k_j}`.
    pub blocks: Vec<[i32; 3]>,
    pub samples: usize,
    pub s_values: Vec<f64>,
    pub grid_step: f64,
    pub series: Vec<SeriesConfig>,
}

impl Default for MultiplierConfig {
    fn default() -> Self {
        Self {
            blocks: vec![[2, 2, 1], [4, 4, 0], [6, 5, 3], [8, 8, 8], [3, 0, 0]],
            samples: 10_000,
            s_values: vec![-2.0, -1.76, -1.74, -1.0, 0.0],
            grid_step: 1e-3,
            series: vec![
                SeriesConfig {
                    name: "app05".into(),
                    s: 0.0,
                    b: 0.6,
                    b_prime: 0.7,
                    cutoffs: vec![15, 30, 60],
                },
                SeriesConfig {
                    name: "app04".into(),
                    s: -1.9,
                    b: 0.55,
                    b_prime: 0.7,
                    cutoffs: vec![15, 30, 60],
                },
                SeriesConfig {
                    name: "app04".into(),
                    s: -1.9,
                    b: 0.55,
                    b_prime: 0.56,
                    cutoffs: vec![15, 30, 60],
                },
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub name: String,
    pub s: f64,
    pub b: f64,
    pub b_prime: f64,
    pub cutoffs: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    pub sigma0: f64,
    pub delta: f64,
    /// Measured constant; when absent it is fitted by auditing the configured run.
    pub c_measured: Option<f64>,
    /// `||u0||_{G^{sigma0,0}}`; computed from the initial data when absent.
    pub norm_u0: Option<f64>,
    pub t_final: f64,
    pub t_sweep: Vec<f64>,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            sigma0: 1.0,
            delta: 0.1,
            c_measured: None,
            norm_u0: None,
            t_final: 10.0,
            t_sweep: vec![10.0, 20.0, 40.0, 80.0],
        }
    }
}

/// One-parameter sweep: the base configuration is run once per value, with
/// `parameter` overridden as by `--set`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub scenario: Scenario,
    pub parameter: String,
    pub values: Vec<toml::Value>,
}

/// Parses `key=value` where value is a TOML literal, falling back to a bare string.
pub fn parse_override(arg: &str) -> Result<(String, toml::Value), CliError> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got '{arg}'")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Config(format!(
            "--set has an empty key segment in '{arg}'"
        )));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Sets a dotted key in a TOML table, creating intermediate tables.
pub fn apply_override(
    table: &mut toml::Table,
    key: &str,
    value: toml::Value,
) -> Result<(), CliError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut cur = table;
    for part in parts {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("--set {key}: '{part}' is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Reads a config file and applies overrides in order.
pub fn load(path: &Path, overrides: &[(String, toml::Value)]) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    from_str_with_overrides(&text, overrides).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn from_str_with_overrides(
    text: &str,
    overrides: &[(String, toml::Value)],
) -> Result<ScenarioConfig, CliError> {
    // parse the untouched text first so syntax errors carry file line numbers
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    if overrides.is_empty() {
        return toml::from_str(text).map_err(|e| CliError::Config(e.to_string()));
    }
    for (key, value) in overrides {
        apply_override(&mut table, key, value.clone())?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("after --set overrides: {e}")))
}

impl ScenarioConfig {
    pub fn params(&self) -> Result<kawahara::Params, CliError> {
        kawahara::Params::new(self.equation.alpha, self.equation.beta)
            .map_err(|e| CliError::Config(format!("equation: {e}")))
    }

    pub fn evolution(&self, dt: f64) -> Result<kawahara::Config, CliError> {
        let mut cfg = kawahara::Config::new(self.params()?, dt, self.run.t_end)
            .map_err(|e| CliError::Config(format!("run: {e}")))?
            .with_stride(self.run.observer_stride.max(1));
        cfg.dealias = self.run.dealias;
        cfg.nonlinear = self.run.nonlinear;
        // a checkpoint is a mid-run state; the edge-mass test only screens fresh data
        cfg.boundary_check = self.initial.profile != Profile::FromCheckpoint;
        Ok(cfg)
    }
}
