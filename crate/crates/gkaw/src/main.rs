use clap::Parser;
use gkaw::{config, run_logged, CliError, Invocation, Target};
use std::path::PathBuf;
use std::process::ExitCode;

/// Kawahara experiment runner.
///
/// Exit codes: 0 success, 1 config error, 2 numerical failure, 3 I/O error.
/// GKAW_THREADS caps the worker count of `sweep`.
#[derive(Parser, Debug)]
#[command(name = "gkaw", version)]
struct Cli {
    /// Scenario to run, or `sweep` to fan out the `[sweep]` table.
    #[arg(value_enum)]
    scenario: Target,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set grid.n_points=512`; repeatable, applied in order.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
}

fn invocation(cli: Cli) -> Result<Invocation, CliError> {
    let overrides = cli
        .set
        .iter()
        .map(|s| config::parse_override(s))
        .collect::<Result<_, _>>()?;
    Ok(Invocation {
        target: cli.scenario,
        config: cli.config,
        overrides,
        out: cli.out,
        seed: cli.seed,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match invocation(cli).and_then(|inv| run_logged(&inv)) {
        Ok((_, code)) => ExitCode::from(code),
        Err(e) => {
            eprintln!("gkaw: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
