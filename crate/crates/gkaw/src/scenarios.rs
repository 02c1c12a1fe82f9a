//! Scenario runners. Each writes its data files into the output directory
//! and returns a JSON summary, which is also written as `summary.json`.

use crate::checkpoint;
use crate::config::{DtPolicy, Profile, Scenario, ScenarioConfig};
use crate::error::CliError;
use crate::profiles::{initial_field, Sech4Wave};
use kawahara::dynamics::{conservation_report, evolve, select_dt, traveling_wave_residual};
use kawahara::gevrey::{
    almost_conservation_audit, budget_plan, estimate_radius, gevrey_norm, GevreyParams,
};
use kawahara::multiplier::{
    dyadic_sum, feasibility_scan, resonance_ratio_stats, resonance_threshold, sample_block, Dyadic,
};
use kawahara::spectral::apply_multiplier;
use kawahara::{Field, Trajectory};
use num_complex::Complex;
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn run(scenario: Scenario, cfg: &ScenarioConfig, out: &Path) -> Result<Value, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let summary = match scenario {
        Scenario::Evolve => run_evolve(cfg, out)?,
        Scenario::RadiusTrack => run_radius_track(cfg, out)?,
        Scenario::AclAudit => run_acl_audit(cfg, out)?,
        Scenario::Soliton => run_soliton(cfg, out)?,
        Scenario::MultiplierCheck => run_multiplier_check(cfg)?,
        Scenario::Budget => run_budget(cfg, out)?,
    };
    let name = match scenario {
        Scenario::MultiplierCheck => "multiplier.json",
        Scenario::Budget => "budget.json",
        Scenario::Soliton => "soliton.json",
        _ => "summary.json",
    };
    write_json(&out.join(name), &summary)?;
    Ok(summary)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<(), CliError> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(text, "{}", cells.join(","));
    }
    write_file(path, text.as_bytes())
}

fn to_json(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("summary types serialize")
}

/// Evolution shared by the time-dependent scenarios.
struct Run {
    u0: Field,
    dt: f64,
    halvings: u32,
    trajectory: Trajectory,
    checkpoints: Vec<PathBuf>,
}

fn choose_dt(cfg: &ScenarioConfig, u0: &Field) -> Result<(f64, u32), CliError> {
    match cfg.run.dt_policy {
        DtPolicy::Fixed => Ok((cfg.run.dt, 0)),
        DtPolicy::Auto => {
            let sel = select_dt(u0, &cfg.evolution(cfg.run.dt)?)?;
            Ok((sel.dt, sel.halvings))
        }
    }
}

/// Evolves the configured initial data; with `checkpoint_dir`, every
/// recorded snapshot is also saved there.
fn evolve_configured(cfg: &ScenarioConfig, checkpoint_dir: Option<&Path>) -> Result<Run, CliError> {
    let u0 = initial_field(cfg)?;
    let (dt, halvings) = choose_dt(cfg, &u0)?;
    let evo = cfg.evolution(dt)?;
    if let Some(dir) = checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut checkpoints = Vec::new();
    let mut io_error = None;
    let params = evo.params;
    let mut saver = |_t: f64, u: &Field| {
        let Some(dir) = checkpoint_dir else { return };
        if io_error.is_some() {
            return;
        }
        let path = dir.join(format!("checkpoint_{:06}.gkaw", checkpoints.len()));
        match checkpoint::save(&path, u, &params) {
            Ok(()) => checkpoints.push(path),
            Err(source) => io_error = Some(CliError::Checkpoint { path, source }),
        }
    };
    let result = evolve(&u0, &evo, &mut [&mut saver]);
    if let Some(e) = io_error {
        return Err(e);
    }
    let trajectory =
        result.map_err(|e| CliError::from(e).with_checkpoint(checkpoints.last().cloned()))?;
    Ok(Run {
        u0,
        dt,
        halvings,
        trajectory,
        checkpoints,
    })
}

fn run_header(cfg: &ScenarioConfig, scenario: Scenario, run: &Run) -> Value {
    let grid = run.u0.grid();
    json!({
        "scenario": scenario.name(),
        "seed": cfg.seed,
        "n_points": grid.n_points(),
        "period": grid.period(),
        "alpha": cfg.equation.alpha,
        "beta": cfg.equation.beta,
        "dt": run.dt,
        "dt_halvings": run.halvings,
        "t_end": cfg.run.t_end,
        "nonlinear": cfg.run.nonlinear,
        "snapshots": run.trajectory.len(),
    })
}

fn relative_names(paths: &[PathBuf], base: &Path) -> Vec<String> {
    paths
        .iter()
        .map(|p| p.strip_prefix(base).unwrap_or(p).display().to_string())
        .collect()
}

fn run_evolve(cfg: &ScenarioConfig, out: &Path) -> Result<Value, CliError> {
    let run = evolve_configured(cfg, Some(&out.join("checkpoints")))?;
    let rows = conservation_report(&run.trajectory)?;
    write_csv(
        &out.join("conservation.csv"),
        &["t", "mass", "l2_norm_sq", "mass_drift", "l2_drift"],
        rows.iter()
            .map(|r| vec![r.t, r.mass, r.energy, r.mass_drift, r.energy_drift]),
    )?;
    let mut summary = run_header(cfg, Scenario::Evolve, &run);
    summary["max_mass_drift"] = json!(rows.iter().map(|r| r.mass_drift).fold(0.0, f64::max));
    summary["max_l2_drift"] = json!(rows.iter().map(|r| r.energy_drift).fold(0.0, f64::max));
    summary["checkpoints"] = json!(relative_names(&run.checkpoints, out));
    Ok(summary)
}

fn run_radius_track(cfg: &ScenarioConfig, out: &Path) -> Result<Value, CliError> {
    let run = evolve_configured(cfg, None)?;
    let g = &cfg.gevrey;
    let mut rows = Vec::with_capacity(run.trajectory.len());
    let mut all_ok = true;
    for (u, &t) in run.trajectory.snapshots.iter().zip(&run.trajectory.times) {
        let r = estimate_radius(u, g.noise_floor, g.min_modes)?;
        all_ok &= r.ok;
        rows.push([t, r.sigma_hat, r.fit_residual, r.sigma_hat * t.max(1.0)]);
    }
    write_csv(
        &out.join("radius.csv"),
        &["t", "sigma_hat", "fit_residual", "sigma_hat_times_max1t"],
        rows.iter().map(|r| r.to_vec()),
    )?;
    let late: Vec<&[f64; 4]> = rows.iter().filter(|r| r[0] >= 1.0).collect();
    let mut summary = run_header(cfg, Scenario::RadiusTrack, &run);
    summary["sigma_hat_initial"] = json!(rows[0][1]);
    summary["sigma_hat_final"] = json!(rows[rows.len() - 1][1]);
    summary["min_sigma_hat_times_t"] = json!(late.iter().map(|r| r[3]).reduce(f64::min));
    summary["all_fits_ok"] = json!(all_ok);
    Ok(summary)
}

fn run_acl_audit(cfg: &ScenarioConfig, out: &Path) -> Result<Value, CliError> {
    let run = evolve_configured(cfg, None)?;
    let (sigma, rho) = (cfg.gevrey.sigma, cfg.gevrey.rho);
    let full = almost_conservation_audit(&run.trajectory, sigma, rho)?;
    let half = almost_conservation_audit(&run.trajectory, sigma / 2.0, rho)?;
    write_csv(
        &out.join("audit.csv"),
        &["sigma", "t", "gnorm_sq", "increment", "bound_rhs"],
        [&full, &half].into_iter().flat_map(|a| {
            a.records
                .iter()
                .map(|r| vec![a.sigma, r.t, r.gnorm_sq, r.increment, r.bound_rhs])
        }),
    )?;
    let ratio = (full.max_increment > 0.0).then(|| half.max_increment / full.max_increment);
    let mut summary = run_header(cfg, Scenario::AclAudit, &run);
    summary["rho"] = json!(rho);
    summary["audits"] = json!([
        { "sigma": full.sigma, "max_increment": full.max_increment, "fitted_c": full.fitted_c },
        { "sigma": half.sigma, "max_increment": half.max_increment, "fitted_c": half.fitted_c },
    ]);
    summary["increment_ratio"] = json!(ratio);
    summary["expected_ratio"] = json!(0.5f64.powf(rho));
    Ok(summary)
}

fn run_soliton(cfg: &ScenarioConfig, _out: &Path) -> Result<Value, CliError> {
    let params = cfg.params()?;
    let speed = match (cfg.soliton.speed, cfg.initial.profile) {
        (Some(c), _) => c,
        (None, Profile::Sech4) => Sech4Wave::new(&params)?.speed,
        (None, p) => {
            return Err(CliError::Config(format!(
                "soliton.speed is required for profile {p:?}; only sech4 has a derived speed"
            )))
        }
    };
    if speed == 0.0 || !speed.is_finite() {
        return Err(CliError::Config(format!(
            "soliton.speed must be non-zero, got {speed}"
        )));
    }
    if cfg.soliton.transits.is_nan() || cfg.soliton.transits <= 0.0 {
        return Err(CliError::Config("soliton.transits must be positive".into()));
    }
    let transit = cfg.grid.period / speed.abs();
    let mut run_cfg = cfg.clone();
    run_cfg.run.t_end = cfg.soliton.transits * transit;
    run_cfg.run.observer_stride = usize::MAX;
    let run = evolve_configured(&run_cfg, None)?;
    let residual = traveling_wave_residual(&run.u0, speed, &params);
    let t = run.trajectory.last().time() - run.u0.time();
    let shifted = apply_multiplier(&run.u0, |k| Complex::new(0.0, -k * speed * t).exp())?;
    let shape_error = run.trajectory.last().relative_distance(&shifted)?;
    let g = &cfg.gevrey;
    let r0 = estimate_radius(&run.u0, g.noise_floor, g.min_modes)?;
    let r1 = estimate_radius(run.trajectory.last(), g.noise_floor, g.min_modes)?;
    let mut summary = run_header(&run_cfg, Scenario::Soliton, &run);
    summary["speed"] = json!(speed);
    summary["transits"] = json!(cfg.soliton.transits);
    summary["transit_time"] = json!(transit);
    summary["residual"] = json!(residual);
    summary["shape_error"] = json!(shape_error);
    summary["sigma_hat_initial"] = json!(r0.sigma_hat);
    summary["sigma_hat_final"] = json!(r1.sigma_hat);
    summary["sigma_hat_drift"] = json!((r1.sigma_hat - r0.sigma_hat).abs() / r0.sigma_hat);
    Ok(summary)
}

fn run_multiplier_check(cfg: &ScenarioConfig) -> Result<Value, CliError> {
    let m = &cfg.multiplier;
    let params = cfg.params()?;
    let n_star = resonance_threshold(&params);
    let mut blocks = Vec::with_capacity(m.blocks.len());
    for (i, k) in m.blocks.iter().enumerate() {
        let n = k.map(Dyadic);
        let sample = sample_block(n, m.samples, &params, cfg.seed.wrapping_add(i as u64))?;
        let max_defect = sample
            .samples
            .iter()
            .map(|s| s.identity_defect())
            .fold(0.0, f64::max);
        let stats = if sample.samples.is_empty() || k.iter().max().copied().unwrap_or(0) < n_star.0
        {
            None
        } else {
            Some(resonance_ratio_stats(&sample, &params)?)
        };
        blocks.push(json!({
            "n": n.map(|d| d.value::<f64>()),
            "samples": sample.samples.len(),
            "infeasible": sample.infeasible,
            "ratio": stats,
            "max_identity_defect": max_defect,
        }));
    }
    let scan = feasibility_scan(&m.s_values, m.grid_step)?;
    let mut sums = Vec::new();
    for s in &m.series {
        for &cutoff in &s.cutoffs {
            let d = dyadic_sum(&s.name, s.s, s.b, s.b_prime, cutoff)?;
            sums.push(json!({
                "series": s.name,
                "s": s.s,
                "b": s.b,
                "b_prime": s.b_prime,
                "cutoff": cutoff,
                "partial_sum": d.partial_sum,
                "tail_ratio": d.tail_ratio,
            }));
        }
    }
    Ok(json!({
        "scenario": Scenario::MultiplierCheck.name(),
        "seed": cfg.seed,
        "alpha": cfg.equation.alpha,
        "beta": cfg.equation.beta,
        "resonance_threshold": n_star.value::<f64>(),
        "blocks": blocks,
        "feasibility": to_json(&scan),
        "grid_step": m.grid_step,
        "dyadic_sums": sums,
    }))
}

fn run_budget(cfg: &ScenarioConfig, _out: &Path) -> Result<Value, CliError> {
    let b = &cfg.budget;
    let rho = cfg.gevrey.rho;
    let norm_u0 = match b.norm_u0 {
        Some(v) => v,
        None => {
            let u0 = initial_field(cfg)?;
            gevrey_norm(&u0, &GevreyParams::strip(b.sigma0)?)?
        }
    };
    let (c_measured, c_source) = match b.c_measured {
        Some(c) => (c, "config"),
        None => {
            let run = evolve_configured(cfg, None)?;
            let audit = almost_conservation_audit(&run.trajectory, cfg.gevrey.sigma, rho)?;
            match audit.fitted_c {
                Some(c) if c > 0.0 => (c, "audit"),
                _ => {
                    return Err(CliError::Numerical {
                        message: format!(
                            "the audit at sigma = {} found no Gevrey-norm growth; set budget.c_measured",
                            cfg.gevrey.sigma
                        ),
                        last_checkpoint: None,
                    })
                }
            }
        }
    };
    let plan = budget_plan(norm_u0, b.sigma0, b.delta, c_measured, rho, b.t_final)?;
    let mut sweep = Vec::with_capacity(b.t_sweep.len());
    for &t in &b.t_sweep {
        let p = budget_plan(norm_u0, b.sigma0, b.delta, c_measured, rho, t)?;
        sweep.push(json!({
            "T": p.T,
            "sigma_T": p.sigma_T,
            "sigma_T_times_T": p.sigma_T * p.T,
            "clamped": p.clamped,
            "growth_condition": p.growth_condition,
        }));
    }
    Ok(json!({
        "scenario": Scenario::Budget.name(),
        "c_source": c_source,
        "plan": to_json(plan),
        "growth_condition_holds": plan.growth_condition <= 1.0 + kawahara::gevrey::GROWTH_CONDITION_SLACK,
        "sweep": sweep,
    }))
}
