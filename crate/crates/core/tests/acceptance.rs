//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

use kawahara::dynamics::{
    advance, conservation_report, evolve, select_dt, traveling_wave_residual, EvolutionConfig,
};
use kawahara::gevrey::{
    almost_conservation_audit, budget_plan, commutator_majorant_check, estimate_radius,
    exponential_difference_slack, gevrey_norm_sq, min_bracket_slack, GevreyParams,
    DEFAULT_NOISE_FLOOR, GROWTH_CONDITION_SLACK, MIN_FIT_MODES,
};
use kawahara::multiplier::{
    dyadic_sum, feasibility_scan, resonance_ratio_stats, sample_block, Dyadic,
};
use kawahara::{Field, Grid, Params};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn kawahara_params() -> Params {
    Params::new(1.0, -1.0).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(elapsed: Duration, limit_s: f64, detail: String, ok: bool) -> Outcome {
    let secs = elapsed.as_secs_f64();
    check(
        ok && secs < limit_s,
        format!("{detail}; {secs:.2} s (limit {limit_s} s)"),
    )
}

fn conservation() -> Outcome {
    let start = Instant::now();
    let grid = Grid::new(1024, 100.0).unwrap();
    let u0 = Field::from_fn(grid, |x| 1.0 / (x / 2.0).cosh().powi(2));
    let probe = EvolutionConfig::new(kawahara_params(), 4e-3, 10.0).unwrap();
    let dt = select_dt(&u0, &probe).map_err(|e| e.to_string())?.dt;
    let cfg = EvolutionConfig::new(kawahara_params(), dt, 10.0)
        .unwrap()
        .with_stride(1000);
    let traj = evolve(&u0, &cfg, &mut []).map_err(|e| e.to_string())?;
    let rows = conservation_report(&traj).map_err(|e| e.to_string())?;
    let mass = rows.iter().map(|r| r.mass_drift).fold(0.0, f64::max);
    let energy = rows.iter().map(|r| r.energy_drift).fold(0.0, f64::max);
    within_budget(
        start.elapsed(),
        60.0,
        format!("dt {dt:e}, mass drift {mass:.2e}, L2 drift {energy:.2e} (limit 1e-8)"),
        mass < 1e-8 && energy < 1e-8,
    )
}

fn integrator_order() -> Outcome {
    let start = Instant::now();
    let grid = Grid::new(128, 100.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let amps: Vec<Complex<f64>> = (0..=12)
        .map(|_| Complex::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)))
        .collect();
    let u0 = Field::from_spectrum(grid, |j| {
        if j != 0 && j.abs() <= 12 {
            amps[j.unsigned_abs() as usize]
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    let dt = 0.01;
    let cfg = EvolutionConfig::new(kawahara_params(), dt, 1.0).unwrap();
    let reference = advance(&u0, dt / 64.0, 640, &cfg).map_err(|e| e.to_string())?;
    let coarse = advance(&u0, dt, 10, &cfg).map_err(|e| e.to_string())?;
    let fine = advance(&u0, dt / 2.0, 20, &cfg).map_err(|e| e.to_string())?;
    let ratio =
        coarse.relative_distance(&reference).unwrap() / fine.relative_distance(&reference).unwrap();
    within_budget(
        start.elapsed(),
        10.0,
        format!("error ratio {ratio:.3} (expected [10, 22])"),
        (10.0..=22.0).contains(&ratio),
    )
}

/// `c_j = (1/L) int sech(x) e^{-i k_j x} dx` by composite Simpson on a fine
/// mesh, independent of the FFT.
fn sech_coefficient(k: f64, period: f64) -> f64 {
    let m = 200_000;
    let h = period / m as f64;
    let f = |x: f64| (k * x).cos() / x.cosh();
    let mut acc = f(-period / 2.0) + f(period / 2.0);
    for i in 1..m {
        let x = -period / 2.0 + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0 / period
}

fn radius_oracle() -> Outcome {
    let start = Instant::now();
    let grid = Grid::new(1024, 100.0).unwrap();
    let u = Field::from_fn(grid.clone(), |x| 1.0 / x.cosh());
    // quadrature noise sits at ~1e-16 of the integrand, so compare on the scale of c_0
    let scale = sech_coefficient(0.0, grid.period());
    let mut worst: f64 = 0.0;
    for j in [0i64, 5, 40, 120, 250] {
        let k = j as f64 * grid.dk();
        let oracle = sech_coefficient(k, grid.period());
        let closed = PI / (FRAC_PI_2 * k).cosh() / grid.period();
        worst = worst
            .max((u.mode(j).re - oracle).abs() / scale)
            .max((closed - oracle).abs() / scale);
    }
    let r = estimate_radius(&u, DEFAULT_NOISE_FLOOR, MIN_FIT_MODES).map_err(|e| e.to_string())?;
    let ratio = r.sigma_hat / FRAC_PI_2;
    within_budget(
        start.elapsed(),
        10.0,
        format!(
            "sigma_hat {:.5} = {ratio:.4} x pi/2 (expected [0.98, 1.02]); coefficients vs quadrature {worst:.1e} of c_0",
            r.sigma_hat
        ),
        (0.98..=1.02).contains(&ratio) && worst < 1e-12 && r.ok,
    )
}

fn linear_invariance() -> Outcome {
    let grid = Grid::new(1024, 100.0).unwrap();
    let u0 = Field::from_fn(grid, |x| 1.0 / x.cosh());
    let cfg = EvolutionConfig::new(kawahara_params(), 0.05, 10.0)
        .unwrap()
        .linear()
        .with_stride(10);
    let traj = evolve(&u0, &cfg, &mut []).map_err(|e| e.to_string())?;
    let norms: Vec<GevreyParams<f64>> =
        [(0.0, 0.0), (0.5, 0.0), (1.0, 1.0), (1.4, -0.5), (0.2, 2.0)]
            .iter()
            .map(|&(sigma, s)| GevreyParams::new(sigma, s, 1.0).unwrap())
            .collect();
    let r0 = estimate_radius(traj.initial(), DEFAULT_NOISE_FLOOR, MIN_FIT_MODES)
        .unwrap()
        .sigma_hat;
    let g0: Vec<f64> = norms
        .iter()
        .map(|p| gevrey_norm_sq(traj.initial(), p).unwrap())
        .collect();
    let mut worst: f64 = 0.0;
    for u in &traj.snapshots {
        let r = estimate_radius(u, DEFAULT_NOISE_FLOOR, MIN_FIT_MODES)
            .unwrap()
            .sigma_hat;
        worst = worst.max((r - r0).abs() / r0);
        for (p, g) in norms.iter().zip(&g0) {
            worst = worst.max((gevrey_norm_sq(u, p).unwrap() - g).abs() / g);
        }
    }
    check(
        worst < 1e-9,
        format!(
            "{} snapshots, worst relative change {worst:.1e} (limit 1e-9)",
            traj.len()
        ),
    )
}

fn almost_conservation_scaling() -> Outcome {
    let start = Instant::now();
    let grid = Grid::new(1024, 100.0).unwrap();
    let u0 = Field::from_fn(grid, |x| -1.0 / (x / 2.0).cosh().powi(2));
    let probe = EvolutionConfig::new(kawahara_params(), 4e-3, 10.0).unwrap();
    let dt = select_dt(&u0, &probe).map_err(|e| e.to_string())?.dt;
    let cfg = EvolutionConfig::new(kawahara_params(), dt, 10.0)
        .unwrap()
        .with_stride(400);
    let traj = evolve(&u0, &cfg, &mut []).map_err(|e| e.to_string())?;
    let sigma = 0.1;
    let full = almost_conservation_audit(&traj, sigma, 1.0).map_err(|e| e.to_string())?;
    let half = almost_conservation_audit(&traj, sigma / 2.0, 1.0).map_err(|e| e.to_string())?;
    let ratio = half.max_increment / full.max_increment;
    within_budget(
        start.elapsed(),
        120.0,
        format!(
            "increment {:.3e} at sigma {sigma}, {:.3e} at sigma/2, ratio {ratio:.3} (expected [0.35, 0.65])",
            full.max_increment, half.max_increment
        ),
        full.max_increment > 0.0 && (0.35..=0.65).contains(&ratio),
    )
}

fn radius_decay_rate() -> Outcome {
    let start = Instant::now();
    let grid = Grid::new(1024, 100.0).unwrap();
    let u0 = Field::from_fn(grid, |x| 1.0 / x.cosh());
    let cfg = EvolutionConfig::new(kawahara_params(), 2e-3, 50.0)
        .unwrap()
        .with_stride(500);
    let traj = evolve(&u0, &cfg, &mut []).map_err(|e| e.to_string())?;
    let mut at_one = None;
    let mut min_product = f64::INFINITY;
    for (u, &t) in traj.snapshots.iter().zip(&traj.times) {
        if t < 1.0 - 1e-9 {
            continue;
        }
        let r =
            estimate_radius(u, DEFAULT_NOISE_FLOOR, MIN_FIT_MODES).map_err(|e| e.to_string())?;
        if !r.ok {
            return Err(format!("radius fit rejected at t = {t}"));
        }
        at_one.get_or_insert(r.sigma_hat);
        min_product = min_product.min(r.sigma_hat * t);
    }
    let at_one = at_one.ok_or("no snapshot at t >= 1")?;
    within_budget(
        start.elapsed(),
        300.0,
        format!(
            "sigma_hat(1) {at_one:.4}, min sigma_hat(t) t {min_product:.4} (limit >= {:.4})",
            0.5 * at_one
        ),
        min_product >= 0.5 * at_one,
    )
}

fn solitary_wave() -> Outcome {
    let grid = Grid::new(256, 160.0).unwrap();
    let params = kawahara_params();
    let speed = 36.0 / 169.0;
    let width = 2.0 * 13f64.sqrt();
    let u0 = Field::from_fn(grid.clone(), |x| 105.0 / 169.0 / (x / width).cosh().powi(4));
    let residual = traveling_wave_residual(&u0, speed, &params);
    if residual >= 1e-9 {
        return Err(format!("profile residual {residual:.2e} (limit 1e-9)"));
    }
    let transit = grid.period() / speed;
    let cfg = EvolutionConfig::new(params, 0.01, transit)
        .unwrap()
        .with_stride(usize::MAX);
    let traj = evolve(&u0, &cfg, &mut []).map_err(|e| e.to_string())?;
    let shape = traj.last().relative_distance(&u0).unwrap();
    let r0 = estimate_radius(&u0, DEFAULT_NOISE_FLOOR, MIN_FIT_MODES)
        .unwrap()
        .sigma_hat;
    let r1 = estimate_radius(traj.last(), DEFAULT_NOISE_FLOOR, MIN_FIT_MODES)
        .unwrap()
        .sigma_hat;
    let drift = (r1 - r0).abs() / r0;
    check(
        shape < 1e-6 && drift < 0.01,
        format!("residual {residual:.1e}; transit T = {transit:.1}: shape error {shape:.2e} (limit 1e-6), sigma_hat drift {drift:.2e} (limit 1e-2)"),
    )
}

fn commutator_majorant() -> Outcome {
    let start = Instant::now();
    let grid = Grid::new(128, 2.0 * PI * 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..100 {
        let modes = rng.gen_range(2..=30i64);
        let amps: Vec<Complex<f64>> = (0..=modes)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let u = Field::from_spectrum(grid.clone(), |j| {
            if j.abs() <= modes {
                amps[j.unsigned_abs() as usize]
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        for sigma in [0.1, 0.5] {
            for rho in [0.5, 1.0] {
                let c = commutator_majorant_check(&u, sigma, rho).map_err(|e| e.to_string())?;
                worst = worst.max(c.max_ratio);
                failures += usize::from(!c.passed);
            }
        }
    }
    let mut scalar_worst = f64::INFINITY;
    for _ in 0..1_000_000 {
        let x1 = rng.gen_range(-100.0..100.0);
        let x2 = rng.gen_range(-100.0..100.0);
        let sigma = rng.gen_range(0.0..2.0);
        let rho = rng.gen_range(0.0..=1.0);
        scalar_worst = scalar_worst
            .min(exponential_difference_slack(x1, x2, sigma, rho))
            .min(min_bracket_slack(x1, x2));
    }
    within_budget(
        start.elapsed(),
        60.0,
        format!("400 field checks, {failures} failures, max ratio {worst:.3}; scalar min slack {scalar_worst:.2e}"),
        failures == 0 && scalar_worst >= -1e-12,
    )
}

fn parse_bracket() -> (f64, f64) {
    let text = include_str!("fixtures/resonance_bracket.txt");
    let v: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    (v[0], v[1])
}

fn resonance_law() -> Outcome {
    let (r_lo, r_hi) = parse_bracket();
    let params = Params::new(0.0, 1.0).unwrap();
    let (mut lo, mut hi, mut defect) = (f64::INFINITY, 0.0f64, 0.0f64);
    let mut blocks = 0;
    for kmax in 2..=8 {
        for kmed in [kmax, kmax - 1] {
            for kmin in 0..=kmed {
                let n = [Dyadic(kmax), Dyadic(kmed), Dyadic(kmin)];
                let seed = (kmax * 100 + kmed * 10 + kmin) as u64;
                let block = sample_block(n, 10_000, &params, seed).map_err(|e| e.to_string())?;
                if block.samples.is_empty() {
                    continue;
                }
                blocks += 1;
                let stats = resonance_ratio_stats(&block, &params).map_err(|e| e.to_string())?;
                lo = lo.min(stats.min);
                hi = hi.max(stats.max);
                for s in &block.samples {
                    defect = defect.max(s.identity_defect());
                }
            }
        }
    }
    check(
        r_lo <= lo && hi <= r_hi && defect <= 1e-12,
        format!("{blocks} blocks: ratios in [{lo:.3}, {hi:.3}] vs bracket [{r_lo:.3}, {r_hi:.3}]; identity defect {defect:.1e}"),
    )
}

fn feasibility_threshold() -> Outcome {
    let start = Instant::now();
    let scan =
        feasibility_scan(&[-1.74, -1.0, 0.0, -1.76, -2.0], 1e-3).map_err(|e| e.to_string())?;
    let got: Vec<bool> = scan.iter().map(|e| e.feasible).collect();
    let expected = [true, true, true, false, false];
    let summary: Vec<String> = scan
        .iter()
        .map(|e| {
            format!(
                "s={}: {}",
                e.s,
                if e.feasible { "feasible" } else { "infeasible" }
            )
        })
        .collect();
    within_budget(start.elapsed(), 30.0, summary.join(", "), got == expected)
}

fn dyadic_convergence() -> Outcome {
    let a = dyadic_sum("app05", 0.0, 0.6, 0.7, 30).map_err(|e| e.to_string())?;
    let b = dyadic_sum("app05", 0.0, 0.6, 0.7, 60).map_err(|e| e.to_string())?;
    let change = (b.partial_sum - a.partial_sum).abs() / a.partial_sum;
    let diverging = dyadic_sum("app04", -1.9, 0.55, 0.7, 60).map_err(|e| e.to_string())?;
    let converging = dyadic_sum("app04", -1.9, 0.55, 0.56, 60).map_err(|e| e.to_string())?;
    check(
        change < 0.01 && diverging.tail_ratio > 1.5 && converging.tail_ratio < 1.01,
        format!(
            "app05 change {change:.1e} on cutoff 30 -> 60; app04 tail ratio {:.3} (exponent -0.4), {:.5} (exponent +0.16)",
            diverging.tail_ratio, converging.tail_ratio
        ),
    )
}

fn budget_planner() -> Outcome {
    let plans: Vec<_> = [10.0, 20.0, 40.0, 80.0]
        .iter()
        .map(|&t| budget_plan(1.3, 10.0, 0.1, 0.8, 1.0, t))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let products: Vec<f64> = plans.iter().map(|p| p.sigma_T * p.T).collect();
    let spread = products
        .iter()
        .map(|p| (p - products[0]).abs() / products[0])
        .fold(0.0, f64::max);
    let unclamped = plans.iter().all(|p| !p.clamped);
    let condition = plans.iter().map(|p| p.growth_condition).fold(0.0, f64::max);
    check(
        unclamped && spread <= 1e-12 && condition <= 1.0 + GROWTH_CONDITION_SLACK,
        format!("sigma_T T = {:.6e}, relative spread {spread:.1e}; max growth condition {condition:.15}", products[0]),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("conservation", conservation),
        ("integrator order", integrator_order),
        ("radius oracle", radius_oracle),
        ("linear invariance", linear_invariance),
        ("almost-conservation scaling", almost_conservation_scaling),
        ("radius decay rate", radius_decay_rate),
        ("solitary wave", solitary_wave),
        ("commutator majorant", commutator_majorant),
        ("resonance law", resonance_law),
        ("feasibility threshold", feasibility_threshold),
        ("dyadic convergence", dyadic_convergence),
        ("budget planner", budget_planner),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!(
                "criterion {:2} {name}: PASS ({detail}) [{secs:.2} s]",
                i + 1
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "criterion {:2} {name}: FAIL ({detail}) [{secs:.2} s]",
                    i + 1
                );
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
