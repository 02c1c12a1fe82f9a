//! Named initial profiles.

use crate::checkpoint;
use crate::config::{InitialData, Profile, ScenarioConfig};
use crate::error::CliError;
use kawahara::spectral::Grid as GridOf;
use kawahara::{Field, Grid, Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// Exact solitary wave `A sech^4(kappa (x - c t))` of
/// `u_t + u u_x + alpha u_xxx + beta u_xxxxx = 0`, which exists when
/// `alpha / beta < 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sech4Wave {
    pub amplitude: f64,
    pub kappa: f64,
    pub speed: f64,
}

impl Sech4Wave {
    pub fn new(params: &Params) -> Result<Self, CliError> {
        let (alpha, beta) = (params.alpha(), params.beta());
        if alpha / beta >= 0.0 {
            return Err(CliError::Config(format!(
                "sech4 profile needs alpha and beta of opposite sign, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(Self {
            amplitude: -105.0 * alpha * alpha / (169.0 * beta),
            kappa: (-alpha / (52.0 * beta)).sqrt(),
            speed: -36.0 * alpha * alpha / (169.0 * beta),
        })
    }

    pub fn profile(&self, x: f64) -> f64 {
        self.amplitude * sech(self.kappa * x).powi(4)
    }
}

/// Builds the initial field and the time it starts at.
pub fn initial_field(cfg: &ScenarioConfig) -> Result<Field, CliError> {
    let init = &cfg.initial;
    if init.profile == Profile::FromCheckpoint {
        let path = init.path.as_ref().ok_or_else(|| {
            CliError::Config("initial.path is required for from_checkpoint".into())
        })?;
        let ck = checkpoint::load(path).map_err(|source| CliError::Checkpoint {
            path: path.clone(),
            source,
        })?;
        return Ok(ck.field);
    }
    let grid = Grid::new(cfg.grid.n_points, cfg.grid.period)
        .map_err(|e| CliError::Config(format!("grid: {e}")))?;
    let params = cfg.params()?;
    let shape = shape_fn(init, &params)?;
    let noise = relative_noise(&grid, init, cfg.seed);
    Ok(Field::from_fn(grid, |x| shape(x) * (1.0 + noise(x))))
}

fn shape_fn(init: &InitialData, params: &Params) -> Result<Box<dyn Fn(f64) -> f64>, CliError> {
    let (a, c) = (init.amplitude, init.center);
    let w = positive("initial.width", init.width)?;
    Ok(match init.profile {
        Profile::Sech => Box::new(move |x| a * sech((x - c) / w)),
        Profile::Sech2 => Box::new(move |x| a * sech((x - c) / w).powi(2)),
        Profile::Sech4 => {
            let wave = Sech4Wave::new(params)?;
            Box::new(move |x| wave.profile(x - c))
        }
        Profile::Gaussian => Box::new(move |x| a * (-((x - c) / w).powi(2)).exp()),
        Profile::TwoSolitonSum => {
            let (a2, c2) = (init.amplitude2, init.center2);
            let w2 = positive("initial.width2", init.width2)?;
            Box::new(move |x| a * sech((x - c) / w).powi(2) + a2 * sech((x - c2) / w2).powi(2))
        }
        Profile::FromCheckpoint => unreachable!("handled by the caller"),
    })
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// Seeded smooth perturbation `noise * sum_j a_j e^{i k_j x}` over the lowest
/// `noise_modes` modes, applied multiplicatively so it stays inside the profile.
fn relative_noise(grid: &Arc<GridOf<f64>>, init: &InitialData, seed: u64) -> impl Fn(f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64)> = if init.noise == 0.0 {
        Vec::new()
    } else {
        (1..=init.noise_modes.min(grid.dealias_index()))
            .map(|j| {
                (
                    j as f64 * grid.dk(),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect()
    };
    let scale = init.noise / (modes.len().max(1) as f64).sqrt();
    move |x| {
        scale
            * modes
                .iter()
                .map(|&(k, a, b)| a * (k * x).cos() + b * (k * x).sin())
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use kawahara::dynamics::traveling_wave_residual;

    #[test]
    fn sech4_wave_is_exact() {
        for (alpha, beta) in [(1.0, -1.0), (2.0, -0.5), (-1.0, 0.25)] {
            let params = Params::new(alpha, beta).unwrap();
            let wave = Sech4Wave::new(&params).unwrap();
            let width = 1.0 / wave.kappa;
            let grid = Grid::new(512, 60.0 * width).unwrap();
            let u = Field::from_fn(grid, |x| wave.profile(x));
            let residual = traveling_wave_residual(&u, wave.speed, &params);
            assert!(
                residual < 1e-9,
                "alpha {alpha} beta {beta}: residual {residual}"
            );
        }
        assert!(Sech4Wave::new(&Params::new(1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn profiles_and_noise_are_deterministic() {
        let mut cfg = ScenarioConfig::default();
        cfg.grid.n_points = 256;
        for profile in [
            Profile::Sech,
            Profile::Sech2,
            Profile::Sech4,
            Profile::Gaussian,
            Profile::TwoSolitonSum,
        ] {
            cfg.initial.profile = profile;
            let u = initial_field(&cfg).unwrap();
            assert!(u.l2_norm() > 0.0);
        }
        cfg.initial.noise = 1e-3;
        let a = initial_field(&cfg).unwrap();
        let b = initial_field(&cfg).unwrap();
        assert_eq!(a.coeffs(), b.coeffs());
        cfg.seed = 1;
        assert_ne!(initial_field(&cfg).unwrap().coeffs(), a.coeffs());
    }

    #[test]
    fn missing_checkpoint_path() {
        let mut cfg = ScenarioConfig::default();
        cfg.initial.profile = Profile::FromCheckpoint;
        assert!(matches!(initial_field(&cfg), Err(CliError::Config(_))));
        cfg.initial.path = Some("/nonexistent/x.gkaw".into());
        assert_eq!(initial_field(&cfg).unwrap_err().exit_code(), 3);
    }
}
