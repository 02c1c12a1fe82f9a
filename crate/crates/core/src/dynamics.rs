//! Time integration of the Kawahara equation.
//!
//! In Fourier variables the equation reads `û_t = i p(k) û + N(û)` with
//! `N(û) = -(1/2) i k F[u^2]`. Stepping uses the Lawson (integrating-factor)
//! fourth-order Runge-Kutta scheme on `w = exp(-i t p(k)) û`, so the stiff
//! dispersive part is propagated exactly.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{
    apply_multiplier, dealias, dealias_in_place, derivative, dispersion_symbol, forward_transform,
    inverse_transform, EquationParams, SpectralField,
};

/// Sup-norm ceiling beyond which a run is treated as diverged.
pub const BLOW_UP_CEILING: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig<T: Real> {
    pub params: EquationParams<T>,
    pub dt: T,
    pub t_end: T,
    pub dealias: bool,
    /// `false` drops `u u_x`, leaving the exact linear flow.
    pub nonlinear: bool,
    pub observer_stride: usize,
    /// Reject initial data with mass near the box edge. Disable to continue
    /// from a mid-run state whose radiation already fills the box.
    pub boundary_check: bool,
}

impl<T: Real> EvolutionConfig<T> {
    pub fn new(params: EquationParams<T>, dt: T, t_end: T) -> Result<Self> {
        let cfg = Self {
            params,
            dt,
            t_end,
            dealias: true,
            nonlinear: true,
            observer_stride: 1,
            boundary_check: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn linear(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.observer_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt <= T::zero() || !self.dt.is_finite() {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.t_end < T::zero() || !self.t_end.is_finite() {
            return Err(Error::Config(format!(
                "t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if self.observer_stride == 0 {
            return Err(Error::Config("observer_stride must be positive".into()));
        }
        Ok(())
    }
}

/// Snapshots of one run, all on the grid of the initial field.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub snapshots: Vec<SpectralField<T>>,
    pub times: Vec<T>,
    pub config: EvolutionConfig<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn initial(&self) -> &SpectralField<T> {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &SpectralField<T> {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifespanParams<T> {
    pub c0: T,
    pub a: T,
    pub norm_u0: T,
}

impl<T: Real> LifespanParams<T> {
    pub fn new(c0: T, a: T, norm_u0: T) -> Result<Self> {
        if c0.is_nan() || c0 <= T::zero() {
            return Err(Error::Usage(format!("c0 must be positive, got {c0}")));
        }
        if a.is_nan() || a <= T::lit(2.0) {
            return Err(Error::Usage(format!("a must exceed 2, got {a}")));
        }
        if norm_u0.is_nan() || norm_u0 < T::zero() {
            return Err(Error::Usage(format!(
                "norm_u0 must be non-negative, got {norm_u0}"
            )));
        }
        Ok(Self { c0, a, norm_u0 })
    }

    /// Default constants `c0 = 0.1`, `a = 3`.
    pub fn with_defaults(norm_u0: T) -> Result<Self> {
        Self::new(T::lit(0.1), T::lit(3.0), norm_u0)
    }
}

/// Local existence time `c0 (1 + ||u0||)^(-a)`.
pub fn lifespan<T: Real>(p: &LifespanParams<T>) -> T {
    p.c0 * (T::one() + p.norm_u0).powf(-p.a)
}

fn nonlinear_term<T: Real>(u: &SpectralField<T>, dealiased: bool) -> SpectralField<T> {
    let phys = inverse_transform(u);
    let sq: Vec<T> = phys.iter().map(|v| *v * *v).collect();
    let sq = forward_transform(&sq, u.grid()).expect("grid-sized samples");
    let mut out = derivative(&sq, 1).scaled(T::lit(-0.5));
    if dealiased {
        let grid = u.grid().clone();
        let mut coeffs = out.into_coeffs();
        dealias_in_place(&mut coeffs, &grid);
        out = SpectralField::new(grid, coeffs, u.time()).expect("same grid");
    }
    out.with_time(u.time())
}

/// Dealiased spectral representation of `-(1/2) d/dx (u^2) = -u u_x`.
pub fn rhs_nonlinear<T: Real>(u: &SpectralField<T>) -> SpectralField<T> {
    nonlinear_term(u, true)
}

/// Exact linear propagator `exp(i dt p(k))` as a multiplier symbol.
pub fn linear_phase<T: Real>(dt: T, params: EquationParams<T>) -> impl Fn(T) -> Complex<T> {
    move |k: T| Complex::from_polar(T::one(), dt * dispersion_symbol(k, &params))
}

fn propagate<T: Real>(u: &SpectralField<T>, phase: &[Complex<T>]) -> SpectralField<T> {
    let coeffs = u.coeffs().iter().zip(phase).map(|(c, e)| c * e).collect();
    SpectralField::new(u.grid().clone(), coeffs, u.time()).expect("same grid")
}

/// Propagator table in storage order. The Nyquist entry is zero: a real
/// field cannot carry `sin(k_max x)`, so that mode is excluded from the
/// solver's state space.
fn phase_table<T: Real>(
    u: &SpectralField<T>,
    dt: T,
    params: &EquationParams<T>,
) -> Vec<Complex<T>> {
    let sym = linear_phase(dt, *params);
    let mut table: Vec<Complex<T>> = u.grid().wavenumbers().iter().map(|&k| sym(k)).collect();
    let nyquist = table.len() / 2;
    table[nyquist] = Complex::new(T::zero(), T::zero());
    table
}

/// Drops the Nyquist mode, which the solver never carries.
pub fn project_resolved<T: Real>(u: &SpectralField<T>) -> SpectralField<T> {
    let mut coeffs = u.coeffs().to_vec();
    let nyquist = coeffs.len() / 2;
    coeffs[nyquist] = Complex::new(T::zero(), T::zero());
    SpectralField::new(u.grid().clone(), coeffs, u.time()).expect("same grid")
}

fn prepare_initial<T: Real>(
    u0: &SpectralField<T>,
    config: &EvolutionConfig<T>,
) -> SpectralField<T> {
    if config.dealias && config.nonlinear {
        dealias(u0)
    } else {
        project_resolved(u0)
    }
}

/// One Lawson-RK4 step of size `dt` (negative `dt` integrates backwards).
pub fn step<T: Real>(
    u: &SpectralField<T>,
    dt: T,
    config: &EvolutionConfig<T>,
) -> Result<SpectralField<T>> {
    let full = phase_table(u, dt, &config.params);
    let half = phase_table(u, dt / T::lit(2.0), &config.params);
    step_with_tables(u, dt, config, &half, &full)
}

fn step_with_tables<T: Real>(
    u: &SpectralField<T>,
    dt: T,
    config: &EvolutionConfig<T>,
    half: &[Complex<T>],
    full: &[Complex<T>],
) -> Result<SpectralField<T>> {
    let t_next = u.time() + dt;
    let linear_u = propagate(u, full);
    if !config.nonlinear {
        return Ok(linear_u.with_time(t_next));
    }
    let dl = config.dealias;
    let h2 = dt / T::lit(2.0);
    let half_u = propagate(u, half);

    let a = nonlinear_term(u, dl);
    let b = nonlinear_term(&propagate(&u.axpy(h2, &a)?, half), dl);
    let c = nonlinear_term(&half_u.axpy(h2, &b)?, dl);
    let d = nonlinear_term(&linear_u.axpy(dt, &propagate(&c, half))?, dl);

    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let coeffs: Vec<Complex<T>> = (0..u.coeffs().len())
        .map(|m| {
            let bc = (b.coeffs()[m] + c.coeffs()[m]) * two;
            linear_u.coeffs()[m] + (full[m] * a.coeffs()[m] + half[m] * bc + d.coeffs()[m]) * sixth
        })
        .collect();
    let next = SpectralField::new(u.grid().clone(), coeffs, t_next)?;
    check_blow_up(&next)?;
    Ok(next)
}

fn check_blow_up<T: Real>(u: &SpectralField<T>) -> Result<()> {
    let t = u.time().to_f64_lossy();
    if !u.is_finite() {
        return Err(Error::BlowUp {
            t,
            reason: "non-finite coefficient".into(),
        });
    }
    // sum |c_j| bounds the sup norm; only go to physical space when it might bind
    let bound = u
        .coeffs()
        .iter()
        .map(|c| c.norm())
        .fold(T::zero(), |a, b| a + b);
    if bound.to_f64_lossy() > BLOW_UP_CEILING {
        let sup = inverse_transform(u)
            .into_iter()
            .fold(T::zero(), |a, v| a.max(v.abs()));
        if sup.to_f64_lossy() > BLOW_UP_CEILING {
            return Err(Error::BlowUp {
                t,
                reason: format!("sup norm {sup} exceeds {BLOW_UP_CEILING:e}"),
            });
        }
    }
    Ok(())
}

/// Number of steps and the adjusted step that lands exactly on `t_end`.
fn step_plan<T: Real>(config: &EvolutionConfig<T>) -> (usize, T) {
    if config.t_end == T::zero() {
        return (0, config.dt);
    }
    let n = (config.t_end / config.dt).round().max(T::one());
    let n_steps = n.to_usize().expect("finite step count");
    (n_steps, config.t_end / n)
}

/// Callback receiving `(t, field)` at every snapshot, in time order.
pub type Observer<'a, T> = dyn FnMut(T, &SpectralField<T>) + 'a;

/// Integrates from `u0` to `config.t_end`, recording a snapshot every
/// `observer_stride` steps plus the final state.
pub fn evolve<T: Real>(
    u0: &SpectralField<T>,
    config: &EvolutionConfig<T>,
    observers: &mut [&mut Observer<'_, T>],
) -> Result<Trajectory<T>> {
    config.validate()?;
    if config.boundary_check {
        u0.check_boundary_mass()?;
    }
    let mut u = prepare_initial(u0, config);
    let t0 = u.time();
    let (n_steps, dt) = step_plan(config);
    let full = phase_table(&u, dt, &config.params);
    let half = phase_table(&u, dt / T::lit(2.0), &config.params);

    let mut snapshots = vec![u.clone()];
    let mut times = vec![t0];
    for obs in observers.iter_mut() {
        obs(t0, &u);
    }
    for i in 1..=n_steps {
        u = step_with_tables(&u, dt, config, &half, &full)?;
        // absorb accumulated rounding in the time tag
        u = u.with_time(t0 + dt * T::from_usize_lossy(i));
        if i % config.observer_stride == 0 || i == n_steps {
            for obs in observers.iter_mut() {
                obs(u.time(), &u);
            }
            times.push(u.time());
            snapshots.push(u.clone());
        }
    }
    Ok(Trajectory {
        snapshots,
        times,
        config: config.clone(),
    })
}

/// Advances `u` by `n` steps of `dt` (which may be negative).
pub fn advance<T: Real>(
    u: &SpectralField<T>,
    dt: T,
    n: usize,
    config: &EvolutionConfig<T>,
) -> Result<SpectralField<T>> {
    let full = phase_table(u, dt, &config.params);
    let half = phase_table(u, dt / T::lit(2.0), &config.params);
    let mut v = u.clone();
    for _ in 0..n {
        v = step_with_tables(&v, dt, config, &half, &full)?;
    }
    Ok(v)
}

/// Outcome of the setup-time step-halving check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtSelection<T> {
    pub dt: T,
    pub halvings: u32,
    /// Richardson estimate of the error of 10 steps at `dt`, relative to `||u||`.
    pub local_error: T,
}

pub const DT_TOLERANCE: f64 = 1e-10;
pub const MAX_HALVINGS: u32 = 8;
const PROBE_STEPS: usize = 10;

/// Halves `config.dt` until 10 steps at `dt` and 20 steps at `dt/2` agree to
/// [`DT_TOLERANCE`] after Richardson scaling, at most [`MAX_HALVINGS`] times.
pub fn select_dt<T: Real>(
    u0: &SpectralField<T>,
    config: &EvolutionConfig<T>,
) -> Result<DtSelection<T>> {
    config.validate()?;
    let u = prepare_initial(u0, config);
    let mut dt = config.dt;
    let mut last = T::infinity();
    for halvings in 0..=MAX_HALVINGS {
        let coarse = advance(&u, dt, PROBE_STEPS, config)?;
        let fine = advance(&u, dt / T::lit(2.0), 2 * PROBE_STEPS, config)?;
        let est = coarse.relative_distance(&fine)? * T::lit(16.0 / 15.0);
        if est < T::lit(DT_TOLERANCE) {
            return Ok(DtSelection {
                dt,
                halvings,
                local_error: est,
            });
        }
        last = est;
        dt = dt / T::lit(2.0);
    }
    Err(Error::Config(format!(
        "no step size met the {DT_TOLERANCE:e} error target after {MAX_HALVINGS} halvings (last estimate {last})"
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationRow<T> {
    pub t: T,
    pub mass: T,
    pub energy: T,
    pub mass_drift: T,
    pub energy_drift: T,
}

fn drift<T: Real>(value: T, reference: T) -> T {
    let d = (value - reference).abs();
    if reference != T::zero() {
        d / reference.abs()
    } else {
        d
    }
}

/// `∫u` and `∫u^2` per snapshot with drift relative to the first snapshot.
pub fn conservation_report<T: Real>(traj: &Trajectory<T>) -> Result<Vec<ConservationRow<T>>> {
    let first = traj
        .snapshots
        .first()
        .ok_or_else(|| Error::Usage("empty trajectory".into()))?;
    let (m0, e0) = (first.mass(), first.l2_norm_sq());
    Ok(traj
        .snapshots
        .iter()
        .zip(&traj.times)
        .map(|(u, &t)| {
            let (mass, energy) = (u.mass(), u.l2_norm_sq());
            ConservationRow {
                t,
                mass,
                energy,
                mass_drift: drift(mass, m0),
                energy_drift: drift(energy, e0),
            }
        })
        .collect())
}

/// `||-c u_x + u u_x + alpha u_xxx + beta u_xxxxx|| / ||u||`; zero for `u = 0`.
pub fn traveling_wave_residual<T: Real>(
    profile: &SpectralField<T>,
    speed: T,
    params: &EquationParams<T>,
) -> T {
    let norm = profile.l2_norm();
    if norm == T::zero() {
        return T::zero();
    }
    let ux = derivative(profile, 1);
    let uxxx = derivative(profile, 3);
    let uxxxxx = derivative(profile, 5);
    // u u_x = (1/2)(u^2)_x, taken without truncation so the residual is not masked
    let advect = nonlinear_term(profile, false).scaled(-T::one());
    let r = ux
        .scaled(-speed)
        .axpy(T::one(), &advect)
        .and_then(|r| r.axpy(params.alpha(), &uxxx))
        .and_then(|r| r.axpy(params.beta(), &uxxxxx))
        .expect("all terms share the profile grid");
    r.l2_norm() / norm
}

/// Applies `exp(i t p(k))` to the resolved modes of `u`: the exact solution
/// of the linear flow.
pub fn linear_evolution<T: Real>(
    u: &SpectralField<T>,
    t: T,
    params: &EquationParams<T>,
) -> Result<SpectralField<T>> {
    let v = apply_multiplier(u, linear_phase(t, *params))?;
    Ok(project_resolved(&v).with_time(u.time() + t))
}
