//! Gevrey norms, analyticity-radius estimation, the Gevrey commutator and
//! the strip-width budget.
//!
//! `||u||_{G^{sigma,s}} = || exp(sigma |D|) (1 + |D|)^s u ||_{L2}`; a finite
//! norm with `sigma > 0` means `u` extends holomorphically to `|Im z| < sigma`,
//! and the exponential decay rate of `|û(k)|` is the half-width of that strip.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{
    apply_multiplier, dealias, derivative, exp_weight_symbol, product, SpectralField,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GevreyParams<T> {
    pub sigma: T,
    pub s: T,
    pub rho: T,
}

impl<T: Real> GevreyParams<T> {
    pub fn new(sigma: T, s: T, rho: T) -> Result<Self> {
        if sigma < T::zero() || !sigma.is_finite() {
            return Err(Error::Usage(format!("sigma must be >= 0, got {sigma}")));
        }
        if !s.is_finite() {
            return Err(Error::Usage(format!("s must be finite, got {s}")));
        }
        if !(rho >= T::zero() && rho <= T::one()) {
            return Err(Error::Usage(format!("rho must lie in [0, 1], got {rho}")));
        }
        Ok(Self { sigma, s, rho })
    }

    /// `G^{sigma,0}` with the default `rho = 1`.
    pub fn strip(sigma: T) -> Result<Self> {
        Self::new(sigma, T::zero(), T::one())
    }
}

fn gevrey_weight<T: Real>(k: T, sigma: T, s: T) -> T {
    let a = k.abs();
    (sigma * a).exp() * (T::one() + a).powf(s)
}

/// Squared Gevrey norm, `L * sum_j w(k_j)^2 |c_j|^2`.
pub fn gevrey_norm_sq<T: Real>(u: &SpectralField<T>, p: &GevreyParams<T>) -> Result<T> {
    let mut acc = T::zero();
    for (c, &k) in u.coeffs().iter().zip(u.grid().wavenumbers()) {
        let w = gevrey_weight(k, p.sigma, p.s);
        if !w.is_finite() {
            return Err(Error::Overflow {
                k: k.to_f64_lossy(),
            });
        }
        acc = acc + w * w * c.norm_sqr();
    }
    if !acc.is_finite() {
        return Err(Error::Overflow {
            k: u.grid().k_max().to_f64_lossy(),
        });
    }
    Ok(acc * u.grid().period())
}

pub fn gevrey_norm<T: Real>(u: &SpectralField<T>, p: &GevreyParams<T>) -> Result<T> {
    gevrey_norm_sq(u, p).map(T::sqrt)
}

/// Exponential decay fit of a spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate<T> {
    pub sigma_hat: T,
    pub band: (T, T),
    /// RMS residual of the fit of `ln|û|` against `|k|`.
    pub fit_residual: T,
    pub modes_used: usize,
    pub ok: bool,
}

pub const DEFAULT_NOISE_FLOOR: f64 = 1e-12;
/// Fewest fitted modes for which an estimate is ever flagged `ok`.
pub const MIN_FIT_MODES: usize = 8;
pub const MAX_FIT_RESIDUAL: f64 = 0.5;

/// Least-squares fit of `ln|û(k)|` against `|k|` over the decaying tail.
///
/// The band starts one mode beyond the spectral peak and ends at the last
/// mode above `noise_floor * max|û|`, never beyond the dealiasing cutoff.
/// Modes inside the band that fall below the floor are skipped.
pub fn estimate_radius<T: Real>(
    u: &SpectralField<T>,
    noise_floor: T,
    min_modes: usize,
) -> Result<RadiusEstimate<T>> {
    let grid = u.grid();
    let top = grid.dealias_index();
    let amp: Vec<T> = (0..=top as i64).map(|j| u.mode(j).norm()).collect();
    let peak = amp.iter().copied().fold(T::zero(), T::max);
    if peak == T::zero() {
        return Err(Error::Usage(
            "cannot estimate the radius of a zero field".into(),
        ));
    }
    let floor = noise_floor * peak;
    let peak_idx = amp.iter().position(|&a| a == peak).expect("peak present");
    let lo = peak_idx + 1;
    let hi = (lo..amp.len())
        .rev()
        .find(|&j| amp[j] > floor)
        .unwrap_or(lo.min(top));
    let dk = grid.dk();
    let band = (
        T::from_usize_lossy(lo.min(top)) * dk,
        T::from_usize_lossy(hi) * dk,
    );

    let pts: Vec<(T, T)> = (lo..=hi.max(lo).min(top))
        .filter(|&j| amp[j] > floor)
        .map(|j| (T::from_usize_lossy(j) * dk, amp[j].ln()))
        .collect();
    let required = min_modes.max(MIN_FIT_MODES);
    if pts.len() < 2 {
        return Ok(RadiusEstimate {
            sigma_hat: T::zero(),
            band,
            fit_residual: T::zero(),
            modes_used: pts.len(),
            ok: false,
        });
    }
    let (slope, residual) = fit_line(&pts);
    Ok(RadiusEstimate {
        sigma_hat: (-slope).max(T::zero()),
        band,
        fit_residual: residual,
        modes_used: pts.len(),
        ok: pts.len() >= required && residual < T::lit(MAX_FIT_RESIDUAL),
    })
}

/// Ordinary least squares `y = a + b x`; returns `(b, rms residual)`.
fn fit_line<T: Real>(pts: &[(T, T)]) -> (T, T) {
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).fold(T::zero(), |a, b| a + b) / n;
    let my = pts.iter().map(|p| p.1).fold(T::zero(), |a, b| a + b) / n;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for &(x, y) in pts {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss = pts
        .iter()
        .map(|&(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .fold(T::zero(), |a, b| a + b);
    (slope, (ss / n).sqrt())
}

/// `f(u) = (1/2) d/dx [ (e^{sigma|D|} u)^2 - e^{sigma|D|} (u^2) ]`.
///
/// The input is projected onto the dealiased band first and both products
/// are dealiased, so every retained output mode is the exact convolution.
pub fn commutator_f<T: Real>(u: &SpectralField<T>, sigma: T) -> Result<SpectralField<T>> {
    let u = dealias(u);
    let v = apply_multiplier(&u, exp_weight_symbol(sigma))?;
    let v_sq = product(&v, &v, true)?;
    let u_sq = product(&u, &u, true)?;
    let weighted = apply_multiplier(&u_sq, exp_weight_symbol(sigma))?;
    let diff = v_sq.axpy(-T::one(), &weighted)?;
    Ok(dealias(&derivative(&diff, 1).scaled(T::lit(0.5))))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorantCheck<T> {
    pub passed: bool,
    /// Largest `|F f(u)(xi)| / majorant(xi)` over retained modes.
    pub max_ratio: T,
}

/// Checks, mode by mode, that
/// `|F f(u)(xi)| <= (4 sigma)^rho |xi| <xi>^{-rho} (g * g)(xi)` with
/// `g = e^{sigma|k|} <k>^rho |û|` and `*` the discrete convolution over the
/// dealiased band.
pub fn commutator_majorant_check<T: Real>(
    u: &SpectralField<T>,
    sigma: T,
    rho: T,
) -> Result<MajorantCheck<T>> {
    let f = commutator_f(u, sigma)?;
    let u = dealias(u);
    let grid = u.grid();
    let band = grid.dealias_index() as i64;
    let dk = grid.dk();
    let bracket = |j: i64| T::one() + (T::lit(j as f64) * dk).abs();
    let mut g = Vec::with_capacity((2 * band + 1) as usize);
    for j in -band..=band {
        let k = T::lit(j as f64) * dk;
        let w = (sigma * k.abs()).exp() * bracket(j).powf(rho);
        if !w.is_finite() {
            return Err(Error::Overflow {
                k: k.to_f64_lossy(),
            });
        }
        g.push(w * u.mode(j).norm());
    }
    let g_at = |j: i64| g[(j + band) as usize];
    let prefactor = (T::lit(4.0) * sigma).powf(rho);
    // FFT round-off floor for f: modes where the convolution vanishes exactly
    // still carry products' rounding noise
    let g_sum = g.iter().fold(T::zero(), |a, &b| a + b);
    let noise = T::epsilon() * T::from_usize_lossy(grid.n_points()) * grid.k_max() * g_sum * g_sum;

    let mut max_ratio = T::zero();
    let mut passed = true;
    for j in -band..=band {
        let lhs = f.mode(j).norm();
        if lhs <= noise {
            continue;
        }
        let mut conv = T::zero();
        for j1 in (-band).max(j - band)..=band.min(j + band) {
            conv = conv + g_at(j1) * g_at(j - j1);
        }
        let xi = (T::lit(j as f64) * dk).abs();
        let rhs = prefactor * xi * bracket(j).powf(-rho) * conv;
        if rhs > T::zero() {
            max_ratio = max_ratio.max(lhs / rhs);
        } else if lhs > T::zero() {
            passed = false;
            max_ratio = T::infinity();
        }
    }
    Ok(MajorantCheck {
        passed: passed && max_ratio <= T::one(),
        max_ratio,
    })
}

/// `e^{sigma|x1|} e^{sigma|x2|} - e^{sigma|x1+x2|} <= (2 sigma min(|x1|,|x2|))^rho e^{sigma|x1|} e^{sigma|x2|}`.
///
/// Returns the slack `rhs - lhs`, scaled by `e^{-sigma(|x1|+|x2|)}` to stay finite.
pub fn exponential_difference_slack<T: Real>(x1: T, x2: T, sigma: T, rho: T) -> T {
    let (a1, a2) = (x1.abs(), x2.abs());
    // divide through by e^{sigma(|x1|+|x2|)}
    let lhs = T::one() - (sigma * ((x1 + x2).abs() - a1 - a2)).exp();
    let rhs = (T::lit(2.0) * sigma * a1.min(a2)).powf(rho);
    rhs - lhs
}

/// `2 <x1><x2> / <x1+x2> - min(|x1|, |x2|)`, with `<x> = 1 + |x|`.
pub fn min_bracket_slack<T: Real>(x1: T, x2: T) -> T {
    let b = |x: T| T::one() + x.abs();
    T::lit(2.0) * b(x1) * b(x2) / b(x1 + x2) - x1.abs().min(x2.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord<T> {
    pub t: T,
    pub gnorm_sq: T,
    pub increment: T,
    pub bound_rhs: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Audit<T> {
    pub sigma: T,
    pub rho: T,
    pub records: Vec<AuditRecord<T>>,
    pub max_increment: T,
    /// `max_t increment / (sigma^rho ||u(0)||^3_{G^{sigma,0}})`; `None` when
    /// the denominator vanishes (e.g. `sigma = 0` with `rho > 0`).
    pub fitted_c: Option<T>,
}

/// Tracks `||u(t)||^2_{G^{sigma,0}}` along a trajectory and fits the constant
/// of the almost-conservation bound, using the cubed data norm in place of the
/// space-time norm.
pub fn almost_conservation_audit<T: Real>(
    traj: &Trajectory<T>,
    sigma: T,
    rho: T,
) -> Result<Audit<T>> {
    let p = GevreyParams::new(sigma, T::zero(), rho)?;
    let first = traj
        .snapshots
        .first()
        .ok_or_else(|| Error::Usage("empty trajectory".into()))?;
    let g0 = gevrey_norm_sq(first, &p)?;
    let mut values = Vec::with_capacity(traj.snapshots.len());
    for (u, &t) in traj.snapshots.iter().zip(&traj.times) {
        values.push((t, gevrey_norm_sq(u, &p)?));
    }
    let max_increment = values.iter().map(|&(_, g)| g - g0).fold(T::zero(), T::max);
    let denom = sigma.powf(rho) * g0.sqrt().powi(3);
    let fitted_c = (denom > T::zero()).then(|| max_increment / denom);
    let records = values
        .into_iter()
        .map(|(t, g)| AuditRecord {
            t,
            gnorm_sq: g,
            increment: g - g0,
            bound_rhs: max_increment,
        })
        .collect();
    Ok(Audit {
        sigma,
        rho,
        records,
        max_increment,
        fitted_c,
    })
}

/// Strip width that survives to time `T` under the iterated almost-conservation bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct BudgetPlan<T> {
    pub T: T,
    pub sigma0: T,
    pub delta: T,
    pub C_measured: T,
    pub norm_u0: T,
    pub sigma_T: T,
    pub rho: T,
    /// Whether `sigma_T` was capped at `sigma0`.
    pub clamped: bool,
    /// `(2T/delta) C sigma_T^rho 2^{3/2} ||u0||`, which must not exceed 1.
    pub growth_condition: T,
}

/// Rounding allowance on the growth condition, which holds with equality when unclamped.
pub const GROWTH_CONDITION_SLACK: f64 = 1e-12;

#[allow(non_snake_case)]
pub fn budget_plan<T: Real>(
    norm_u0: T,
    sigma0: T,
    delta: T,
    C_measured: T,
    rho: T,
    T: T,
) -> Result<BudgetPlan<T>> {
    for (name, v) in [
        ("norm_u0", norm_u0),
        ("sigma0", sigma0),
        ("delta", delta),
        ("C_measured", C_measured),
        ("rho", rho),
        ("T", T),
    ] {
        if v <= T::zero() || !v.is_finite() {
            return Err(Error::Usage(format!("{name} must be positive, got {v}")));
        }
    }
    if rho > T::one() {
        return Err(Error::Usage(format!("rho must lie in (0, 1], got {rho}")));
    }
    let two = T::lit(2.0);
    let inv_rho = T::one() / rho;
    let base = delta / (C_measured * two.powf(T::lit(2.5)) * norm_u0);
    let formula = base.powf(inv_rho) * (T::one() / T).powf(inv_rho);
    let clamped = formula > sigma0;
    let sigma_T = if clamped { sigma0 } else { formula };
    let growth_condition =
        two * T / delta * C_measured * sigma_T.powf(rho) * two.powf(T::lit(1.5)) * norm_u0;
    let plan = BudgetPlan {
        T,
        sigma0,
        delta,
        C_measured,
        norm_u0,
        sigma_T,
        rho,
        clamped,
        growth_condition,
    };
    assert!(
        plan.sigma_T <= sigma0 && growth_condition <= T::one() + T::lit(GROWTH_CONDITION_SLACK),
        "budget plan violates its growth condition: {plan:?}"
    );
    Ok(plan)
}

/// Builds a field whose non-negative modes are `amp(j)` with zero phase.
pub fn synthetic_spectrum<T: Real>(
    grid: std::sync::Arc<crate::spectral::Grid<T>>,
    amp: impl Fn(T) -> T,
) -> SpectralField<T> {
    let dk = grid.dk();
    SpectralField::from_spectrum(grid, |j| {
        Complex::new(amp(T::lit(j as f64) * dk), T::zero())
    })
}
