//! Periodic grids, discrete Fourier transforms and Fourier multipliers.
//!
//! # Normalization
//!
//! Samples live at `x_m = -L/2 + m L / n`, `m = 0..n`, and a field is stored
//! through its Fourier-series coefficients
//!
//! ```text
//! u(x_m) = sum_j c_j exp(i k_j x_m),    k_j = 2 pi j / L,   j = -n/2 .. n/2-1
//! ```
//!
//! so the forward transform carries the `1/n` factor. With this convention
//! Parseval reads `∫ |u|^2 dx = L * sum_j |c_j|^2`, which is exactly the
//! trapezoidal quadrature `(L/n) sum_m u(x_m)^2` of the periodic samples.
//! Coefficients are stored in FFT order: index `m` holds `j = m` for
//! `m < n/2` and `j = m - n` otherwise, so `j = -n/2` (Nyquist) sits at `n/2`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Mass fraction allowed outside the central half of the box at run setup.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-10;

/// Uniform periodic grid together with its FFT plans.
///
/// Plans are reference-counted and `Send + Sync`, so a grid can be shared by
/// any number of worker threads; each transform allocates its own scratch.
pub struct Grid<T: Real> {
    n: usize,
    period: T,
    wavenumbers: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("period", &self.period)
            .finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.period == other.period
    }
}

impl<T: Real> Grid<T> {
    pub fn new(n_points: usize, period: T) -> Result<Arc<Self>> {
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::Usage(format!(
                "n_points must be a power of two >= 16, got {n_points}"
            )));
        }
        if period <= T::zero() || !period.is_finite() {
            return Err(Error::Usage(format!(
                "period must be positive, got {period}"
            )));
        }
        let dk = T::TAU() / period;
        let wavenumbers = (0..n_points)
            .map(|m| {
                let j = signed_index(m, n_points);
                T::lit(j as f64) * dk
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n: n_points,
            period,
            wavenumbers,
            forward: planner.plan_fft_forward(n_points),
            inverse: planner.plan_fft_inverse(n_points),
        }))
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> T {
        self.period
    }

    /// Wavenumber spacing `2 pi / L`.
    pub fn dk(&self) -> T {
        T::TAU() / self.period
    }

    /// Wavenumbers in FFT storage order.
    pub fn wavenumbers(&self) -> &[T] {
        &self.wavenumbers
    }

    /// Largest resolved `|k|`, attained by the Nyquist mode.
    pub fn k_max(&self) -> T {
        T::from_usize_lossy(self.n / 2) * self.dk()
    }

    /// Largest retained `|j|` under the 2/3 rule, i.e. `|k_j| <= (2/3) k_max`.
    pub fn dealias_index(&self) -> usize {
        self.n / 3
    }

    pub fn dealias_cutoff(&self) -> T {
        T::from_usize_lossy(self.dealias_index()) * self.dk()
    }

    /// Storage slot of signed mode `j`.
    pub fn slot(&self, j: i64) -> usize {
        j.rem_euclid(self.n as i64) as usize
    }

    pub fn signed_index(&self, slot: usize) -> i64 {
        signed_index(slot, self.n)
    }

    /// Sample positions `x_m = -L/2 + m L/n`.
    pub fn points(&self) -> Vec<T> {
        let h = self.period / T::from_usize_lossy(self.n);
        let half = self.period / T::lit(2.0);
        (0..self.n)
            .map(|m| T::from_usize_lossy(m) * h - half)
            .collect()
    }
}

fn signed_index(slot: usize, n: usize) -> i64 {
    if slot < n / 2 {
        slot as i64
    } else {
        slot as i64 - n as i64
    }
}

/// `(-1)^j` phase relating the raw DFT to coefficients centred on `x = 0`.
fn centring_sign<T: Real>(j: i64) -> T {
    if j.rem_euclid(2) == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Real periodic field held as Fourier coefficients, tagged with a time.
#[derive(Clone, Debug)]
pub struct SpectralField<T: Real> {
    grid: Arc<Grid<T>>,
    coeffs: Vec<Complex<T>>,
    time: T,
}

impl<T: Real> SpectralField<T> {
    pub fn new(grid: Arc<Grid<T>>, coeffs: Vec<Complex<T>>, time: T) -> Result<Self> {
        if coeffs.len() != grid.n_points() {
            return Err(Error::Usage(format!(
                "coefficient count {} does not match grid size {}",
                coeffs.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, coeffs, time })
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let n = grid.n_points();
        Self {
            grid,
            coeffs: vec![Complex::new(T::zero(), T::zero()); n],
            time: T::zero(),
        }
    }

    /// Samples `f` on the grid points and transforms.
    pub fn from_fn(grid: Arc<Grid<T>>, f: impl Fn(T) -> T) -> Self {
        let samples: Vec<T> = grid.points().into_iter().map(f).collect();
        forward_transform(&samples, &grid).expect("sample count matches grid")
    }

    /// Builds a field from a function of the signed mode index `j`,
    /// enforcing Hermitian symmetry from the non-negative half.
    pub fn from_spectrum(grid: Arc<Grid<T>>, f: impl Fn(i64) -> Complex<T>) -> Self {
        let n = grid.n_points();
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); n];
        for j in 0..(n / 2) as i64 {
            let c = f(j);
            coeffs[grid.slot(j)] = c;
            if j > 0 {
                coeffs[grid.slot(-j)] = c.conj();
            }
        }
        coeffs[0].im = T::zero();
        Self {
            grid,
            coeffs,
            time: T::zero(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn with_time(mut self, t: T) -> Self {
        self.time = t;
        self
    }

    /// Coefficient of signed mode `j`.
    pub fn mode(&self, j: i64) -> Complex<T> {
        self.coeffs[self.grid.slot(j)]
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            time: self.time,
        }
    }

    pub fn to_physical(&self) -> Vec<T> {
        inverse_transform(self)
    }

    /// `∫ u dx = L c_0`.
    pub fn mass(&self) -> T {
        self.grid.period() * self.coeffs[0].re
    }

    /// `∫ u^2 dx = L sum |c_j|^2`.
    pub fn l2_norm_sq(&self) -> T {
        self.grid.period()
            * self
                .coeffs
                .iter()
                .map(|c| c.norm_sqr())
                .fold(T::zero(), |a, b| a + b)
    }

    pub fn l2_norm(&self) -> T {
        self.l2_norm_sq().sqrt()
    }

    pub fn max_coeff(&self) -> T {
        self.coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    /// Largest violation of `c_{-j} = conj(c_j)`, relative to the largest
    /// coefficient. The Nyquist and zero modes must be real.
    pub fn hermitian_defect(&self) -> T {
        let n = self.grid.n_points();
        let scale = self.max_coeff();
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = self.coeffs[0].im.abs().max(self.coeffs[n / 2].im.abs());
        for m in 1..n / 2 {
            let d = (self.coeffs[m] - self.coeffs[n - m].conj()).norm();
            worst = worst.max(d);
        }
        worst / scale
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Fraction of `∫ u^2` carried by `|x| > L/4`.
    pub fn boundary_mass_fraction(&self) -> T {
        let quarter = self.grid.period() / T::lit(4.0);
        let samples = self.to_physical();
        let mut outside = T::zero();
        let mut total = T::zero();
        for (x, u) in self.grid.points().into_iter().zip(samples) {
            let e = u * u;
            total = total + e;
            if x.abs() > quarter {
                outside = outside + e;
            }
        }
        if total == T::zero() {
            T::zero()
        } else {
            outside / total
        }
    }

    pub fn check_boundary_mass(&self) -> Result<()> {
        let fraction = self.boundary_mass_fraction();
        if fraction.to_f64_lossy() > BOUNDARY_MASS_LIMIT {
            return Err(Error::BoundaryMass {
                fraction: fraction.to_f64_lossy(),
                limit: BOUNDARY_MASS_LIMIT,
            });
        }
        Ok(())
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::Usage("fields live on different grids".into()))
        }
    }

    /// Coefficient-wise `self + factor * other`.
    pub fn axpy(&self, factor: T, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * factor)
                .collect(),
            time: self.time,
        })
    }

    /// Relative L2 distance `||self - other|| / ||other||` (absolute if `other` is zero).
    pub fn relative_distance(&self, other: &Self) -> Result<T> {
        let diff = self.axpy(-T::one(), other)?;
        let reference = other.l2_norm();
        Ok(if reference > T::zero() {
            diff.l2_norm() / reference
        } else {
            diff.l2_norm()
        })
    }
}

/// Coefficients of real samples on `grid`.
pub fn forward_transform<T: Real>(samples: &[T], grid: &Arc<Grid<T>>) -> Result<SpectralField<T>> {
    let n = grid.n_points();
    if samples.len() != n {
        return Err(Error::Usage(format!(
            "expected {n} samples, got {}",
            samples.len()
        )));
    }
    let mut buf: Vec<Complex<T>> = samples
        .iter()
        .map(|&x| Complex::new(x, T::zero()))
        .collect();
    grid.forward.process(&mut buf);
    let inv_n = T::one() / T::from_usize_lossy(n);
    for (m, c) in buf.iter_mut().enumerate() {
        *c = *c * (centring_sign::<T>(grid.signed_index(m)) * inv_n);
    }
    Ok(SpectralField {
        grid: grid.clone(),
        coeffs: buf,
        time: T::zero(),
    })
}

/// Real samples of a field; the imaginary residue of rounding is discarded.
pub fn inverse_transform<T: Real>(field: &SpectralField<T>) -> Vec<T> {
    let grid = &field.grid;
    let mut buf: Vec<Complex<T>> = field
        .coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| c * centring_sign::<T>(grid.signed_index(m)))
        .collect();
    grid.inverse.process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Multiplies each coefficient by `symbol(k_j)`.
///
/// Fails with [`Error::Overflow`] at the first wavenumber where the symbol is
/// not finite; a saturated weight is never substituted.
pub fn apply_multiplier<T: Real>(
    field: &SpectralField<T>,
    symbol: impl Fn(T) -> Complex<T>,
) -> Result<SpectralField<T>> {
    let mut coeffs = Vec::with_capacity(field.coeffs.len());
    for (c, &k) in field.coeffs.iter().zip(field.grid.wavenumbers()) {
        let m = symbol(k);
        if !(m.re.is_finite() && m.im.is_finite()) {
            return Err(Error::Overflow {
                k: k.to_f64_lossy(),
            });
        }
        coeffs.push(c * m);
    }
    Ok(SpectralField {
        grid: field.grid.clone(),
        coeffs,
        time: field.time,
    })
}

/// Real-valued weight `exp(sigma |k|)`, or an overflow error.
pub fn exp_weight_symbol<T: Real>(sigma: T) -> impl Fn(T) -> Complex<T> {
    move |k: T| Complex::new((sigma * k.abs()).exp(), T::zero())
}

/// Spectral derivative of the given order. For odd orders the Nyquist
/// mode is dropped, since `(i k)^order` is not Hermitian there.
pub fn derivative<T: Real>(field: &SpectralField<T>, order: u32) -> SpectralField<T> {
    let n = field.grid.n_points();
    let mut coeffs: Vec<Complex<T>> = field
        .coeffs
        .iter()
        .zip(field.grid.wavenumbers())
        .map(|(c, &k)| c * Complex::new(T::zero(), k).powu(order))
        .collect();
    if order % 2 == 1 {
        coeffs[n / 2] = Complex::new(T::zero(), T::zero());
    }
    SpectralField {
        grid: field.grid.clone(),
        coeffs,
        time: field.time,
    }
}

/// Zeroes every mode with `|k_j| > (2/3) k_max`; retained modes are untouched.
pub fn dealias<T: Real>(field: &SpectralField<T>) -> SpectralField<T> {
    let mut out = field.clone();
    dealias_in_place(&mut out.coeffs, &field.grid);
    out
}

pub(crate) fn dealias_in_place<T: Real>(coeffs: &mut [Complex<T>], grid: &Grid<T>) {
    let keep = grid.dealias_index() as i64;
    for (m, c) in coeffs.iter_mut().enumerate() {
        if grid.signed_index(m).abs() > keep {
            *c = Complex::new(T::zero(), T::zero());
        }
    }
}

/// Pseudo-spectral product of two fields, optionally dealiased.
pub fn product<T: Real>(
    a: &SpectralField<T>,
    b: &SpectralField<T>,
    dealiased: bool,
) -> Result<SpectralField<T>> {
    a.same_grid(b)?;
    let pa = inverse_transform(a);
    let pb = inverse_transform(b);
    let prod: Vec<T> = pa.iter().zip(&pb).map(|(x, y)| *x * *y).collect();
    let mut out = forward_transform(&prod, &a.grid)?;
    if dealiased {
        dealias_in_place(&mut out.coeffs, &a.grid);
    }
    out.time = a.time;
    Ok(out)
}

/// Coefficients of `u_t + u u_x + alpha u_xxx + beta u_xxxxx = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationParams<T> {
    alpha: T,
    beta: T,
}

impl<T: Real> EquationParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        if beta == T::zero() || !beta.is_finite() || !alpha.is_finite() {
            return Err(Error::Usage(format!(
                "beta must be finite and nonzero (alpha = {alpha}, beta = {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }
}

/// `p(k) = alpha k^3 - beta k^5`.
pub fn dispersion_symbol<T: Real>(k: T, params: &EquationParams<T>) -> T {
    let k3 = k * k * k;
    params.alpha * k3 - params.beta * k3 * k * k
}

/// `h = p(xi1) + p(xi2) + p(xi3)` with `xi3 = -xi1 - xi2`, summed directly.
pub fn resonance_function<T: Real>(xi1: T, xi2: T, params: &EquationParams<T>) -> T {
    let xi3 = -xi1 - xi2;
    dispersion_symbol(xi1, params) + dispersion_symbol(xi2, params) + dispersion_symbol(xi3, params)
}

/// Factored form `xi1 xi2 xi3 (3 alpha - (5 beta / 2)(xi1^2 + xi2^2 + xi3^2))`.
pub fn resonance_factored<T: Real>(xi1: T, xi2: T, params: &EquationParams<T>) -> T {
    let xi3 = -xi1 - xi2;
    let sum_sq = xi1 * xi1 + xi2 * xi2 + xi3 * xi3;
    xi1 * xi2 * xi3 * (T::lit(3.0) * params.alpha - T::lit(2.5) * params.beta * sum_sq)
}
