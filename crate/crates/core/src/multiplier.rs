//! Dyadic block machinery behind the bilinear estimate: sampling of the
//! frequency hyperplane `xi1 + xi2 + xi3 = 0`, the resonance magnitude law
//! `|h| ~ N_max^4 N_min`, the `(s, b, b')` constraint system and the reduced
//! dyadic sums it controls.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{dispersion_symbol, resonance_function, EquationParams};

/// Dyadic number `2^exp`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Dyadic(pub i32);

impl Dyadic {
    pub fn value<T: Real>(self) -> T {
        T::lit(2.0).powi(self.0)
    }

    /// Smallest `2^k >= x`.
    pub fn ceil(x: f64) -> Self {
        assert!(x > 0.0, "dyadic ceiling of non-positive {x}");
        Dyadic(x.log2().ceil() as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicBlock {
    pub n: [Dyadic; 3],
    pub h: Dyadic,
    pub l: [Dyadic; 3],
}

impl DyadicBlock {
    pub fn new(n: [Dyadic; 3], h: Dyadic, l: [Dyadic; 3]) -> Result<Self> {
        if l.iter().any(|d| d.0 < 0) {
            return Err(Error::Usage("modulation sizes L_j must be >= 1".into()));
        }
        Ok(Self { n, h, l })
    }
}

/// Indices of `n` sorted by decreasing size; ties keep their original order.
pub fn order_desc(n: &[Dyadic; 3]) -> [usize; 3] {
    let mut idx = [0, 1, 2];
    idx.sort_by(|&a, &b| n[b].cmp(&n[a]));
    idx
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSample<T> {
    pub xi: [T; 3],
    pub tau: [T; 3],
    pub lambda: [T; 3],
    pub h: T,
}

impl<T: Real> ResonanceSample<T> {
    /// Completes `(xi1, xi2)`, `(tau1, tau2)` to the hyperplane and derives
    /// the modulations `lambda_j = tau_j - p(xi_j)` and `h`.
    pub fn new(xi1: T, xi2: T, tau1: T, tau2: T, params: &EquationParams<T>) -> Self {
        let xi = [xi1, xi2, -xi1 - xi2];
        let tau = [tau1, tau2, -tau1 - tau2];
        let lambda = [0, 1, 2].map(|j| tau[j] - dispersion_symbol(xi[j], params));
        Self {
            xi,
            tau,
            lambda,
            h: resonance_function(xi1, xi2, params),
        }
    }

    /// `|lambda1 + lambda2 + lambda3 + h|` relative to the largest term involved.
    pub fn identity_defect(&self) -> T {
        let sum = self.lambda.iter().fold(self.h, |a, &b| a + b);
        let scale = self
            .lambda
            .iter()
            .chain(self.tau.iter())
            .map(|v| v.abs())
            .fold(self.h.abs(), T::max);
        if scale == T::zero() {
            T::zero()
        } else {
            sum.abs() / scale
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSamples<T> {
    pub n: [Dyadic; 3],
    pub samples: Vec<ResonanceSample<T>>,
    /// Why the block is empty, when it is.
    pub infeasible: Option<String>,
}

/// Half-open shells `|xi| in [lo, hi)` as a union of two signed intervals.
fn shell<T: Real>(n: T) -> [(T, T); 2] {
    let two = T::lit(2.0);
    [(n, two * n), (-two * n, -n)]
}

/// Whether some point of the hyperplane has `|xi_j| in [N_j, 2N_j)` for all j.
///
/// Of three reals summing to zero, the largest in magnitude equals the sum of
/// the other two magnitudes, so the block is non-empty iff for some `j`
/// the open interval `(N_j, 2N_j)` meets `(N_a + N_b, 2N_a + 2N_b)`.
pub fn block_feasible(n: &[Dyadic; 3]) -> bool {
    let v: [f64; 3] = n.map(|d| d.value());
    (0..3).any(|j| {
        let (a, b) = (v[(j + 1) % 3], v[(j + 2) % 3]);
        let lo = v[j].max(a + b);
        let hi = (2.0 * v[j]).min(2.0 * (a + b));
        lo < hi
    })
}

/// Uniform samples from the dyadic frequency block on the hyperplane.
///
/// The smallest frequency `xi_m` is drawn first; the remaining freedom is a
/// union of intervals for the next frequency, and acceptance in proportion to
/// its length makes the draw uniform in `(xi_m, xi_a)`. Modulations
/// `lambda_1, lambda_2` are drawn in `[-H, H]` with `H = N_max^4 N_min`.
pub fn sample_block<T: Real>(
    n: [Dyadic; 3],
    count: usize,
    params: &EquationParams<T>,
    seed: u64,
) -> Result<BlockSamples<T>> {
    if count == 0 {
        return Err(Error::Usage("count must be at least 1".into()));
    }
    let order = order_desc(&n);
    if n[order[0]].0 - n[order[1]].0 > 1 || !block_feasible(&n) {
        return Ok(BlockSamples {
            n,
            samples: Vec::new(),
            infeasible: Some(format!(
                "no frequencies with |xi_j| in [N_j, 2N_j) sum to zero for N = ({}, {}, {}); N_max must be comparable to N_med",
                n[0].value::<f64>(),
                n[1].value::<f64>(),
                n[2].value::<f64>()
            )),
        });
    }
    let (m, a, b) = (order[2], order[1], order[0]);
    let nv: [T; 3] = n.map(|d| d.value());
    let h_scale = nv[order[0]].powi(4) * nv[order[2]];
    let bound = T::lit(2.0) * nv[a].min(nv[b]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    let mut attempts = 0usize;

    while samples.len() < count {
        attempts += 1;
        if attempts > 10_000 * count + 1_000_000 {
            return Err(Error::Usage("block sampler failed to converge".into()));
        }
        let mag = nv[m] * (T::one() + T::lit(rng.gen::<f64>()));
        let xm = if rng.gen::<bool>() { mag } else { -mag };
        // xi_a in shell(a) with -xm - xi_a in shell(b)
        let mut pieces: Vec<(T, T)> = Vec::with_capacity(4);
        for (alo, ahi) in shell(nv[a]) {
            for (blo, bhi) in shell(nv[b]) {
                // -xm - x in [blo, bhi)  <=>  x in (-xm - bhi, -xm - blo]
                let lo = alo.max(-xm - bhi);
                let hi = ahi.min(-xm - blo);
                if lo < hi {
                    pieces.push((lo, hi));
                }
            }
        }
        let total = pieces
            .iter()
            .fold(T::zero(), |acc, (lo, hi)| acc + (*hi - *lo));
        if total == T::zero() || T::lit(rng.gen::<f64>()) * bound >= total {
            continue;
        }
        let mut r = T::lit(rng.gen::<f64>()) * total;
        let mut xa = pieces[0].0;
        for (lo, hi) in &pieces {
            let len = *hi - *lo;
            if r < len {
                xa = *lo + r;
                break;
            }
            r = r - len;
        }
        let xb = -xm - xa;
        let mut xi = [T::zero(); 3];
        xi[m] = xm;
        xi[a] = xa;
        xi[b] = xb;
        let lam1 = h_scale * T::lit(rng.gen_range(-1.0..1.0));
        let lam2 = h_scale * T::lit(rng.gen_range(-1.0..1.0));
        let tau1 = dispersion_symbol(xi[0], params) + lam1;
        let tau2 = dispersion_symbol(xi[1], params) + lam2;
        let s = ResonanceSample::new(xi[0], xi[1], tau1, tau2, params);
        let in_shell = |x: T, nj: T| x.abs() >= nj && x.abs() < T::lit(2.0) * nj;
        // xi3 is recomputed from xi1 + xi2; reject the rare draw that rounding
        // pushes across a shell edge
        if (0..3).all(|j| in_shell(s.xi[j], nv[j])) {
            samples.push(s);
        }
    }
    Ok(BlockSamples {
        n,
        samples,
        infeasible: None,
    })
}

/// Threshold `N_* = 2 ceil_dyadic(sqrt(6|alpha| / (5|beta|)) + 1)` above which
/// the resonant ellipse `3 alpha = (5 beta / 2) sum xi^2` cannot meet the block.
pub fn resonance_threshold<T: Real>(params: &EquationParams<T>) -> Dyadic {
    let ratio =
        (6.0 * params.alpha().to_f64_lossy().abs()) / (5.0 * params.beta().to_f64_lossy().abs());
    let c = Dyadic::ceil(ratio.sqrt() + 1.0);
    Dyadic(c.0 + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioStats<T> {
    pub min: T,
    pub max: T,
    pub median: T,
    pub count: usize,
}

/// Statistics of `|h(xi)| / (N_max^4 N_min)` over a block's samples.
pub fn resonance_ratio_stats<T: Real>(
    block: &BlockSamples<T>,
    params: &EquationParams<T>,
) -> Result<RatioStats<T>> {
    if block.samples.is_empty() {
        return Err(Error::Usage("no samples".into()));
    }
    let order = order_desc(&block.n);
    let n_max = block.n[order[0]];
    let threshold = resonance_threshold(params);
    if n_max < threshold {
        return Err(Error::Usage(format!(
            "N_max = 2^{} is below the resonance threshold 2^{}",
            n_max.0, threshold.0
        )));
    }
    let norm = n_max.value::<T>().powi(4) * block.n[order[2]].value::<T>();
    let mut ratios: Vec<T> = block.samples.iter().map(|s| s.h.abs() / norm).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let len = ratios.len();
    let median = if len % 2 == 1 {
        ratios[len / 2]
    } else {
        (ratios[len / 2 - 1] + ratios[len / 2]) / T::lit(2.0)
    };
    Ok(RatioStats {
        min: ratios[0],
        max: ratios[len - 1],
        median,
        count: len,
    })
}

/// One inequality on `(b, b')` at fixed `s`.
#[derive(Clone, Copy)]
pub struct Constraint {
    pub name: &'static str,
    /// The inequality in closed form, with the reduced sum it controls.
    pub source: &'static str,
    predicate: fn(f64, f64, f64) -> bool,
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Constraint")
            .field("name", &self.name)
            .field("source", &self.source)
            .finish()
    }
}

impl Constraint {
    pub fn holds(&self, s: f64, b: f64, b_prime: f64) -> bool {
        (self.predicate)(s, b, b_prime)
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub s: f64,
    pub constraints: Vec<Constraint>,
}

const CONSTRAINTS: [Constraint; 10] = [
    Constraint {
        name: "domain",
        source: "1/2 < b <= b' < 1",
        predicate: |_, b, bp| 0.5 < b && b <= bp && bp < 1.0,
    },
    Constraint {
        name: "i",
        source: "4(1+b-b')+2s > 0: high-modulation sum, N1 ~ N2 ~ N, N3 = N_min",
        predicate: |s, b, bp| 4.0 * (1.0 + b - bp) + 2.0 * s > 0.0,
    },
    Constraint {
        name: "ii",
        source: "s > -7/2: high-modulation sum, N1 ~ N3 ~ N, N2 = N_min",
        predicate: |s, _, _| s > -3.5,
    },
    Constraint {
        name: "iii",
        source: "1/2 < b' <= (6+s)/5: comparable frequencies, L_max ~ N^5",
        predicate: |s, _, bp| 0.5 < bp && bp <= (6.0 + s) / 5.0,
    },
    Constraint {
        name: "iv",
        source: "1/2 < b <= b' < (4s+11)/8: one small frequency N3 <= 1 with N3 >= (L_med/N^3)^(1/2)",
        predicate: |s, b, bp| 0.5 < b && b <= bp && bp < (4.0 * s + 11.0) / 8.0,
    },
    Constraint {
        name: "v",
        source: "1/2 < b <= b' < (8s+19)/10 and 1/2 < b'+3(b'-b) < 4+2s: N3 <= 1 with N3 < (L_med/N^3)^(1/2)",
        predicate: |s, b, bp| {
            let mixed = bp + 3.0 * (bp - b);
            0.5 < b && b <= bp && bp < (8.0 * s + 19.0) / 10.0 && 0.5 < mixed && mixed < 4.0 + 2.0 * s
        },
    },
    Constraint {
        name: "vi",
        source: "1/2 < b <= b' < min{(4s+11)/8, (s+6)/5}: one small frequency 1 < N3 << N",
        predicate: |s, b, bp| 0.5 < b && b <= bp && bp < ((4.0 * s + 11.0) / 8.0).min((s + 6.0) / 5.0),
    },
    Constraint {
        name: "vii",
        source: "1/2 < b <= b' < 3/4, and 5b+s-1/4 > 0 when b < -s: N2 ~ N3 >> N1 with H ~ L1",
        predicate: |s, b, bp| 0.5 < b && b <= bp && bp < 0.75 && (-s - b <= 0.0 || 5.0 * b + s - 0.25 > 0.0),
    },
    Constraint {
        name: "viii",
        source: "1/2 < b <= b' < (s+3)/2: generic block, N1 ~ N2 ~ N, N3 = N_min",
        predicate: |s, b, bp| 0.5 < b && b <= bp && bp < (s + 3.0) / 2.0,
    },
    Constraint {
        name: "ix",
        source: "b' < 3/4, and b' < (4s+19)/20 unless b' >= s+3/4: generic block, N1 ~ N3 ~ N, N2 = N_min",
        predicate: |s, b, bp| 0.5 < b && b <= bp && bp < 0.75 && (bp >= s + 0.75 || bp < (4.0 * s + 19.0) / 20.0),
    },
];

pub fn constraint_system(s: f64) -> ConstraintSystem {
    ConstraintSystem {
        s,
        constraints: CONSTRAINTS.to_vec(),
    }
}

impl ConstraintSystem {
    /// Names of the constraints violated at `(b, b')`.
    pub fn failures(&self, b: f64, b_prime: f64) -> Vec<&'static str> {
        self.constraints
            .iter()
            .filter(|c| !c.holds(self.s, b, b_prime))
            .map(|c| c.name)
            .collect()
    }

    pub fn satisfied(&self, b: f64, b_prime: f64) -> bool {
        self.constraints.iter().all(|c| c.holds(self.s, b, b_prime))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub s: f64,
    pub feasible: bool,
    pub witness: Option<(f64, f64)>,
    /// Largest `b' - b` among feasible grid pairs.
    pub max_gap: Option<f64>,
}

/// Grid search of `(b, b') in (1/2, 1)^2`, `b <= b'`, for each `s`.
pub fn feasibility_scan(s_values: &[f64], grid_step: f64) -> Result<Vec<ScanEntry>> {
    if !(grid_step > 0.0 && grid_step <= 1e-3) {
        return Err(Error::Usage(format!(
            "grid_step must lie in (0, 1e-3], got {grid_step}"
        )));
    }
    let steps = (0.5 / grid_step).round() as usize;
    let value = |i: usize| 0.5 + i as f64 * grid_step;
    Ok(s_values
        .iter()
        .map(|&s| {
            let sys = constraint_system(s);
            let mut witness = None;
            let mut max_gap: Option<f64> = None;
            for i in 1..steps {
                let b = value(i);
                for j in i..steps {
                    let bp = value(j);
                    if sys.satisfied(b, bp) {
                        witness.get_or_insert((b, bp));
                        let gap = bp - b;
                        max_gap = Some(max_gap.map_or(gap, |g| g.max(gap)));
                    }
                }
            }
            ScanEntry {
                s,
                feasible: witness.is_some(),
                witness,
                max_gap,
            }
        })
        .collect())
}

/// Reduced dyadic sums left after the modulation summations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Series {
    /// `sum_N sum_{N_min <= N} N^{-2s} N_min^{3/2} <N_min>^s (N^4 N_min)^{-(1+b-b')}`
    App04,
    /// `sum_N sum_{L_min <= L_med <= N^5} N^{-1-s} L_min^{1/2-b} L_med^{1/2-b} (N^5)^{b'-1}`
    App05,
    /// `sum_N sum_{1 <= N3 < N} sum_{1 <= L1, L2 <= N^4 N3}
    ///  N3 <N3>^s N^{-2s-2} L1^{-b} L2^{-b} (N^4 N3)^{b'-1} L_min^{1/2} min{N^4 N3, (N/N3) L_med}^{1/2}`
    App06,
    /// `sum_N sum_{N2 <= N} N^{-1} <N2>^{-s} (N^4 N2)^{b'-1} (N^4 N2)^{1/4}`
    App11,
}

impl Series {
    pub const ALL: [Series; 4] = [Series::App04, Series::App05, Series::App06, Series::App11];

    pub fn name(self) -> &'static str {
        match self {
            Series::App04 => "app04",
            Series::App05 => "app05",
            Series::App06 => "app06",
            Series::App11 => "app11",
        }
    }
}

impl FromStr for Series {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Series::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown series '{s}' (expected app04, app05, app06 or app11)"
                ))
            })
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicSum {
    pub series: Series,
    pub cutoff: u32,
    pub partial_sum: f64,
    /// `S(cutoff) / S(cutoff - 5)`.
    pub tail_ratio: f64,
}

pub const MAX_CUTOFF: u32 = 60;
const TAIL_LAG: u32 = 5;

fn pow2(e: f64) -> f64 {
    e.exp2()
}

/// Inner sum for a fixed outer scale `N = 2^j`.
fn shell_term(series: Series, j: u32, s: f64, b: f64, bp: f64) -> f64 {
    let jn = j as f64;
    let bracket = |e: f64| 1.0 + pow2(e);
    match series {
        Series::App04 => (0..=j)
            .map(|i| {
                let nm = i as f64;
                pow2(-2.0 * s * jn + 1.5 * nm - (1.0 + b - bp) * (4.0 * jn + nm))
                    * bracket(nm).powf(s)
            })
            .sum(),
        Series::App05 => {
            let top = 5 * j;
            let mut acc = 0.0;
            for med in 0..=top {
                for min in 0..=med {
                    acc += pow2((0.5 - b) * (min + med) as f64);
                }
            }
            acc * pow2(-(1.0 + s) * jn + 5.0 * jn * (bp - 1.0))
        }
        Series::App06 => {
            let mut acc = 0.0;
            for i in 0..j {
                let n3 = i as f64;
                let top = 4 * j + i;
                let h = 4.0 * jn + n3;
                let outer = pow2(n3 - (2.0 * s + 2.0) * jn + (bp - 1.0) * h) * bracket(n3).powf(s);
                for l1 in 0..=top {
                    for l2 in 0..=top {
                        let (lmin, lmed) = (l1.min(l2) as f64, l1.max(l2) as f64);
                        let cap = h.min(jn - n3 + lmed);
                        acc += outer * pow2(-b * (l1 + l2) as f64 + 0.5 * lmin + 0.5 * cap);
                    }
                }
            }
            acc
        }
        Series::App11 => (0..=j)
            .map(|i| {
                let n2 = i as f64;
                let h = 4.0 * jn + n2;
                pow2(-jn + (bp - 1.0 + 0.25) * h) * bracket(n2).powf(-s)
            })
            .sum(),
    }
}

/// Partial sum of a named reduced series over dyadic scales `2^0 .. 2^cutoff`,
/// with the tail ratio `S(cutoff) / S(cutoff - 5)`: a ratio tending to 1
/// indicates convergence, a growing ratio divergence.
pub fn dyadic_sum(series: &str, s: f64, b: f64, b_prime: f64, cutoff: u32) -> Result<DyadicSum> {
    let series: Series = series.parse()?;
    if !(TAIL_LAG..=MAX_CUTOFF).contains(&cutoff) {
        return Err(Error::Usage(format!(
            "cutoff must lie in [{TAIL_LAG}, {MAX_CUTOFF}], got {cutoff}"
        )));
    }
    let mut partial = 0.0;
    let mut lagged = 0.0;
    for j in 0..=cutoff {
        partial += shell_term(series, j, s, b, b_prime);
        if j == cutoff - TAIL_LAG {
            lagged = partial;
        }
    }
    Ok(DyadicSum {
        series,
        cutoff,
        partial_sum: partial,
        tail_ratio: partial / lagged,
    })
}
