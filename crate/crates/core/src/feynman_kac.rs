//! Path-integral representation of the conjugated propagator
//! `e^{-αz²/4} U(τ, σ) e^{αz²/4}` for `L₀ + V` with
//! `L₀ = -∂² + α²z²/4 - 5α/2`, plus the deterministic cross-checks used to
//! validate it.
//!
//! Sign convention: the generator is `-(L₀ + V)` and every path carries the
//! weight `e^{-∫V}`. The bridge `ω` has covariance `(-∂_s² + α²)^{-1}`; the
//! diffusion generated by `∂²` has twice that covariance, so paths are
//! `ω₀ + √2 ω`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::BetaLaw;
use crate::error::{ensure_positive, Error, Result};
use crate::grid::Grid;
use crate::numerics::fit_line;
use crate::spectral::{assemble, eigen_spectrum, reframed_potential, OperatorKind};
use crate::tridiag::{SymTridiagonal, Tridiagonal};

/// Exponents beyond this magnitude reject the path.
pub const EXPONENT_LIMIT: f64 = 700.0;

/// `1/(4π√(2π))`: ratio of the standard heat-kernel normalization
/// `√(α/2π)` to the printed prefactor `4π√α`.
pub const MEHLER_STANDARD_CONSTANT: f64 = 0.031_746_817_967_120_7;

const CHUNK: usize = 512;

/// Time-dependent potential `V(z, s)`.
pub type Potential<'a> = &'a (dyn Fn(f64, f64) -> f64 + Sync);

/// Mehler kernel of `e^{-αz²/4} e^{-rL₀} e^{αz²/4}` in the printed shape
/// with a single multiplicative constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MehlerKernel {
    pub alpha: f64,
    pub constant: f64,
}

impl MehlerKernel {
    /// Uses the analytic constant.
    pub fn standard(alpha: f64) -> Result<Self> {
        ensure_positive("alpha", alpha)?;
        Ok(Self {
            alpha,
            constant: MEHLER_STANDARD_CONSTANT,
        })
    }

    /// Fixes the constant so that the kernel matches the discretized
    /// propagator at `(x, y) = (0, 0)` after time `r`.
    pub fn calibrate(alpha: f64, r: f64) -> Result<Self> {
        ensure_positive("alpha", alpha)?;
        ensure_positive("r", r)?;
        let oracle = direct_kernel(alpha, 0.0, 3.0, r, &[(0.0, 0.0)], &OracleSettings::default())?;
        let printed = mehler_printed(alpha, r, 0.0, 0.0)?;
        Ok(Self {
            alpha,
            constant: oracle.values[0] / printed,
        })
    }

    pub fn eval(&self, r: f64, x: f64, y: f64) -> Result<f64> {
        Ok(self.constant * mehler_printed(self.alpha, r, x, y)?)
    }
}

/// `4π√α (1 - e^{-2αr})^{-1/2} e^{2αr} exp(-α(x - e^{-αr}y)²/(2(1 - e^{-2αr})))`.
pub fn mehler_printed(alpha: f64, r: f64, x: f64, y: f64) -> Result<f64> {
    ensure_positive("alpha", alpha)?;
    ensure_positive("r", r)?;
    let q = -(-2.0 * alpha * r).exp_m1();
    let d = x - (-alpha * r).exp() * y;
    let pre = 4.0 * std::f64::consts::PI * alpha.sqrt() / q.sqrt();
    Ok(pre * (2.0 * alpha * r - alpha * d * d / (2.0 * q)).exp())
}

/// Convenience wrapper over [`MehlerKernel::eval`] with the analytic constant.
pub fn mehler_kernel_u0(alpha: f64, r: f64, x: f64, y: f64) -> Result<f64> {
    MehlerKernel::standard(alpha)?.eval(r, x, y)
}

/// One row of the weighted column-sum check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSumRow {
    pub n: u32,
    pub r: f64,
    /// `sup_x` of the weighted integral divided by `e^{2αr}`.
    pub ratio: f64,
}

/// `sup_x e^{αx²/2} ⟨x⟩^{-n} ∫ U₀(x, y) ⟨y⟩^n e^{-αy²/2} dy / e^{2αr}`
/// on `x ∈ [-x_max, x_max]`.
pub fn mehler_column_sums(kernel: &MehlerKernel, ns: &[u32], rs: &[f64], x_max: f64) -> Result<Vec<ColumnSumRow>> {
    let alpha = kernel.alpha;
    let mut rows = Vec::new();
    for &r in rs {
        ensure_positive("r", r)?;
        let growth = (2.0 * alpha * r).exp();
        for &n in ns {
            let mut sup = 0.0f64;
            let xs = 81;
            for i in 0..xs {
                let x = -x_max + 2.0 * x_max * i as f64 / (xs - 1) as f64;
                let center = (alpha * r).exp() * x;
                let half = 14.0 / alpha.sqrt() + 4.0 * center.abs();
                let m = 4001;
                let h = 2.0 * half / (m - 1) as f64;
                let mut total = 0.0;
                for j in 0..m {
                    let y = center - half + h * j as f64;
                    let w = if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
                    let jy = (1.0 + y * y).powf(0.5 * n as f64);
                    total += w * h * kernel.eval(r, x, y)? * jy * (-0.5 * alpha * y * y).exp();
                }
                let jx = (1.0 + x * x).powf(-0.5 * n as f64);
                sup = sup.max((0.5 * alpha * x * x).exp() * jx * total / growth);
            }
            rows.push(ColumnSumRow { n, r, ratio: sup });
        }
    }
    Ok(rows)
}

/// Coefficients `(A(s), B(s))` with `ω₀(s) = y A(s) + x B(s)`.
fn omega0_coefficients(alpha: f64, sigma: f64, tau: f64, s: f64) -> (f64, f64) {
    let t = tau - sigma;
    let den = -(-2.0 * alpha * t).exp_m1();
    let a = ((-alpha * (s - sigma)).exp() - (-alpha * (2.0 * tau - sigma - s)).exp()) / den;
    let b = ((-alpha * (tau - s)).exp() - (-alpha * (tau + s - 2.0 * sigma)).exp()) / den;
    (a, b)
}

/// `ω₀(s) = [y sinh(α(τ-s)) + x sinh(α(s-σ))] / sinh(α(τ-σ))` on a uniform
/// grid of `n_steps` intervals.
pub fn omega0_path(alpha: f64, sigma: f64, tau: f64, x: f64, y: f64, n_steps: usize) -> Result<Vec<f64>> {
    ensure_positive("alpha", alpha)?;
    ensure_positive("tau - sigma", tau - sigma)?;
    let ds = (tau - sigma) / n_steps as f64;
    Ok((0..=n_steps)
        .map(|k| {
            if k == 0 {
                y
            } else if k == n_steps {
                x
            } else {
                let (a, b) = omega0_coefficients(alpha, sigma, tau, sigma + ds * k as f64);
                y * a + x * b
            }
        })
        .collect())
}

/// Bridge samples on a uniform grid; `values[0] = values[n_steps] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuBridge {
    pub sigma: f64,
    pub tau: f64,
    pub values: Vec<f64>,
}

impl OuBridge {
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.n_steps();
        let ds = (self.tau - self.sigma) / n as f64;
        (0..=n).map(|k| self.sigma + ds * k as f64).collect()
    }
}

/// Exact sampler for the nodal values of the centered Gaussian process with
/// covariance `(-∂_s² + α²)^{-1}` pinned at both ends. The nodal precision
/// matrix of that process is tridiagonal with diagonal `2α coth(αΔ)` and
/// off-diagonal `-α / sinh(αΔ)`.
#[derive(Debug, Clone)]
pub struct BridgeSampler {
    alpha: f64,
    sigma: f64,
    tau: f64,
    n_steps: usize,
    precision: SymTridiagonal,
    chol_diag: Vec<f64>,
    chol_sub: Vec<f64>,
}

impl BridgeSampler {
    pub fn new(alpha: f64, sigma: f64, tau: f64, n_steps: usize) -> Result<Self> {
        ensure_positive("alpha", alpha)?;
        ensure_positive("tau - sigma", tau - sigma)?;
        if n_steps < 2 {
            return Err(Error::InvalidParameter {
                name: "n_steps",
                value: n_steps as f64,
                reason: "a bridge needs at least two intervals",
            });
        }
        let m = n_steps - 1;
        let ad = alpha * (tau - sigma) / n_steps as f64;
        let diag = vec![2.0 * alpha / ad.tanh(); m];
        let off = vec![-alpha / ad.sinh(); m.saturating_sub(1)];
        let mut chol_diag = Vec::with_capacity(m);
        let mut chol_sub = Vec::with_capacity(m.saturating_sub(1));
        for i in 0..m {
            let mut d = diag[i];
            if i > 0 {
                let e: f64 = off[i - 1] / chol_diag[i - 1];
                d -= e * e;
                chol_sub.push(e);
            }
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::SingularSystem { row: i });
            }
            chol_diag.push(d.sqrt());
        }
        Ok(Self {
            alpha,
            sigma,
            tau,
            n_steps,
            precision: SymTridiagonal::new(diag, off),
            chol_diag,
            chol_sub,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        (self.tau - self.sigma) / self.n_steps as f64
    }

    /// Draws one bridge into `out` (length `n_steps + 1`).
    pub fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let m = self.n_steps - 1;
        out[0] = 0.0;
        out[self.n_steps] = 0.0;
        for v in out[1..=m].iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        // Solve Lᵀ x = z from the bottom up.
        out[m] /= self.chol_diag[m - 1];
        for i in (0..m - 1).rev() {
            out[i + 1] = (out[i + 1] - self.chol_sub[i] * out[i + 2]) / self.chol_diag[i];
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> OuBridge {
        let mut values = vec![0.0; self.n_steps + 1];
        self.sample_into(rng, &mut values);
        OuBridge {
            sigma: self.sigma,
            tau: self.tau,
            values,
        }
    }

    /// Diagonal of the inverse precision by solving against unit vectors.
    pub fn covariance_diagonal(&self) -> Result<Vec<f64>> {
        let m = self.n_steps - 1;
        let general: Tridiagonal = self.precision.as_general();
        let mut out = vec![0.0; self.n_steps + 1];
        let mut e = vec![0.0; m];
        for i in 0..m {
            e[i] = 1.0;
            out[i + 1] = general.solve(&e)?[i];
            e[i] = 0.0;
        }
        Ok(out)
    }

    /// Green's function on the diagonal,
    /// `sinh(α(s-σ)) sinh(α(τ-s)) / (α sinh(α(τ-σ)))`.
    pub fn green_diagonal(&self, s: f64) -> f64 {
        let a = self.alpha;
        (a * (s - self.sigma)).sinh() * (a * (self.tau - s)).sinh() / (a * (a * (self.tau - self.sigma)).sinh())
    }
}

/// Per-path generator: stream `index` of the base seed.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// The first bridge of the ensemble with base seed `seed`.
pub fn sample_ou_bridge(alpha: f64, sigma: f64, tau: f64, n_steps: usize, seed: u64) -> Result<OuBridge> {
    let sampler = BridgeSampler::new(alpha, sigma, tau, n_steps)?;
    Ok(sampler.sample(&mut path_rng(seed, 0)))
}

/// Monte Carlo mean with its standard error `std / √paths`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
    pub seed: u64,
    pub rejected: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: f64,
    sum_sq: f64,
    count: usize,
    rejected: usize,
}

/// Sample size, path grid and base seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_steps: 64,
            seed: 42,
        }
    }
}

/// Runs `n_paths` bridges and accumulates `outputs` statistics per path.
/// The functional writes one value per output; non-finite values reject the
/// path for that output. Chunks are fixed so the reduction order does not
/// depend on the thread pool.
fn run_paths<F>(sampler: &BridgeSampler, settings: &McSettings, outputs: usize, functional: F) -> Vec<McEstimate>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let n = settings.n_paths;
    let chunks: Vec<Vec<Moments>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Moments::default(); outputs];
            let mut path = vec![0.0; sampler.n_steps + 1];
            let mut vals = vec![0.0; outputs];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let mut rng = path_rng(settings.seed, i as u64);
                sampler.sample_into(&mut rng, &mut path);
                functional(&path, &mut vals);
                for (m, &v) in acc.iter_mut().zip(&vals) {
                    if v.is_finite() {
                        m.sum += v;
                        m.sum_sq += v * v;
                        m.count += 1;
                    } else {
                        m.rejected += 1;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Moments::default(); outputs];
    for chunk in &chunks {
        for (t, m) in total.iter_mut().zip(chunk) {
            t.sum += m.sum;
            t.sum_sq += m.sum_sq;
            t.count += m.count;
            t.rejected += m.rejected;
        }
    }
    total
        .into_iter()
        .map(|m| {
            let k = m.count as f64;
            let mean = if m.count > 0 { m.sum / k } else { f64::NAN };
            let var = if m.count > 1 {
                ((m.sum_sq - k * mean * mean) / (k - 1.0)).max(0.0)
            } else {
                f64::NAN
            };
            McEstimate {
                mean,
                std_error: (var / k).sqrt(),
                paths: m.count,
                seed: settings.seed,
                rejected: m.rejected,
            }
        })
        .collect()
}

/// Precomputed `ω₀` coefficients on the path grid.
struct MeanPaths {
    a: Vec<f64>,
    b: Vec<f64>,
    times: Vec<f64>,
    ds: f64,
}

impl MeanPaths {
    fn new(alpha: f64, sigma: f64, tau: f64, n_steps: usize) -> Self {
        let ds = (tau - sigma) / n_steps as f64;
        let mut a = Vec::with_capacity(n_steps + 1);
        let mut b = Vec::with_capacity(n_steps + 1);
        let mut times = Vec::with_capacity(n_steps + 1);
        for k in 0..=n_steps {
            let s = sigma + ds * k as f64;
            let (ak, bk) = if k == 0 {
                (1.0, 0.0)
            } else if k == n_steps {
                (0.0, 1.0)
            } else {
                omega0_coefficients(alpha, sigma, tau, s)
            };
            a.push(ak);
            b.push(bk);
            times.push(s);
        }
        Self { a, b, times, ds }
    }

    /// Trapezoid `∫ V(ω₀ + √2 ω, s) ds`.
    fn action(&self, v: Potential, path: &[f64], x: f64, y: f64) -> f64 {
        let n = path.len() - 1;
        let mut total = 0.0;
        for k in 0..=n {
            let z = y * self.a[k] + x * self.b[k] + std::f64::consts::SQRT_2 * path[k];
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            total += w * v(z, self.times[k]);
        }
        total * self.ds
    }
}

fn weight(action: f64) -> f64 {
    if action.abs() > EXPONENT_LIMIT {
        f64::NAN
    } else {
        (-action).exp()
    }
}

/// `⟨e^{-∫V}⟩` over the bridge ensemble for every `(x, y)` in `points`, all
/// from the same paths.
pub fn fk_weights(v: Potential, alpha: f64, sigma: f64, tau: f64, points: &[(f64, f64)], settings: &McSettings) -> Result<Vec<McEstimate>> {
    let sampler = BridgeSampler::new(alpha, sigma, tau, settings.n_steps)?;
    let means = MeanPaths::new(alpha, sigma, tau, settings.n_steps);
    Ok(run_paths(&sampler, settings, points.len(), |path, out| {
        for (o, &(x, y)) in out.iter_mut().zip(points) {
            *o = weight(means.action(v, path, x, y));
        }
    }))
}

/// Kernel estimate `U(τ, σ)(x, y) = U₀(τ - σ)(x, y) ⟨e^{-∫V}⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    pub x: f64,
    pub y: f64,
    pub u0: f64,
    pub weight: McEstimate,
    pub kernel: f64,
    pub std_error: f64,
}

pub fn fk_kernel_stencil(
    v: Potential,
    mehler: &MehlerKernel,
    sigma: f64,
    tau: f64,
    points: &[(f64, f64)],
    settings: &McSettings,
) -> Result<Vec<KernelEstimate>> {
    let weights = fk_weights(v, mehler.alpha, sigma, tau, points, settings)?;
    points
        .iter()
        .zip(weights)
        .map(|(&(x, y), w)| {
            let u0 = mehler.eval(tau - sigma, x, y)?;
            Ok(KernelEstimate {
                x,
                y,
                u0,
                weight: w,
                kernel: u0 * w.mean,
                std_error: u0 * w.std_error,
            })
        })
        .collect()
}

pub fn fk_kernel_estimate(
    v: Potential,
    mehler: &MehlerKernel,
    sigma: f64,
    tau: f64,
    x: f64,
    y: f64,
    settings: &McSettings,
) -> Result<KernelEstimate> {
    Ok(fk_kernel_stencil(v, mehler, sigma, tau, &[(x, y)], settings)?[0])
}

/// The potential `V(z) = 2pα/(p-1) - 2pα/(p-1+βz²)`.
pub fn reframed_v(alpha: f64, beta: f64, p: f64) -> impl Fn(f64, f64) -> f64 + Sync {
    move |z, _| reframed_potential(z, alpha, beta, p)
}

/// `sup_z |∂_z V|`, attained at `z² = (p-1)/(3β)`.
pub fn reframed_gradient_bound(alpha: f64, beta: f64, p: f64) -> f64 {
    if beta <= 0.0 {
        return 0.0;
    }
    let c = p - 1.0;
    let z = (c / (3.0 * beta)).sqrt();
    let den = c + beta * z * z;
    4.0 * p * alpha * beta * z / (den * den)
}

/// Grid controls for the eigen-expansion oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    pub half_width: f64,
    /// Coarse spacing; the fine grid halves it.
    pub spacing: f64,
    /// Modes with `(λ_k - λ_0) r` above this are dropped.
    pub cutoff: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            half_width: 20.0,
            spacing: 0.01,
            cutoff: 40.0,
        }
    }
}

/// Conjugated kernel from the discretized operator on two grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleKernel {
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    /// Richardson combination `(4 fine - coarse)/3`.
    pub values: Vec<f64>,
    /// `|fine - coarse|/3` per point.
    pub errors: Vec<f64>,
    pub modes: usize,
}

fn expansion(alpha: f64, beta: f64, p: f64, r: f64, points: &[(f64, f64)], grid: &Grid, cutoff: f64) -> Result<(Vec<f64>, usize)> {
    let kind = if beta > 0.0 {
        OperatorKind::Reframed { alpha, beta, p }
    } else {
        OperatorKind::ShiftedOscillator { alpha }
    };
    let op = assemble(kind, grid);
    // The oscillator spectrum is spaced by α; pad for the potential.
    let estimate = (cutoff / (alpha * r)).ceil() as usize + 8;
    let k = estimate.min(grid.len() - 2);
    let spec = eigen_spectrum(&op, k)?;
    let h = grid.spacing();
    let index = |z: f64| -> Result<usize> {
        let i = ((z + grid.half_width()) / h).round();
        if i < 1.0 || i as usize >= grid.len() - 1 || (grid.node(i as usize) - z).abs() > 1e-9 {
            return Err(Error::InvalidParameter {
                name: "stencil point",
                value: z,
                reason: "must be an interior node of the oracle grid",
            });
        }
        Ok(i as usize)
    };
    let lambda0 = spec.values[0];
    let used = spec.values.iter().take_while(|&&l| (l - lambda0) * r <= cutoff).count();
    let mut out = Vec::with_capacity(points.len());
    for &(x, y) in points {
        let (ix, iy) = (index(x)?, index(y)?);
        let mut sum = 0.0;
        for (l, vec) in spec.values.iter().zip(&spec.vectors).take(used) {
            sum += (-l * r).exp() * vec.values()[ix] * vec.values()[iy];
        }
        out.push((-0.25 * alpha * x * x).exp() * sum * (0.25 * alpha * y * y).exp());
    }
    Ok((out, used))
}

/// Kernel of `e^{-αz²/4} e^{-r(L₀+V)} e^{αz²/4}` at the given points by
/// eigen-expansion of the Dirichlet discretization; `β = 0` drops `V`.
pub fn direct_kernel(alpha: f64, beta: f64, p: f64, r: f64, points: &[(f64, f64)], settings: &OracleSettings) -> Result<OracleKernel> {
    ensure_positive("alpha", alpha)?;
    ensure_positive("r", r)?;
    let coarse_grid = Grid::with_spacing(settings.half_width, settings.spacing)?;
    let fine_grid = Grid::with_spacing(settings.half_width, 0.5 * settings.spacing)?;
    let (coarse, _) = expansion(alpha, beta, p, r, points, &coarse_grid, settings.cutoff)?;
    let (fine, modes) = expansion(alpha, beta, p, r, points, &fine_grid, settings.cutoff)?;
    let values = coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    let errors = coarse.iter().zip(&fine).map(|(c, f)| (f - c).abs() / 3.0).collect();
    Ok(OracleKernel {
        coarse,
        fine,
        values,
        errors,
        modes,
    })
}

/// One stencil point of the Monte Carlo versus oracle comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelComparison {
    pub x: f64,
    pub y: f64,
    pub monte_carlo: f64,
    pub mc_std_error: f64,
    pub oracle: f64,
    pub oracle_error: f64,
    /// `|mc - oracle| / √(se_mc² + err²)`.
    pub z_score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidelityReport {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub window: f64,
    pub mehler_constant: f64,
    pub settings: McSettings,
    pub points: Vec<KernelComparison>,
    pub rejected: usize,
}

impl FidelityReport {
    pub fn max_z(&self) -> f64 {
        self.points.iter().map(|c| c.z_score).fold(0.0, f64::max)
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.points.iter().all(|c| c.z_score <= sigmas)
    }
}

/// Square stencil `{-w, -w/2, 0, w/2, w}²`.
pub fn square_stencil(w: f64) -> Vec<(f64, f64)> {
    let s = [-w, -0.5 * w, 0.0, 0.5 * w, w];
    s.iter().flat_map(|&x| s.iter().map(move |&y| (x, y))).collect()
}

/// Monte Carlo kernel with the reframed potential against the direct
/// propagator of the same operator.
pub fn kernel_fidelity(
    alpha: f64,
    beta: f64,
    p: f64,
    window: f64,
    points: &[(f64, f64)],
    mehler: &MehlerKernel,
    settings: &McSettings,
    oracle: &OracleSettings,
) -> Result<FidelityReport> {
    let v = reframed_v(alpha, beta, p);
    let mc = fk_kernel_stencil(&v, mehler, 0.0, window, points, settings)?;
    let direct = direct_kernel(alpha, beta, p, window, points, oracle)?;
    let mut rejected = 0;
    let rows = mc
        .iter()
        .zip(direct.values.iter().zip(&direct.errors))
        .map(|(m, (&o, &e))| {
            rejected += m.weight.rejected;
            let se = (m.std_error * m.std_error + e * e).sqrt();
            KernelComparison {
                x: m.x,
                y: m.y,
                monte_carlo: m.kernel,
                mc_std_error: m.std_error,
                oracle: o,
                oracle_error: e,
                z_score: if se > 0.0 { (m.kernel - o).abs() / se } else { (m.kernel - o).abs() / f64::MIN_POSITIVE },
            }
        })
        .collect();
    Ok(FidelityReport {
        alpha,
        beta,
        p,
        window,
        mehler_constant: mehler.constant,
        settings: *settings,
        points: rows,
        rejected,
    })
}

/// `U(τ, σ) ≈ ∫ U(τ, ρ)(x, z) U(ρ, σ)(z, y) dz` at one `(x, y)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChapmanRow {
    pub x: f64,
    pub y: f64,
    pub direct: f64,
    pub direct_se: f64,
    pub composed: f64,
    pub composed_se: f64,
    pub z_score: f64,
}

/// Composition check on the given points with a trapezoid rule in the
/// intermediate variable over `[-z_max, z_max]`. Each intermediate node uses
/// its own seed stream, so the node errors are independent.
pub fn chapman_kolmogorov_check(
    v: Potential,
    mehler: &MehlerKernel,
    sigma: f64,
    rho: f64,
    tau: f64,
    points: &[(f64, f64)],
    z_max: f64,
    z_nodes: usize,
    settings: &McSettings,
) -> Result<Vec<ChapmanRow>> {
    if !(sigma < rho && rho < tau) {
        return Err(Error::InvalidParameter {
            name: "rho",
            value: rho,
            reason: "must lie strictly between sigma and tau",
        });
    }
    let direct = fk_kernel_stencil(v, mehler, sigma, tau, points, settings)?;
    let dz = 2.0 * z_max / (z_nodes - 1) as f64;
    let zs: Vec<f64> = (0..z_nodes).map(|k| -z_max + dz * k as f64).collect();
    let mut rows = Vec::with_capacity(points.len());
    for (d, &(x, y)) in direct.iter().zip(points) {
        let mut comp = 0.0;
        let mut var = 0.0;
        for (k, &z) in zs.iter().enumerate() {
            let w = if k == 0 || k == z_nodes - 1 { 0.5 * dz } else { dz };
            let s1 = McSettings {
                seed: settings.seed.wrapping_add(1 + 2 * k as u64),
                ..*settings
            };
            let s2 = McSettings {
                seed: settings.seed.wrapping_add(2 + 2 * k as u64),
                ..*settings
            };
            let upper = fk_kernel_estimate(v, mehler, rho, tau, x, z, &s1)?;
            let lower = fk_kernel_estimate(v, mehler, sigma, rho, z, y, &s2)?;
            comp += w * upper.kernel * lower.kernel;
            var += w * w
                * ((upper.std_error * lower.kernel).powi(2) + (lower.std_error * upper.kernel).powi(2));
        }
        let se = (d.std_error.powi(2) + var).sqrt();
        rows.push(ChapmanRow {
            x,
            y,
            direct: d.kernel,
            direct_se: d.std_error,
            composed: comp,
            composed_se: var.sqrt(),
            z_score: (d.kernel - comp).abs() / se.max(f64::MIN_POSITIVE),
        });
    }
    Ok(rows)
}

/// One window of the gradient bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivativeRow {
    pub window: f64,
    pub x: f64,
    pub y: f64,
    pub derivative: f64,
    pub std_error: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Central differences in `y` of `⟨e^{-∫V}⟩` with common paths, against
/// `K (τ - σ) + 3 se`. Valid for `V ≥ 0` with `|∂V| ≤ K`.
pub fn derivative_bound_check(
    v: Potential,
    k_bound: f64,
    alpha: f64,
    windows: &[f64],
    points: &[(f64, f64)],
    delta: f64,
    settings: &McSettings,
) -> Result<Vec<DerivativeRow>> {
    ensure_positive("delta", delta)?;
    let mut rows = Vec::new();
    for &window in windows {
        let sampler = BridgeSampler::new(alpha, 0.0, window, settings.n_steps)?;
        let means = MeanPaths::new(alpha, 0.0, window, settings.n_steps);
        let est = run_paths(&sampler, settings, points.len(), |path, out| {
            for (o, &(x, y)) in out.iter_mut().zip(points) {
                let plus = weight(means.action(v, path, x, y + delta));
                let minus = weight(means.action(v, path, x, y - delta));
                *o = (plus - minus) / (2.0 * delta);
            }
        });
        for (e, &(x, y)) in est.iter().zip(points) {
            let bound = k_bound * window + 3.0 * e.std_error;
            rows.push(DerivativeRow {
                window,
                x,
                y,
                derivative: e.mean,
                std_error: e.std_error,
                bound,
                holds: e.mean.abs() <= bound,
            });
        }
    }
    Ok(rows)
}

/// Schedule for the coefficient `β(σ)` of the potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schedule", rename_all = "kebab-case")]
pub enum BetaSchedule {
    Constant { beta: f64 },
    Law { law: BetaLaw },
}

impl BetaSchedule {
    pub fn at(&self, sigma: f64) -> f64 {
        match self {
            BetaSchedule::Constant { beta } => *beta,
            BetaSchedule::Law { law } => law.beta(sigma),
        }
    }
}

/// Grid, step and fit controls for the decay measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySettings {
    pub alpha: f64,
    pub p: f64,
    pub half_width: f64,
    pub nodes: usize,
    pub dsigma: f64,
    pub horizon: f64,
    /// Fit window start; the fit runs to the horizon.
    pub fit_from: f64,
    /// The weighted norm is taken over `|z| ≤ weight_window`.
    pub weight_window: f64,
    pub record_every: usize,
}

impl Default for DecaySettings {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            p: 3.0,
            half_width: 20.0,
            nodes: 2001,
            dsigma: 0.005,
            horizon: 10.0,
            fit_from: 2.0,
            weight_window: 12.0,
            record_every: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub label: String,
    pub sigma: Vec<f64>,
    pub norm: Vec<f64>,
    pub exponent: f64,
    pub rms_residual: f64,
}

/// Weighted sup `‖⟨z⟩^{-3} e^{αz²/4} g‖` over the window, on interior nodes.
fn decay_norm(grid: &Grid, alpha: f64, window: f64, interior: &[f64]) -> f64 {
    interior
        .iter()
        .enumerate()
        .filter_map(|(i, &g)| {
            let z = grid.node(i + 1);
            (z.abs() <= window).then(|| (0.25 * alpha * z * z).exp() * g.abs() / (1.0 + z * z).powf(1.5))
        })
        .fold(0.0, f64::max)
}

/// Discrete projector removing the three lowest modes of the discretized
/// `L₀`, stored as Euclidean-normalized interior vectors.
#[derive(Debug, Clone)]
pub struct DiscreteProjector {
    modes: Vec<Vec<f64>>,
}

impl DiscreteProjector {
    pub fn new(alpha: f64, grid: &Grid) -> Result<Self> {
        let op = assemble(OperatorKind::ShiftedOscillator { alpha }, grid);
        let pairs = op.matrix().lowest_eigenpairs(3)?;
        Ok(Self {
            modes: pairs.into_iter().map(|p| p.vector).collect(),
        })
    }

    pub fn apply(&self, g: &mut [f64]) {
        for m in &self.modes {
            let c: f64 = m.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
            g.iter_mut().zip(m).for_each(|(gi, mi)| *gi -= c * mi);
        }
    }
}

/// Evolves interior data `g` under `-P(L₀ + V_{β(σ)})P` with TR-BDF2 and
/// records the weighted norm.
pub fn propagator_decay(label: &str, g: &[f64], schedule: &BetaSchedule, settings: &DecaySettings) -> Result<DecayReport> {
    let s = settings;
    ensure_positive("alpha", s.alpha)?;
    ensure_positive("dsigma", s.dsigma)?;
    let grid = Grid::new(s.half_width, s.nodes)?;
    if g.len() != s.nodes - 2 {
        return Err(Error::GridMismatch);
    }
    let projector = DiscreteProjector::new(s.alpha, &grid)?;
    let mut u = g.to_vec();
    projector.apply(&mut u);
    let gamma = 2.0 - std::f64::consts::SQRT_2;
    let g2 = (1.0 - gamma) / (2.0 - gamma);
    let c_new = 1.0 / (gamma * (2.0 - gamma));
    let c_old = (1.0 - gamma).powi(2) / (gamma * (2.0 - gamma));
    let steps = (s.horizon / s.dsigma).round() as usize;
    let mut sigma = vec![0.0];
    let mut norm = vec![decay_norm(&grid, s.alpha, s.weight_window, &u)];
    for k in 0..steps {
        let mid = (k as f64 + 0.5) * s.dsigma;
        let beta = schedule.at(mid);
        let kind = if beta > 0.0 {
            OperatorKind::Reframed {
                alpha: s.alpha,
                beta,
                p: s.p,
            }
        } else {
            OperatorKind::ShiftedOscillator { alpha: s.alpha }
        };
        let op = assemble(kind, &grid);
        let a = op.matrix();
        let shifted = |c: f64| -> Tridiagonal {
            Tridiagonal::new(
                a.off.iter().map(|o| c * o).collect(),
                a.diag.iter().map(|d| 1.0 + c * d).collect(),
                a.off.iter().map(|o| c * o).collect(),
            )
        };
        let half = 0.5 * gamma * s.dsigma;
        let au = a.apply(&u);
        let rhs: Vec<f64> = u.iter().zip(&au).map(|(x, y)| x - half * y).collect();
        let stage = shifted(half).solve(&rhs)?;
        let rhs2: Vec<f64> = stage.iter().zip(&u).map(|(a, b)| c_new * a - c_old * b).collect();
        u = shifted(g2 * s.dsigma).solve(&rhs2)?;
        projector.apply(&mut u);
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("propagator state"));
        }
        if (k + 1) % s.record_every == 0 {
            sigma.push((k + 1) as f64 * s.dsigma);
            let n = decay_norm(&grid, s.alpha, s.weight_window, &u);
            if !(n.is_finite() && n > 0.0) {
                return Err(Error::NonFinite("weighted norm"));
            }
            norm.push(n);
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = sigma
        .iter()
        .zip(&norm)
        .filter(|(t, _)| **t >= s.fit_from)
        .map(|(t, n)| (*t, n.ln()))
        .unzip();
    let fit = fit_line(&xs, &ys)?;
    Ok(DecayReport {
        label: label.to_string(),
        sigma,
        norm,
        exponent: -fit.slope,
        rms_residual: fit.rms_residual,
    })
}

/// Interior nodes of the decay grid.
pub fn decay_grid(settings: &DecaySettings) -> Result<Grid> {
    Grid::new(settings.half_width, settings.nodes)
}

/// Test data for the decay check: the discrete `n = 3` mode of `L₀`, and two
/// projected functions with `⟨z⟩³ e^{-αz²/4}` tails of either parity.
pub fn decay_test_functions(settings: &DecaySettings) -> Result<Vec<(String, Vec<f64>)>> {
    let grid = decay_grid(settings)?;
    let alpha = settings.alpha;
    let op = assemble(OperatorKind::ShiftedOscillator { alpha }, &grid);
    let mode3 = op.matrix().lowest_eigenpairs(4)?.swap_remove(3).vector;
    let interior: Vec<f64> = (1..grid.len() - 1).map(|i| grid.node(i)).collect();
    let even: Vec<f64> = interior
        .iter()
        .map(|&z| (1.0 + z * z).powf(1.5) * z.cos() * (-0.25 * alpha * z * z).exp())
        .collect();
    let odd: Vec<f64> = interior
        .iter()
        .map(|&z| z * z * z / (1.0 + 0.1 * z * z) * (1.0 + z * z).sqrt() * (-0.25 * alpha * z * z).exp())
        .collect();
    let scale = |v: Vec<f64>| -> Vec<f64> {
        let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        v.into_iter().map(|x| x / m).collect()
    };
    Ok(vec![
        ("mode-3".to_string(), mode3),
        ("even-tail".to_string(), scale(even)),
        ("odd-tail".to_string(), scale(odd)),
    ])
}

/// The discrete eigenvalue of the `n = 3` mode of `L₀`.
pub fn discrete_mode3_eigenvalue(settings: &DecaySettings) -> Result<f64> {
    let grid = decay_grid(settings)?;
    let op = assemble(OperatorKind::ShiftedOscillator { alpha: settings.alpha }, &grid);
    Ok(op.matrix().lowest_eigenvalues(4)?[3])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_constant_value() {
        let c = 1.0 / (4.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI).sqrt());
        assert!((c - MEHLER_STANDARD_CONSTANT).abs() < 1e-15);
    }

    #[test]
    fn mehler_eigen_action() {
        let k = MehlerKernel::standard(0.5).unwrap();
        let alpha = 0.5;
        for &r in &[0.3, 1.0, 2.5] {
            for &x in &[0.0, 0.7, -1.9] {
                let h = 0.005;
                let mut s = 0.0;
                for j in -8000..=8000 {
                    let y = h * j as f64;
                    s += h * k.eval(r, x, y).unwrap() * (-0.5 * alpha * y * y).exp();
                }
                let exact = (2.0 * alpha * r).exp() * (-0.5 * alpha * x * x).exp();
                assert!((s / exact - 1.0).abs() < 1e-6, "r = {r}, x = {x}: {}", s / exact);
            }
        }
    }

    #[test]
    fn mehler_flattens_in_y() {
        let k = MehlerKernel::standard(0.5).unwrap();
        let slope = |r: f64| {
            let d = 1e-4;
            ((k.eval(r, 0.3, 1.0 + d).unwrap() - k.eval(r, 0.3, 1.0 - d).unwrap()) / (2.0 * d)
                / k.eval(r, 0.3, 1.0).unwrap())
            .abs()
        };
        assert!(slope(12.0) < slope(4.0) * 0.05);
    }

    #[test]
    fn mehler_rejects_zero_time() {
        assert!(mehler_kernel_u0(0.5, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn omega0_boundary_and_ode() {
        let (alpha, sigma, tau) = (0.7, 0.2, 1.7);
        let n = 400;
        let w = omega0_path(alpha, sigma, tau, 1.3, -0.4, n).unwrap();
        assert_eq!(w[0], -0.4);
        assert_eq!(w[n], 1.3);
        let ds = (tau - sigma) / n as f64;
        for k in 1..n {
            let lhs = -(w[k + 1] - 2.0 * w[k] + w[k - 1]) / (ds * ds) + alpha * alpha * w[k];
            assert!(lhs.abs() < 1e-3 * alpha * alpha, "{lhs}");
        }
        assert!(omega0_path(alpha, sigma, tau, 0.0, 0.0, n).unwrap().iter().all(|v| *v == 0.0));
        // Exponential form.
        let (a, b) = omega0_coefficients(alpha, sigma, tau, 0.9);
        let t = tau - sigma;
        assert!((a - (alpha * (tau - 0.9)).sinh() / (alpha * t).sinh()).abs() < 1e-14);
        assert!((b - (alpha * (0.9 - sigma)).sinh() / (alpha * t).sinh()).abs() < 1e-14);
    }

    #[test]
    fn bridge_covariance_matches_green_function() {
        let s = BridgeSampler::new(0.5, 0.0, 2.0, 40).unwrap();
        let diag = s.covariance_diagonal().unwrap();
        for (k, d) in diag.iter().enumerate() {
            let g = s.green_diagonal(k as f64 * s.step());
            assert!((d - g).abs() < 1e-12, "{k}: {d} vs {g}");
        }
    }

    #[test]
    fn bridge_moments() {
        let alpha = 0.5;
        let n = 16;
        let s = BridgeSampler::new(alpha, 0.0, 1.0, n).unwrap();
        let settings = McSettings {
            n_paths: 100_000,
            n_steps: n,
            seed: 7,
        };
        let est = run_paths(&s, &settings, 2, |p, out| {
            out[0] = p[n / 2];
            out[1] = p[n / 2] * p[n / 2];
        });
        assert!(est[0].mean.abs() < 3.0 * est[0].std_error);
        let var = s.covariance_diagonal().unwrap()[n / 2];
        assert!((est[1].mean - var).abs() < 3.0 * est[1].std_error);
        let path = sample_ou_bridge(alpha, 0.0, 1.0, n, 7).unwrap();
        assert_eq!(path.values[0], 0.0);
        assert_eq!(path.values[n], 0.0);
    }

    #[test]
    fn bridge_pins_for_large_alpha() {
        let small = BridgeSampler::new(1.0, 0.0, 1.0, 32).unwrap().covariance_diagonal().unwrap();
        let big = BridgeSampler::new(100.0, 0.0, 1.0, 32).unwrap().covariance_diagonal().unwrap();
        let m = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(*b));
        assert!(m(&big) < 0.05 * m(&small));
    }

    #[test]
    fn bridge_rejects_short_grid() {
        assert!(BridgeSampler::new(0.5, 0.0, 1.0, 1).is_err());
        assert!(BridgeSampler::new(0.5, 1.0, 1.0, 8).is_err());
    }

    #[test]
    fn trivial_potentials() {
        let settings = McSettings {
            n_paths: 2000,
            n_steps: 32,
            seed: 3,
        };
        let zero = |_: f64, _: f64| 0.0;
        let w = fk_weights(&zero, 0.5, 0.0, 1.0, &[(0.3, -0.2)], &settings).unwrap();
        assert_eq!(w[0].mean, 1.0);
        assert_eq!(w[0].std_error, 0.0);
        let konst = |_: f64, _: f64| 0.8;
        let w = fk_weights(&konst, 0.5, 0.0, 1.5, &[(0.3, -0.2)], &settings).unwrap();
        assert!((w[0].mean - (-0.8f64 * 1.5).exp()).abs() < 1e-14);
    }

    #[test]
    fn overflow_paths_are_rejected() {
        let settings = McSettings {
            n_paths: 100,
            n_steps: 8,
            seed: 3,
        };
        let huge = |_: f64, _: f64| 1e4;
        let w = fk_weights(&huge, 0.5, 0.0, 1.0, &[(0.0, 0.0)], &settings).unwrap();
        assert_eq!(w[0].rejected, 100);
        assert!(w[0].mean.is_nan());
    }

    #[test]
    fn reproducible_under_seed() {
        let v = reframed_v(0.5, 0.05, 3.0);
        let settings = McSettings {
            n_paths: 3000,
            n_steps: 16,
            seed: 42,
        };
        let a = fk_weights(&v, 0.5, 0.0, 1.0, &[(1.0, 0.5)], &settings).unwrap();
        let b = fk_weights(&v, 0.5, 0.0, 1.0, &[(1.0, 0.5)], &settings).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn standard_error_scaling() {
        let v = reframed_v(0.5, 0.3, 3.0);
        let run = |n| {
            let settings = McSettings {
                n_paths: n,
                n_steps: 16,
                seed: 11,
            };
            fk_weights(&v, 0.5, 0.0, 2.0, &[(2.0, 1.0)], &settings).unwrap()[0].std_error
        };
        let ratio = run(5_000) / run(20_000);
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn gradient_bound_is_the_sup() {
        let (alpha, beta, p) = (0.5, 0.05, 3.0);
        let k = reframed_gradient_bound(alpha, beta, p);
        let mut sup = 0.0f64;
        for i in 0..200_000 {
            let z = i as f64 * 1e-4;
            let d = 1e-6;
            let g = (reframed_potential(z + d, alpha, beta, p) - reframed_potential(z - d, alpha, beta, p)) / (2.0 * d);
            sup = sup.max(g.abs());
        }
        assert!((sup - k).abs() < 1e-6 * k, "{sup} vs {k}");
    }

    #[test]
    fn weight_never_exceeds_one() {
        let v = reframed_v(0.5, 0.05, 3.0);
        let settings = McSettings {
            n_paths: 2000,
            n_steps: 16,
            seed: 5,
        };
        let w = fk_weights(&v, 0.5, 0.0, 1.0, &square_stencil(1.0), &settings).unwrap();
        assert!(w.iter().all(|e| e.mean <= 1.0 && e.mean > 0.0));
    }

    #[test]
    fn oracle_matches_mehler_without_potential() {
        let settings = OracleSettings {
            spacing: 0.02,
            ..OracleSettings::default()
        };
        let pts = [(0.0, 0.0), (1.0, -0.5), (-0.5, 1.0)];
        let direct = direct_kernel(0.5, 0.0, 3.0, 1.0, &pts, &settings).unwrap();
        let k = MehlerKernel::standard(0.5).unwrap();
        for (&(x, y), d) in pts.iter().zip(&direct.values) {
            let m = k.eval(1.0, x, y).unwrap();
            assert!((d / m - 1.0).abs() < 1e-6, "({x}, {y}): {d} vs {m}");
        }
    }

    #[test]
    fn mode3_decays_at_its_eigenvalue() {
        let settings = DecaySettings {
            horizon: 4.0,
            fit_from: 1.0,
            ..DecaySettings::default()
        };
        let g = &decay_test_functions(&settings).unwrap()[0].1;
        let rep = propagator_decay("mode-3", g, &BetaSchedule::Constant { beta: 0.0 }, &settings).unwrap();
        let lambda = discrete_mode3_eigenvalue(&settings).unwrap();
        assert!((rep.exponent - lambda).abs() < 1e-6, "{} vs {lambda}", rep.exponent);
        assert!((lambda - 0.5).abs() < 1e-3);
    }
}
