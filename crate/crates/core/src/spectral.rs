//! Almost-solution profiles, Hermite-Gaussian eigenfunctions, Schrödinger-type
//! operators on the grid, their low spectra and the projections onto the
//! three lowest harmonic-oscillator modes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_exponent, ensure_positive, Error, Result};
use crate::grid::{inner_slices, l2_inner, Field, Grid, Parity};
use crate::tridiag::SymTridiagonal;

/// Profile parameters `(a, b, c)` tied by the gauge relation
/// `a = l c + (1 - l) / 2`. The default gauge `l = 2` gives `c = a/2 + 1/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub l: f64,
}

impl ProfileParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        Self::with_gauge(a, b, 2.0)
    }

    pub fn with_gauge(a: f64, b: f64, l: f64) -> Result<Self> {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "b",
                value: b,
                reason: "profile parameter b must be non-negative",
            });
        }
        if !(l > 0.0) {
            return Err(Error::InvalidParameter {
                name: "l",
                value: l,
                reason: "gauge slope must be positive",
            });
        }
        Ok(Self {
            a,
            b,
            c: gauge_c(a, l),
            l,
        })
    }

    /// Parameters with `c` chosen freely (no gauge constraint), as used by the
    /// eigenvalue bounds.
    pub fn free(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c, l: f64::NAN }
    }

    pub fn gauge_defect(&self) -> f64 {
        (self.a - (self.l * self.c + 0.5 * (1.0 - self.l))).abs()
    }

    pub fn in_window(&self) -> bool {
        (0.25..=1.0).contains(&self.a) && self.b >= 0.0
    }
}

/// `c` from `a` under the gauge `a = l c + (1 - l)/2`.
pub fn gauge_c(a: f64, l: f64) -> f64 {
    (a - 0.5 * (1.0 - l)) / l
}

/// `(2c / (p - 1 + b y^2))^{1/(p-1)}`, the ungauged profile `V`.
pub fn profile_value(y: f64, c: f64, b: f64, p: f64) -> f64 {
    (2.0 * c / (p - 1.0 + b * y * y)).powf(1.0 / (p - 1.0))
}

/// Which closed-form profile to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// `v_a = (2a/(p-1))^{1/(p-1)}`
    Homogeneous,
    /// `v_ab = (2a/(p-1+b y^2))^{1/(p-1)}`
    Static,
    /// `V_ab = (2c/(p-1+b y^2))^{1/(p-1)}` with `c` from the gauge
    Ungauged,
    /// `v_abc = e^{-a y^2/4} V_ab`
    Gauged,
}

pub fn profile(kind: ProfileKind, params: &ProfileParams, p: f64, grid: &Grid) -> Result<Field> {
    ensure_exponent(p)?;
    if params.b < 0.0 {
        return Err(Error::InvalidParameter {
            name: "b",
            value: params.b,
            reason: "profile parameter b must be non-negative",
        });
    }
    let ProfileParams { a, b, c, .. } = *params;
    let q = 1.0 / (p - 1.0);
    let f = match kind {
        ProfileKind::Homogeneous => Field::from_fn(*grid, Parity::Even, |_| (2.0 * a / (p - 1.0)).powf(q)),
        ProfileKind::Static => Field::from_fn(*grid, Parity::Even, |y| profile_value(y, a, b, p)),
        ProfileKind::Ungauged => Field::from_fn(*grid, Parity::Even, |y| profile_value(y, c, b, p)),
        ProfileKind::Gauged => Field::from_fn(*grid, Parity::Even, |y| {
            profile_value(y, c, b, p) * (-a * y * y / 4.0).exp()
        }),
    };
    if !f.is_finite() {
        return Err(Error::NonFinite("profile"));
    }
    Ok(f)
}

/// The normalized modes `φ_{0a}, φ_{1a}, φ_{2a}` of `-∂² + a²y²/4 - a/2`.
pub fn hermite_phi(n: usize, a: f64, grid: &Grid) -> Result<Field> {
    ensure_positive("a", a)?;
    let g = |y: f64| (-a * y * y / 4.0).exp();
    match n {
        0 => Ok(Field::from_fn(*grid, Parity::Even, |y| (a / (2.0 * PI)).powf(0.25) * g(y))),
        1 => Ok(Field::from_fn(*grid, Parity::Odd, |y| {
            (a / (2.0 * PI)).powf(0.25) * a.sqrt() * y * g(y)
        })),
        2 => Ok(Field::from_fn(*grid, Parity::Even, |y| {
            (a / (8.0 * PI)).powf(0.25) * (1.0 - a * y * y) * g(y)
        })),
        _ => Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "closed-form modes are provided for n = 0, 1, 2",
        }),
    }
}

/// Normalized Hermite function of any order with the probabilists'
/// polynomial: `(a/2π)^{1/4} He_n(√a y) e^{-a y²/4} / √(n!)`.
/// For `n = 2` this is `-φ_{2a}`.
pub fn hermite_function(n: usize, a: f64, grid: &Grid) -> Result<Field> {
    ensure_positive("a", a)?;
    let parity = if n % 2 == 0 { Parity::Even } else { Parity::Odd };
    let norm = (a / (2.0 * PI)).powf(0.25);
    Ok(Field::from_fn(*grid, parity, |y| {
        let x = a.sqrt() * y;
        let (mut h0, mut h1) = (1.0, x);
        let h = if n == 0 {
            h0
        } else {
            for k in 1..n {
                let next = (x * h1 - (k as f64).sqrt() * h0) / ((k + 1) as f64).sqrt();
                h0 = h1;
                h1 = next;
            }
            h1
        };
        norm * h * (-a * y * y / 4.0).exp()
    }))
}

/// Which Schrödinger-type operator a matrix discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "operator")]
pub enum OperatorKind {
    /// `-∂² + (a² + a_τ) y²/4 - a/2 + 2a/(p-1) - 2pc/(p-1+b y²)`
    Linearized { params: ProfileParams, a_tau: f64, p: f64 },
    /// `-∂² + a² y²/4 - a/2`, spectrum `{n a}`
    HarmonicOscillator { a: f64 },
    /// `-∂² + α² z²/4 - 5α/2`, spectrum `{(n - 2) α}`
    ShiftedOscillator { alpha: f64 },
    /// Shifted oscillator plus `V = 2pα/(p-1) - 2pα/(p-1+β z²)`
    Reframed { alpha: f64, beta: f64, p: f64 },
}

impl OperatorKind {
    pub fn tag(&self) -> &'static str {
        match self {
            OperatorKind::Linearized { .. } => "linearized",
            OperatorKind::HarmonicOscillator { .. } => "harmonic-oscillator",
            OperatorKind::ShiftedOscillator { .. } => "shifted-oscillator",
            OperatorKind::Reframed { .. } => "reframed",
        }
    }

    pub fn potential(&self, y: f64) -> f64 {
        match *self {
            OperatorKind::Linearized { params, a_tau, p } => {
                let ProfileParams { a, b, c, .. } = params;
                0.25 * (a * a + a_tau) * y * y - 0.5 * a + 2.0 * a / (p - 1.0)
                    - 2.0 * p * c / (p - 1.0 + b * y * y)
            }
            OperatorKind::HarmonicOscillator { a } => 0.25 * a * a * y * y - 0.5 * a,
            OperatorKind::ShiftedOscillator { alpha } => 0.25 * alpha * alpha * y * y - 2.5 * alpha,
            OperatorKind::Reframed { alpha, beta, p } => {
                0.25 * alpha * alpha * y * y - 2.5 * alpha + reframed_potential(y, alpha, beta, p)
            }
        }
    }
}

/// `V(z) = 2pα/(p-1) - 2pα/(p-1+β z²)`, non-negative for `α, β > 0`.
pub fn reframed_potential(z: f64, alpha: f64, beta: f64, p: f64) -> f64 {
    let c = p - 1.0;
    2.0 * p * alpha * beta * z * z / (c * (c + beta * z * z))
}

/// Centered second-order discretization on the interior nodes with
/// homogeneous Dirichlet data at `±L`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub kind: OperatorKind,
    grid: Grid,
    matrix: SymTridiagonal,
}

pub fn assemble(kind: OperatorKind, grid: &Grid) -> OperatorMatrix {
    let h = grid.spacing();
    let n = grid.len() - 2;
    let diag = (1..=n).map(|i| 2.0 / (h * h) + kind.potential(grid.node(i))).collect();
    let off = vec![-1.0 / (h * h); n - 1];
    OperatorMatrix {
        kind,
        grid: *grid,
        matrix: SymTridiagonal::new(diag, off),
    }
}

impl OperatorMatrix {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn matrix(&self) -> &SymTridiagonal {
        &self.matrix
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.matrix.diag
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.matrix.off
    }

    /// Applies the operator to a field (values at `±L` are taken as zero and
    /// the result vanishes there).
    pub fn apply(&self, f: &Field) -> Result<Field> {
        if !f.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.len();
        let inner = self.matrix.apply(&f.values()[1..n - 1]);
        let mut out = vec![0.0; n];
        out[1..n - 1].copy_from_slice(&inner);
        Ok(Field::from_raw(self.grid, out, f.parity()))
    }

    fn embed(&self, inner: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        out[1..self.grid.len() - 1].copy_from_slice(inner);
        out
    }
}

/// Low spectrum with eigenvectors normalized in the trapezoid inner product.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Field>,
    /// `‖A v - λ v‖ / ‖v‖` per pair (Euclidean).
    pub residuals: Vec<f64>,
}

pub fn eigen_spectrum(op: &OperatorMatrix, k: usize) -> Result<Spectrum> {
    let n = op.matrix.len();
    if k > n {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k as f64,
            reason: "more eigenvalues requested than interior nodes",
        });
    }
    let pairs = op.matrix.lowest_eigenpairs(k)?;
    let h = op.grid.spacing();
    let mut spec = Spectrum {
        values: Vec::with_capacity(k),
        vectors: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
    };
    for (index, pair) in pairs.into_iter().enumerate() {
        if pair.residual > 1e-8 {
            return Err(Error::EigenConvergence { index });
        }
        let parity = if index % 2 == 0 { Parity::Even } else { Parity::Odd };
        let scaled: Vec<f64> = pair.vector.iter().map(|v| v / h.sqrt()).collect();
        spec.values.push(pair.value);
        spec.vectors.push(Field::from_raw(op.grid, op.embed(&scaled), parity));
        spec.residuals.push(pair.residual);
    }
    Ok(spec)
}

/// Eigenvalues on `grid` and on the grid with half the spacing, combined by
/// Richardson extrapolation to remove the `O(h²)` discretization error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtrapolatedSpectrum {
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    pub extrapolated: Vec<f64>,
}

impl ExtrapolatedSpectrum {
    /// Largest `|extrapolated - fine|`, a conservative error indicator.
    pub fn error_indicator(&self) -> f64 {
        self.extrapolated
            .iter()
            .zip(&self.fine)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn extrapolated_eigenvalues(kind: OperatorKind, grid: &Grid, k: usize) -> Result<ExtrapolatedSpectrum> {
    let fine_grid = Grid::new(grid.half_width(), 2 * grid.len() - 1)?;
    let coarse = assemble(kind, grid).matrix.lowest_eigenvalues(k)?;
    let fine = assemble(kind, &fine_grid).matrix.lowest_eigenvalues(k)?;
    let extrapolated = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    Ok(ExtrapolatedSpectrum {
        coarse,
        fine,
        extrapolated,
    })
}

/// One row of an eigenvalue-bound report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenBoundReport {
    pub p: f64,
    pub params: ProfileParams,
    pub slack: f64,
    pub rows: Vec<BoundRow>,
}

impl EigenBoundReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }

    pub fn violations(&self) -> Vec<&BoundRow> {
        self.rows.iter().filter(|r| !r.holds).collect()
    }

    /// Smallest distance to either bound (negative when violated).
    pub fn min_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.lambda - r.lower).min(r.upper - r.lambda))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks `n a + 2a/(p-1) >= λ_n >= n a + 2(a - p c)/(p-1)`.
pub fn check_eigen_bounds(p: f64, params: &ProfileParams, spectrum: &[f64], slack: f64) -> Result<EigenBoundReport> {
    ensure_exponent(p)?;
    if params.c < 0.0 || params.b < 0.0 {
        return Err(Error::InvalidParameter {
            name: "c",
            value: params.c,
            reason: "bounds need c >= 0 and b >= 0",
        });
    }
    let a = params.a;
    let rows = spectrum
        .iter()
        .enumerate()
        .map(|(n, &lambda)| {
            let upper = n as f64 * a + 2.0 * a / (p - 1.0);
            let lower = n as f64 * a + 2.0 * (a - p * params.c) / (p - 1.0);
            BoundRow {
                n,
                lambda,
                lower,
                upper,
                holds: lambda <= upper + slack && lambda >= lower - slack,
            }
        })
        .collect();
    Ok(EigenBoundReport {
        p,
        params: *params,
        slack,
        rows,
    })
}

/// Which part of the splitting `f = P_low f + P f` to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Projection {
    /// Component along the three lowest modes.
    Low,
    /// The orthogonal complement.
    Complement,
}

/// Projection onto (or away from) `span{φ_{0α}, φ_{1α}, φ_{2α}}`.
pub fn project_p(alpha: f64, f: &Field, which: Projection) -> Result<Field> {
    let modes = [
        hermite_phi(0, alpha, f.grid())?,
        hermite_phi(1, alpha, f.grid())?,
        hermite_phi(2, alpha, f.grid())?,
    ];
    project_with(&modes, f, which)
}

/// Same as [`project_p`] with precomputed modes.
pub fn project_with(modes: &[Field], f: &Field, which: Projection) -> Result<Field> {
    let grid = *f.grid();
    let mut low = vec![0.0; grid.len()];
    for m in modes {
        let c = inner_slices(&grid, m.values(), f.values());
        for (l, v) in low.iter_mut().zip(m.values()) {
            *l += c * v;
        }
    }
    let out = match which {
        Projection::Low => low,
        Projection::Complement => f.values().iter().zip(&low).map(|(a, b)| a - b).collect(),
    };
    Ok(Field::from_raw(grid, out, f.parity()))
}

/// `⟨φ, A φ⟩` for a normalized mode, used to read off diagonal coefficients.
pub fn rayleigh_quotient(op: &OperatorMatrix, phi: &Field) -> Result<f64> {
    let a_phi = op.apply(phi)?;
    Ok(l2_inner(phi, &a_phi)? / l2_inner(phi, phi)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(20.0, 2001).unwrap()
    }

    #[test]
    fn static_profile_at_zero_b() {
        let params = ProfileParams::new(0.5, 0.0).unwrap();
        let v = profile(ProfileKind::Static, &params, 3.0, &grid()).unwrap();
        assert!(v.values().iter().all(|x| (x - 0.5f64.sqrt()).abs() < 1e-15));
        let h = profile(ProfileKind::Homogeneous, &params, 3.0, &grid()).unwrap();
        assert_eq!(v.values(), h.values());
    }

    #[test]
    fn static_profile_solves_first_order_equation() {
        // a y v' + 2a v/(p-1) - v^p = 0 with the analytic derivative.
        for &(a, b, p) in &[(0.5, 0.05, 3.0), (0.4, 0.3, 2.0), (0.7, 1.0, 5.0)] {
            for k in 0..200 {
                let y = -10.0 + 0.1 * k as f64;
                let v = profile_value(y, a, b, p);
                let dv = -v * 2.0 * b * y / ((p - 1.0) * (p - 1.0 + b * y * y));
                let r = a * y * dv + 2.0 * a * v / (p - 1.0) - v.powf(p);
                assert!(r.abs() < 1e-12, "{r}");
            }
        }
    }

    #[test]
    fn ungauged_profile_peaks_at_origin() {
        let params = ProfileParams::new(0.5, 0.05).unwrap();
        let v = profile(ProfileKind::Ungauged, &params, 3.0, &grid()).unwrap();
        assert!((v.at_center() - (2.0 * params.c / 2.0f64).sqrt()).abs() < 1e-15);
        assert!((v.sup_norm() - v.at_center()).abs() == 0.0);
    }

    #[test]
    fn gauge_relation() {
        let p = ProfileParams::new(0.5, 0.1).unwrap();
        assert!((p.c - 0.5).abs() < 1e-15);
        let q = ProfileParams::with_gauge(0.6, 0.1, 3.0).unwrap();
        assert!(q.gauge_defect() < 1e-12);
        assert!(ProfileParams::new(0.5, -0.1).is_err());
    }

    #[test]
    fn hermite_modes_are_orthonormal() {
        let g = grid();
        let a = 0.5;
        let modes: Vec<Field> = (0..3).map(|n| hermite_phi(n, a, &g).unwrap()).collect();
        for i in 0..3 {
            for j in 0..3 {
                let ip = l2_inner(&modes[i], &modes[j]).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-8, "{i}{j}: {ip}");
            }
        }
        let phi2 = &modes[2];
        assert!((phi2.at_center() - (a / (8.0 * PI)).powf(0.25)).abs() < 1e-15);
        let general = hermite_function(2, a, &g).unwrap();
        for (x, y) in general.values().iter().zip(phi2.values()) {
            assert!((x + y).abs() < 1e-14);
        }
    }

    #[test]
    fn hermite_modes_are_discrete_eigenvectors() {
        let g = Grid::new(20.0, 16001).unwrap();
        let a = 0.5;
        let op = assemble(OperatorKind::HarmonicOscillator { a }, &g);
        for n in 0..3 {
            let phi = hermite_phi(n, a, &g).unwrap();
            let lphi = op.apply(&phi).unwrap();
            let n_nodes = g.len();
            let worst = (1..n_nodes - 1)
                .map(|i| (lphi.values()[i] - n as f64 * a * phi.values()[i]).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-6, "n = {n}: {worst}");
        }
    }

    #[test]
    fn shifted_oscillator_conventions_differ_by_two_alpha() {
        let g = Grid::new(20.0, 401).unwrap();
        let alpha = 0.5;
        let a = assemble(OperatorKind::HarmonicOscillator { a: alpha }, &g);
        let b = assemble(OperatorKind::ShiftedOscillator { alpha }, &g);
        for (x, y) in a.diagonal().iter().zip(b.diagonal()) {
            assert!((x - y - 2.0 * alpha).abs() < 1e-12);
        }
        assert_eq!(a.off_diagonal(), b.off_diagonal());
    }

    #[test]
    fn linearized_operator_at_zero_b_is_shifted_oscillator() {
        let g = Grid::new(20.0, 401).unwrap();
        let (a, c, p) = (0.6, 0.55, 3.0);
        let params = ProfileParams::free(a, 0.0, c);
        let lin = assemble(OperatorKind::Linearized { params, a_tau: 0.0, p }, &g);
        let ho = assemble(OperatorKind::HarmonicOscillator { a }, &g);
        let shift = 2.0 * (a - p * c) / (p - 1.0);
        for (x, y) in lin.diagonal().iter().zip(ho.diagonal()) {
            assert!((x - y - shift).abs() < 1e-12);
        }
    }

    #[test]
    fn reframed_potential_is_non_negative() {
        for k in 0..100 {
            let z = -20.0 + 0.4 * k as f64;
            assert!(reframed_potential(z, 0.5, 0.05, 3.0) >= 0.0);
        }
    }

    #[test]
    fn oscillator_spectrum_after_extrapolation() {
        let a = 0.5;
        let s = extrapolated_eigenvalues(OperatorKind::HarmonicOscillator { a }, &grid(), 8).unwrap();
        for (n, l) in s.extrapolated.iter().enumerate() {
            assert!((l - n as f64 * a).abs() < 1e-5, "{n}: {l}");
        }
        let shifted = extrapolated_eigenvalues(OperatorKind::ShiftedOscillator { alpha: a }, &grid(), 4).unwrap();
        for (n, l) in shifted.extrapolated.iter().enumerate() {
            assert!((l - (n as f64 - 2.0) * a).abs() < 1e-5);
        }
    }

    #[test]
    fn eigenvectors_alternate_parity() {
        let g = Grid::new(20.0, 1001).unwrap();
        let op = assemble(OperatorKind::HarmonicOscillator { a: 0.5 }, &g);
        let s = eigen_spectrum(&op, 6).unwrap();
        for (n, v) in s.vectors.iter().enumerate() {
            assert!(v.parity_defect() < 1e-8, "n = {n}");
            assert!((l2_inner(v, v).unwrap() - 1.0).abs() < 1e-10);
        }
        assert!(s.residuals.iter().all(|r| *r < 1e-8));
    }

    #[test]
    fn bounds_example_values() {
        let params = ProfileParams::free(0.5, 0.05, 0.5);
        let r = check_eigen_bounds(3.0, &params, &[0.0, 0.5], 1e-5).unwrap();
        assert!((r.rows[0].upper - 0.5).abs() < 1e-15);
        assert!((r.rows[0].lower + 1.0).abs() < 1e-15);
        assert!((r.rows[1].upper - 1.0).abs() < 1e-15);
        let bad = check_eigen_bounds(3.0, &params, &[2.0], 1e-5).unwrap();
        assert!(!bad.holds());
        assert_eq!(bad.violations().len(), 1);
    }

    #[test]
    fn projections() {
        let g = grid();
        let alpha = 0.5;
        let phi0 = hermite_phi(0, alpha, &g).unwrap();
        let c = project_p(alpha, &phi0, Projection::Complement).unwrap();
        assert!(c.sup_norm() < 1e-8);
        let phi3 = hermite_function(3, alpha, &g).unwrap();
        let c3 = project_p(alpha, &phi3, Projection::Complement).unwrap();
        assert!(c3.sub(&phi3).unwrap().sup_norm() < 1e-10);
        let f = Field::from_fn(g, Parity::None, |y| (y * 0.7).sin() * (-y * y / 10.0).exp() + 0.3 * (-(y - 1.0).powi(2)).exp());
        let once = project_p(alpha, &f, Projection::Complement).unwrap();
        let twice = project_p(alpha, &once, Projection::Complement).unwrap();
        assert!(once.sub(&twice).unwrap().sup_norm() < 1e-10);
        let low = project_p(alpha, &f, Projection::Low).unwrap();
        assert!(l2_inner(&low, &once).unwrap().abs() < 1e-10);
    }
}
