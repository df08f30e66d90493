//! Uniform symmetric grids on `[-L, L]`, sampled fields with parity tags,
//! weighted sup-norms and trapezoidal inner products.
//!
//! Fields are implicitly extended by zero outside the grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid with an odd number of nodes, so that `y = 0` is a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_width: f64,
    num_points: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(half_width: f64, num_points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        if num_points < 3 || num_points % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "node count {num_points} must be odd and at least 3"
            )));
        }
        Ok(Self {
            half_width,
            num_points,
            spacing: 2.0 * half_width / (num_points - 1) as f64,
        })
    }

    /// Grid with spacing as close to `h` as the odd-count constraint allows.
    pub fn with_spacing(half_width: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing {h} must be positive")));
        }
        let half = (half_width / h).round().max(1.0) as usize;
        Self::new(half_width, 2 * half + 1)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.num_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Index of the node `y = 0`.
    pub fn center(&self) -> usize {
        self.num_points / 2
    }

    pub fn node(&self, i: usize) -> f64 {
        // Written symmetrically so that node(i) == -node(N-1-i) bit for bit.
        let c = self.center() as f64;
        (i as f64 - c) * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.num_points).map(|i| self.node(i)).collect()
    }

    /// Index of the mirror node `-y_i`.
    pub fn mirror(&self, i: usize) -> usize {
        self.num_points - 1 - i
    }

    /// Trapezoid weights `h` (interior) and `h/2` (ends).
    pub fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.num_points {
            0.5 * self.spacing
        } else {
            self.spacing
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.num_points == other.num_points
            && (self.half_width - other.half_width).abs() <= 1e-14 * self.half_width
    }
}

/// Symmetry class of a field under `y -> -y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    /// Parity of a pointwise product.
    pub fn product(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::None, _) | (_, Parity::None) => Parity::None,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }

    /// Parity of a sum.
    pub fn sum(self, other: Parity) -> Parity {
        if self == other {
            self
        } else {
            Parity::None
        }
    }
}

/// Real samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    parity: Parity,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, parity: Parity) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field samples"));
        }
        Ok(Self { grid, values, parity })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            parity: Parity::Even,
        }
    }

    /// Samples `f` at every node. `f` must return finite values.
    pub fn from_fn(grid: Grid, parity: Parity, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self { grid, values, parity }
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>, parity: Parity) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values, parity }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn at_center(&self) -> f64 {
        self.values[self.grid.center()]
    }

    /// Largest violation of the declared parity, relative to the sup norm.
    pub fn parity_defect(&self) -> f64 {
        let sign = match self.parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
            Parity::None => return 0.0,
        };
        let scale = self.sup_norm().max(f64::MIN_POSITIVE);
        (0..self.values.len())
            .map(|i| (self.values[i] - sign * self.values[self.grid.mirror(i)]).abs())
            .fold(0.0, f64::max)
            / scale
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Field {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.grid.node(i), v))
            .collect();
        Field::from_raw(self.grid, values, Parity::None)
    }

    pub fn scale(&self, c: f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|v| c * v).collect(), self.parity)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip(other, self.parity.sum(other.parity), |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip(other, self.parity.sum(other.parity), |a, b| a - b)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Field) -> Result<Field> {
        self.zip(other, self.parity.sum(other.parity), |a, b| a + c * b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip(other, self.parity.product(other.parity), |a, b| a * b)
    }

    fn zip(&self, other: &Field, parity: Parity, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Field::from_raw(self.grid, values, parity))
    }
}

/// Weight `<y>^{-n} e^{q y^2 / 4}` with `<y> = (1 + y^2)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    poly: u8,
    gauss: f64,
}

impl WeightSpec {
    pub fn new(poly: u8, gauss: f64) -> Result<Self> {
        if poly > 4 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: poly as f64,
                reason: "polynomial weight exponent must lie in 0..=4",
            });
        }
        if !gauss.is_finite() {
            return Err(Error::InvalidParameter {
                name: "q",
                value: gauss,
                reason: "Gaussian coefficient must be finite",
            });
        }
        Ok(Self { poly, gauss })
    }

    pub const fn plain() -> Self {
        Self { poly: 0, gauss: 0.0 }
    }

    pub fn poly(&self) -> u8 {
        self.poly
    }

    pub fn gauss(&self) -> f64 {
        self.gauss
    }

    /// `log` of the weight at `y`.
    pub fn log_weight(&self, y: f64) -> f64 {
        -0.5 * self.poly as f64 * (1.0 + y * y).ln() + 0.25 * self.gauss * y * y
    }
}

/// `v * exp(e)`, evaluated in log space so that a huge exponent times a tiny
/// value stays finite. Returns zero for `v == 0`.
pub fn scale_by_exp(v: f64, e: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else if e.abs() < 700.0 {
        v * e.exp()
    } else {
        v.signum() * (v.abs().ln() + e).exp()
    }
}

/// `max_i |<y_i>^{-n} e^{q y_i^2/4} f(y_i)|`.
pub fn weighted_sup_norm(f: &Field, w: &WeightSpec) -> Result<f64> {
    let grid = f.grid();
    let mut best = 0.0f64;
    for (i, &v) in f.values().iter().enumerate() {
        let y = grid.node(i);
        let val = scale_by_exp(v, w.log_weight(y)).abs();
        if !val.is_finite() {
            return Err(Error::WeightOverflow { node: i, y });
        }
        best = best.max(val);
    }
    Ok(best)
}

/// Trapezoidal approximation of `∫ f g dy`.
pub fn l2_inner(f: &Field, g: &Field) -> Result<f64> {
    if !f.grid().same_as(g.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(inner_slices(f.grid(), f.values(), g.values()))
}

pub(crate) fn inner_slices(grid: &Grid, f: &[f64], g: &[f64]) -> f64 {
    let n = f.len();
    let interior: f64 = f[1..n - 1].iter().zip(&g[1..n - 1]).map(|(a, b)| a * b).sum();
    grid.spacing() * (interior + 0.5 * (f[0] * g[0] + f[n - 1] * g[n - 1]))
}

/// Which side of the cutoff the indicator selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutoffSide {
    /// `|y| >= D`
    Outer,
    /// `|y| < D`
    Inner,
}

/// Indicator of `{|y| >= D}` or of its complement. The two sides partition
/// the grid.
pub fn cutoff_chi(grid: &Grid, d: f64, side: CutoffSide) -> Result<Field> {
    if !(d >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "D",
            value: d,
            reason: "cutoff radius must be non-negative",
        });
    }
    let outer = |y: f64| if y.abs() >= d { 1.0 } else { 0.0 };
    Ok(match side {
        CutoffSide::Outer => Field::from_fn(*grid, Parity::Even, outer),
        CutoffSide::Inner => Field::from_fn(*grid, Parity::Even, |y| 1.0 - outer(y)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(20.0, 2001).unwrap()
    }

    #[test]
    fn grid_is_symmetric_with_zero_node() {
        let g = grid();
        assert_eq!(g.node(g.center()), 0.0);
        assert!((g.spacing() - 0.02).abs() < 1e-15);
        for i in 0..g.len() {
            assert_eq!(g.node(i), -g.node(g.mirror(i)));
        }
        assert!(Grid::new(20.0, 2000).is_err());
        assert!(Grid::new(-1.0, 11).is_err());
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let f = Field::zeros(grid());
        let w = WeightSpec::new(3, 0.5).unwrap();
        assert_eq!(weighted_sup_norm(&f, &w).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_weight_cancels() {
        let a = 0.5;
        let f = Field::from_fn(grid(), Parity::Even, |y| (-a * y * y / 4.0).exp());
        let n = weighted_sup_norm(&f, &WeightSpec::new(0, a).unwrap()).unwrap();
        assert!((n - 1.0).abs() < 1e-12);
        let f3 = Field::from_fn(grid(), Parity::Even, |y| {
            (1.0 + y * y).powf(1.5) * (-a * y * y / 4.0).exp()
        });
        let n3 = weighted_sup_norm(&f3, &WeightSpec::new(3, a).unwrap()).unwrap();
        assert!((n3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overflowing_weight_names_node() {
        let g = Grid::new(80.0, 161).unwrap();
        let f = Field::from_fn(g, Parity::Even, |_| 1.0);
        match weighted_sup_norm(&f, &WeightSpec::new(0, 1.0).unwrap()) {
            Err(Error::WeightOverflow { node, y }) => {
                assert!(y.abs() > 50.0);
                assert_eq!(g.node(node), y);
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn weight_spec_rejects_large_exponent() {
        assert!(WeightSpec::new(5, 0.0).is_err());
    }

    #[test]
    fn gaussian_inner_product() {
        let a = 0.5;
        let f = Field::from_fn(grid(), Parity::Even, |y| (-a * y * y / 4.0).exp());
        let ip = l2_inner(&f, &f).unwrap();
        assert!((ip - (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn odd_even_inner_product_vanishes() {
        let e = Field::from_fn(grid(), Parity::Even, |y| (-y * y / 8.0).exp());
        let o = Field::from_fn(grid(), Parity::Odd, |y| y * (-y * y / 8.0).exp());
        assert!(l2_inner(&e, &o).unwrap().abs() < 1e-12);
        assert_eq!(e.mul(&o).unwrap().parity(), Parity::Odd);
        assert_eq!(o.mul(&o).unwrap().parity(), Parity::Even);
    }

    #[test]
    fn inner_product_rejects_mismatched_grids() {
        let f = Field::zeros(grid());
        let g = Field::zeros(Grid::new(10.0, 101).unwrap());
        assert_eq!(l2_inner(&f, &g), Err(Error::GridMismatch));
    }

    #[test]
    fn cutoff_partition() {
        let g = grid();
        let outer = cutoff_chi(&g, 3.3, CutoffSide::Outer).unwrap();
        let inner = cutoff_chi(&g, 3.3, CutoffSide::Inner).unwrap();
        for (a, b) in outer.values().iter().zip(inner.values()) {
            assert_eq!(a + b, 1.0);
        }
        let beyond = cutoff_chi(&g, 25.0, CutoffSide::Outer).unwrap();
        assert_eq!(beyond.sup_norm(), 0.0);
        let all = cutoff_chi(&g, 0.0, CutoffSide::Outer).unwrap();
        assert!(all.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn parity_defect_detects_asymmetry() {
        let f = Field::from_fn(grid(), Parity::Even, |y| y.cos());
        assert!(f.parity_defect() <= 1e-12);
        let g = Field::from_fn(grid(), Parity::Even, |y| y.cos() + 1e-3 * y);
        assert!(g.parity_defect() > 1e-4);
    }
}
