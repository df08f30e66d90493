//! Tridiagonal linear algebra: Thomas solves for the implicit steppers and a
//! Sturm-bisection / inverse-iteration eigensolver for symmetric matrices.

use crate::error::{Error, Result};

/// General tridiagonal matrix; `sub[i]` couples row `i + 1` to column `i`,
/// `sup[i]` couples row `i` to column `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Self {
        assert_eq!(sub.len() + 1, diag.len());
        assert_eq!(sup.len() + 1, diag.len());
        Self { sub, diag, sup }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Thomas algorithm without pivoting. Intended for diagonally dominant
    /// systems; a vanishing pivot is reported as an error.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut beta = self.diag[0];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::SingularSystem { row: 0 });
        }
        d[0] = rhs[0] / beta;
        for i in 1..n {
            c[i - 1] = self.sup[i - 1] / beta;
            beta = self.diag[i] - self.sub[i - 1] * c[i - 1];
            if beta == 0.0 || !beta.is_finite() {
                return Err(Error::SingularSystem { row: i });
            }
            d[i] = (rhs[i] - self.sub[i - 1] * d[i - 1]) / beta;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// Symmetric tridiagonal matrix with diagonal `diag` and off-diagonal `off`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Eigenpair with eigenvector normalized to unit Euclidean norm.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len());
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn as_general(&self) -> Tridiagonal {
        Tridiagonal::new(self.off.clone(), self.diag.clone(), self.off.clone())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let (lo, hi) = self.gershgorin();
        let tiny = f64::EPSILON * (hi.abs().max(lo.abs())).max(f64::MIN_POSITIVE);
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.len() {
            if i > 0 {
                q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            }
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k` smallest eigenvalues in ascending order, by bisection.
    pub fn lowest_eigenvalues(&self, k: usize) -> Result<Vec<f64>> {
        let k = k.min(self.len());
        let (lo0, hi0) = self.gershgorin();
        let scale = lo0.abs().max(hi0.abs()).max(1.0);
        let mut out = Vec::with_capacity(k);
        for index in 0..k {
            let mut lo = lo0 - 1e-12 * scale;
            let mut hi = hi0 + 1e-12 * scale;
            if let Some(&prev) = out.last() {
                lo = lo.max(prev - 4.0 * f64::EPSILON * scale);
            }
            let mut iterations = 0;
            while hi - lo > 2.0 * f64::EPSILON * scale {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) > index {
                    hi = mid;
                } else {
                    lo = mid;
                }
                iterations += 1;
                if iterations > 400 {
                    return Err(Error::EigenConvergence { index });
                }
            }
            out.push(0.5 * (lo + hi));
        }
        Ok(out)
    }

    /// The `k` lowest eigenpairs. Eigenvectors come from inverse iteration
    /// with a pivoted LU factorization; near-degenerate vectors are
    /// re-orthogonalized.
    pub fn lowest_eigenpairs(&self, k: usize) -> Result<Vec<EigenPair>> {
        let values = self.lowest_eigenvalues(k)?;
        let n = self.len();
        let (lo, hi) = self.gershgorin();
        let norm = lo.abs().max(hi.abs()).max(1.0);
        let mut pairs: Vec<EigenPair> = Vec::with_capacity(values.len());
        for (index, &lambda) in values.iter().enumerate() {
            let shift = lambda + 1e-10 * norm * f64::EPSILON.sqrt();
            let lu = PivotedLu::factor(self, shift, norm);
            // Deterministic, non-symmetric start vector so that both parities
            // are represented.
            let mut x: Vec<f64> = (0..n)
                .map(|i| 1.0 + 0.37 * ((i as f64) * 0.618_033_988_75).sin())
                .collect();
            normalize(&mut x);
            for _ in 0..6 {
                x = lu.solve(&x);
                for prev in pairs.iter() {
                    if (prev.value - lambda).abs() < 1e-6 * norm {
                        let dot: f64 = prev.vector.iter().zip(&x).map(|(a, b)| a * b).sum();
                        for (xi, pi) in x.iter_mut().zip(&prev.vector) {
                            *xi -= dot * pi;
                        }
                    }
                }
                if !normalize(&mut x) {
                    return Err(Error::EigenConvergence { index });
                }
            }
            let ax = self.apply(&x);
            let residual = ax
                .iter()
                .zip(&x)
                .map(|(a, v)| (a - lambda * v).powi(2))
                .sum::<f64>()
                .sqrt();
            // Fix the sign so that the first significant entry is positive.
            let big = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if let Some(first) = x.iter().find(|v| v.abs() > 1e-3 * big) {
                if *first < 0.0 {
                    x.iter_mut().for_each(|v| *v = -*v);
                }
            }
            pairs.push(EigenPair {
                value: lambda,
                vector: x,
                residual,
            });
        }
        Ok(pairs)
    }
}

fn normalize(x: &mut [f64]) -> bool {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= n);
    true
}

/// LU factorization of `T - shift I` with partial pivoting.
struct PivotedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl PivotedLu {
    fn factor(t: &SymTridiagonal, shift: f64, norm: f64) -> Self {
        let n = t.len();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        let tiny = f64::EPSILON * norm;
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut b = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_poisson_system() {
        let n = 50;
        let t = Tridiagonal::new(vec![-1.0; n - 1], vec![2.0; n], vec![-1.0; n - 1]);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = t.apply(&x);
        let y = t.solve(&b).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn thomas_reports_zero_pivot() {
        let t = Tridiagonal::new(vec![1.0], vec![0.0, 1.0], vec![1.0]);
        assert_eq!(t.solve(&[1.0, 1.0]), Err(Error::SingularSystem { row: 0 }));
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        // Eigenvalues of tridiag(-1, 2, -1) are 2 - 2 cos(k pi / (n + 1)).
        let n = 200;
        let t = SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]);
        let pairs = t.lowest_eigenpairs(6).unwrap();
        for (k, pair) in pairs.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((pair.value - exact).abs() < 1e-13, "{k}: {} vs {exact}", pair.value);
            assert!(pair.residual < 1e-12);
        }
        for i in 0..pairs.len() {
            for j in 0..i {
                let dot: f64 = pairs[i].vector.iter().zip(&pairs[j].vector).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sturm_count_brackets_eigenvalues() {
        let t = SymTridiagonal::new(vec![1.0, 2.0, 3.0], vec![0.0, 0.0]);
        assert_eq!(t.count_below(0.5), 0);
        assert_eq!(t.count_below(1.5), 1);
        assert_eq!(t.count_below(3.5), 3);
    }

    #[test]
    fn pivoted_lu_handles_indefinite_shift() {
        let n = 40;
        let t = SymTridiagonal::new((0..n).map(|i| (i as f64).cos()).collect(), vec![0.7; n - 1]);
        let lu = PivotedLu::factor(&t, 0.3, 3.0);
        let x: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let mut b = t.apply(&x);
        for (bi, xi) in b.iter_mut().zip(&x) {
            *bi -= 0.3 * xi;
        }
        let y = lu.solve(&b);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
