//! Tridiagonal linear algebra: Thomas solve and shifted inverse iteration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{CoreError, Result};

/// Symmetric tridiagonal matrix: `diag` of length n, `off` of length n−1.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiag {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// y = A x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Solve A x = b by the Thomas algorithm (no pivoting; the matrices
    /// here are shifted stiffness matrices, diagonally dominant enough).
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let mut c = vec![0.0; n]; // modified superdiagonal
        let mut d = vec![0.0; n]; // modified rhs
        let mut denom = self.diag[0];
        if denom == 0.0 || !denom.is_finite() {
            return Err(CoreError::Numerical {
                step: 0,
                what: format!("tridiagonal pivot {denom} at row 0"),
            });
        }
        c[0] = self.off.first().copied().unwrap_or(0.0) / denom;
        d[0] = b[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.off[i - 1] * c[i - 1];
            if denom == 0.0 || !denom.is_finite() {
                return Err(CoreError::Numerical {
                    step: i,
                    what: format!("tridiagonal pivot {denom} at row {i}"),
                });
            }
            if i + 1 < n {
                c[i] = self.off[i] / denom;
            }
            d[i] = (b[i] - self.off[i - 1] * d[i - 1]) / denom;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= c[i] * next;
        }
        Ok(x)
    }
}

/// General tridiagonal matrix: `lower`/`upper` of length n−1.
#[derive(Debug, Clone)]
pub struct GenTridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl GenTridiag {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Thomas solve without pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        if denom == 0.0 || !denom.is_finite() {
            return Err(CoreError::Numerical {
                step: 0,
                what: format!("tridiagonal pivot {denom} at row 0"),
            });
        }
        c[0] = self.upper.first().copied().unwrap_or(0.0) / denom;
        d[0] = b[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if denom == 0.0 || !denom.is_finite() {
                return Err(CoreError::Numerical {
                    step: i,
                    what: format!("tridiagonal pivot {denom} at row {i}"),
                });
            }
            if i + 1 < n {
                c[i] = self.upper[i] / denom;
            }
            d[i] = (b[i] - self.lower[i - 1] * d[i - 1]) / denom;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= c[i] * next;
        }
        Ok(x)
    }
}

/// Outcome of [`inverse_iteration`].
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest eigenvalue of the generalized problem `A x = λ B x` with `B`
/// diagonal positive, by inverse iteration on `A − shift·B`. The Rayleigh
/// quotient is recomputed from the caller-supplied form to keep it
/// cancellation free on badly scaled grids.
pub fn inverse_iteration(
    a: &Tridiag,
    b_diag: &[f64],
    shift: f64,
    x0: &[f64],
    rayleigh: impl Fn(&[f64]) -> f64,
    tol: f64,
    max_iter: usize,
) -> Result<EigenPair> {
    let n = a.n();
    let shifted = Tridiag {
        diag: a
            .diag
            .iter()
            .zip(b_diag.iter())
            .map(|(&ai, &bi)| ai - shift * bi)
            .collect(),
        off: a.off.clone(),
    };
    let b_norm = |x: &[f64]| -> f64 {
        let s: f64 = x.iter().zip(b_diag.iter()).map(|(&xi, &bi)| bi * xi * xi).sum();
        libm::sqrt(s)
    };
    let mut x: Vec<f64> = x0.to_vec();
    let nrm = b_norm(&x);
    if nrm == 0.0 {
        return Err(CoreError::Domain("inverse_iteration: zero start vector".into()));
    }
    x.iter_mut().for_each(|v| *v /= nrm);
    let mut lambda = rayleigh(&x);
    for it in 1..=max_iter {
        let rhs: Vec<f64> = x.iter().zip(b_diag.iter()).map(|(&xi, &bi)| bi * xi).collect();
        let mut y = shifted.solve(&rhs)?;
        let nrm = b_norm(&y);
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(CoreError::Numerical {
                step: it,
                what: format!("inverse iteration norm {nrm}"),
            });
        }
        y.iter_mut().for_each(|v| *v /= nrm);
        // fix the overall sign for reproducibility
        if y.iter().sum::<f64>() < 0.0 {
            y.iter_mut().for_each(|v| *v = -*v);
        }
        lambda = rayleigh(&y);
        // residual ‖A y − λ B y‖_{B^{-1}} relative to ‖A y‖
        let ay = a.apply(&y);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let r = ay[i] - lambda * b_diag[i] * y[i];
            num += r * r / b_diag[i];
            den += ay[i] * ay[i] / b_diag[i];
        }
        let residual = libm::sqrt(num / den.max(f64::MIN_POSITIVE));
        x = y;
        if residual <= tol {
            return Ok(EigenPair {
                lambda,
                vector: x,
                residual,
                iterations: it,
            });
        }
    }
    let ay = a.apply(&x);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let r = ay[i] - lambda * b_diag[i] * x[i];
        num += r * r / b_diag[i];
        den += ay[i] * ay[i] / b_diag[i];
    }
    Err(CoreError::NonConvergence {
        iterations: max_iter,
        residual: libm::sqrt(num / den.max(f64::MIN_POSITIVE)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_known_system() {
        // A = [[2,-1,0],[-1,2,-1],[0,-1,2]], x = [1,2,3] => b = [0,0,4]
        let a = Tridiag {
            diag: vec![2.0, 2.0, 2.0],
            off: vec![-1.0, -1.0],
        };
        let x = a.solve(&[0.0, 0.0, 4.0]).unwrap();
        for (xi, ei) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((xi - ei).abs() < 1e-14);
        }
        let b = a.apply(&[1.0, 2.0, 3.0]);
        assert_eq!(b, vec![0.0, 0.0, 4.0]);
    }

    #[test]
    fn thomas_large_random_diagonally_dominant() {
        use rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut unif = || (rng.next_u64() as f64 / u64::MAX as f64) - 0.5;
        let n = 400;
        let off: Vec<f64> = (0..n - 1).map(|_| unif()).collect();
        let diag: Vec<f64> = (0..n).map(|i| {
            let mut s = 1.0 + unif().abs();
            if i > 0 {
                s += off[i - 1].abs();
            }
            if i < n - 1 {
                s += off[i].abs();
            }
            s
        }).collect();
        let a = Tridiag { diag, off };
        let xe: Vec<f64> = (0..n).map(|_| unif()).collect();
        let b = a.apply(&xe);
        let x = a.solve(&b).unwrap();
        for (xi, ei) in x.iter().zip(xe.iter()) {
            assert!((xi - ei).abs() < 1e-10);
        }
    }

    #[test]
    fn gen_tridiag_solves_nonsymmetric_system() {
        // A = [[3,1,0],[2,4,1],[0,1,5]], x = [1,-1,2]
        let a = GenTridiag {
            lower: vec![2.0, 1.0],
            diag: vec![3.0, 4.0, 5.0],
            upper: vec![1.0, 1.0],
        };
        let b = a.apply(&[1.0, -1.0, 2.0]);
        assert_eq!(b, vec![2.0, 0.0, 9.0]);
        let x = a.solve(&b).unwrap();
        for (xi, ei) in x.iter().zip([1.0, -1.0, 2.0]) {
            assert!((xi - ei).abs() < 1e-14);
        }
    }

    #[test]
    fn inverse_iteration_dirichlet_laplacian() {
        // −u'' on (0,1), n interior points: λ_1 = π² with h² scaling
        let n = 200;
        let h = 1.0 / (n as f64 + 1.0);
        let a = Tridiag {
            diag: vec![2.0 / h; n],
            off: vec![-1.0 / h; n - 1],
        };
        let b_diag = vec![h; n];
        let rayleigh = |x: &[f64]| {
            let ax = a.apply(x);
            let num: f64 = x.iter().zip(ax.iter()).map(|(&xi, &ai)| xi * ai).sum();
            let den: f64 = x.iter().zip(b_diag.iter()).map(|(&xi, &bi)| bi * xi * xi).sum();
            num / den
        };
        let x0 = vec![1.0; n];
        let pair = inverse_iteration(&a, &b_diag, 5.0, &x0, rayleigh, 1e-12, 200).unwrap();
        let exact = core::f64::consts::PI * core::f64::consts::PI;
        assert!(
            ((pair.lambda - exact) / exact).abs() < 1e-3,
            "{} vs {exact}",
            pair.lambda
        );
        assert!(pair.residual <= 1e-12);
        assert!(pair.vector.iter().all(|&v| v >= -1e-12));
    }
}
