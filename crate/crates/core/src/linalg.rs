//! Small dense linear algebra: LU with partial pivoting over real or complex
//! matrices, eigenvalues and norms.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::{Error, Result};

/// Relative pivot threshold below which a system is declared singular.
const PIVOT_TOL: f64 = 1e-13;

/// LU factorisation `PA = LU` stored compactly.
#[derive(Debug, Clone)]
pub struct Lu<T: ComplexField<RealField = f64>> {
    lu: DMatrix<T>,
    perm: Vec<usize>,
}

impl<T: ComplexField<RealField = f64> + Copy> Lu<T> {
    pub fn factor(a: &DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("LU needs a square matrix, got {}x{}", n, a.ncols())));
        }
        let scale = a.iter().map(|v| v.modulus()).fold(0.0, f64::max);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (pivot_row, pivot_mag) =
                (k..n).map(|i| (i, lu[(i, k)].modulus())).fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot_mag > PIVOT_TOL * scale) || scale == 0.0 {
                return Err(Error::Singular(format!("pivot {pivot_mag:e} in column {k} (matrix scale {scale:e})")));
            }
            if pivot_row != k {
                lu.swap_rows(k, pivot_row);
                perm.swap(k, pivot_row);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in k + 1..n {
                    let delta = factor * lu[(k, j)];
                    lu[(i, j)] -= delta;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    /// Solves `AX = B` for every column of `B`.
    pub fn solve(&self, b: &DMatrix<T>) -> Result<DMatrix<T>> {
        let n = self.lu.nrows();
        if b.nrows() != n {
            return Err(Error::Dimension(format!("right-hand side has {} rows, expected {n}", b.nrows())));
        }
        let mut x = DMatrix::from_fn(n, b.ncols(), |i, j| b[(self.perm[i], j)]);
        for col in 0..b.ncols() {
            for i in 0..n {
                let mut acc = x[(i, col)];
                for k in 0..i {
                    acc -= self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = acc;
            }
            for i in (0..n).rev() {
                let mut acc = x[(i, col)];
                for k in i + 1..n {
                    acc -= self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = acc / self.lu[(i, i)];
            }
        }
        Ok(x)
    }
}

pub fn solve<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>> {
    Lu::factor(a)?.solve(b)
}

/// Eigenvalues of a real square matrix (real Schur form via Francis QR).
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    a.complex_eigenvalues().iter().copied().collect()
}

/// Largest real part over the spectrum; `-inf` for an empty matrix.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a).iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Induced 2-norm (largest singular value).
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

pub fn to_complex(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|v| Complex64::new(v, 0.0))
}
