//! Small dense linear algebra: LU determinants over real or complex entries
//! and a cyclic Jacobi eigenvalue solver for symmetric matrices.

use std::ops::{Div, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Real;

/// Entry type usable by [`determinant`].
pub trait Entry:
    Copy + Zero + One + Mul<Output = Self> + Sub<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    type Magnitude: Real;
    fn magnitude(&self) -> Self::Magnitude;
}

impl<T: Real> Entry for T {
    type Magnitude = T;
    fn magnitude(&self) -> T {
        self.abs()
    }
}

impl<T: Real> Entry for Complex<T> {
    type Magnitude = T;
    fn magnitude(&self) -> T {
        self.norm()
    }
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Entry> Matrix<S> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    pub fn determinant(&self) -> S {
        determinant(self.n, self.data.clone())
    }
}

/// Determinant by LU decomposition with partial pivoting. `a` is row-major.
pub fn determinant<S: Entry>(n: usize, mut a: Vec<S>) -> S {
    assert_eq!(a.len(), n * n, "matrix data has wrong length");
    let mut det = S::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i * n + col]
                    .magnitude()
                    .partial_cmp(&a[j * n + col].magnitude())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if a[pivot * n + col].magnitude() == S::Magnitude::zero() {
            return S::zero();
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det = det * p;
        for row in col + 1..n {
            let factor = a[row * n + col] / p;
            if factor.magnitude() == S::Magnitude::zero() {
                continue;
            }
            for k in col + 1..n {
                a[row * n + k] = a[row * n + k] - factor * a[col * n + k];
            }
        }
    }
    det
}

/// Eigenvalues of a real symmetric matrix (row-major), ascending.
pub fn symmetric_eigenvalues<T: Real>(n: usize, mut a: Vec<T>) -> Vec<T> {
    assert_eq!(a.len(), n * n, "matrix data has wrong length");
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag = diag + a[i * n + i] * a[i * n + i];
            for j in 0..n {
                if i != j {
                    off = off + a[i * n + j] * a[i * n + j];
                }
            }
        }
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}
