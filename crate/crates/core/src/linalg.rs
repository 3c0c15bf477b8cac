//! Dense row-major matrices and LU factorisation with partial pivoting.
//!
//! The Kasteleyn solver needs determinants far outside the `f64` exponent
//! range (the dimer partition function of a 64x64 torus is about `e^1200`),
//! so determinants are reported as a phase times `exp(ln|det|)`.

use num_complex::Complex64;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular (zero pivot at column {0})")]
    Singular(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Field scalars supported by the dense kernels.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    /// Magnitude used for pivot selection.
    fn modulus(self) -> f64;
    /// `self / |self|`, or one for zero.
    fn phase(self) -> Self;
    fn to_c64(self) -> Complex64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn phase(self) -> Self {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn phase(self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            Self::one()
        } else {
            self / n
        }
    }
    fn to_c64(self) -> Complex64 {
        self
    }
}

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        DenseMatrix { n, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(LinalgError::Dimension {
                    expected: n,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(DenseMatrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                let orow = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            n: self.n,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn lu(&self) -> Result<Lu<T>, LinalgError> {
        Lu::factor(self.clone())
    }
}

/// Determinant written as `phase * exp(ln_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet<T> {
    pub phase: T,
    pub ln_abs: f64,
}

impl LogDet<f64> {
    pub fn value(&self) -> f64 {
        self.phase * self.ln_abs.exp()
    }
}

impl LogDet<Complex64> {
    pub fn value(&self) -> Complex64 {
        self.phase * self.ln_abs.exp()
    }
}

/// `P A = L U` with unit lower-triangular `L`; both factors share storage.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
    swaps: usize,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(mut a: DenseMatrix<T>) -> Result<Self, LinalgError> {
        let n = a.n;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let mut p = k;
            let mut best = a.get(k, k).modulus();
            for i in k + 1..n {
                let m = a.get(i, k).modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(LinalgError::Singular(k));
            }
            if p != k {
                let (lo, hi) = a.data.split_at_mut(p * n);
                lo[k * n..(k + 1) * n].swap_with_slice(&mut hi[..n]);
                perm.swap(k, p);
                swaps += 1;
            }
            let (head, tail) = a.data.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..(k + 1) * n];
            let pivot = pivot_row[k];
            let rest = &pivot_row[k + 1..];
            for row in tail.chunks_exact_mut(n) {
                let l = row[k] / pivot;
                row[k] = l;
                if l == T::zero() {
                    continue;
                }
                for (x, &u) in row[k + 1..].iter_mut().zip(rest) {
                    *x -= l * u;
                }
            }
        }
        Ok(Lu { lu: a, perm, swaps })
    }

    pub fn dim(&self) -> usize {
        self.lu.n
    }

    /// `min |U_ii| / max |U_ii|`; tiny values flag numerical singularity.
    pub fn pivot_ratio(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..self.lu.n {
            let d = self.lu.get(i, i).modulus();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if hi == 0.0 {
            0.0
        } else {
            lo / hi
        }
    }

    pub fn log_det(&self) -> LogDet<T> {
        let mut phase = if self.swaps.is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        };
        let mut ln_abs = 0.0;
        for i in 0..self.lu.n {
            let d = self.lu.get(i, i);
            ln_abs += d.modulus().ln();
            phase *= d.phase();
        }
        LogDet { phase, ln_abs }
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) -> Result<(), LinalgError> {
        let n = self.lu.n;
        if b.len() != n {
            return Err(LinalgError::Dimension {
                expected: n,
                got: b.len(),
            });
        }
        let permuted: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&permuted);
        for i in 0..n {
            let row = self.lu.row(i);
            let mut s = b[i];
            for j in 0..i {
                s -= row[j] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = b[i];
            for j in i + 1..n {
                s -= row[j] * b[j];
            }
            b[i] = s / row[i];
        }
        Ok(())
    }

    /// Column `j` of `A^{-1}`.
    pub fn inverse_column(&self, j: usize) -> Vec<T> {
        let mut e = vec![T::zero(); self.lu.n];
        e[j] = T::one();
        self.solve_in_place(&mut e).expect("dimension checked");
        e
    }

    pub fn inverse(&self) -> DenseMatrix<T> {
        let n = self.lu.n;
        let mut inv = DenseMatrix::zeros(n);
        for j in 0..n {
            let col = self.inverse_column(j);
            for (i, v) in col.into_iter().enumerate() {
                inv.set(i, j, v);
            }
        }
        inv
    }
}

/// Determinant by LU; zero for singular input.
pub fn determinant(a: &DenseMatrix<f64>) -> f64 {
    match a.lu() {
        Ok(lu) => lu.log_det().value(),
        Err(LinalgError::Singular(_)) => 0.0,
        Err(e) => panic!("{e}"),
    }
}
