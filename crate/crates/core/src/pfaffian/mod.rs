//! Pfaffians, Kasteleyn matrices and exact dimer statistics on the torus.

mod correlations;
mod kasteleyn;

pub use correlations::{
    dimer_correlation_exact, dimer_mean_exact, dimer_pair_series_exact, height_moments_exact,
    height_variance_exact, height_variance_series_exact, BondStatistics, Ensemble,
};
pub use kasteleyn::{
    calibrate_sector_signs, dimer_partition, ln_dimer_partition, ln_winding_partition, sector_signs,
    KasteleynSystem, SECTOR_SIGNS,
};

use crate::lattice::LatticeError;
use crate::linalg::{DenseMatrix, LinalgError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PfaffianError {
    #[error("matrix is not skew-symmetric at ({0}, {1})")]
    NotSkew(usize, usize),
    #[error("weights must be positive and finite, got {0:?}")]
    InvalidWeights([f64; 4]),
    #[error("Kasteleyn orientation fails at face {0}")]
    FaceParity(usize),
    #[error("singular Kasteleyn matrix: {0}")]
    Singular(String),
    #[error("sector combination gives non-positive partition function")]
    SignCalibration,
    #[error("separation {r} needs r < L/2 = {half}")]
    SeparationTooLarge { r: usize, half: usize },
    #[error("bonds must be distinct")]
    RepeatedBond,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Dense real skew-symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    m: DenseMatrix<f64>,
}

impl SkewMatrix {
    /// Accepts `a` if `|a_ij + a_ji| <= 1e-14 max(1, max |a|)` and the
    /// diagonal is zero to the same tolerance.
    pub fn new(a: DenseMatrix<f64>) -> Result<Self, PfaffianError> {
        let n = a.dim();
        let scale = (0..n)
            .flat_map(|i| a.row(i).iter().copied())
            .fold(1.0f64, |m, x| m.max(x.abs()));
        let tol = 1e-14 * scale;
        for i in 0..n {
            for j in i..n {
                if (a.get(i, j) + a.get(j, i)).abs() > tol {
                    return Err(PfaffianError::NotSkew(i, j));
                }
            }
        }
        Ok(SkewMatrix { m: a })
    }

    /// Builds from the strict upper triangle, `upper(i, j)` for `i < j`.
    pub fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = upper(i, j);
                m.set(i, j, v);
                m.set(j, i, -v);
            }
        }
        SkewMatrix { m }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m.get(i, j)
    }

    pub fn as_dense(&self) -> &DenseMatrix<f64> {
        &self.m
    }
}

/// Pfaffian as `sign * exp(ln_abs)`; `sign` is 0 for a vanishing Pfaffian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPfaffian {
    pub sign: f64,
    pub ln_abs: f64,
}

impl LogPfaffian {
    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

/// Pfaffian by Parlett–Reid skew tridiagonalisation with partial pivoting.
/// Odd dimensions return zero.
pub fn pfaffian(a: &SkewMatrix) -> f64 {
    pfaffian_log(a).value()
}

pub fn pfaffian_log(a: &SkewMatrix) -> LogPfaffian {
    let n = a.dim();
    if n % 2 == 1 {
        log::warn!("Pfaffian of odd dimension {n} is zero by convention");
        return LogPfaffian {
            sign: 0.0,
            ln_abs: f64::NEG_INFINITY,
        };
    }
    let mut m: Vec<f64> = (0..n).flat_map(|i| a.m.row(i).to_vec()).collect();
    let idx = |i: usize, j: usize| i * n + j;
    let mut sign = 1.0;
    let mut ln_abs = 0.0;
    let mut tau = vec![0.0; n];
    for k in (0..n.saturating_sub(1)).step_by(2) {
        let mut p = k + 1;
        let mut best = m[idx(k + 1, k)].abs();
        for i in k + 2..n {
            let v = m[idx(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if p != k + 1 {
            // symmetric swap of rows and columns k+1 and p
            for j in 0..n {
                m.swap(idx(k + 1, j), idx(p, j));
            }
            for i in 0..n {
                m.swap(idx(i, k + 1), idx(i, p));
            }
            sign = -sign;
        }
        let pivot = m[idx(k, k + 1)];
        if pivot == 0.0 {
            return LogPfaffian {
                sign: 0.0,
                ln_abs: f64::NEG_INFINITY,
            };
        }
        sign *= pivot.signum();
        ln_abs += pivot.abs().ln();
        if k + 2 < n {
            for j in k + 2..n {
                tau[j] = m[idx(k, j)] / pivot;
            }
            for i in k + 2..n {
                let ci = m[idx(i, k + 1)];
                let ti = tau[i];
                for j in k + 2..n {
                    m[idx(i, j)] += ti * m[idx(j, k + 1)] - ci * tau[j];
                }
            }
        }
    }
    LogPfaffian { sign, ln_abs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::determinant;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_skew(n: usize, rng: &mut ChaCha8Rng) -> SkewMatrix {
        SkewMatrix::from_upper(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn two_by_two() {
        let a = SkewMatrix::from_upper(2, |_, _| 3.5);
        assert_eq!(pfaffian(&a), 3.5);
    }

    #[test]
    fn four_by_four_closed_form() {
        let v = [[0.0, 1.3, -0.7, 2.1], [0.0, 0.0, 0.4, -1.9], [0.0, 0.0, 0.0, 0.8]];
        let a = SkewMatrix::from_upper(4, |i, j| v[i][j]);
        let want = v[0][1] * v[2][3] - v[0][2] * v[1][3] + v[0][3] * v[1][2];
        assert!((pfaffian(&a) - want).abs() < 1e-14);
    }

    #[test]
    fn odd_dimension_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(pfaffian(&random_skew(5, &mut rng)), 0.0);
    }

    #[test]
    fn rejects_non_skew() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(SkewMatrix::new(m), Err(PfaffianError::NotSkew(0, 1)));
    }

    #[test]
    fn square_is_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 4, 6, 8, 16, 32] {
            let a = random_skew(n, &mut rng);
            let pf = pfaffian(&a);
            let det = determinant(a.as_dense());
            assert!((pf * pf - det).abs() <= 1e-8 * det.abs(), "n={n}");
        }
    }

    #[test]
    fn zero_pivot_column() {
        // first row vanishes, so the Pfaffian does too
        let a = SkewMatrix::from_upper(4, |i, j| if i == 0 { 0.0 } else { (i + j) as f64 });
        assert_eq!(pfaffian(&a), 0.0);
    }

    proptest! {
        #[test]
        fn congruence_scales_by_determinant(seed in 0u64..1000, half in 1usize..5) {
            let n = 2 * half;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_skew(n, &mut rng);
            let b = DenseMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let bab = b.transpose().matmul(a.as_dense()).matmul(&b);
            // restore exact skew symmetry lost to rounding
            let c = SkewMatrix::from_upper(n, |i, j| 0.5 * (bab.get(i, j) - bab.get(j, i)));
            let lhs = pfaffian(&c);
            let rhs = determinant(&b) * pfaffian(&a);
            prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1e-3));
        }
    }
}
