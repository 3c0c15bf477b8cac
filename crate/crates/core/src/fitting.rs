//! Exponent extraction by weighted least squares and Binder-crossing location.
//!
//! Fits are linear in transformed variables (`ln C` against `ln r` or `r`,
//! variance against `ln r`), except the two-channel fit, which profiles one
//! exponent over a linear inner problem. Errors come from the normal equations and
//! are inflated by `sqrt(chi2/dof)` when that exceeds one. Series whose
//! `stderr` column is all zero (exact data) are fitted unweighted, with
//! errors from the residual scatter.

use crate::stats::{CorrelationSeries, Measured};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {need} points in the fit window, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("window [{0}, {1}] is degenerate")]
    DegenerateWindow(usize, usize),
    #[error("value at r = {0} is not resolved from zero or changes sign")]
    NonPositive(usize),
    #[error("no exponential regime: {0}")]
    NoExponentialRegime(String),
    #[error("no Binder crossing inside the beta grid")]
    NoCrossing,
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Least-squares fit `y = sum_k c_k f_k(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coef: Vec<f64>,
    pub stderr: Vec<f64>,
    pub chi2: f64,
    pub dof: usize,
}

impl LinearFit {
    pub fn reduced_chi2(&self) -> f64 {
        if self.dof == 0 {
            0.0
        } else {
            self.chi2 / self.dof as f64
        }
    }
}

/// Solves the weighted normal equations for design rows `basis`. `sigma`
/// entries of zero switch to an unweighted fit with scatter-based errors.
pub fn least_squares(basis: &[Vec<f64>], y: &[f64], sigma: &[f64]) -> Result<LinearFit, FitError> {
    let n = y.len();
    let k = basis.first().map_or(0, |b| b.len());
    if n < k + 1 {
        return Err(FitError::TooFewPoints { need: k + 1, got: n });
    }
    let weighted = sigma.iter().all(|&s| s > 0.0);
    let w: Vec<f64> = if weighted {
        sigma.iter().map(|s| 1.0 / (s * s)).collect()
    } else {
        vec![1.0; n]
    };
    let mut ata = vec![vec![0.0; k]; k];
    let mut aty = vec![0.0; k];
    for i in 0..n {
        for a in 0..k {
            aty[a] += w[i] * basis[i][a] * y[i];
            for b in 0..k {
                ata[a][b] += w[i] * basis[i][a] * basis[i][b];
            }
        }
    }
    let inv = invert_small(&ata).ok_or(FitError::Invalid("singular design matrix".into()))?;
    let coef: Vec<f64> = (0..k).map(|a| (0..k).map(|b| inv[a][b] * aty[b]).sum()).collect();
    let chi2: f64 = (0..n)
        .map(|i| {
            let fit: f64 = (0..k).map(|a| coef[a] * basis[i][a]).sum();
            w[i] * (y[i] - fit).powi(2)
        })
        .sum();
    let dof = n - k;
    let scale = if weighted {
        (chi2 / dof as f64).max(1.0)
    } else {
        chi2 / dof as f64
    };
    let stderr = (0..k).map(|a| (inv[a][a] * scale).max(0.0).sqrt()).collect();
    Ok(LinearFit { coef, stderr, chi2, dof })
}

fn invert_small(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for i in 0..n {
            if i != c {
                let f = a[i][c];
                if f != 0.0 {
                    for j in 0..2 * n {
                        a[i][j] -= f * a[c][j];
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Outcome of an exponent or length fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Decay exponent, `A`, `xi` or `nu` depending on the fit.
    pub value: f64,
    pub stderr: f64,
    pub prefactor: f64,
    pub prefactor_stderr: f64,
    pub reduced_chi2: f64,
    pub window: (usize, usize),
    pub points: usize,
}

impl FitResult {
    pub fn measured(&self) -> Measured {
        Measured::new(self.value, self.stderr)
    }
}

/// Default window `[L/8, L/4]`, at least `[1, 2]`.
pub fn default_window(side: usize) -> (usize, usize) {
    ((side / 8).max(1), (side / 4).max(2))
}

fn windowed(series: &CorrelationSeries, window: Option<(usize, usize)>, need: usize) -> Result<CorrelationSeries, FitError> {
    let (lo, hi) = window.unwrap_or_else(|| default_window(series.side));
    if lo >= hi {
        return Err(FitError::DegenerateWindow(lo, hi));
    }
    let w = series.window(lo.max(1), hi);
    if w.len() < need {
        return Err(FitError::TooFewPoints { need, got: w.len() });
    }
    Ok(w)
}

/// `|C| / C` for a series of one sign, resolved from zero.
fn common_sign(w: &CorrelationSeries) -> Result<f64, FitError> {
    let sign = w.mean[0].signum();
    for i in 0..w.len() {
        if w.mean[i] * sign <= 0.0 || w.mean[i].abs() <= w.stderr[i] {
            return Err(FitError::NonPositive(w.r[i]));
        }
    }
    Ok(sign)
}

/// Regressors besides `ln r` in the power-law fit of `ln |C|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PowerModel {
    /// `ln |C| = ln B - x ln r`.
    #[default]
    Pure,
    /// Adds `d (r/L)^2` and `e (-1)^r`: the leading image correction on the
    /// torus and the sublattice alternation of lattice correlations.
    TorusCorrected,
}

/// Fits `|C(r)| = B r^{-x}` on the window; `value` is `x`.
pub fn fit_power_law(series: &CorrelationSeries, window: Option<(usize, usize)>) -> Result<FitResult, FitError> {
    fit_power_law_with(series, window, PowerModel::Pure)
}

/// [`fit_power_law`] with a choice of correction terms.
pub fn fit_power_law_with(
    series: &CorrelationSeries,
    window: Option<(usize, usize)>,
    model: PowerModel,
) -> Result<FitResult, FitError> {
    let need = match model {
        PowerModel::Pure => 4,
        PowerModel::TorusCorrected => 6,
    };
    let w = windowed(series, window, need)?;
    let sign = common_sign(&w)?;
    let side = series.side as f64;
    let basis: Vec<Vec<f64>> = w
        .r
        .iter()
        .map(|&r| {
            let x = r as f64;
            match model {
                PowerModel::Pure => vec![1.0, x.ln()],
                PowerModel::TorusCorrected => {
                    vec![1.0, x.ln(), (x / side).powi(2), if r % 2 == 0 { 1.0 } else { -1.0 }]
                }
            }
        })
        .collect();
    let y: Vec<f64> = w.mean.iter().map(|&c| (c * sign).ln()).collect();
    let sig: Vec<f64> = w.stderr.iter().zip(&w.mean).map(|(s, c)| s / c.abs()).collect();
    let f = least_squares(&basis, &y, &sig)?;
    let pref = f.coef[0].exp();
    Ok(FitResult {
        value: -f.coef[1],
        stderr: f.stderr[1],
        prefactor: sign * pref,
        prefactor_stderr: pref * f.stderr[0],
        reduced_chi2: f.reduced_chi2(),
        window: (w.r[0], *w.r.last().expect("non-empty")),
        points: w.len(),
    })
}

/// Joint fit of a plain power law and a staggered term of known exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoChannelFit {
    /// Plain exponent `x` with prefactor `P`.
    pub plain: FitResult,
    /// Amplitude `S` of the staggered term.
    pub staggered: Measured,
}

const EXPONENT_RANGE: (f64, f64) = (0.05, 8.0);

/// Fits `C(r) = P r^{-x} + S (-1)^r r^{-s}` with `s` fixed. The exponent is
/// located by scanning the profile `chi2(x)` (`P`, `S` solved linearly at
/// each `x`) and refined by golden section; errors come from one linearised
/// Gauss-Newton step at the optimum.
pub fn fit_two_channel(
    series: &CorrelationSeries,
    window: Option<(usize, usize)>,
    staggered_exponent: f64,
) -> Result<TwoChannelFit, FitError> {
    let w = windowed(series, window, 5)?;
    let r: Vec<f64> = w.r.iter().map(|&r| r as f64).collect();
    let alt: Vec<f64> = w
        .r
        .iter()
        .zip(&r)
        .map(|(&k, x)| if k % 2 == 0 { 1.0 } else { -1.0 } * x.powf(-staggered_exponent))
        .collect();
    let rows = |x: f64| -> Vec<Vec<f64>> { r.iter().zip(&alt).map(|(ri, a)| vec![ri.powf(-x), *a]).collect() };
    let profile = |x: f64| least_squares(&rows(x), &w.mean, &w.stderr).map_or(f64::INFINITY, |f| f.chi2);
    let (lo, hi) = EXPONENT_RANGE;
    let steps = 160;
    let h = (hi - lo) / steps as f64;
    let best = (0..=steps)
        .map(|i| lo + h * i as f64)
        .min_by(|a, b| profile(*a).total_cmp(&profile(*b)))
        .expect("non-empty grid");
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-10 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if profile(c) < profile(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    if x <= lo + h || x >= hi - h {
        return Err(FitError::Invalid(format!("exponent {x:.3} at the edge of the search range")));
    }
    let lin = least_squares(&rows(x), &w.mean, &w.stderr)?;
    let p = lin.coef[0];
    let basis: Vec<Vec<f64>> = rows(x)
        .into_iter()
        .zip(&r)
        .map(|(mut row, ri)| {
            row.push(-p * ri.powf(-x) * ri.ln());
            row
        })
        .collect();
    let gn = least_squares(&basis, &w.mean, &w.stderr)?;
    Ok(TwoChannelFit {
        plain: FitResult {
            value: x,
            stderr: gn.stderr[2],
            prefactor: p,
            prefactor_stderr: gn.stderr[0],
            reduced_chi2: gn.reduced_chi2(),
            window: (w.r[0], *w.r.last().expect("non-empty")),
            points: w.len(),
        },
        staggered: Measured::new(lin.coef[1], gn.stderr[1]),
    })
}

/// Regressors besides `ln r` in the height-variance fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceModel {
    /// `V = (A / pi^2) ln r + c`.
    Logarithmic,
    /// Adds `d (r/L)^2` and `e (-1)^r`. On the torus both the finite-volume
    /// propagator and winding fluctuations shift `V` at order `(r/L)^2`, and
    /// straight dual paths alternate between crossing the two sublattices.
    TorusCorrected,
}

/// Fits the height variance against `ln r`; `value` is `A = pi^2 * slope`,
/// `prefactor` the constant.
pub fn fit_log_variance(
    series: &CorrelationSeries,
    window: Option<(usize, usize)>,
    model: VarianceModel,
) -> Result<FitResult, FitError> {
    let w = windowed(series, window, 4)?;
    let side = series.side as f64;
    let basis: Vec<Vec<f64>> = w
        .r
        .iter()
        .map(|&r| {
            let x = r as f64;
            match model {
                VarianceModel::Logarithmic => vec![1.0, x.ln()],
                VarianceModel::TorusCorrected => {
                    vec![1.0, x.ln(), (x / side).powi(2), if r % 2 == 0 { 1.0 } else { -1.0 }]
                }
            }
        })
        .collect();
    let f = least_squares(&basis, &w.mean, &w.stderr)?;
    Ok(FitResult {
        value: PI * PI * f.coef[1],
        stderr: PI * PI * f.stderr[1],
        prefactor: f.coef[0],
        prefactor_stderr: f.stderr[0],
        reduced_chi2: f.reduced_chi2(),
        window: (w.r[0], *w.r.last().expect("non-empty")),
        points: w.len(),
    })
}

/// Form of the prefactor in front of `e^{-r/xi}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayModel {
    Pure,
    /// `r^{-kappa} e^{-r/xi}` with `kappa` fitted.
    PowerCorrected,
}

/// Reduced chi-square above which the exponential model is rejected.
pub const CHI2_GATE: f64 = 4.0;

/// Fits `ln |C(r)| = a - r / xi [- kappa ln r]`; `value` is `xi`.
///
/// The fit is rejected when the decay rate is not resolved from zero at two
/// standard errors, or, for data with errors, when the reduced chi-square
/// exceeds [`CHI2_GATE`].
pub fn fit_correlation_length(
    series: &CorrelationSeries,
    window: Option<(usize, usize)>,
    model: DecayModel,
) -> Result<FitResult, FitError> {
    let need = match model {
        DecayModel::Pure => 4,
        DecayModel::PowerCorrected => 5,
    };
    let (lo, hi) = window.unwrap_or((1, series.side / 2));
    let w = windowed(series, Some((lo, hi)), need)?;
    let sign = common_sign(&w)?;
    let basis: Vec<Vec<f64>> = w
        .r
        .iter()
        .map(|&r| match model {
            DecayModel::Pure => vec![1.0, r as f64],
            DecayModel::PowerCorrected => vec![1.0, r as f64, (r as f64).ln()],
        })
        .collect();
    let y: Vec<f64> = w.mean.iter().map(|&c| (c * sign).ln()).collect();
    let sig: Vec<f64> = w.stderr.iter().zip(&w.mean).map(|(s, c)| s / c.abs()).collect();
    let f = least_squares(&basis, &y, &sig)?;
    let rate = -f.coef[1];
    if rate <= 2.0 * f.stderr[1] {
        return Err(FitError::NoExponentialRegime(format!(
            "decay rate {rate:.3e} +- {:.1e} not resolved",
            f.stderr[1]
        )));
    }
    let weighted = sig.iter().all(|&s| s > 0.0);
    if weighted && f.reduced_chi2() > CHI2_GATE {
        return Err(FitError::NoExponentialRegime(format!(
            "reduced chi-square {:.2}",
            f.reduced_chi2()
        )));
    }
    let xi = 1.0 / rate;
    Ok(FitResult {
        value: xi,
        stderr: f.stderr[1] * xi * xi,
        prefactor: sign * f.coef[0].exp(),
        prefactor_stderr: f.coef[0].exp() * f.stderr[0],
        reduced_chi2: f.reduced_chi2(),
        window: (w.r[0], *w.r.last().expect("non-empty")),
        points: w.len(),
    })
}

/// `nu` from `xi(t) ~ t^{-nu}` given `(t, xi)` pairs.
pub fn fit_nu(points: &[(f64, Measured)]) -> Result<FitResult, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints { need: 3, got: points.len() });
    }
    if points.iter().any(|(t, xi)| !(*t > 0.0) || !(xi.mean > 0.0)) {
        return Err(FitError::Invalid("t and xi must be positive".into()));
    }
    let basis: Vec<Vec<f64>> = points.iter().map(|(t, _)| vec![1.0, t.ln()]).collect();
    let y: Vec<f64> = points.iter().map(|(_, xi)| xi.mean.ln()).collect();
    let sig: Vec<f64> = points.iter().map(|(_, xi)| xi.stderr / xi.mean).collect();
    let f = least_squares(&basis, &y, &sig)?;
    Ok(FitResult {
        value: -f.coef[1],
        stderr: f.stderr[1],
        prefactor: f.coef[0].exp(),
        prefactor_stderr: f.coef[0].exp() * f.stderr[0],
        reduced_chi2: f.reduced_chi2(),
        window: (0, 0),
        points: points.len(),
    })
}

/// `U = 1 - <m^4> / (3 <m^2>^2)`.
pub fn binder_cumulant(m2: f64, m4: f64) -> f64 {
    1.0 - m4 / (3.0 * m2 * m2)
}

/// Binder cumulant of one lattice size on a beta grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinderCurve {
    pub side: usize,
    pub beta: Vec<f64>,
    pub u: Vec<Measured>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    pub beta_c: f64,
    pub stderr: f64,
    /// `(L1, L2, crossing)` for each consecutive pair of sizes.
    pub crossings: Vec<(usize, usize, f64)>,
}

/// Locates the crossing of Binder curves of consecutive sizes by linear
/// interpolation of their difference between grid points, and averages the
/// crossings. The error combines the propagated statistical error of each
/// crossing with the spread between pairs.
pub fn locate_critical_beta(curves: &[BinderCurve]) -> Result<CriticalEstimate, FitError> {
    if curves.len() < 3 {
        return Err(FitError::TooFewPoints { need: 3, got: curves.len() });
    }
    let grid = &curves[0].beta;
    if grid.len() < 5 {
        return Err(FitError::TooFewPoints { need: 5, got: grid.len() });
    }
    if curves.iter().any(|c| c.beta != *grid || c.u.len() != grid.len()) {
        return Err(FitError::Invalid("curves must share the beta grid".into()));
    }
    let mut sorted: Vec<&BinderCurve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.side);
    let mut crossings = Vec::new();
    let mut errs = Vec::new();
    for pair in sorted.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let d: Vec<f64> = (0..grid.len()).map(|i| b.u[i].mean - a.u[i].mean).collect();
        let mut found = None;
        for i in 0..grid.len() - 1 {
            if d[i] == 0.0 {
                found = Some((grid[i], i, i));
                break;
            }
            if d[i] * d[i + 1] < 0.0 {
                let x = grid[i] + (grid[i + 1] - grid[i]) * d[i] / (d[i] - d[i + 1]);
                found = Some((x, i, i + 1));
                break;
            }
        }
        let (x, i, j) = found.ok_or(FitError::NoCrossing)?;
        let slope = if i == j {
            let k = (i + 1).min(grid.len() - 1);
            let k0 = if k == i { i - 1 } else { i };
            (d[k] - d[k0]) / (grid[k] - grid[k0])
        } else {
            (d[j] - d[i]) / (grid[j] - grid[i])
        };
        let sd = |k: usize| (a.u[k].stderr.powi(2) + b.u[k].stderr.powi(2)).sqrt();
        let err = 0.5 * (sd(i) + sd(j)) / slope.abs();
        crossings.push((a.side, b.side, x));
        errs.push(err);
    }
    let n = crossings.len() as f64;
    let mean = crossings.iter().map(|c| c.2).sum::<f64>() / n;
    let stat = (errs.iter().map(|e| e * e).sum::<f64>()).sqrt() / n;
    let spread = if crossings.len() > 1 {
        (crossings.iter().map(|c| (c.2 - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(CriticalEstimate {
        beta_c: mean,
        stderr: (stat * stat + spread * spread).sqrt(),
        crossings,
    })
}

/// Runs `runner(L, beta)` over the grid and locates the crossing. The runner
/// returns the Binder cumulant with its error.
pub fn locate_critical_beta_with<F, E>(
    mut runner: F,
    sides: &[usize],
    betas: &[f64],
) -> Result<Result<CriticalEstimate, FitError>, E>
where
    F: FnMut(usize, f64) -> Result<Measured, E>,
{
    let mut curves = Vec::new();
    for &l in sides {
        let mut u = Vec::with_capacity(betas.len());
        for &b in betas {
            u.push(runner(l, b)?);
        }
        curves.push(BinderCurve {
            side: l,
            beta: betas.to_vec(),
            u,
        });
    }
    Ok(locate_critical_beta(&curves))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Channel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn series(f: impl Fn(f64) -> f64, rs: std::ops::RangeInclusive<usize>, side: usize) -> CorrelationSeries {
        let mut s = CorrelationSeries::new("synthetic", Channel::Full, side);
        for r in rs {
            s.push(r, f(r as f64), 0.0, 0);
        }
        s
    }

    #[test]
    fn exact_power_law() {
        let s = series(|r| 3.0 * r.powi(-2), 1..=32, 64);
        let f = fit_power_law(&s, None).unwrap();
        assert!((f.value - 2.0).abs() < 1e-12);
        assert!(f.stderr < 1e-10);
        assert!((f.prefactor - 3.0).abs() < 1e-10);
        assert_eq!(f.window, (8, 16));
    }

    #[test]
    fn negative_series_fits_magnitude() {
        let s = series(|r| -0.5 * r.powf(-0.75), 1..=32, 64);
        let f = fit_power_law(&s, None).unwrap();
        assert!((f.value - 0.75).abs() < 1e-12);
        assert!((f.prefactor + 0.5).abs() < 1e-10);
    }

    #[test]
    fn sign_change_rejected() {
        let s = series(|r| (r - 10.5).signum() / r, 1..=32, 64);
        assert_eq!(fit_power_law(&s, None), Err(FitError::NonPositive(11)));
    }

    #[test]
    fn too_few_points() {
        let s = series(|r| 1.0 / r, 1..=3, 64);
        assert!(matches!(fit_power_law(&s, Some((1, 3))), Err(FitError::TooFewPoints { .. })));
        assert!(matches!(fit_power_law(&s, Some((3, 3))), Err(FitError::DegenerateWindow(3, 3))));
    }

    #[test]
    fn torus_power_terms_are_absorbed() {
        let s = series(
            |r| 0.2 * r.powf(-1.7) * (0.3 * (r / 64.0).powi(2) + 0.02 * (-1f64).powi(r as i32)).exp(),
            1..=32,
            64,
        );
        let f = fit_power_law_with(&s, None, PowerModel::TorusCorrected).unwrap();
        assert!((f.value - 1.7).abs() < 1e-9);
        assert!((fit_power_law(&s, None).unwrap().value - 1.7).abs() > 1e-3);
    }

    #[test]
    fn two_channel_exact() {
        // plain and staggered parts of equal size, as in free dimers
        let s = series(|r| 0.06 * r.powf(-1.8) - 0.05 * (-1f64).powi(r as i32) * r.powi(-2), 1..=16, 32);
        let f = fit_two_channel(&s, Some((2, 14)), 2.0).unwrap();
        assert!((f.plain.value - 1.8).abs() < 1e-8, "{f:?}");
        assert!((f.plain.prefactor - 0.06).abs() < 1e-9);
        assert!((f.staggered.mean + 0.05).abs() < 1e-9);
        assert!(f.plain.stderr < 1e-8);
    }

    #[test]
    fn two_channel_noisy_coverage() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut hits = 0;
        let trials = 200;
        for _ in 0..trials {
            let mut s = CorrelationSeries::new("synthetic", Channel::Full, 32);
            for r in 2..=14 {
                let x = r as f64;
                let c = 0.07 * x.powf(-2.2) + 0.05 * (-1f64).powi(r as i32) * x.powi(-2);
                let e = 0.03 * c.abs() + 1e-6;
                s.push(r, c + Normal::new(0.0, e).unwrap().sample(&mut rng), e, 100);
            }
            let f = fit_two_channel(&s, Some((2, 14)), 2.0).unwrap();
            if (f.plain.value - 2.2).abs() <= f.plain.stderr {
                hits += 1;
            }
        }
        let cover = hits as f64 / trials as f64;
        assert!((0.6..0.78).contains(&cover), "coverage {cover}");
    }

    #[test]
    fn log_variance_exact() {
        let s = series(|r| r.ln() / (PI * PI) + 0.3, 1..=32, 64);
        for model in [VarianceModel::Logarithmic, VarianceModel::TorusCorrected] {
            let f = fit_log_variance(&s, None, model).unwrap();
            assert!((f.value - 1.0).abs() < 1e-10);
            assert!((f.prefactor - 0.3).abs() < 1e-10);
        }
    }

    #[test]
    fn torus_terms_are_absorbed() {
        let s = series(
            |r| 1.2 * r.ln() / (PI * PI) + 0.1 - 0.4 * (r / 64.0).powi(2) + 0.01 * (-1f64).powi(r as i32),
            1..=32,
            64,
        );
        let f = fit_log_variance(&s, None, VarianceModel::TorusCorrected).unwrap();
        assert!((f.value - 1.2).abs() < 1e-9);
        let plain = fit_log_variance(&s, None, VarianceModel::Logarithmic).unwrap();
        assert!((plain.value - 1.2).abs() > 0.01);
    }

    #[test]
    fn pure_exponential() {
        let s = series(|r| 2.0 * (-r / 5.0).exp(), 1..=32, 64);
        let f = fit_correlation_length(&s, None, DecayModel::Pure).unwrap();
        assert!((f.value - 5.0).abs() < 1e-10);
    }

    #[test]
    fn exponential_with_power_prefactor() {
        let s = series(|r| (-r / 3.0).exp() / r, 1..=30, 60);
        let f = fit_correlation_length(&s, Some((9, 30)), DecayModel::PowerCorrected).unwrap();
        assert!((f.value / 3.0 - 1.0).abs() < 0.1);
    }

    #[test]
    fn power_law_is_not_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut s = CorrelationSeries::new("synthetic", Channel::Full, 256);
        for r in 1..=128usize {
            let c = (r as f64).powi(-2);
            s.push(r, c * (1.0 + noise.sample(&mut rng)), 0.01 * c, 100);
        }
        assert!(fit_correlation_length(&s, Some((2, 128)), DecayModel::Pure).is_err());
        assert!(fit_power_law(&s, Some((2, 128))).is_ok());
    }

    #[test]
    fn nu_from_synthetic_xi() {
        let pts: Vec<(f64, Measured)> = [0.02, 0.04, 0.08, 0.16]
            .iter()
            .map(|&t| (t, Measured::new(0.5 / t, 0.0)))
            .collect();
        let f = fit_nu(&pts).unwrap();
        assert!((f.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn noisy_power_law_coverage() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut hits = 0;
        for _ in 0..100 {
            let mut s = CorrelationSeries::new("synthetic", Channel::Full, 64);
            for r in 1..=32usize {
                let c = (r as f64).powf(-0.5);
                s.push(r, c * (1.0 + 0.01 * noise.sample(&mut rng)), 0.01 * c, 100);
            }
            let f = fit_power_law(&s, None).unwrap();
            if (f.value - 0.5).abs() <= f.stderr {
                hits += 1;
            }
        }
        assert!((60..=95).contains(&hits), "coverage {hits}");
    }

    #[test]
    fn binder_crossing_of_linear_curves() {
        // U_L(beta) = 0.6 + (beta - 0.44) L / 10 crosses at 0.44 for every pair
        let betas: Vec<f64> = (0..7).map(|i| 0.41 + 0.01 * i as f64).collect();
        let curves: Vec<BinderCurve> = [8usize, 16, 32]
            .iter()
            .map(|&l| BinderCurve {
                side: l,
                beta: betas.clone(),
                u: betas
                    .iter()
                    .map(|b| Measured::new(0.6 + (b - 0.44) * l as f64 / 10.0, 0.001))
                    .collect(),
            })
            .collect();
        let est = locate_critical_beta(&curves).unwrap();
        assert!((est.beta_c - 0.44).abs() < 1e-12);
        assert_eq!(est.crossings.len(), 2);
        assert!(est.stderr > 0.0);
    }

    #[test]
    fn no_crossing_reported() {
        let betas: Vec<f64> = (0..5).map(|i| 0.3 + 0.01 * i as f64).collect();
        let curves: Vec<BinderCurve> = [8usize, 16, 32]
            .iter()
            .map(|&l| BinderCurve {
                side: l,
                beta: betas.clone(),
                u: betas.iter().map(|_| Measured::new(l as f64, 0.01)).collect(),
            })
            .collect();
        assert_eq!(locate_critical_beta(&curves), Err(FitError::NoCrossing));
    }

    #[test]
    fn binder_values() {
        // Gaussian m: <m^4> = 3 <m^2>^2
        assert_eq!(binder_cumulant(2.0, 12.0), 0.0);
        // ordered: m = +-1
        assert!((binder_cumulant(1.0, 1.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rescaling_leaves_exponents() {
        let a = fit_power_law(&series(|r| r.powf(-1.3), 1..=32, 64), None).unwrap();
        let b = fit_power_law(&series(|r| 7.0 * r.powf(-1.3), 1..=32, 64), None).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
        assert!((b.prefactor / a.prefactor - 7.0).abs() < 1e-10);
    }
}
