//! Exact local dimer statistics from inverse Kasteleyn matrices.
//!
//! In a single twisted sector the probability-like weight of a bond set
//! `{b_i = (black_i, white_i)}` is `prod K(b_i) det[K^{-1}(white_i, black_j)]`
//! times `det K`. Torus expectations combine the four sectors with the same
//! signs as the partition function.
//!
//! A sector whose matrix is singular has `det K = 0` but a finite limit for
//! `det K * det[K^{-1}]`. Its contribution is evaluated by twisting the
//! boundary angles by `eps` and `2 eps` and Richardson-extrapolating the real
//! part (which is even in `eps`), leaving an `O(eps^4)` error.

use super::kasteleyn::{fourier_angle, fourier_points, sector_angles, sector_signs, Factored};
use super::{KasteleynSystem, PfaffianError};
use crate::lattice::{DualPath, Step};
use crate::linalg::{DenseMatrix, Lu};
use crate::stats::{Channel, CorrelationSeries, PairAxis};
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::Arc;

const TWIST_EPS: f64 = 1e-4;
/// Direction of the twist in `(alpha, beta)`; irrational slope avoids
/// accidental zero modes.
const TWIST_SLOPE: f64 = 0.618_033_988_749_894_9;

/// Which covers are averaged over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    /// All covers of the torus.
    AllWindings,
    /// Only covers with the given `(w_x, w_y)`; the plaquette-flip chain
    /// started from the columnar cover samples `Winding(0, 0)`.
    Winding(i64, i64),
}

struct Term {
    angles: (f64, f64),
    /// Combination coefficient times `det K` relative to the common scale.
    weight: Complex64,
    columns: HashMap<usize, Vec<Complex64>>,
}

/// Joint occupation statistics of a fixed set of bonds.
pub struct BondStatistics<'a> {
    system: &'a KasteleynSystem,
    terms: Vec<Term>,
    norm: f64,
}

impl<'a> BondStatistics<'a> {
    /// Prepares inverse columns for every bond in `bonds`.
    pub fn new(system: &'a KasteleynSystem, ensemble: Ensemble, bonds: &[usize]) -> Result<Self, PfaffianError> {
        let mut blacks: Vec<usize> = bonds.iter().map(|&b| system.bond_position(b).0).collect();
        blacks.sort_unstable();
        blacks.dedup();
        // factors are reduced to the needed inverse columns as soon as they exist
        let reduce = |f: &Factored, c: Complex64| Term {
            angles: f.angles,
            weight: c * f.phase,
            columns: blacks
                .iter()
                .map(|&bl| (bl, f.inverse_column(bl).expect("non-singular factor")))
                .collect(),
        };
        let mut specs: Vec<(Term, f64)> = Vec::new();
        let mut norm_terms: Vec<(Complex64, f64)> = Vec::new();
        match ensemble {
            Ensemble::AllWindings => {
                let signs = sector_signs(system.lattice().side());
                for s in 0..4 {
                    let angles = sector_angles(s);
                    let f = system.factored(angles);
                    let c = Complex64::new(signs[s] / 2.0, 0.0);
                    if !f.is_singular() {
                        norm_terms.push((c * f.phase, f.ln_abs));
                        specs.push((reduce(&f, c), f.ln_abs));
                        continue;
                    }
                    for (mult, coef) in [(1.0, 4.0 / 3.0), (2.0, -1.0 / 3.0)] {
                        let e = mult * TWIST_EPS;
                        let tw = system.factored((angles.0 + e, angles.1 + e * TWIST_SLOPE));
                        if tw.is_singular() {
                            return Err(PfaffianError::Singular(format!("sector {s} stays singular when twisted")));
                        }
                        specs.push((reduce(&tw, c * coef), tw.ln_abs));
                    }
                }
            }
            Ensemble::Winding(wx, wy) => {
                let m = fourier_points(system.lattice().side(), (wx, wy));
                for ka in 0..m {
                    for kb in 0..m {
                        let angles = (fourier_angle(ka, m), fourier_angle(kb, m));
                        // not cached: a projection can need hundreds of factors
                        let f = Arc::new(system.factorise(angles));
                        if f.is_singular() {
                            return Err(PfaffianError::Singular(format!("twisted sector at {angles:?}")));
                        }
                        let c = Complex64::from_polar(1.0 / (m * m) as f64, -(angles.0 * wy as f64 + angles.1 * wx as f64));
                        norm_terms.push((c * f.phase, f.ln_abs));
                        specs.push((reduce(&f, c), f.ln_abs));
                    }
                }
            }
        }
        let top = specs
            .iter()
            .map(|(_, l)| *l)
            .chain(norm_terms.iter().map(|t| t.1))
            .fold(f64::NEG_INFINITY, f64::max);
        let norm: f64 = norm_terms.iter().map(|(p, l)| (p * (l - top).exp()).re).sum();
        if norm == 0.0 || !norm.is_finite() {
            return Err(PfaffianError::Singular("vanishing partition function in ensemble".into()));
        }
        let terms = specs
            .into_iter()
            .map(|(mut t, l)| {
                t.weight *= (l - top).exp();
                t
            })
            .collect();
        Ok(BondStatistics { system, terms, norm })
    }

    /// `< prod_{b in set} I_b >`; every bond must have been prepared.
    pub fn joint(&self, set: &[usize]) -> f64 {
        let pos: Vec<(usize, usize)> = set.iter().map(|&b| self.system.bond_position(b)).collect();
        let m = set.len();
        let mut total = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut kprod = Complex64::new(1.0, 0.0);
            for &b in set {
                kprod *= self.system.entry(b, t.angles);
            }
            let g = |i: usize, j: usize| -> Complex64 {
                let col = t.columns.get(&pos[j].0).expect("bond not prepared");
                col[pos[i].1]
            };
            let det = match m {
                0 => Complex64::new(1.0, 0.0),
                1 => g(0, 0),
                2 => g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0),
                _ => {
                    let mat = DenseMatrix::from_fn(m, g);
                    match Lu::factor(mat) {
                        Ok(lu) => lu.log_det().value(),
                        Err(_) => Complex64::new(0.0, 0.0),
                    }
                }
            };
            total += t.weight * kprod * det;
        }
        total.re / self.norm
    }

    pub fn mean(&self, b: usize) -> f64 {
        self.joint(&[b])
    }

    /// `<I_b I_b'> - <I_b><I_b'>`.
    pub fn truncated(&self, b: usize, b2: usize) -> f64 {
        let joint = if b == b2 { self.mean(b) } else { self.joint(&[b, b2]) };
        joint - self.mean(b) * self.mean(b2)
    }
}

/// `<I_b>` over all covers.
pub fn dimer_mean_exact(system: &KasteleynSystem, b: usize) -> Result<f64, PfaffianError> {
    Ok(BondStatistics::new(system, Ensemble::AllWindings, &[b])?.mean(b))
}

/// `<I_b I_b'>` over all covers.
pub fn dimer_correlation_exact(system: &KasteleynSystem, b: usize, b2: usize) -> Result<f64, PfaffianError> {
    if b == b2 {
        return Err(PfaffianError::RepeatedBond);
    }
    Ok(BondStatistics::new(system, Ensemble::AllWindings, &[b, b2])?.joint(&[b, b2]))
}

/// Mean and variance of `h(end) - h(start)` along `path`.
pub fn height_moments_exact(
    system: &KasteleynSystem,
    ensemble: Ensemble,
    path: &DualPath,
) -> Result<(f64, f64), PfaffianError> {
    let crossings = path.crossings(system.lattice());
    let bonds: Vec<usize> = crossings.iter().map(|c| c.0).collect();
    let stats = BondStatistics::new(system, ensemble, &bonds)?;
    let prefix = path_moments(&stats, &crossings);
    Ok(*prefix.last().unwrap_or(&(0.0, 0.0)))
}

/// Moments of the height difference after each prefix of the crossings.
fn path_moments(stats: &BondStatistics, crossings: &[(usize, i8)]) -> Vec<(f64, f64)> {
    let means: Vec<f64> = crossings.iter().map(|c| stats.mean(c.0)).collect();
    let mut out = Vec::with_capacity(crossings.len());
    let (mut mean, mut var) = (0.0, 0.0);
    for k in 0..crossings.len() {
        let (bk, sk) = (crossings[k].0, crossings[k].1 as f64);
        mean += (means[k] - 0.25) * sk;
        var += means[k] * (1.0 - means[k]);
        for j in 0..k {
            let (bj, sj) = (crossings[j].0, crossings[j].1 as f64);
            let joint = if bj == bk { means[k] } else { stats.joint(&[bj, bk]) };
            var += 2.0 * sj * sk * (joint - means[j] * means[k]);
        }
        out.push((mean, var));
    }
    out
}

fn check_separation(system: &KasteleynSystem, r: usize) -> Result<(), PfaffianError> {
    let l = system.lattice().side();
    if 2 * r >= l {
        return Err(PfaffianError::SeparationTooLarge { r, half: l / 2 });
    }
    if 4 * r > l {
        log::warn!("separation {r} exceeds L/4 = {}; torus effects are large", l / 4);
    }
    Ok(())
}

/// Variance of `h_eta - h_xi` for faces `r` apart, averaged over a horizontal
/// and a vertical straight path.
pub fn height_variance_exact(system: &KasteleynSystem, r: usize) -> Result<f64, PfaffianError> {
    check_separation(system, r)?;
    if r == 0 {
        return Ok(0.0);
    }
    let s = height_variance_series_exact(system, Ensemble::AllWindings, r)?;
    Ok(*s.mean.last().expect("non-empty"))
}

/// Height variance for `r = 1..=r_max` (observable `height_variance`).
pub fn height_variance_series_exact(
    system: &KasteleynSystem,
    ensemble: Ensemble,
    r_max: usize,
) -> Result<CorrelationSeries, PfaffianError> {
    check_separation(system, r_max)?;
    let l = system.lattice();
    let east = DualPath::straight(l, 0, 0, Step::East, r_max).crossings(l);
    let north = DualPath::straight(l, 0, 0, Step::North, r_max).crossings(l);
    let bonds: Vec<usize> = east.iter().chain(&north).map(|c| c.0).collect();
    let stats = BondStatistics::new(system, ensemble, &bonds)?;
    let me = path_moments(&stats, &east);
    let mn = path_moments(&stats, &north);
    let mut s = CorrelationSeries::new("height_variance", Channel::Full, l.side());
    for r in 1..=r_max {
        s.push(r, 0.5 * (me[r - 1].1 + mn[r - 1].1), 0.0, 0);
    }
    Ok(s)
}

/// Truncated `<I_b; I_b'>` for parallel bonds `r` apart, `r = 1..=r_max`,
/// averaged over both orientations and both sublattice positions of the
/// first bond. `Along` separates horizontal bonds along `x`; `Across`
/// separates them along `y`.
pub fn dimer_pair_series_exact(
    system: &KasteleynSystem,
    ensemble: Ensemble,
    r_max: usize,
    axis: PairAxis,
) -> Result<CorrelationSeries, PfaffianError> {
    check_separation(system, r_max)?;
    let l = system.lattice();
    let mut pairs = Vec::new();
    for r in 1..=r_max as i64 {
        let mut row = Vec::new();
        for base in 0..2i64 {
            match axis {
                PairAxis::Along => {
                    row.push((l.bond_at(base, 0, 0), l.bond_at(base + r, 0, 0)));
                    row.push((l.bond_at(0, base, 1), l.bond_at(0, base + r, 1)));
                }
                PairAxis::Across => {
                    row.push((l.bond_at(base, 0, 0), l.bond_at(base, r, 0)));
                    row.push((l.bond_at(0, base, 1), l.bond_at(r, base, 1)));
                }
            }
        }
        pairs.push(row);
    }
    let bonds: Vec<usize> = pairs.iter().flatten().flat_map(|&(a, b)| [a, b]).collect();
    let stats = BondStatistics::new(system, ensemble, &bonds)?;
    let mut s = CorrelationSeries::new("dimer", Channel::Full, l.side());
    for (i, row) in pairs.iter().enumerate() {
        let c = row.iter().map(|&(a, b)| stats.truncated(a, b)).sum::<f64>() / row.len() as f64;
        s.push(i + 1, c, 0.0, 0);
    }
    Ok(s)
}
