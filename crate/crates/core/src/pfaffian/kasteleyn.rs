//! Kasteleyn matrices of the square torus and the dimer partition function.
//!
//! The lattice is bipartite, so the skew Kasteleyn matrix is
//! `[[0, K], [-K^T, 0]]` with `K` indexed black by white, and its Pfaffian is
//! `det K` up to a dimension-dependent sign shared by all sectors. Entries are
//! `t_b` on horizontal bonds and `(-1)^x t_b` on vertical bonds at column `x`,
//! which puts an odd number of clockwise-oriented edges around every face.
//!
//! Boundary phases: a horizontal bond across the seam `x = L-1 -> 0` gets
//! `e^{+i alpha}` when its black end is at `x = L-1` and `e^{-i alpha}`
//! otherwise; a vertical bond across `y = L-1 -> 0` gets `e^{+i beta}` when its
//! lower end is white. A cover then picks up `e^{i (alpha w_y + beta w_x)}`,
//! where `(w_x, w_y)` = [`DimerCover::winding`]. The four sectors are
//! `alpha, beta in {0, pi}`, indexed `2 * (alpha = pi) + (beta = pi)`.

use super::PfaffianError;
use crate::lattice::{enumerate_dimer_covers, Color, DimerCover, TorusLattice};
use crate::linalg::{DenseMatrix, Lu, Scalar};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

/// Sector signs combining the four determinants into the partition function,
/// `Z = |sum_s signs[s] det K_s| / 2`, indexed by `L mod 4` (`[0]` for
/// `L = 0 mod 4`, `[1]` for `L = 2 mod 4`). Obtained by
/// [`calibrate_sector_signs`] on the 4x4 and 6x6 tori and frozen.
pub const SECTOR_SIGNS: [[f64; 4]; 2] = [[-1.0, 1.0, 1.0, 1.0], [1.0, 1.0, 1.0, -1.0]];

/// Frozen sign pattern for side `l`.
pub fn sector_signs(l: usize) -> [f64; 4] {
    SECTOR_SIGNS[(l / 2) % 2]
}

/// Pivot ratio below which a factorisation is treated as singular.
pub(crate) const SINGULAR_PIVOT_RATIO: f64 = 1e-11;

pub(crate) fn sector_angles(s: usize) -> (f64, f64) {
    (
        if s & 2 != 0 { PI } else { 0.0 },
        if s & 1 != 0 { PI } else { 0.0 },
    )
}

pub(crate) enum Factor {
    Real(Lu<f64>),
    Complex(Lu<Complex64>),
}

/// Factorised `K(alpha, beta)`.
pub(crate) struct Factored {
    pub angles: (f64, f64),
    /// `None` for a (numerically) singular matrix.
    pub factor: Option<Factor>,
    /// `det K = phase * exp(ln_abs)`; `ln_abs = -inf` when singular.
    pub phase: Complex64,
    pub ln_abs: f64,
}

impl Factored {
    pub fn is_singular(&self) -> bool {
        self.factor.is_none()
    }

    /// Column `b` of `K^{-1}` (indexed by white vertices).
    pub fn inverse_column(&self, b: usize) -> Option<Vec<Complex64>> {
        match self.factor.as_ref()? {
            Factor::Real(lu) => Some(lu.inverse_column(b).into_iter().map(|x| x.to_c64()).collect()),
            Factor::Complex(lu) => Some(lu.inverse_column(b)),
        }
    }
}

/// Kasteleyn data for one torus and one set of bond weights.
pub struct KasteleynSystem {
    lattice: TorusLattice,
    weights: [f64; 4],
    black: Vec<usize>,
    /// Position of each vertex within its colour class.
    index: Vec<usize>,
    cache: Mutex<Vec<Arc<Factored>>>,
}

impl std::fmt::Debug for KasteleynSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KasteleynSystem")
            .field("side", &self.lattice.side())
            .field("weights", &self.weights)
            .finish()
    }
}

fn is_real_angle(a: f64) -> bool {
    a == 0.0 || a == PI
}

impl KasteleynSystem {
    /// Weights are indexed by [`WeightClass`](crate::lattice::WeightClass):
    /// `t1` right, `t2` above, `t3` left, `t4` below, seen from the black end.
    pub fn build(lattice: &TorusLattice, weights: [f64; 4]) -> Result<Self, PfaffianError> {
        if weights.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(PfaffianError::InvalidWeights(weights));
        }
        let n = lattice.num_vertices();
        let mut black = Vec::with_capacity(n / 2);
        let mut white = 0;
        let mut index = vec![0; n];
        for v in 0..n {
            match lattice.color(v) {
                Color::Black => {
                    index[v] = black.len();
                    black.push(v);
                }
                Color::White => {
                    index[v] = white;
                    white += 1;
                }
            }
        }
        let sys = KasteleynSystem {
            lattice: *lattice,
            weights,
            black,
            index,
            cache: Mutex::new(Vec::new()),
        };
        for s in 0..4 {
            sys.check_face_parity(sector_angles(s))?;
        }
        Ok(sys)
    }

    pub fn uniform(lattice: &TorusLattice) -> Result<Self, PfaffianError> {
        Self::build(lattice, [1.0; 4])
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.lattice
    }

    pub fn weights(&self) -> [f64; 4] {
        self.weights
    }

    pub fn dim(&self) -> usize {
        self.black.len()
    }

    /// `(row, column)` of bond `b` in `K`.
    pub fn bond_position(&self, b: usize) -> (usize, usize) {
        let (bl, wh) = self.lattice.bond_black_white(b);
        (self.index[bl], self.index[wh])
    }

    pub fn bond_weight(&self, b: usize) -> f64 {
        self.weights[self.lattice.weight_class(b) as usize]
    }

    /// Real part of the entry: weight times the Kasteleyn sign.
    fn real_entry(&self, b: usize) -> f64 {
        let t = self.bond_weight(b);
        if self.lattice.bond_dir(b) == 0 {
            t
        } else {
            let (x, _) = self.lattice.coords(b / 2);
            if x % 2 == 0 {
                t
            } else {
                -t
            }
        }
    }

    /// Exponent `k` such that bond `b` carries `e^{i k . (alpha, beta)}`.
    fn seam_charge(&self, b: usize) -> (i32, i32) {
        let l = self.lattice.side();
        let (u, _) = self.lattice.bond_endpoints(b);
        let (x, y) = self.lattice.coords(u);
        let black_base = self.lattice.color(u) == Color::Black;
        match self.lattice.bond_dir(b) {
            0 if x == l - 1 => (if black_base { 1 } else { -1 }, 0),
            1 if y == l - 1 => (0, if black_base { -1 } else { 1 }),
            _ => (0, 0),
        }
    }

    /// Entry of `K(alpha, beta)` for bond `b`.
    pub fn entry(&self, b: usize, angles: (f64, f64)) -> Complex64 {
        let (ka, kb) = self.seam_charge(b);
        let phase = ka as f64 * angles.0 + kb as f64 * angles.1;
        if phase == 0.0 {
            Complex64::new(self.real_entry(b), 0.0)
        } else {
            self.real_entry(b) * Complex64::from_polar(1.0, phase)
        }
    }

    fn real_matrix(&self, angles: (f64, f64)) -> DenseMatrix<f64> {
        let mut m = DenseMatrix::zeros(self.dim());
        for b in 0..self.lattice.num_bonds() {
            let (i, j) = self.bond_position(b);
            let (ka, kb) = self.seam_charge(b);
            let flip = (ka != 0 && angles.0 == PI) ^ (kb != 0 && angles.1 == PI);
            let v = self.real_entry(b);
            m.add_to(i, j, if flip { -v } else { v });
        }
        m
    }

    fn complex_matrix(&self, angles: (f64, f64)) -> DenseMatrix<Complex64> {
        let mut m = DenseMatrix::zeros(self.dim());
        for b in 0..self.lattice.num_bonds() {
            let (i, j) = self.bond_position(b);
            m.add_to(i, j, self.entry(b, angles));
        }
        m
    }

    /// Dense `K(alpha, beta)`.
    pub fn matrix(&self, angles: (f64, f64)) -> DenseMatrix<Complex64> {
        self.complex_matrix(angles)
    }

    /// Skew Kasteleyn matrix of a sector (vertices in lattice order).
    pub fn skew_matrix(&self, sector: usize) -> super::SkewMatrix {
        let k = self.real_matrix(sector_angles(sector));
        let n = self.lattice.num_vertices();
        super::SkewMatrix::from_upper(n, |u, v| {
            match (self.lattice.color(u), self.lattice.color(v)) {
                (Color::Black, Color::White) => k.get(self.index[u], self.index[v]),
                (Color::White, Color::Black) => -k.get(self.index[v], self.index[u]),
                _ => 0.0,
            }
        })
    }

    fn check_face_parity(&self, angles: (f64, f64)) -> Result<(), PfaffianError> {
        let k = self.real_matrix(angles);
        // A[u][v] for neighbours u, v of the skew matrix
        let oriented = |u: usize, v: usize| -> f64 {
            match self.lattice.color(u) {
                Color::Black => k.get(self.index[u], self.index[v]),
                Color::White => -k.get(self.index[v], self.index[u]),
            }
        };
        let l = &self.lattice;
        for f in 0..l.num_faces() {
            let (x, y) = l.coords(f);
            let (x, y) = (x as i64, y as i64);
            let ring = [l.vertex(x, y), l.vertex(x, y + 1), l.vertex(x + 1, y + 1), l.vertex(x + 1, y)];
            let clockwise = (0..4).filter(|&i| oriented(ring[i], ring[(i + 1) % 4]) > 0.0).count();
            if clockwise % 2 == 0 {
                return Err(PfaffianError::FaceParity(f));
            }
        }
        Ok(())
    }

    /// Factorisation of `K(alpha, beta)`, cached.
    pub(crate) fn factored(&self, angles: (f64, f64)) -> Arc<Factored> {
        if let Some(f) = self
            .cache
            .lock()
            .expect("cache lock")
            .iter()
            .find(|f| f.angles == angles)
        {
            return f.clone();
        }
        let f = Arc::new(self.factorise(angles));
        self.cache.lock().expect("cache lock").push(f.clone());
        f
    }

    pub(crate) fn factorise(&self, angles: (f64, f64)) -> Factored {
        let singular = Factored {
            angles,
            factor: None,
            phase: Complex64::new(0.0, 0.0),
            ln_abs: f64::NEG_INFINITY,
        };
        if is_real_angle(angles.0) && is_real_angle(angles.1) {
            match Lu::factor(self.real_matrix(angles)) {
                Ok(lu) if lu.pivot_ratio() > SINGULAR_PIVOT_RATIO => {
                    let d = lu.log_det();
                    Factored {
                        angles,
                        phase: d.phase.to_c64(),
                        ln_abs: d.ln_abs,
                        factor: Some(Factor::Real(lu)),
                    }
                }
                _ => singular,
            }
        } else {
            match Lu::factor(self.complex_matrix(angles)) {
                Ok(lu) if lu.pivot_ratio() > SINGULAR_PIVOT_RATIO => {
                    let d = lu.log_det();
                    Factored {
                        angles,
                        phase: d.phase,
                        ln_abs: d.ln_abs,
                        factor: Some(Factor::Complex(lu)),
                    }
                }
                _ => singular,
            }
        }
    }

    /// `ln |det K|` and phase for each of the four sectors.
    pub fn sector_log_dets(&self) -> [(Complex64, f64); 4] {
        std::array::from_fn(|s| {
            let f = self.factored(sector_angles(s));
            (f.phase, f.ln_abs)
        })
    }

    /// The term of a cover in the expansion of `det K(alpha, beta)`.
    pub fn cover_term(&self, cover: &DimerCover, angles: (f64, f64)) -> Result<Complex64, PfaffianError> {
        cover.validate(&self.lattice)?;
        let n = self.dim();
        let mut perm = vec![usize::MAX; n];
        let mut prod = Complex64::new(1.0, 0.0);
        for (b, _) in cover.matched.iter().enumerate().filter(|(_, &m)| m) {
            let (i, j) = self.bond_position(b);
            perm[i] = j;
            prod *= self.entry(b, angles);
        }
        Ok(prod * permutation_sign(&perm))
    }

    /// Sign relating the sector combination to `+2Z`, read off the columnar
    /// cover.
    pub(crate) fn reference_sign(&self, signs: &[f64; 4]) -> f64 {
        let c = DimerCover::columnar(&self.lattice);
        let total: f64 = (0..4)
            .map(|s| signs[s] * self.cover_term(&c, sector_angles(s)).expect("columnar cover").re)
            .sum();
        total.signum()
    }

    /// `ln Z` with an explicit sign pattern.
    pub(crate) fn ln_partition_with(&self, signs: &[f64; 4]) -> Result<f64, PfaffianError> {
        let dets = self.sector_log_dets();
        let m = dets.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return Err(PfaffianError::Singular("all four sectors".into()));
        }
        let total: f64 = (0..4)
            .filter(|&s| dets[s].1.is_finite())
            .map(|s| signs[s] * dets[s].0.re * (dets[s].1 - m).exp())
            .sum();
        let signed = total * self.reference_sign(signs);
        if !(signed > 0.0) {
            return Err(PfaffianError::SignCalibration);
        }
        Ok(m + (signed / 2.0).ln())
    }
}

/// Sign of a permutation given as an image vector.
fn permutation_sign(perm: &[usize]) -> f64 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1.0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// Natural log of the dimer partition function.
pub fn ln_dimer_partition(system: &KasteleynSystem) -> Result<f64, PfaffianError> {
    system.ln_partition_with(&sector_signs(system.lattice.side()))
}

/// Dimer partition function; overflows to infinity beyond `ln Z ~ 709`.
pub fn dimer_partition(system: &KasteleynSystem) -> Result<f64, PfaffianError> {
    Ok(ln_dimer_partition(system)?.exp())
}

/// Number of Fourier points per seam needed to isolate winding `w`. Winding
/// numbers satisfy `|w| <= L/2`, so `w = 0` needs `L/2 + 1` points and a
/// general `w` needs `L + 1`.
pub(crate) fn fourier_points(l: usize, w: (i64, i64)) -> usize {
    if w == (0, 0) {
        l / 2 + 1
    } else {
        l + 1
    }
}

/// Fourier angle `2 pi (k + 1/3) / M`; the offset keeps clear of the
/// periodic and antiperiodic sectors, which can be singular.
pub(crate) fn fourier_angle(k: usize, m: usize) -> f64 {
    2.0 * PI * (k as f64 + 1.0 / 3.0) / m as f64
}

/// `ln Z_w` restricted to covers of winding `w = (w_x, w_y)`; `-inf` when
/// no cover has that winding.
pub fn ln_winding_partition(system: &KasteleynSystem, w: (i64, i64)) -> Result<f64, PfaffianError> {
    let half = (system.lattice.side() / 2) as i64;
    if w.0.abs() > half || w.1.abs() > half {
        return Ok(f64::NEG_INFINITY);
    }
    let m = fourier_points(system.lattice.side(), w);
    let mut terms = Vec::with_capacity(m * m);
    for ka in 0..m {
        for kb in 0..m {
            let angles = (fourier_angle(ka, m), fourier_angle(kb, m));
            let f = system.factored(angles);
            if f.is_singular() {
                return Err(PfaffianError::Singular(format!("twisted sector at {angles:?}")));
            }
            let char_ = Complex64::from_polar(1.0, -(angles.0 * w.1 as f64 + angles.1 * w.0 as f64));
            terms.push((f.phase * char_, f.ln_abs));
        }
    }
    let top = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let sum: Complex64 = terms.iter().map(|(p, l)| p * (l - top).exp()).sum();
    let z = sum / (m * m) as f64;
    // the projection is real up to rounding
    if z.norm() <= 1e-9 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(top + z.norm().ln())
}

/// Finds the sign pattern (exactly one sector negated) reproducing the
/// enumerated cover count at uniform weights. Needs an enumerable torus.
pub fn calibrate_sector_signs(lattice: &TorusLattice) -> Result<[f64; 4], PfaffianError> {
    let count = enumerate_dimer_covers(lattice)?.len() as f64;
    let sys = KasteleynSystem::uniform(lattice)?;
    let dets = sys.sector_log_dets();
    let mut found = Vec::new();
    for neg in 0..4 {
        let mut signs = [1.0; 4];
        signs[neg] = -1.0;
        let total: f64 = (0..4)
            .filter(|&s| dets[s].1.is_finite())
            .map(|s| signs[s] * dets[s].0.re * dets[s].1.exp())
            .sum();
        if ((total.abs() / 2.0) / count - 1.0).abs() < 1e-10 {
            found.push(signs);
        }
    }
    match found.as_slice() {
        [one] => Ok(*one),
        _ => Err(PfaffianError::SignCalibration),
    }
}
