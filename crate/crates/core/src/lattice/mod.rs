//! Square-torus geometry, spin and dimer configurations.
//!
//! Vertices are indexed `y * L + x`. Bond `2 * v + d` joins vertex `v` to
//! `v + e_d` with `e_0 = (1, 0)` and `e_1 = (0, 1)`. Face `y * L + x` is the
//! plaquette whose lower-left corner is vertex `(x, y)`. A vertex is black when
//! `x + y` is even.

mod enumerate;
mod hamiltonian;
mod height;

pub use enumerate::{
    enumerate_dimer_covers, enumerate_perfect_matchings, enumerate_single_spin_states,
    enumerate_spin_states, MAX_ENUMERATION_VERTICES, MAX_SPIN_ENUMERATION_SITES,
};
pub use hamiltonian::{
    hamiltonian_coupled, hamiltonian_generalized, hamiltonian_nnn_explicit, KernelEntry,
    QuarticKernel, QuarticVariant, SpinHamiltonian, SpinModel, Term,
};
pub use height::{height_difference, DualPath, Quarters, Step};
pub(crate) use height::crossing;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("torus side must be even, got {0}")]
    OddSide(usize),
    #[error("torus side {got} is below the minimum {min}")]
    TooSmall { got: usize, min: usize },
    #[error("system too large for exhaustive enumeration: {got} > {max}")]
    SizeLimit { got: usize, max: usize },
    #[error("configuration does not match lattice of side {0}")]
    LatticeMismatch(usize),
    #[error("bond set is not a perfect matching: {0}")]
    NotPerfectMatching(String),
    #[error("dual path invalid: {0}")]
    InvalidPath(String),
    #[error("quartic kernel range {range} too large for side {l}")]
    KernelRange { range: usize, l: usize },
    #[error("spin values must be +1 or -1")]
    InvalidSpin,
}

/// Vertex color of the bipartite square lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Color {
    Black,
    White,
}

/// Dimer weight class by the position of the white endpoint relative to the
/// black one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightClass {
    Right = 0,
    Above = 1,
    Left = 2,
    Below = 3,
}

/// Periodic `L x L` square lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusLattice {
    l: usize,
}

impl TorusLattice {
    /// Torus for dimer and Kasteleyn work: `L` even and at least 4.
    ///
    /// At `L = 2` the two bonds between a pair of neighbours coincide as
    /// vertex pairs, which the Kasteleyn construction cannot represent.
    pub fn build(l: usize) -> Result<Self, LatticeError> {
        if !l.is_multiple_of(2) {
            return Err(LatticeError::OddSide(l));
        }
        if l < 4 {
            return Err(LatticeError::TooSmall { got: l, min: 4 });
        }
        Ok(TorusLattice { l })
    }

    /// Torus for spin models, where `L = 2` is allowed (doubled bonds are
    /// simply two terms of the Hamiltonian).
    pub fn for_spins(l: usize) -> Result<Self, LatticeError> {
        if !l.is_multiple_of(2) {
            return Err(LatticeError::OddSide(l));
        }
        if l < 2 {
            return Err(LatticeError::TooSmall { got: l, min: 2 });
        }
        Ok(TorusLattice { l })
    }

    pub fn side(&self) -> usize {
        self.l
    }

    pub fn num_vertices(&self) -> usize {
        self.l * self.l
    }

    pub fn num_bonds(&self) -> usize {
        2 * self.l * self.l
    }

    pub fn num_faces(&self) -> usize {
        self.l * self.l
    }

    #[inline]
    pub fn vertex(&self, x: i64, y: i64) -> usize {
        let l = self.l as i64;
        (y.rem_euclid(l) * l + x.rem_euclid(l)) as usize
    }

    #[inline]
    pub fn coords(&self, v: usize) -> (usize, usize) {
        (v % self.l, v / self.l)
    }

    #[inline]
    pub fn color(&self, v: usize) -> Color {
        let (x, y) = self.coords(v);
        if (x + y) % 2 == 0 {
            Color::Black
        } else {
            Color::White
        }
    }

    /// Vertex `v + e_dir`.
    #[inline]
    pub fn neighbor(&self, v: usize, dir: usize) -> usize {
        let (x, y) = self.coords(v);
        match dir {
            0 => self.vertex(x as i64 + 1, y as i64),
            1 => self.vertex(x as i64, y as i64 + 1),
            _ => panic!("direction must be 0 or 1"),
        }
    }

    /// Vertex `v + dx e_0 + dy e_1`.
    #[inline]
    pub fn shift(&self, v: usize, dx: i64, dy: i64) -> usize {
        let (x, y) = self.coords(v);
        self.vertex(x as i64 + dx, y as i64 + dy)
    }

    #[inline]
    pub fn bond(&self, v: usize, dir: usize) -> usize {
        debug_assert!(dir < 2);
        2 * v + dir
    }

    pub fn bond_at(&self, x: i64, y: i64, dir: usize) -> usize {
        self.bond(self.vertex(x, y), dir)
    }

    /// `(v, v + e_dir)` for bond index `b`.
    #[inline]
    pub fn bond_endpoints(&self, b: usize) -> (usize, usize) {
        let v = b / 2;
        (v, self.neighbor(v, b % 2))
    }

    #[inline]
    pub fn bond_dir(&self, b: usize) -> usize {
        b % 2
    }

    /// `(black, white)` endpoints.
    pub fn bond_black_white(&self, b: usize) -> (usize, usize) {
        let (u, v) = self.bond_endpoints(b);
        if self.color(u) == Color::Black {
            (u, v)
        } else {
            (v, u)
        }
    }

    pub fn weight_class(&self, b: usize) -> WeightClass {
        let (u, _) = self.bond_endpoints(b);
        let base_black = self.color(u) == Color::Black;
        match (self.bond_dir(b), base_black) {
            (0, true) => WeightClass::Right,
            (0, false) => WeightClass::Left,
            (1, true) => WeightClass::Above,
            (_, _) => WeightClass::Below,
        }
    }

    /// The four bonds incident to a vertex, ordered right, up, left, down.
    pub fn incident_bonds(&self, v: usize) -> [usize; 4] {
        [
            self.bond(v, 0),
            self.bond(v, 1),
            self.bond(self.shift(v, -1, 0), 0),
            self.bond(self.shift(v, 0, -1), 1),
        ]
    }

    #[inline]
    pub fn face(&self, x: i64, y: i64) -> usize {
        self.vertex(x, y)
    }

    /// Bounding bonds of face `f` as `[bottom, right, top, left]`.
    pub fn face_bonds(&self, f: usize) -> [usize; 4] {
        let (x, y) = self.coords(f);
        let (x, y) = (x as i64, y as i64);
        [
            self.bond_at(x, y, 0),
            self.bond_at(x + 1, y, 1),
            self.bond_at(x, y + 1, 0),
            self.bond_at(x, y, 1),
        ]
    }

    /// Faces sharing an edge with `f`, ordered below, right, above, left.
    pub fn face_neighbors(&self, f: usize) -> [usize; 4] {
        let (x, y) = self.coords(f);
        let (x, y) = (x as i64, y as i64);
        [
            self.face(x, y - 1),
            self.face(x + 1, y),
            self.face(x, y + 1),
            self.face(x - 1, y),
        ]
    }

    pub fn count_colors(&self) -> (usize, usize) {
        let black = (0..self.num_vertices())
            .filter(|&v| self.color(v) == Color::Black)
            .count();
        (black, self.num_vertices() - black)
    }
}

/// Ising configuration with values in `{+1, -1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    pub values: Vec<i8>,
}

impl SpinConfig {
    pub fn all_up(lattice: &TorusLattice) -> Self {
        SpinConfig {
            values: vec![1; lattice.num_vertices()],
        }
    }

    pub fn new(lattice: &TorusLattice, values: Vec<i8>) -> Result<Self, LatticeError> {
        if values.len() != lattice.num_vertices() {
            return Err(LatticeError::LatticeMismatch(lattice.side()));
        }
        if values.iter().any(|&s| s != 1 && s != -1) {
            return Err(LatticeError::InvalidSpin);
        }
        Ok(SpinConfig { values })
    }

    pub fn magnetization(&self) -> f64 {
        self.values.iter().map(|&s| s as f64).sum::<f64>() / self.values.len() as f64
    }
}

/// Two Ising layers on the same torus.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinPairConfig {
    pub sigma: SpinConfig,
    pub sigma_prime: SpinConfig,
}

impl SpinPairConfig {
    pub fn new(sigma: SpinConfig, sigma_prime: SpinConfig) -> Result<Self, LatticeError> {
        if sigma.values.len() != sigma_prime.values.len() {
            return Err(LatticeError::LatticeMismatch(0));
        }
        Ok(SpinPairConfig { sigma, sigma_prime })
    }

    pub fn all_up(lattice: &TorusLattice) -> Self {
        SpinPairConfig {
            sigma: SpinConfig::all_up(lattice),
            sigma_prime: SpinConfig::all_up(lattice),
        }
    }

    /// Layout used by [`SpinHamiltonian`]: `sigma` followed by `sigma_prime`.
    pub fn to_flat(&self) -> Vec<i8> {
        let mut v = self.sigma.values.clone();
        v.extend_from_slice(&self.sigma_prime.values);
        v
    }

    pub fn from_flat(flat: &[i8]) -> Self {
        let n = flat.len() / 2;
        SpinPairConfig {
            sigma: SpinConfig {
                values: flat[..n].to_vec(),
            },
            sigma_prime: SpinConfig {
                values: flat[n..].to_vec(),
            },
        }
    }
}

/// Perfect matching of the torus, stored as the bond indicator `I_b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DimerCover {
    pub matched: Vec<bool>,
}

impl DimerCover {
    pub fn from_bonds(lattice: &TorusLattice, bonds: &[usize]) -> Result<Self, LatticeError> {
        let mut matched = vec![false; lattice.num_bonds()];
        for &b in bonds {
            if b >= matched.len() {
                return Err(LatticeError::NotPerfectMatching(format!("bond {b} out of range")));
            }
            matched[b] = true;
        }
        let cover = DimerCover { matched };
        cover.validate(lattice)?;
        Ok(cover)
    }

    /// Columnar reference state: horizontal dimers on bonds `(x, y)-(x+1, y)`
    /// with `x` even.
    pub fn columnar(lattice: &TorusLattice) -> Self {
        let l = lattice.side() as i64;
        let mut matched = vec![false; lattice.num_bonds()];
        for y in 0..l {
            for x in (0..l).step_by(2) {
                matched[lattice.bond_at(x, y, 0)] = true;
            }
        }
        DimerCover { matched }
    }

    pub fn validate(&self, lattice: &TorusLattice) -> Result<(), LatticeError> {
        if self.matched.len() != lattice.num_bonds() {
            return Err(LatticeError::LatticeMismatch(lattice.side()));
        }
        for v in 0..lattice.num_vertices() {
            let k = lattice
                .incident_bonds(v)
                .iter()
                .filter(|&&b| self.matched[b])
                .count();
            if k != 1 {
                return Err(LatticeError::NotPerfectMatching(format!(
                    "vertex {v} covered {k} times"
                )));
            }
        }
        Ok(())
    }

    pub fn num_dimers(&self) -> usize {
        self.matched.iter().filter(|&&m| m).count()
    }

    /// Product of bond weights `t_b` over matched bonds.
    pub fn weight(&self, lattice: &TorusLattice, t: &[f64; 4]) -> f64 {
        self.matched
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(b, _)| t[lattice.weight_class(b) as usize])
            .product()
    }

    /// Winding (height flux) of the cover: height change along a horizontal
    /// and along a vertical non-contractible loop of faces. Conserved by
    /// plaquette rotations.
    pub fn winding(&self, lattice: &TorusLattice) -> (i64, i64) {
        let l = lattice.side();
        let east = DualPath::straight(lattice, 0, 0, Step::East, l);
        let north = DualPath::straight(lattice, 0, 0, Step::North, l);
        let wx = height_difference(lattice, self, &east).expect("valid path");
        let wy = height_difference(lattice, self, &north).expect("valid path");
        debug_assert_eq!(wx.0 % 4, 0);
        debug_assert_eq!(wy.0 % 4, 0);
        (wx.0 / 4, wy.0 / 4)
    }

    /// Number of faces carrying two parallel dimers.
    pub fn parallel_plaquettes(&self, lattice: &TorusLattice) -> usize {
        (0..lattice.num_faces())
            .filter(|&f| {
                let [bo, r, t, le] = lattice.face_bonds(f);
                (self.matched[bo] && self.matched[t]) || (self.matched[r] && self.matched[le])
            })
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_counts() {
        let t = TorusLattice::build(4).unwrap();
        assert_eq!(t.num_vertices(), 16);
        assert_eq!(t.num_bonds(), 32);
        let t6 = TorusLattice::build(6).unwrap();
        assert_eq!(t6.count_colors(), (18, 18));
    }

    #[test]
    fn torus_rejects_bad_sides() {
        assert_eq!(TorusLattice::build(3), Err(LatticeError::OddSide(3)));
        assert_eq!(TorusLattice::build(2), Err(LatticeError::TooSmall { got: 2, min: 4 }));
        assert!(TorusLattice::for_spins(2).is_ok());
        assert!(TorusLattice::for_spins(5).is_err());
    }

    #[test]
    fn bonds_are_bipartite_and_wrap() {
        for l in [4, 6, 8] {
            let t = TorusLattice::build(l).unwrap();
            for b in 0..t.num_bonds() {
                let (u, v) = t.bond_endpoints(b);
                assert_ne!(t.color(u), t.color(v));
            }
            assert_eq!(t.vertex(l as i64, 0), 0);
            assert_eq!(t.vertex(-1, -1), t.num_vertices() - 1);
        }
    }

    #[test]
    fn weight_classes_follow_white_endpoint() {
        let t = TorusLattice::build(4).unwrap();
        assert_eq!(t.weight_class(t.bond_at(0, 0, 0)), WeightClass::Right);
        assert_eq!(t.weight_class(t.bond_at(1, 0, 0)), WeightClass::Left);
        assert_eq!(t.weight_class(t.bond_at(0, 0, 1)), WeightClass::Above);
        assert_eq!(t.weight_class(t.bond_at(1, 0, 1)), WeightClass::Below);
        // each vertex sees each class exactly once
        for v in 0..t.num_vertices() {
            let mut seen: Vec<_> = t.incident_bonds(v).iter().map(|&b| t.weight_class(b) as usize).collect();
            seen.sort();
            assert_eq!(seen, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn columnar_state_is_a_zero_winding_cover() {
        let t = TorusLattice::build(8).unwrap();
        let c = DimerCover::columnar(&t);
        c.validate(&t).unwrap();
        assert_eq!(c.num_dimers(), 32);
        assert_eq!(c.winding(&t), (0, 0));
        assert_eq!(c.parallel_plaquettes(&t), 32);
    }

    #[test]
    fn invalid_cover_is_rejected() {
        let t = TorusLattice::build(4).unwrap();
        let err = DimerCover::from_bonds(&t, &[0, 1]).unwrap_err();
        assert!(matches!(err, LatticeError::NotPerfectMatching(_)));
    }
}
