//! Dual paths and the dimer height function.
//!
//! A dual path walks from face to face. Each step crosses one bond `b` and
//! contributes `(I_b - 1/4) * sigma_b`, where `sigma_b = +1` when the white
//! endpoint of `b` lies to the right of the direction of travel. Heights are
//! kept exactly as integer multiples of 1/4.

use super::{Color, DimerCover, LatticeError, TorusLattice};
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// Exact height value stored as `4 * h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Quarters(pub i64);

impl Quarters {
    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 4.0
    }
}

impl Add for Quarters {
    type Output = Quarters;
    fn add(self, o: Quarters) -> Quarters {
        Quarters(self.0 + o.0)
    }
}

impl Sub for Quarters {
    type Output = Quarters;
    fn sub(self, o: Quarters) -> Quarters {
        Quarters(self.0 - o.0)
    }
}

impl Neg for Quarters {
    type Output = Quarters;
    fn neg(self) -> Quarters {
        Quarters(-self.0)
    }
}

impl fmt::Display for Quarters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/4", self.0)
    }
}

/// Unit move between adjacent faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    East,
    North,
    West,
    South,
}

impl Step {
    pub fn delta(self) -> (i64, i64) {
        match self {
            Step::East => (1, 0),
            Step::North => (0, 1),
            Step::West => (-1, 0),
            Step::South => (0, -1),
        }
    }

    pub fn reverse(self) -> Step {
        match self {
            Step::East => Step::West,
            Step::North => Step::South,
            Step::West => Step::East,
            Step::South => Step::North,
        }
    }
}

/// Face-to-face path in unwrapped face coordinates. Two paths with the same
/// unwrapped endpoints are homotopic on the torus, so they give the same
/// height difference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualPath {
    side: usize,
    start: (i64, i64),
    steps: Vec<Step>,
}

impl DualPath {
    pub fn new(lattice: &TorusLattice, start: (i64, i64), steps: Vec<Step>) -> Self {
        DualPath {
            side: lattice.side(),
            start,
            steps,
        }
    }

    pub fn straight(lattice: &TorusLattice, x: i64, y: i64, step: Step, len: usize) -> Self {
        Self::new(lattice, (x, y), vec![step; len])
    }

    pub fn start(&self) -> (i64, i64) {
        self.start
    }

    pub fn end(&self) -> (i64, i64) {
        self.steps.iter().fold(self.start, |(x, y), s| {
            let (dx, dy) = s.delta();
            (x + dx, y + dy)
        })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Bonds crossed by the path with their crossing signs.
    pub fn crossings(&self, lattice: &TorusLattice) -> Vec<(usize, i8)> {
        let (mut x, mut y) = self.start;
        let mut out = Vec::with_capacity(self.steps.len());
        for &s in &self.steps {
            out.push(crossing(lattice, x, y, s));
            let (dx, dy) = s.delta();
            x += dx;
            y += dy;
        }
        out
    }
}

/// Bond crossed when leaving face `(x, y)` by `step`, and its sign.
pub(crate) fn crossing(lattice: &TorusLattice, x: i64, y: i64, step: Step) -> (usize, i8) {
    // The endpoint on the right of travel decides the sign.
    let (bond, right) = match step {
        Step::East => (lattice.bond_at(x + 1, y, 1), lattice.vertex(x + 1, y)),
        Step::North => (lattice.bond_at(x, y + 1, 0), lattice.vertex(x + 1, y + 1)),
        Step::West => (lattice.bond_at(x, y, 1), lattice.vertex(x, y + 1)),
        Step::South => (lattice.bond_at(x, y, 0), lattice.vertex(x, y)),
    };
    let sign = if lattice.color(right) == Color::White { 1 } else { -1 };
    (bond, sign)
}

/// `h_end - h_start` along `path` for the given cover.
pub fn height_difference(
    lattice: &TorusLattice,
    cover: &DimerCover,
    path: &DualPath,
) -> Result<Quarters, LatticeError> {
    if path.side != lattice.side() {
        return Err(LatticeError::InvalidPath(format!(
            "path built for side {}, lattice has side {}",
            path.side,
            lattice.side()
        )));
    }
    if cover.matched.len() != lattice.num_bonds() {
        return Err(LatticeError::LatticeMismatch(lattice.side()));
    }
    let mut acc = 0i64;
    for (b, s) in path.crossings(lattice) {
        let occ = if cover.matched[b] { 4 } else { 0 };
        acc += (occ - 1) * s as i64;
    }
    Ok(Quarters(acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::enumerate_dimer_covers;

    fn lattice4() -> TorusLattice {
        TorusLattice::build(4).unwrap()
    }

    #[test]
    fn loop_around_a_vertex_is_zero() {
        let t = lattice4();
        let covers = enumerate_dimer_covers(&t).unwrap();
        // counterclockwise around vertex (2, 2), starting in face (2, 1)
        let path = DualPath::new(&t, (2, 1), vec![Step::North, Step::West, Step::South, Step::East]);
        for c in &covers {
            assert_eq!(height_difference(&t, c, &path).unwrap(), Quarters(0));
        }
    }

    #[test]
    fn single_crossings() {
        let t = lattice4();
        let c = DimerCover::columnar(&t);
        // From face (0,-1) moving north crosses bond (0,0)-(1,0), matched; the
        // right endpoint (1,0) is white, so sigma = +1.
        let p = DualPath::new(&t, (0, -1), vec![Step::North]);
        assert_eq!(p.crossings(&t), vec![(t.bond_at(0, 0, 0), 1)]);
        assert_eq!(height_difference(&t, &c, &p).unwrap(), Quarters(3));
        // From face (1,-1) moving north crosses bond (1,0)-(2,0), unmatched;
        // right endpoint (2,0) is black, so sigma = -1 and the step gives +1/4.
        let p = DualPath::new(&t, (1, -1), vec![Step::North]);
        assert_eq!(p.crossings(&t), vec![(t.bond_at(1, 0, 0), -1)]);
        assert_eq!(height_difference(&t, &c, &p).unwrap(), Quarters(1));
    }

    #[test]
    fn reversing_a_step_flips_its_sign() {
        let t = lattice4();
        for x in 0..4 {
            for y in 0..4 {
                for s in [Step::East, Step::North, Step::West, Step::South] {
                    let (b, sg) = crossing(&t, x, y, s);
                    let (dx, dy) = s.delta();
                    let (b2, sg2) = crossing(&t, x + dx, y + dy, s.reverse());
                    assert_eq!(b, b2);
                    assert_eq!(sg, -sg2);
                }
            }
        }
    }

    #[test]
    fn mismatched_side_is_rejected() {
        let t = lattice4();
        let t6 = TorusLattice::build(6).unwrap();
        let p = DualPath::straight(&t6, 0, 0, Step::East, 2);
        let c = DimerCover::columnar(&t);
        assert!(height_difference(&t, &c, &p).is_err());
    }
}
