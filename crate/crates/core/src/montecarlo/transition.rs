//! Explicit transition matrices and exact averages for enumerable systems.
//!
//! The spin matrix is the random-site Metropolis kernel
//! `T = N^{-1} sum_k P_k`, one update of [`SiteOrder::RandomSite`]; the
//! checkerboard sweep composes the same single-site kernels `P_k`, each of
//! which is reversible on its own. The
//! dimer matrix is one rotation attempt at a uniformly chosen face.

use super::dimer::{apply, bond_log_weights, rotation, rotation_log_ratio};
use super::{DimerParams, McError, Model};
#[cfg(doc)]
use super::SiteOrder;
use crate::lattice::{enumerate_dimer_covers, DimerCover, SpinHamiltonian, TorusLattice};
use std::collections::{HashMap, VecDeque};

/// Dense Markov matrix with its intended stationary distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    /// Normalised Boltzmann weights.
    pub pi: Vec<f64>,
    /// `t[i][j]` is the probability of moving from state `i` to `j`.
    pub t: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// `max_ij |pi_i T_ij - pi_j T_ji|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.pi[i] * self.t[i][j] - self.pi[j] * self.t[j][i]).abs());
            }
        }
        worst
    }

    /// `max_j |sum_i pi_i T_ij - pi_j|`.
    pub fn stationarity_residual(&self) -> f64 {
        (0..self.len())
            .map(|j| ((0..self.len()).map(|i| self.pi[i] * self.t[i][j]).sum::<f64>() - self.pi[j]).abs())
            .fold(0.0, f64::max)
    }

    /// `max_i |sum_j T_ij - 1|`.
    pub fn row_sum_residual(&self) -> f64 {
        self.t
            .iter()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Whether every state reaches every other one.
    pub fn is_irreducible(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if !seen[j] && self.t[i][j] > 0.0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        // reversibility makes reachability symmetric
        seen.iter().all(|&s| s)
    }
}

fn normalise(ln_w: &[f64]) -> Vec<f64> {
    let top = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = ln_w.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

fn spin_setup(model: &Model, side: usize) -> Result<(SpinHamiltonian, f64, usize), McError> {
    let (m, beta) = model
        .spin_model()
        .ok_or_else(|| McError::WrongModel("spin enumeration".into()))?;
    let lattice = TorusLattice::for_spins(side)?;
    let ham = SpinHamiltonian::build(&lattice, &m)?;
    let n = ham.num_spins();
    let max = 2 * crate::lattice::MAX_SPIN_ENUMERATION_SITES;
    if n > max {
        return Err(McError::Lattice(crate::lattice::LatticeError::SizeLimit { got: n, max }));
    }
    Ok((ham, beta, n))
}

fn state_spins(s: usize, n: usize) -> Vec<i8> {
    (0..n).map(|i| if s >> i & 1 == 1 { -1 } else { 1 }).collect()
}

/// Random-site Metropolis matrix over all `2^{N}` spin states; state `s`
/// has spin `i` down when bit `i` is set.
pub fn spin_transition_matrix(model: &Model, side: usize) -> Result<TransitionMatrix, McError> {
    let (ham, beta, n) = spin_setup(model, side)?;
    let states = 1usize << n;
    let energy: Vec<f64> = (0..states).map(|s| ham.energy(&state_spins(s, n))).collect();
    let ln_w: Vec<f64> = energy.iter().map(|e| -beta * e).collect();
    let mut t = vec![vec![0.0; states]; states];
    for i in 0..states {
        let mut stay = 1.0;
        for k in 0..n {
            let j = i ^ (1 << k);
            let p = (-beta * (energy[j] - energy[i])).exp().min(1.0) / n as f64;
            t[i][j] = p;
            stay -= p;
        }
        t[i][i] = stay;
    }
    Ok(TransitionMatrix { pi: normalise(&ln_w), t })
}

/// Exact Boltzmann averages of an enumerable spin system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinAverages {
    pub energy: f64,
    pub energy_squared: f64,
    pub magnetization2: f64,
    /// Zero for single-layer models.
    pub polarization2: f64,
}

pub fn exact_spin_averages(model: &Model, side: usize) -> Result<SpinAverages, McError> {
    let (ham, beta, n) = spin_setup(model, side)?;
    let two = n == 2 * side * side;
    let sites = side * side;
    let states = 1usize << n;
    let mut ln_w = Vec::with_capacity(states);
    let mut obs = Vec::with_capacity(states);
    for s in 0..states {
        let spins = state_spins(s, n);
        let e = ham.energy(&spins);
        let m = spins[..sites].iter().map(|&x| x as f64).sum::<f64>() / sites as f64;
        let p = if two {
            (0..sites).map(|x| (spins[x] * spins[sites + x]) as f64).sum::<f64>() / sites as f64
        } else {
            0.0
        };
        ln_w.push(-beta * e);
        obs.push([e, e * e, m * m, p * p]);
    }
    let pi = normalise(&ln_w);
    let avg = |k: usize| pi.iter().zip(&obs).map(|(p, o)| p * o[k]).sum::<f64>();
    Ok(SpinAverages {
        energy: avg(0),
        energy_squared: avg(1),
        magnetization2: avg(2),
        polarization2: avg(3),
    })
}

/// Rotation-chain matrix over the covers of winding `winding`, with the
/// covers in enumeration order.
pub fn dimer_transition_matrix(
    params: &DimerParams,
    side: usize,
    winding: (i64, i64),
) -> Result<(TransitionMatrix, Vec<DimerCover>), McError> {
    let lattice = TorusLattice::build(side)?;
    let covers: Vec<DimerCover> = enumerate_dimer_covers(&lattice)?
        .into_iter()
        .filter(|c| c.winding(&lattice) == winding)
        .collect();
    let index: HashMap<&[bool], usize> = covers.iter().enumerate().map(|(i, c)| (&c.matched[..], i)).collect();
    let ln_t = bond_log_weights(&lattice, &params.t);
    let ln_w: Vec<f64> = covers
        .iter()
        .map(|c| c.weight(&lattice, &params.t).ln() + params.lambda * c.parallel_plaquettes(&lattice) as f64)
        .collect();
    let nf = lattice.num_faces();
    let n = covers.len();
    let mut t = vec![vec![0.0; n]; n];
    for (i, c) in covers.iter().enumerate() {
        let mut m = c.matched.clone();
        let mut stay = 1.0;
        for f in 0..nf {
            let Some((ln_r, _)) = rotation_log_ratio(&lattice, &ln_t, params.lambda, &mut m, f) else {
                continue;
            };
            let (old, new) = rotation(&lattice, &m, f).expect("rotatable");
            apply(&mut m, old, new);
            let j = *index.get(&m[..]).expect("rotation preserves winding");
            apply(&mut m, new, old);
            let p = ln_r.exp().min(1.0) / nf as f64;
            t[i][j] += p;
            stay -= p;
        }
        t[i][i] += stay;
    }
    Ok((TransitionMatrix { pi: normalise(&ln_w), t }, covers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactsol::CouplingParams;

    fn at(lambda: f64, beta: f64) -> Model {
        Model::CoupledIsingAt(CouplingParams {
            j: 1.0,
            j_prime: 0.8,
            lambda,
            j4: 0.0,
            beta,
        })
    }

    #[test]
    fn spin_matrix_is_reversible() {
        for model in [at(0.1, 0.3), at(-0.4, 0.7)] {
            let m = spin_transition_matrix(&model, 2).unwrap();
            assert_eq!(m.len(), 256);
            assert!(m.detailed_balance_residual() < 1e-12);
            assert!(m.stationarity_residual() < 1e-12);
            assert!(m.row_sum_residual() < 1e-12);
            assert!(m.is_irreducible());
        }
    }

    #[test]
    fn dimer_matrix_is_reversible_and_irreducible() {
        for p in [DimerParams::uniform(0.0), DimerParams { t: [1.3, 0.7, 1.1, 0.9], lambda: 0.4 }] {
            let (m, covers) = dimer_transition_matrix(&p, 4, (0, 0)).unwrap();
            assert!(!covers.is_empty());
            assert!(m.detailed_balance_residual() < 1e-12);
            assert!(m.stationarity_residual() < 1e-12);
            assert!(m.row_sum_residual() < 1e-12);
            assert!(m.is_irreducible());
        }
    }

    #[test]
    fn decoupled_layers_factorise() {
        // lambda = 0 and J = J': <E> is twice the single-layer value
        let single = exact_spin_averages(
            &Model::GeneralizedIsing {
                params: CouplingParams {
                    j: 1.0,
                    j_prime: 0.0,
                    lambda: 0.0,
                    j4: 0.0,
                    beta: 0.4,
                },
                kernel: Default::default(),
            },
            2,
        )
        .unwrap();
        let at_sym = exact_spin_averages(
            &Model::CoupledIsingAt(CouplingParams {
                j: 1.0,
                j_prime: 1.0,
                lambda: 0.0,
                j4: 0.0,
                beta: 0.4,
            }),
            2,
        )
        .unwrap();
        assert!((at_sym.energy - 2.0 * single.energy).abs() < 1e-12);
        assert!((at_sym.magnetization2 - single.magnetization2).abs() < 1e-12);
        assert_eq!(single.polarization2, 0.0);
    }
}
