//! Spin Hamiltonians: nearest-neighbour Ising, generalized Ising with a
//! quartic kernel, and two Ising layers coupled by a quartic term.
//!
//! Two evaluation routes exist. The `hamiltonian_*` functions sum the defining
//! expressions directly; [`SpinHamiltonian`] compiles the same model into a
//! list of monomials with per-site incidence, which is what the Metropolis
//! sampler uses for local energy differences.

use super::{LatticeError, SpinConfig, SpinPairConfig, TorusLattice};
use crate::exactsol::CouplingParams;
use serde::{Deserialize, Serialize};

/// One entry `v_dir(d) = value` of a short-range quartic kernel, with
/// `d = x - y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEntry {
    pub dir: usize,
    pub dx: i64,
    pub dy: i64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QuarticKernel {
    pub entries: Vec<KernelEntry>,
}

impl QuarticKernel {
    /// `v_j(x - y) = delta_{x, y}`: the on-site (Ashkin–Teller) kernel.
    pub fn local() -> Self {
        QuarticKernel {
            entries: (0..2)
                .map(|dir| KernelEntry {
                    dir,
                    dx: 0,
                    dy: 0,
                    value: 1.0,
                })
                .collect(),
        }
    }

    /// `v_j(x - y) = delta_{y, x + e_j}`, which turns the generalized Ising
    /// quartic term into a straight next-nearest-neighbour coupling.
    pub fn next_nearest() -> Self {
        QuarticKernel {
            entries: vec![
                KernelEntry {
                    dir: 0,
                    dx: -1,
                    dy: 0,
                    value: 1.0,
                },
                KernelEntry {
                    dir: 1,
                    dx: 0,
                    dy: -1,
                    value: 1.0,
                },
            ],
        }
    }

    pub fn range(&self) -> usize {
        self.entries
            .iter()
            .map(|e| e.dx.unsigned_abs().max(e.dy.unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    fn check(&self, lattice: &TorusLattice) -> Result<(), LatticeError> {
        let r = self.range();
        // range must stay below L/2 so that displacements do not alias
        if 2 * r >= lattice.side() && r > 0 || self.entries.iter().any(|e| e.dir > 1) {
            return Err(LatticeError::KernelRange {
                range: r,
                l: lattice.side(),
            });
        }
        Ok(())
    }
}

/// Form of the quartic coupling `V(sigma, sigma')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QuarticVariant {
    /// `sum_j sum_x s_x s_{x+e_j} s'_x s'_{x+e_j}`.
    AshkinTeller,
    /// `sum_x s_{x+e0} s_{x+e0+e1} s'_{x+e1} s'_{x+e0+e1}`.
    EightVertex,
    /// `sum_j sum_{x,y} v_j(x-y) s_x s_{x+e_j} s'_y s'_{y+e_j}`.
    Kernel(QuarticKernel),
}

/// Model description consumed by the sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpinModel {
    /// `H = H_J(s) + H_J'(s') - lambda V - J4`.
    Coupled {
        params: CouplingParams,
        variant: QuarticVariant,
    },
    /// `H = H_J(s) + lambda sum_j sum_{x,y} v_j(x-y) s_x s_{x+e_j} s_y s_{y+e_j}`.
    Generalized {
        j: f64,
        lambda: f64,
        kernel: QuarticKernel,
    },
}

impl SpinModel {
    pub fn num_layers(&self) -> usize {
        match self {
            SpinModel::Coupled { .. } => 2,
            SpinModel::Generalized { .. } => 1,
        }
    }

    /// Plain nearest-neighbour Ising model.
    pub fn ising(j: f64) -> Self {
        SpinModel::Generalized {
            j,
            lambda: 0.0,
            kernel: QuarticKernel::default(),
        }
    }
}

fn ising_energy(lattice: &TorusLattice, s: &[i8], j: f64) -> f64 {
    let mut acc = 0i64;
    for v in 0..lattice.num_vertices() {
        let sv = s[v] as i64;
        acc += sv * s[lattice.neighbor(v, 0)] as i64 + sv * s[lattice.neighbor(v, 1)] as i64;
    }
    -j * acc as f64
}

/// Energy of a two-layer configuration.
pub fn hamiltonian_coupled(
    lattice: &TorusLattice,
    config: &SpinPairConfig,
    params: &CouplingParams,
    variant: &QuarticVariant,
) -> Result<f64, LatticeError> {
    let n = lattice.num_vertices();
    let s = &config.sigma.values;
    let sp = &config.sigma_prime.values;
    if s.len() != n || sp.len() != n {
        return Err(LatticeError::LatticeMismatch(lattice.side()));
    }
    let v = match variant {
        QuarticVariant::AshkinTeller => {
            let mut acc = 0i64;
            for x in 0..n {
                for j in 0..2 {
                    let y = lattice.neighbor(x, j);
                    acc += (s[x] * s[y] * sp[x] * sp[y]) as i64;
                }
            }
            acc as f64
        }
        QuarticVariant::EightVertex => {
            let mut acc = 0i64;
            for x in 0..n {
                let x0 = lattice.shift(x, 1, 0);
                let x1 = lattice.shift(x, 0, 1);
                let x01 = lattice.shift(x, 1, 1);
                acc += (s[x0] * s[x01] * sp[x1] * sp[x01]) as i64;
            }
            acc as f64
        }
        QuarticVariant::Kernel(k) => {
            k.check(lattice)?;
            let mut acc = 0.0;
            for e in &k.entries {
                for x in 0..n {
                    let y = lattice.shift(x, -e.dx, -e.dy);
                    let prod = s[x] * s[lattice.neighbor(x, e.dir)] * sp[y] * sp[lattice.neighbor(y, e.dir)];
                    acc += e.value * prod as f64;
                }
            }
            acc
        }
    };
    Ok(ising_energy(lattice, s, params.j) + ising_energy(lattice, sp, params.j_prime)
        - params.lambda * v
        - params.j4)
}

/// Energy of the generalized Ising model.
pub fn hamiltonian_generalized(
    lattice: &TorusLattice,
    config: &SpinConfig,
    j: f64,
    lambda: f64,
    kernel: &QuarticKernel,
) -> Result<f64, LatticeError> {
    let n = lattice.num_vertices();
    let s = &config.values;
    if s.len() != n {
        return Err(LatticeError::LatticeMismatch(lattice.side()));
    }
    kernel.check(lattice)?;
    let mut h1 = 0.0;
    for e in &kernel.entries {
        for x in 0..n {
            let y = lattice.shift(x, -e.dx, -e.dy);
            let prod = s[x] * s[lattice.neighbor(x, e.dir)] * s[y] * s[lattice.neighbor(y, e.dir)];
            h1 += e.value * prod as f64;
        }
    }
    Ok(ising_energy(lattice, s, j) + lambda * h1)
}

/// `H_J + lambda sum_x (s_x s_{x+2e0} + s_x s_{x+2e1})`.
pub fn hamiltonian_nnn_explicit(lattice: &TorusLattice, config: &SpinConfig, j: f64, lambda: f64) -> f64 {
    let s = &config.values;
    let mut nnn = 0i64;
    for x in 0..lattice.num_vertices() {
        nnn += (s[x] * s[lattice.shift(x, 2, 0)]) as i64 + (s[x] * s[lattice.shift(x, 0, 2)]) as i64;
    }
    ising_energy(lattice, s, j) + lambda * nnn as f64
}

/// Monomial `coef * prod_i s[sites_i]` with distinct sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub sites: Vec<usize>,
}

/// Compiled Hamiltonian over a flat spin vector (`sigma` then `sigma'`).
#[derive(Debug, Clone)]
pub struct SpinHamiltonian {
    num_spins: usize,
    constant: f64,
    terms: Vec<Term>,
    site_terms: Vec<Vec<usize>>,
}

impl SpinHamiltonian {
    pub fn build(lattice: &TorusLattice, model: &SpinModel) -> Result<Self, LatticeError> {
        let n = lattice.num_vertices();
        let mut b = Builder::default();
        match model {
            SpinModel::Coupled { params, variant } => {
                b.constant -= params.j4;
                for x in 0..n {
                    for j in 0..2 {
                        let y = lattice.neighbor(x, j);
                        b.push(-params.j, &[x, y]);
                        b.push(-params.j_prime, &[n + x, n + y]);
                    }
                }
                let lam = params.lambda;
                match variant {
                    QuarticVariant::AshkinTeller => {
                        for x in 0..n {
                            for j in 0..2 {
                                let y = lattice.neighbor(x, j);
                                b.push(-lam, &[x, y, n + x, n + y]);
                            }
                        }
                    }
                    QuarticVariant::EightVertex => {
                        for x in 0..n {
                            let x0 = lattice.shift(x, 1, 0);
                            let x1 = lattice.shift(x, 0, 1);
                            let x01 = lattice.shift(x, 1, 1);
                            b.push(-lam, &[x0, x01, n + x1, n + x01]);
                        }
                    }
                    QuarticVariant::Kernel(k) => {
                        k.check(lattice)?;
                        for e in &k.entries {
                            for x in 0..n {
                                let y = lattice.shift(x, -e.dx, -e.dy);
                                let sites = [x, lattice.neighbor(x, e.dir), n + y, n + lattice.neighbor(y, e.dir)];
                                b.push(-lam * e.value, &sites);
                            }
                        }
                    }
                }
                Ok(b.finish(2 * n))
            }
            SpinModel::Generalized { j, lambda, kernel } => {
                kernel.check(lattice)?;
                for x in 0..n {
                    for d in 0..2 {
                        b.push(-j, &[x, lattice.neighbor(x, d)]);
                    }
                }
                for e in &kernel.entries {
                    for x in 0..n {
                        let y = lattice.shift(x, -e.dx, -e.dy);
                        let sites = [x, lattice.neighbor(x, e.dir), y, lattice.neighbor(y, e.dir)];
                        b.push(lambda * e.value, &sites);
                    }
                }
                Ok(b.finish(n))
            }
        }
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn energy(&self, spins: &[i8]) -> f64 {
        debug_assert_eq!(spins.len(), self.num_spins);
        self.constant
            + self
                .terms
                .iter()
                .map(|t| t.coef * t.sites.iter().map(|&i| spins[i] as i32).product::<i32>() as f64)
                .sum::<f64>()
    }

    /// Energy change when spin `k` is flipped.
    #[inline]
    pub fn delta_flip(&self, spins: &[i8], k: usize) -> f64 {
        let mut acc = 0.0;
        for &ti in &self.site_terms[k] {
            let t = &self.terms[ti];
            let mut p = 1i32;
            for &i in &t.sites {
                p *= spins[i] as i32;
            }
            acc += t.coef * p as f64;
        }
        -2.0 * acc
    }
}

#[derive(Default)]
struct Builder {
    constant: f64,
    terms: Vec<Term>,
}

impl Builder {
    fn push(&mut self, coef: f64, sites: &[usize]) {
        if coef == 0.0 {
            return;
        }
        // s_i^2 = 1: cancel repeated sites pairwise
        let mut v = sites.to_vec();
        v.sort_unstable();
        let mut reduced: Vec<usize> = Vec::with_capacity(v.len());
        for s in v {
            if reduced.last() == Some(&s) {
                reduced.pop();
            } else {
                reduced.push(s);
            }
        }
        if reduced.is_empty() {
            self.constant += coef;
        } else {
            self.terms.push(Term { coef, sites: reduced });
        }
    }

    fn finish(self, num_spins: usize) -> SpinHamiltonian {
        let mut site_terms = vec![Vec::new(); num_spins];
        for (ti, t) in self.terms.iter().enumerate() {
            for &s in &t.sites {
                site_terms[s].push(ti);
            }
        }
        SpinHamiltonian {
            num_spins,
            constant: self.constant,
            terms: self.terms,
            site_terms,
        }
    }
}
