//! Closed-form critical data and extended-scaling relation checks.
//!
//! Everything here is a pure function of its arguments. Identity checks in
//! the tests use residual thresholds of `1e-12` for pure algebra and `1e-8`
//! after transcendental functions.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("coupling must be positive, got {0}")]
    NonPositiveCoupling(f64),
    #[error("formula singular at {0}")]
    Singular(String),
    #[error("argument outside the domain: {0}")]
    OutOfDomain(String),
    #[error("inconsistent vertex weights: {0}")]
    Inconsistent(String),
}

/// Parameters of the coupled-Ising Hamiltonian
/// `H = H_J(s) + H_J'(s') - lambda V - J4` at inverse temperature `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub j: f64,
    pub j_prime: f64,
    pub lambda: f64,
    pub j4: f64,
    pub beta: f64,
}

impl CouplingParams {
    pub fn validate(&self) -> Result<(), ExactError> {
        let all = [self.j, self.j_prime, self.lambda, self.j4, self.beta];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(ExactError::OutOfDomain("non-finite coupling".into()));
        }
        if self.beta <= 0.0 {
            return Err(ExactError::OutOfDomain(format!("beta = {} must be > 0", self.beta)));
        }
        Ok(())
    }
}

/// The four Ashkin–Teller bond energies: `eps0` for equal states, `eps1` for
/// the pairs AB/CD, `eps2` for AC/BD and `eps3` for AD/BC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtEnergies {
    pub eps: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexWeights8 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexWeights6 {
    pub a: [f64; 6],
}

/// Couplings of the continuum reference model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumCoupling {
    pub lambda_tilde: f64,
    pub v: f64,
    pub lambda_inf: f64,
    pub z: f64,
    pub z1: f64,
}

impl ContinuumCoupling {
    /// Coupling with `Z^(1)` fixed by the lattice identity
    /// `Z^(1) = (1 + lambda_inf / 4 pi) Z`.
    pub fn new(lambda_tilde: f64, v: f64, lambda_inf: f64, z: f64) -> Self {
        ContinuumCoupling {
            lambda_tilde,
            v,
            lambda_inf,
            z,
            z1: (1.0 + lambda_inf / (4.0 * PI)) * z,
        }
    }

    /// Same coupling for the current and the effective interaction, `v = 1`,
    /// `Z = 1`.
    pub fn symmetric(lambda: f64) -> Self {
        Self::new(lambda, 1.0, lambda, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExponentName {
    #[serde(rename = "X_e")]
    Xe,
    #[serde(rename = "X_CR")]
    Xcr,
    #[serde(rename = "X_P")]
    Xp,
    #[serde(rename = "X_A")]
    Xa,
    #[serde(rename = "nu")]
    Nu,
    /// Crossover ratio governing the splitting of the two critical points.
    #[serde(rename = "mu")]
    Mu,
    /// Baxter's angle `mu` with `nu = pi / (2 mu)`.
    #[serde(rename = "mu_B")]
    MuBaxter,
    #[serde(rename = "eta")]
    Eta,
    #[serde(rename = "eta1")]
    Eta1,
    #[serde(rename = "A")]
    A,
}

impl ExponentName {
    pub const ALL: [ExponentName; 10] = [
        ExponentName::Xe,
        ExponentName::Xcr,
        ExponentName::Xp,
        ExponentName::Xa,
        ExponentName::Nu,
        ExponentName::Mu,
        ExponentName::MuBaxter,
        ExponentName::Eta,
        ExponentName::Eta1,
        ExponentName::A,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExponentName::Xe => "X_e",
            ExponentName::Xcr => "X_CR",
            ExponentName::Xp => "X_P",
            ExponentName::Xa => "X_A",
            ExponentName::Nu => "nu",
            ExponentName::Mu => "mu",
            ExponentName::MuBaxter => "mu_B",
            ExponentName::Eta => "eta",
            ExponentName::Eta1 => "eta1",
            ExponentName::A => "A",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|n| n.as_str() == s)
    }
}

impl fmt::Display for ExponentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Fitted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub uncertainty: f64,
    pub provenance: Provenance,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            uncertainty: 0.0,
            provenance: Provenance::Exact,
        }
    }

    pub fn fitted(value: f64, uncertainty: f64) -> Self {
        Estimate {
            value,
            uncertainty: uncertainty.abs(),
            provenance: Provenance::Fitted,
        }
    }
}

/// Named exponents with uncertainties.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExponentSet {
    pub values: BTreeMap<ExponentName, Estimate>,
}

impl ExponentSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: ExponentName, e: Estimate) -> Self {
        self.insert(name, e);
        self
    }

    pub fn insert(&mut self, name: ExponentName, e: Estimate) {
        self.values.insert(name, e);
    }

    pub fn get(&self, name: ExponentName) -> Option<Estimate> {
        self.values.get(&name).copied()
    }

    pub fn value(&self, name: ExponentName) -> Option<f64> {
        self.get(name).map(|e| e.value)
    }

    /// Union; entries of `other` win on collisions.
    pub fn merge(&mut self, other: &ExponentSet) {
        for (k, v) in &other.values {
            self.values.insert(*k, *v);
        }
    }
}

/// `beta_c` of the square-lattice Ising model from `tanh(beta_c J) = sqrt(2) - 1`.
pub fn onsager_critical_beta(j: f64) -> Result<f64, ExactError> {
    if !(j > 0.0) {
        return Err(ExactError::NonPositiveCoupling(j));
    }
    Ok((2f64.sqrt() - 1.0).atanh() / j)
}

/// Exact nearest-neighbour Ising exponents.
pub fn ising_exponents() -> ExponentSet {
    ExponentSet::new()
        .with(ExponentName::Eta, Estimate::exact(0.25))
        .with(ExponentName::Nu, Estimate::exact(1.0))
        .with(ExponentName::Xe, Estimate::exact(1.0))
}

/// Exponents of two decoupled Ising layers (`lambda = 0`).
pub fn decoupled_ising_exponents() -> ExponentSet {
    ising_exponents()
        .with(ExponentName::Xcr, Estimate::exact(1.0))
        .with(ExponentName::Xp, Estimate::exact(0.25))
}

/// Baxter's angle: `tan(mu / 2) = e^{-4 lambda}`.
pub fn baxter_mu(lambda: f64) -> f64 {
    2.0 * (-4.0 * lambda).exp().atan()
}

/// Eight-vertex correlation-length exponent `nu = pi / (2 mu)`.
pub fn baxter_nu(lambda: f64) -> f64 {
    PI / (2.0 * baxter_mu(lambda))
}

/// Exponent from the vertex weights with Baxter's `tan(mu/2) = sqrt(cd/ab)`.
///
/// Under [`at_to_8v`] this ratio is `e^{-2 lambda}`, so the result equals
/// `baxter_nu(lambda / 2)`, not `baxter_nu(lambda)`.
pub fn baxter_nu_from_weights(w: &VertexWeights8) -> f64 {
    let mu = 2.0 * (w.c * w.d / (w.a * w.b)).sqrt().atan();
    PI / (2.0 * mu)
}

/// Coupled Ising with the plaquette quartic term at `J = J'` to eight-vertex
/// weights.
pub fn at_to_8v(j: f64, lambda: f64) -> VertexWeights8 {
    VertexWeights8 {
        a: (2.0 * j + lambda).exp(),
        b: (-2.0 * j + lambda).exp(),
        c: (-lambda).exp(),
        d: (-lambda).exp(),
    }
}

/// Ashkin–Teller bond energies to `(J, J', lambda, J4)`; `beta` is set to 1.
///
/// `J4` is the per-bond constant: each of the four relative states of a bond
/// has energy `-J s s~ - J' t t~ - lambda s s~ t t~ - J4`.
pub fn at_energies_to_couplings(e: &AtEnergies) -> CouplingParams {
    let [e0, e1, e2, e3] = e.eps;
    CouplingParams {
        j: -(e0 + e1 - e3 - e2) / 4.0,
        j_prime: -(e0 + e2 - e3 - e1) / 4.0,
        lambda: -(e0 + e3 - e1 - e2) / 4.0,
        j4: -(e0 + e1 + e3 + e2) / 4.0,
        beta: 1.0,
    }
}

/// Six-vertex weights to dimer weights `(t1, t2, t3, t4)` in the gauge
/// `t4 = 1`, checking `a6 = (t1 t3 + t2) e^lambda`.
pub fn sixv_to_dimer(a: &VertexWeights6, lambda: f64) -> Result<[f64; 4], ExactError> {
    check_positive(&a.a)?;
    let t = [a.a[0], a.a[3], a.a[1], 1.0];
    let want = (t[0] * t[2] + t[1]) * lambda.exp();
    if ((want - a.a[5]) / a.a[5]).abs() > 1e-12 {
        return Err(ExactError::Inconsistent(format!(
            "a6 = {} but (t1 t3 + t2) e^lambda = {}",
            a.a[5], want
        )));
    }
    Ok(t)
}

/// The plaquette coupling implied by six-vertex weights.
pub fn sixv_lambda(a: &VertexWeights6) -> Result<f64, ExactError> {
    check_positive(&a.a)?;
    Ok((a.a[5] / (a.a[0] * a.a[1] + a.a[3])).ln())
}

/// Inverse map. `a3` and `a5` are not fixed by the dimer weights; the
/// symmetric completion `a3 = a4`, `a5 = a6` is used.
pub fn dimer_to_sixv(t: &[f64; 4], lambda: f64) -> Result<VertexWeights6, ExactError> {
    check_positive(t)?;
    if (t[3] - 1.0).abs() > 1e-12 {
        return Err(ExactError::OutOfDomain(format!("gauge requires t4 = 1, got {}", t[3])));
    }
    let a6 = (t[0] * t[2] + t[1]) * lambda.exp();
    Ok(VertexWeights6 {
        a: [t[0], t[2], t[1], t[1], a6, a6],
    })
}

fn check_positive(x: &[f64]) -> Result<(), ExactError> {
    if x.iter().all(|&v| v > 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(ExactError::OutOfDomain("weights must be positive".into()))
    }
}

/// Full exponent set implied by the energy exponent through the extended
/// scaling relations.
pub fn kadanoff_relations(xe: f64) -> Result<ExponentSet, ExactError> {
    if !(xe > 0.0 && xe < 2.0) {
        return Err(ExactError::OutOfDomain(format!("X_e = {xe} must lie in (0, 2)")));
    }
    let xcr = 1.0 / xe;
    if xcr == 2.0 {
        return Err(ExactError::Singular("mu at X_CR = 2".into()));
    }
    let e = Estimate::exact;
    Ok(ExponentSet::new()
        .with(ExponentName::Xe, e(xe))
        .with(ExponentName::Xcr, e(xcr))
        .with(ExponentName::Xp, e(xe / 4.0))
        .with(ExponentName::Xa, e(xe / 4.0))
        .with(ExponentName::Nu, e(1.0 / (2.0 - xe)))
        .with(ExponentName::Mu, e((2.0 - xe) / (2.0 - xcr)))
        .with(ExponentName::Eta1, e(xe))
        .with(ExponentName::A, e(xe)))
}

fn reduced_coupling(c: &ContinuumCoupling) -> Result<f64, ExactError> {
    if c.v == 0.0 {
        return Err(ExactError::Singular("v = 0".into()));
    }
    let tau = c.lambda_tilde / (4.0 * PI * c.v);
    if tau.abs() >= 1.0 {
        return Err(ExactError::Singular(format!("|lambda~ / 4 pi v| = {} >= 1", tau.abs())));
    }
    Ok(tau)
}

/// Energy and crossover exponents of the continuum reference model.
pub fn continuum_exponents(c: &ContinuumCoupling) -> Result<ExponentSet, ExactError> {
    let x = reduced_coupling(c)?;
    Ok(ExponentSet::new()
        .with(ExponentName::Xe, Estimate::exact((1.0 - x) / (1.0 + x)))
        .with(ExponentName::Xcr, Estimate::exact((1.0 + x) / (1.0 - x))))
}

/// Anomaly coefficient `tau = lambda~ / (4 pi v)`; exactly linear.
pub fn anomaly_tau(c: &ContinuumCoupling) -> Result<f64, ExactError> {
    if c.v == 0.0 {
        return Err(ExactError::Singular("v = 0".into()));
    }
    Ok(c.lambda_tilde / (4.0 * PI * c.v))
}

/// Height-field amplitude `A = (Z^(1))^2 / (Z^2 (1 - lambda_inf^2 / 16 pi^2))`.
pub fn amplitude_a(c: &ContinuumCoupling) -> Result<f64, ExactError> {
    let x = c.lambda_inf / (4.0 * PI);
    if x.abs() >= 1.0 {
        return Err(ExactError::Singular(format!("|lambda_inf / 4 pi| = {} >= 1", x.abs())));
    }
    if c.z == 0.0 {
        return Err(ExactError::Singular("Z = 0".into()));
    }
    Ok(c.z1 * c.z1 / (c.z * c.z * (1.0 - x * x)))
}

/// Dimer exponent of the effective model, `(1 + x) / (1 - x)` with
/// `x = lambda_inf / 4 pi`.
pub fn eta1_continuum(lambda_inf: f64) -> Result<f64, ExactError> {
    let x = lambda_inf / (4.0 * PI);
    if x.abs() >= 1.0 {
        return Err(ExactError::Singular(format!("|lambda_inf / 4 pi| = {} >= 1", x.abs())));
    }
    Ok((1.0 + x) / (1.0 - x))
}

/// Electric exponent `X_A = A / 4`.
pub fn electric_exponent(a: f64) -> f64 {
    a / 4.0
}

/// Result of one relation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Propagated one-sigma uncertainty of the residual.
    pub sigma: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RelationReport {
    pub checks: Vec<RelationCheck>,
    /// Relations that could not be evaluated, with the exponents they lack.
    pub skipped: Vec<(String, Vec<ExponentName>)>,
    pub tolerance: f64,
    pub n_sigma: f64,
}

impl RelationReport {
    pub fn all_passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn missing(&self) -> Vec<ExponentName> {
        let mut m: Vec<ExponentName> = self.skipped.iter().flat_map(|(_, v)| v.iter().copied()).collect();
        m.sort();
        m.dedup();
        m
    }

    pub fn check(&self, name: &str) -> Option<&RelationCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for RelationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<26} {:>24} {:>24} {:>24} {:>24}  result",
            "relation", "lhs", "rhs", "residual", "threshold"
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<26} {:>24.16e} {:>24.16e} {:>24.16e} {:>24.16e}  {}",
                c.name,
                c.lhs,
                c.rhs,
                c.residual,
                c.threshold,
                if c.passed { "PASS" } else { "FAIL" }
            )?;
        }
        for (name, missing) in &self.skipped {
            let m: Vec<&str> = missing.iter().map(|n| n.as_str()).collect();
            writeln!(f, "{:<26} skipped (missing {})", name, m.join(", "))?;
        }
        Ok(())
    }
}

type Partial = (ExponentName, f64);

struct Relation {
    name: &'static str,
    inputs: &'static [ExponentName],
    /// Returns lhs, rhs and the partial derivatives of `lhs - rhs`.
    eval: fn(&dyn Fn(ExponentName) -> f64) -> (f64, f64, Vec<Partial>),
}

const RELATIONS: &[Relation] = {
    use ExponentName::*;
    &[
        Relation {
            name: "X_e * X_CR = 1",
            inputs: &[Xe, Xcr],
            eval: |g| {
                let (e, c) = (g(Xe), g(Xcr));
                (e * c, 1.0, vec![(Xe, c), (Xcr, e)])
            },
        },
        Relation {
            name: "nu = 1/(2 - X_e)",
            inputs: &[Nu, Xe],
            eval: |g| {
                let (n, e) = (g(Nu), g(Xe));
                let d = 2.0 - e;
                (n, 1.0 / d, vec![(Nu, 1.0), (Xe, -1.0 / (d * d))])
            },
        },
        Relation {
            name: "mu = (2 - X_e)/(2 - X_CR)",
            inputs: &[Mu, Xe, Xcr],
            eval: |g| {
                let (m, e, c) = (g(Mu), g(Xe), g(Xcr));
                let d = 2.0 - c;
                (
                    m,
                    (2.0 - e) / d,
                    vec![(Mu, 1.0), (Xe, 1.0 / d), (Xcr, -(2.0 - e) / (d * d))],
                )
            },
        },
        Relation {
            name: "nu = pi/(2 mu_B)",
            inputs: &[Nu, MuBaxter],
            eval: |g| {
                let (n, m) = (g(Nu), g(MuBaxter));
                (n, PI / (2.0 * m), vec![(Nu, 1.0), (MuBaxter, PI / (2.0 * m * m))])
            },
        },
        Relation {
            name: "X_P = X_e/4",
            inputs: &[Xp, Xe],
            eval: |g| (g(Xp), g(Xe) / 4.0, vec![(Xp, 1.0), (Xe, -0.25)]),
        },
        Relation {
            name: "X_e = eta1",
            inputs: &[Xe, Eta1],
            eval: |g| (g(Xe), g(Eta1), vec![(Xe, 1.0), (Eta1, -1.0)]),
        },
        Relation {
            name: "eta1 = A",
            inputs: &[Eta1, A],
            eval: |g| (g(Eta1), g(A), vec![(Eta1, 1.0), (A, -1.0)]),
        },
        Relation {
            name: "A = 4 X_A",
            inputs: &[A, Xa],
            eval: |g| (g(A), 4.0 * g(Xa), vec![(A, 1.0), (Xa, -4.0)]),
        },
        Relation {
            name: "X_P = X_A",
            inputs: &[Xp, Xa],
            eval: |g| (g(Xp), g(Xa), vec![(Xp, 1.0), (Xa, -1.0)]),
        },
    ]
};

/// Checks every extended scaling relation whose inputs are present.
///
/// A relation passes when `|lhs - rhs| <= tol + n_sigma * sigma`, where
/// `sigma` propagates the stated uncertainties to first order. Exponents
/// missing from `set` are listed, never guessed.
pub fn verify_relations_with(set: &ExponentSet, tol: f64, n_sigma: f64) -> RelationReport {
    let mut report = RelationReport {
        tolerance: tol,
        n_sigma,
        ..Default::default()
    };
    for rel in RELATIONS {
        let missing: Vec<ExponentName> = rel.inputs.iter().copied().filter(|n| set.get(*n).is_none()).collect();
        if !missing.is_empty() {
            report.skipped.push((rel.name.to_string(), missing));
            continue;
        }
        let getter = |n: ExponentName| set.value(n).expect("presence checked");
        let (lhs, rhs, partials) = (rel.eval)(&getter);
        let sigma = partials
            .iter()
            .map(|(n, d)| (d * set.get(*n).map_or(0.0, |e| e.uncertainty)).powi(2))
            .sum::<f64>()
            .sqrt();
        let residual = lhs - rhs;
        let threshold = tol + n_sigma * sigma;
        report.checks.push(RelationCheck {
            name: rel.name.to_string(),
            lhs,
            rhs,
            residual,
            sigma,
            threshold,
            passed: residual.abs() <= threshold,
        });
    }
    report
}

/// [`verify_relations_with`] at two combined standard deviations.
pub fn verify_relations(set: &ExponentSet, tol: f64) -> RelationReport {
    verify_relations_with(set, tol, 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn onsager_values() {
        let b1 = onsager_critical_beta(1.0).unwrap();
        assert!((b1 - 0.440_686_793_509_771_5).abs() < 1e-15);
        assert!((onsager_critical_beta(2.0).unwrap() - b1 / 2.0).abs() < 1e-15);
        assert!(((b1 * 1.0).tanh() - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!(onsager_critical_beta(0.0).is_err());
        assert!(onsager_critical_beta(-1.0).is_err());
    }

    #[test]
    fn ising_set() {
        let s = ising_exponents();
        assert_eq!(s.value(ExponentName::Eta), Some(0.25));
        assert_eq!(s.value(ExponentName::Xe), Some(1.0));
        assert_eq!(s.value(ExponentName::Nu), Some(1.0));
    }

    #[test]
    fn baxter_values() {
        assert_eq!(baxter_mu(0.0), PI / 2.0);
        assert_eq!(baxter_nu(0.0), 1.0);
        // independent evaluation: mu = 2 atan(e^-0.2)
        assert!((baxter_nu(0.05) - 1.144_798_091_076_632).abs() < 1e-12);
        let grid: Vec<f64> = (0..=40).map(|i| -0.2 + 0.01 * i as f64).collect();
        for w in grid.windows(2) {
            assert!(baxter_nu(w[1]) > baxter_nu(w[0]));
        }
    }

    #[test]
    fn eight_vertex_map() {
        let w = at_to_8v(0.0, 0.0);
        assert_eq!((w.a, w.b, w.c, w.d), (1.0, 1.0, 1.0, 1.0));
        let w = at_to_8v(0.5, 0.1);
        assert!((w.a - 1.1f64.exp()).abs() < 1e-15);
        assert!((w.b - (-0.9f64).exp()).abs() < 1e-15);
        assert!((w.c - (-0.1f64).exp()).abs() < 1e-15);
        for lambda in [-0.3, -0.05, 0.0, 0.07, 0.2] {
            let w = at_to_8v(0.37, lambda);
            let r = w.c * w.d / (w.a * w.b);
            assert!((r / (-4.0 * lambda).exp() - 1.0).abs() < 1e-14);
            // the square root halves the exponent of e^{-4 lambda}
            assert!((baxter_nu_from_weights(&w) - baxter_nu(lambda / 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn at_energy_map() {
        let c = at_energies_to_couplings(&AtEnergies { eps: [0.3; 4] });
        assert_eq!((c.j, c.j_prime, c.lambda), (0.0, 0.0, 0.0));
        let c = at_energies_to_couplings(&AtEnergies { eps: [-4.0, 0.0, 0.0, 0.0] });
        assert_eq!((c.j, c.j_prime, c.lambda, c.j4), (1.0, 1.0, 1.0, 1.0));
        let e = [0.4, -1.3, 2.2, 0.9];
        let c1 = at_energies_to_couplings(&AtEnergies { eps: e });
        let c2 = at_energies_to_couplings(&AtEnergies { eps: e.map(|x| 2.0 * x) });
        assert_eq!(
            (2.0 * c1.j, 2.0 * c1.j_prime, 2.0 * c1.lambda, 2.0 * c1.j4),
            (c2.j, c2.j_prime, c2.lambda, c2.j4)
        );
    }

    #[test]
    fn at_energy_map_reproduces_bond_energies() {
        // bond energy of relative state (s, t) = (s s~, t t~)
        let e = [0.4, -1.3, 2.2, 0.9];
        let c = at_energies_to_couplings(&AtEnergies { eps: e });
        let bond = |s: f64, t: f64| -c.j * s - c.j_prime * t - c.lambda * s * t - c.j4;
        assert!((bond(1.0, 1.0) - e[0]).abs() < 1e-14);
        assert!((bond(1.0, -1.0) - e[1]).abs() < 1e-14);
        assert!((bond(-1.0, 1.0) - e[2]).abs() < 1e-14);
        assert!((bond(-1.0, -1.0) - e[3]).abs() < 1e-14);
    }

    #[test]
    fn six_vertex_map() {
        let a = VertexWeights6 {
            a: [1.0, 1.0, 7.0, 1.0, 3.0, 2.0],
        };
        assert_eq!(sixv_to_dimer(&a, 0.0).unwrap(), [1.0, 1.0, 1.0, 1.0]);
        assert!(sixv_to_dimer(&a, 0.3).is_err());
        let base = sixv_lambda(&a).unwrap();
        let mut shifted = a;
        shifted.a[5] *= 0.25f64.exp();
        assert!((sixv_lambda(&shifted).unwrap() - base - 0.25).abs() < 1e-14);
        let t = [1.3, 0.7, 2.1, 1.0];
        let back = sixv_to_dimer(&dimer_to_sixv(&t, -0.4).unwrap(), -0.4).unwrap();
        for i in 0..4 {
            assert!((back[i] - t[i]).abs() < 1e-15);
        }
        assert!(dimer_to_sixv(&[1.0, 1.0, 1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn kadanoff_values() {
        let s = kadanoff_relations(1.0).unwrap();
        assert_eq!(s.value(ExponentName::Xcr), Some(1.0));
        assert_eq!(s.value(ExponentName::Xp), Some(0.25));
        assert_eq!(s.value(ExponentName::Nu), Some(1.0));
        assert_eq!(s.value(ExponentName::Nu), Some(baxter_nu(0.0)));
        let s = kadanoff_relations(0.9).unwrap();
        assert!((s.value(ExponentName::Xcr).unwrap() - 1.111_111_111_111_111).abs() < 1e-12);
        assert!((s.value(ExponentName::Xp).unwrap() - 0.225).abs() < 1e-15);
        assert!((s.value(ExponentName::Nu).unwrap() - 0.909_090_909_090_909).abs() < 1e-12);
        assert!(kadanoff_relations(2.0).is_err());
        assert!(kadanoff_relations(0.0).is_err());
    }

    #[test]
    fn continuum_values() {
        let s = continuum_exponents(&ContinuumCoupling::symmetric(0.0)).unwrap();
        assert_eq!(s.value(ExponentName::Xe), Some(1.0));
        assert_eq!(s.value(ExponentName::Xcr), Some(1.0));
        let c = ContinuumCoupling::symmetric(0.01 * 4.0 * PI);
        let s = continuum_exponents(&c).unwrap();
        assert!((s.value(ExponentName::Xe).unwrap() - 0.980_198_019_801_98).abs() < 1e-12);
        assert!((s.value(ExponentName::Xcr).unwrap() - 1.020_202_020_202_02).abs() < 1e-12);
        assert!(continuum_exponents(&ContinuumCoupling::symmetric(4.0 * PI)).is_err());
    }

    #[test]
    fn anomaly_values() {
        assert_eq!(anomaly_tau(&ContinuumCoupling::symmetric(0.0)).unwrap(), 0.0);
        let t = anomaly_tau(&ContinuumCoupling::symmetric(0.1)).unwrap();
        assert!((t - 0.007_957_747_154_594_767).abs() < 1e-15);
        let t2 = anomaly_tau(&ContinuumCoupling::symmetric(0.2)).unwrap();
        assert_eq!(t2, 2.0 * t);
        let mut c = ContinuumCoupling::symmetric(0.1);
        c.v = 0.0;
        assert!(anomaly_tau(&c).is_err());
    }

    #[test]
    fn amplitude_values() {
        assert_eq!(amplitude_a(&ContinuumCoupling::symmetric(0.0)).unwrap(), 1.0);
        let c = ContinuumCoupling::symmetric(0.02 * 4.0 * PI);
        assert!((amplitude_a(&c).unwrap() - 1.02 / 0.98).abs() < 1e-12);
        for l in [-1.0, -0.3, 0.05, 0.8] {
            let eta1 = eta1_continuum(l).unwrap();
            assert!((amplitude_a(&ContinuumCoupling::symmetric(l)).unwrap() - eta1).abs() < 1e-12);
            assert!((eta1 * eta1_continuum(-l).unwrap() - 1.0).abs() < 1e-14);
        }
        // first order: 1 + lambda / (2 pi)
        let l = 1e-4;
        assert!((eta1_continuum(l).unwrap() - (1.0 + l / (2.0 * PI))).abs() < 1e-9);
    }

    #[test]
    fn electric_values() {
        assert_eq!(electric_exponent(1.0), 0.25);
        assert!((electric_exponent(1.2) - 0.3).abs() < 1e-15);
        assert_eq!(4.0 * electric_exponent(0.77), 0.77);
    }

    #[test]
    fn verify_ising_and_violation() {
        let ising = ExponentSet::new()
            .with(ExponentName::Xe, Estimate::exact(1.0))
            .with(ExponentName::Xcr, Estimate::exact(1.0))
            .with(ExponentName::Nu, Estimate::exact(1.0))
            .with(ExponentName::Xp, Estimate::exact(0.25));
        let r = verify_relations(&ising, 1e-12);
        assert!(r.all_passed(), "{r}");
        assert!(r.missing().contains(&ExponentName::Mu));

        let bad = ExponentSet::new()
            .with(ExponentName::Xe, Estimate::exact(1.0))
            .with(ExponentName::Xcr, Estimate::exact(1.2));
        let r = verify_relations(&bad, 1e-12);
        assert!(!r.all_passed());
        let c = r.check("X_e * X_CR = 1").unwrap();
        assert!((c.residual - 0.2).abs() < 1e-12);
    }

    #[test]
    fn uncertainties_widen_threshold() {
        let set = ExponentSet::new()
            .with(ExponentName::Eta1, Estimate::fitted(1.03, 0.02))
            .with(ExponentName::A, Estimate::fitted(1.00, 0.01));
        let r = verify_relations(&set, 0.0);
        let c = r.check("eta1 = A").unwrap();
        assert!((c.sigma - (0.02f64.powi(2) + 0.01f64.powi(2)).sqrt()).abs() < 1e-15);
        assert!(c.passed);
    }

    #[test]
    fn exponent_set_serde_roundtrip() {
        let s = kadanoff_relations(0.93).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert!(js.contains("\"X_CR\""));
        let back: ExponentSet = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
    }
}
