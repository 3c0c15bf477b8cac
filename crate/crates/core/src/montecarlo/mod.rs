//! Markov chain samplers and correlation estimators.
//!
//! Spin models use single-site Metropolis, by default in checkerboard order
//! over both layers; the interacting dimer model uses plaquette rotations started from
//! the columnar cover, so it samples the zero-winding sector only. Each chain
//! is driven by one `ChaCha8Rng` seeded with `seed_from_u64(seed)`;
//! independent chains use distinct word streams via [`chain_rng`].

mod dimer;
mod estimators;
mod spin;
mod transition;

pub use dimer::run_interacting_dimer;
pub use estimators::{
    measure_binder, measure_correlations, measure_electric, measure_height_moments, measure_scalar,
    ObservableKind, OrderParameter, ScalarObservable, HeightMoments,
};
pub use spin::run_coupled_ising;
pub use transition::{
    dimer_transition_matrix, exact_spin_averages, spin_transition_matrix, SpinAverages, TransitionMatrix,
};

pub use crate::stats::CorrelationSeries;

use crate::exactsol::CouplingParams;
use crate::lattice::{LatticeError, QuarticKernel, QuarticVariant, SpinModel, TorusLattice};
use crate::stats::StatsError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Recorded in run metadata so chains can be replayed.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3), seed_from_u64, stream per chain";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least {need} records, got {got}")]
    TooFewRecords { need: usize, got: usize },
    #[error("observable {0} is not defined for this model")]
    WrongModel(String),
    #[error("separation {r} exceeds L/2 = {half}")]
    SeparationTooLarge { r: usize, half: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Bond weights and plaquette coupling of the interacting dimer model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimerParams {
    /// `t1..t4` indexed by [`WeightClass`](crate::lattice::WeightClass).
    pub t: [f64; 4],
    /// Coupling of the parallel-dimer plaquette indicator.
    pub lambda: f64,
}

impl DimerParams {
    pub fn uniform(lambda: f64) -> Self {
        DimerParams { t: [1.0; 4], lambda }
    }
}

/// Model and parameters of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Model {
    #[serde(rename = "coupled_ising_AT")]
    CoupledIsingAt(CouplingParams),
    #[serde(rename = "coupled_ising_8V")]
    CoupledIsing8v(CouplingParams),
    /// Single layer with quartic kernel; `kernel` defaults to the
    /// next-nearest-neighbour one.
    #[serde(rename = "generalized_ising")]
    GeneralizedIsing {
        params: CouplingParams,
        #[serde(default = "QuarticKernel::next_nearest")]
        kernel: QuarticKernel,
    },
    #[serde(rename = "interacting_dimer")]
    InteractingDimer(DimerParams),
}

impl Model {
    pub fn is_dimer(&self) -> bool {
        matches!(self, Model::InteractingDimer(_))
    }

    /// Spin Hamiltonian and inverse temperature; `None` for dimers.
    pub fn spin_model(&self) -> Option<(SpinModel, f64)> {
        match self {
            Model::CoupledIsingAt(p) => Some((
                SpinModel::Coupled {
                    params: *p,
                    variant: QuarticVariant::AshkinTeller,
                },
                p.beta,
            )),
            Model::CoupledIsing8v(p) => Some((
                SpinModel::Coupled {
                    params: *p,
                    variant: QuarticVariant::EightVertex,
                },
                p.beta,
            )),
            Model::GeneralizedIsing { params, kernel } => Some((
                SpinModel::Generalized {
                    j: params.j,
                    lambda: params.lambda,
                    kernel: kernel.clone(),
                },
                params.beta,
            )),
            Model::InteractingDimer(_) => None,
        }
    }
}

/// Visiting order of single-site spin updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteOrder {
    /// Even sublattice of every layer, then the odd one.
    #[default]
    Checkerboard,
    /// `N` uniformly chosen sites per sweep. Needed on `L = 2`, where every
    /// neighbour pair is joined by two bonds and the deterministic sweep is
    /// reducible.
    RandomSite,
}

/// Chain configuration. `None` sweeps fields take the defaults
/// `max(10^4, 100 L)` for thermalization and `L/2` for the stride.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub model: Model,
    pub side: usize,
    /// Measurement sweeps after thermalization.
    pub sweeps: usize,
    #[serde(default)]
    pub thermalization: Option<usize>,
    #[serde(default)]
    pub stride: Option<usize>,
    #[serde(default)]
    pub order: SiteOrder,
    pub seed: u64,
}

impl McConfig {
    pub fn new(model: Model, side: usize, sweeps: usize, seed: u64) -> Self {
        McConfig {
            model,
            side,
            sweeps,
            thermalization: None,
            stride: None,
            order: SiteOrder::default(),
            seed,
        }
    }

    pub fn with_order(mut self, order: SiteOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_thermalization(mut self, sweeps: usize) -> Self {
        self.thermalization = Some(sweeps);
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = Some(stride);
        self
    }

    pub fn thermalization_sweeps(&self) -> usize {
        self.thermalization.unwrap_or((100 * self.side).max(10_000))
    }

    pub fn stride_sweeps(&self) -> usize {
        self.stride.unwrap_or((self.side / 2).max(1))
    }

    /// Spin chains accept `L = 2` for enumeration checks; dimers need `L >= 4`.
    pub fn validate(&self) -> Result<(), McError> {
        if self.sweeps == 0 {
            return Err(McError::InvalidConfig("sweeps must be positive".into()));
        }
        if self.stride == Some(0) {
            return Err(McError::InvalidConfig("stride must be at least 1".into()));
        }
        let min = if self.model.is_dimer() { 4 } else { 2 };
        if self.side % 2 == 1 || self.side < min {
            return Err(McError::InvalidConfig(format!(
                "side must be even and at least {min}, got {}",
                self.side
            )));
        }
        if self.side == 2 && self.order == SiteOrder::Checkerboard && !self.model.is_dimer() {
            return Err(McError::InvalidConfig(
                "checkerboard sweeps are reducible on L = 2; use random-site order".into(),
            ));
        }
        match &self.model {
            Model::InteractingDimer(p) => {
                if p.t.iter().any(|&t| !(t > 0.0 && t.is_finite())) || !p.lambda.is_finite() {
                    return Err(McError::InvalidConfig(format!("bad dimer parameters {p:?}")));
                }
            }
            Model::CoupledIsingAt(p) | Model::CoupledIsing8v(p) | Model::GeneralizedIsing { params: p, .. } => {
                p.validate().map_err(|e| McError::InvalidConfig(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<TorusLattice, McError> {
        Ok(if self.model.is_dimer() {
            TorusLattice::build(self.side)?
        } else {
            TorusLattice::for_spins(self.side)?
        })
    }
}

/// Generator for chain `stream` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One spin measurement: energy `H` (without `beta`) and both layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinRecord {
    pub sweep: usize,
    pub energy: f64,
    /// `sigma` then `sigma'` (absent for single-layer models).
    pub spins: Vec<i8>,
}

/// One dimer measurement; `matched` is a bitset over bonds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimerRecord {
    pub sweep: usize,
    pub parallel_plaquettes: usize,
    pub matched: Vec<u64>,
}

impl DimerRecord {
    #[inline]
    pub fn occupied(&self, b: usize) -> bool {
        self.matched[b / 64] >> (b % 64) & 1 == 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Record {
    Spin(SpinRecord),
    Dimer(DimerRecord),
}

/// Output of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRun {
    pub config: McConfig,
    pub rng: String,
    /// Fraction of accepted proposals during measurement.
    pub acceptance: f64,
    pub records: Vec<Record>,
}

impl McRun {
    pub fn spin_records(&self) -> impl Iterator<Item = &SpinRecord> {
        self.records.iter().filter_map(|r| match r {
            Record::Spin(s) => Some(s),
            Record::Dimer(_) => None,
        })
    }

    pub fn dimer_records(&self) -> impl Iterator<Item = &DimerRecord> {
        self.records.iter().filter_map(|r| match r {
            Record::Dimer(d) => Some(d),
            Record::Spin(_) => None,
        })
    }
}

/// Runs the sampler matching `cfg.model`.
pub fn run(cfg: &McConfig) -> Result<McRun, McError> {
    if cfg.model.is_dimer() {
        run_interacting_dimer(cfg)
    } else {
        run_coupled_ising(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(lambda: f64, beta: f64) -> Model {
        Model::CoupledIsingAt(CouplingParams {
            j: 1.0,
            j_prime: 1.0,
            lambda,
            j4: 0.0,
            beta,
        })
    }

    #[test]
    fn defaults() {
        let c = McConfig::new(at(0.0, 0.4), 64, 10, 1);
        assert_eq!(c.thermalization_sweeps(), 10_000);
        assert_eq!(c.stride_sweeps(), 32);
        let c = McConfig::new(at(0.0, 0.4), 128, 10, 1);
        assert_eq!(c.thermalization_sweeps(), 12_800);
    }

    #[test]
    fn validation() {
        assert!(McConfig::new(at(0.0, 0.4), 2, 10, 1).validate().is_err());
        assert!(McConfig::new(at(0.0, 0.4), 2, 10, 1).with_order(SiteOrder::RandomSite).validate().is_ok());
        assert!(McConfig::new(at(0.0, 0.4), 3, 10, 1).validate().is_err());
        assert!(McConfig::new(at(0.0, 0.4), 4, 0, 1).validate().is_err());
        assert!(McConfig::new(at(0.0, 0.4), 4, 1, 1).with_stride(0).validate().is_err());
        let d = Model::InteractingDimer(DimerParams::uniform(0.0));
        assert!(McConfig::new(d.clone(), 2, 10, 1).validate().is_err());
        assert!(McConfig::new(d, 4, 10, 1).validate().is_ok());
        let bad = Model::InteractingDimer(DimerParams {
            t: [1.0, 0.0, 1.0, 1.0],
            lambda: 0.0,
        });
        assert!(McConfig::new(bad, 4, 10, 1).validate().is_err());
    }

    #[test]
    fn config_serde_round_trip() {
        let cfgs = [
            McConfig::new(at(0.1, 0.3), 8, 100, 7).with_stride(2),
            McConfig::new(Model::InteractingDimer(DimerParams::uniform(0.05)), 16, 100, 9),
        ];
        for c in cfgs {
            let s = serde_json::to_string(&c).unwrap();
            let back: McConfig = serde_json::from_str(&s).unwrap();
            assert_eq!(back, c);
        }
        let s = serde_json::to_string(&McConfig::new(at(0.1, 0.3), 8, 1, 1)).unwrap();
        assert!(s.contains("\"kind\":\"coupled_ising_AT\""));
    }

    #[test]
    fn generalized_kernel_defaults_to_next_nearest() {
        let s = r#"{"kind":"generalized_ising","params":{"j":1.0,"j_prime":0.0,"lambda":0.1,"j4":0.0,"beta":0.4}}"#;
        let m: Model = serde_json::from_str(s).unwrap();
        match m {
            Model::GeneralizedIsing { kernel, .. } => assert_eq!(kernel, QuarticKernel::next_nearest()),
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn streams_differ() {
        use rand::RngCore;
        let mut a = chain_rng(5, 0);
        let mut b = chain_rng(5, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
