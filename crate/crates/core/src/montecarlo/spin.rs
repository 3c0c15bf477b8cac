use super::{chain_rng, McConfig, McError, McRun, Record, SiteOrder, SpinRecord, RNG_NAME};
use crate::lattice::{SpinHamiltonian, TorusLattice};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Site visiting order of one sweep: even sublattice of every layer, then
/// the odd one.
pub(crate) fn checkerboard_order(lattice: &TorusLattice, layers: usize) -> Vec<usize> {
    let n = lattice.num_vertices();
    let mut order = Vec::with_capacity(layers * n);
    for parity in 0..2 {
        for layer in 0..layers {
            for v in 0..n {
                let (x, y) = lattice.coords(v);
                if (x + y) % 2 == parity {
                    order.push(layer * n + v);
                }
            }
        }
    }
    order
}

struct SpinChain {
    ham: SpinHamiltonian,
    beta: f64,
    spins: Vec<i8>,
    /// Fixed visiting order; empty for random-site sweeps.
    order: Vec<usize>,
    accepted: u64,
    proposed: u64,
}

impl SpinChain {
    fn update(&mut self, k: usize, rng: &mut ChaCha8Rng) {
        let de = self.ham.delta_flip(&self.spins, k);
        self.proposed += 1;
        if de <= 0.0 || rng.gen::<f64>() < (-self.beta * de).exp() {
            self.spins[k] = -self.spins[k];
            self.accepted += 1;
        }
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng) {
        if self.order.is_empty() {
            let n = self.spins.len();
            for _ in 0..n {
                let k = rng.gen_range(0..n);
                self.update(k, rng);
            }
        } else {
            for i in 0..self.order.len() {
                self.update(self.order[i], rng);
            }
        }
    }
}

/// Metropolis chain for the coupled, eight-vertex-coupled and generalized
/// Ising models, started from all spins up, in the order set by `cfg.order`.
pub fn run_coupled_ising(cfg: &McConfig) -> Result<McRun, McError> {
    cfg.validate()?;
    let (model, beta) = cfg
        .model
        .spin_model()
        .ok_or_else(|| McError::WrongModel("spin sampler".into()))?;
    let lattice = cfg.lattice()?;
    let ham = SpinHamiltonian::build(&lattice, &model)?;
    let layers = model.num_layers();
    let mut chain = SpinChain {
        spins: vec![1; ham.num_spins()],
        order: match cfg.order {
            SiteOrder::Checkerboard => checkerboard_order(&lattice, layers),
            SiteOrder::RandomSite => Vec::new(),
        },
        ham,
        beta,
        accepted: 0,
        proposed: 0,
    };
    let mut rng = chain_rng(cfg.seed, 0);
    for _ in 0..cfg.thermalization_sweeps() {
        chain.sweep(&mut rng);
    }
    chain.accepted = 0;
    chain.proposed = 0;
    let stride = cfg.stride_sweeps();
    let mut records = Vec::with_capacity(cfg.sweeps / stride);
    for s in 1..=cfg.sweeps {
        chain.sweep(&mut rng);
        if s % stride == 0 {
            records.push(Record::Spin(SpinRecord {
                sweep: s,
                energy: chain.ham.energy(&chain.spins),
                spins: chain.spins.clone(),
            }));
        }
    }
    log::debug!(
        "spin chain L={} beta={beta}: {} records, acceptance {:.3}",
        cfg.side,
        records.len(),
        chain.accepted as f64 / chain.proposed.max(1) as f64
    );
    Ok(McRun {
        config: cfg.clone(),
        rng: RNG_NAME.to_string(),
        acceptance: chain.accepted as f64 / chain.proposed.max(1) as f64,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactsol::CouplingParams;
    use crate::montecarlo::Model;

    fn cfg(lambda: f64, seed: u64) -> McConfig {
        McConfig::new(
            Model::CoupledIsingAt(CouplingParams {
                j: 1.0,
                j_prime: 1.0,
                lambda,
                j4: 0.0,
                beta: 0.3,
            }),
            4,
            200,
            seed,
        )
        .with_thermalization(50)
        .with_stride(2)
    }

    #[test]
    fn checkerboard_covers_every_site_once() {
        let t = TorusLattice::for_spins(4).unwrap();
        let mut o = checkerboard_order(&t, 2);
        assert_eq!(o.len(), 32);
        // the first half holds only even sites of both layers
        assert!(o[..16].iter().all(|&k| {
            let (x, y) = t.coords(k % 16);
            (x + y) % 2 == 0
        }));
        o.sort_unstable();
        assert_eq!(o, (0..32).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_stream() {
        let a = run_coupled_ising(&cfg(0.1, 3)).unwrap();
        let b = run_coupled_ising(&cfg(0.1, 3)).unwrap();
        assert_eq!(a, b);
        let c = run_coupled_ising(&cfg(0.1, 4)).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn records_follow_stride() {
        let run = run_coupled_ising(&cfg(0.0, 1)).unwrap();
        assert_eq!(run.records.len(), 100);
        let sweeps: Vec<usize> = run.spin_records().map(|r| r.sweep).collect();
        assert_eq!(sweeps[..3], [2, 4, 6]);
        assert!(run.acceptance > 0.0 && run.acceptance < 1.0);
    }

    #[test]
    fn recorded_energy_matches_spins() {
        let c = cfg(0.2, 8);
        let run = run_coupled_ising(&c).unwrap();
        let (model, _) = c.model.spin_model().unwrap();
        let ham = SpinHamiltonian::build(&c.lattice().unwrap(), &model).unwrap();
        for r in run.spin_records() {
            assert_eq!(r.energy, ham.energy(&r.spins));
        }
    }

    #[test]
    fn dimer_model_rejected() {
        let c = McConfig::new(Model::InteractingDimer(crate::montecarlo::DimerParams::uniform(0.0)), 4, 1, 1);
        assert!(matches!(run_coupled_ising(&c), Err(McError::WrongModel(_))));
    }
}
