use super::{chain_rng, DimerParams, DimerRecord, McConfig, McError, McRun, Model, Record, RNG_NAME};
use crate::lattice::{DimerCover, TorusLattice};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Bonds that a rotation on face `f` removes and adds, if `f` holds two
/// parallel dimers.
pub(crate) fn rotation(lattice: &TorusLattice, matched: &[bool], f: usize) -> Option<([usize; 2], [usize; 2])> {
    let [bo, r, t, le] = lattice.face_bonds(f);
    if matched[bo] && matched[t] {
        Some(([bo, t], [r, le]))
    } else if matched[r] && matched[le] {
        Some(([r, le], [bo, t]))
    } else {
        None
    }
}

pub(crate) fn is_parallel(lattice: &TorusLattice, matched: &[bool], f: usize) -> bool {
    let [bo, r, t, le] = lattice.face_bonds(f);
    (matched[bo] && matched[t]) || (matched[r] && matched[le])
}

/// `ln` of the acceptance ratio for rotating face `f` and the change in the
/// number of parallel plaquettes. Leaves `matched` unchanged.
pub(crate) fn rotation_log_ratio(
    lattice: &TorusLattice,
    ln_t: &[f64],
    lambda: f64,
    matched: &mut [bool],
    f: usize,
) -> Option<(f64, i64)> {
    let (old, new) = rotation(lattice, matched, f)?;
    let nb = lattice.face_neighbors(f);
    let count = |m: &[bool]| nb.iter().filter(|&&g| is_parallel(lattice, m, g)).count() as i64;
    let before = count(matched);
    apply(matched, old, new);
    let after = count(matched);
    apply(matched, new, old);
    // face f itself stays parallel
    let df = after - before;
    let ln_w = ln_t[new[0]] + ln_t[new[1]] - ln_t[old[0]] - ln_t[old[1]] + lambda * df as f64;
    Some((ln_w, df))
}

#[inline]
pub(crate) fn apply(matched: &mut [bool], old: [usize; 2], new: [usize; 2]) {
    matched[old[0]] = false;
    matched[old[1]] = false;
    matched[new[0]] = true;
    matched[new[1]] = true;
}

pub(crate) fn bond_log_weights(lattice: &TorusLattice, t: &[f64; 4]) -> Vec<f64> {
    (0..lattice.num_bonds())
        .map(|b| t[lattice.weight_class(b) as usize].ln())
        .collect()
}

fn pack(matched: &[bool]) -> Vec<u64> {
    let mut out = vec![0u64; matched.len().div_ceil(64)];
    for (b, _) in matched.iter().enumerate().filter(|(_, &m)| m) {
        out[b / 64] |= 1 << (b % 64);
    }
    out
}

struct DimerChain<'a> {
    lattice: &'a TorusLattice,
    params: DimerParams,
    ln_t: Vec<f64>,
    matched: Vec<bool>,
    parallel: i64,
    accepted: u64,
    proposed: u64,
}

impl DimerChain<'_> {
    /// `num_faces` rotation attempts at uniformly chosen faces.
    fn sweep(&mut self, rng: &mut ChaCha8Rng) {
        let nf = self.lattice.num_faces();
        for _ in 0..nf {
            let f = rng.gen_range(0..nf);
            self.proposed += 1;
            let Some((ln_w, df)) =
                rotation_log_ratio(self.lattice, &self.ln_t, self.params.lambda, &mut self.matched, f)
            else {
                continue;
            };
            if ln_w >= 0.0 || rng.gen::<f64>() < ln_w.exp() {
                let (old, new) = rotation(self.lattice, &self.matched, f).expect("rotatable");
                apply(&mut self.matched, old, new);
                self.parallel += df;
                self.accepted += 1;
            }
        }
    }
}

/// Plaquette-rotation chain for the interacting dimer model with weight
/// `prod t_b * exp(lambda * #parallel plaquettes)`, started from the columnar
/// cover.
pub fn run_interacting_dimer(cfg: &McConfig) -> Result<McRun, McError> {
    cfg.validate()?;
    let Model::InteractingDimer(params) = cfg.model else {
        return Err(McError::WrongModel("dimer sampler".into()));
    };
    let lattice = cfg.lattice()?;
    let start = DimerCover::columnar(&lattice);
    let mut chain = DimerChain {
        lattice: &lattice,
        params,
        ln_t: bond_log_weights(&lattice, &params.t),
        parallel: start.parallel_plaquettes(&lattice) as i64,
        matched: start.matched,
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
            records.push(Record::Dimer(DimerRecord {
                sweep: s,
                parallel_plaquettes: chain.parallel as usize,
                matched: pack(&chain.matched),
            }));
        }
    }
    let acceptance = chain.accepted as f64 / chain.proposed.max(1) as f64;
    log::debug!(
        "dimer chain L={} lambda={}: {} records, acceptance {acceptance:.3}",
        cfg.side,
        params.lambda,
        records.len()
    );
    Ok(McRun {
        config: cfg.clone(),
        rng: RNG_NAME.to_string(),
        acceptance,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lambda: f64, seed: u64) -> McConfig {
        McConfig::new(Model::InteractingDimer(DimerParams::uniform(lambda)), 8, 400, seed)
            .with_thermalization(100)
            .with_stride(4)
    }

    fn unpack(r: &DimerRecord, nb: usize) -> DimerCover {
        DimerCover {
            matched: (0..nb).map(|b| r.occupied(b)).collect(),
        }
    }

    #[test]
    fn records_are_zero_winding_covers() {
        let c = cfg(0.3, 2);
        let t = c.lattice().unwrap();
        let run = run_interacting_dimer(&c).unwrap();
        assert_eq!(run.records.len(), 100);
        for r in run.dimer_records() {
            let cover = unpack(r, t.num_bonds());
            cover.validate(&t).unwrap();
            assert_eq!(cover.winding(&t), (0, 0));
            assert_eq!(cover.parallel_plaquettes(&t), r.parallel_plaquettes);
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(run_interacting_dimer(&cfg(0.1, 5)).unwrap(), run_interacting_dimer(&cfg(0.1, 5)).unwrap());
    }

    #[test]
    fn columnar_rotation_changes_parallel_count() {
        let t = TorusLattice::build(4).unwrap();
        let mut m = DimerCover::columnar(&t).matched;
        // columnar: all faces between paired columns are parallel
        let before = DimerCover { matched: m.clone() }.parallel_plaquettes(&t) as i64;
        let ln_t = bond_log_weights(&t, &[1.0; 4]);
        let (ln_w, df) = rotation_log_ratio(&t, &ln_t, 0.7, &mut m, 0).unwrap();
        let (old, new) = rotation(&t, &m, 0).unwrap();
        apply(&mut m, old, new);
        let after = DimerCover { matched: m }.parallel_plaquettes(&t) as i64;
        assert_eq!(after - before, df);
        assert!((ln_w - 0.7 * df as f64).abs() < 1e-15);
    }
}
