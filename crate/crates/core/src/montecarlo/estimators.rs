//! Estimators over measurement records. Every per-record quantity is first
//! reduced to a translation average; errors come from a jackknife over
//! consecutive bins of records.

use super::{DimerRecord, McError, McRun, SpinRecord};
use crate::lattice::{Step, TorusLattice};
use crate::stats::{bin_means, jackknife, Channel, CorrelationSeries, Measured, MIN_BINS};
use serde::{Deserialize, Serialize};

/// Minimum number of records an estimator accepts.
pub const MIN_RECORDS: usize = 100;
const MAX_BINS: usize = 50;

/// Local observables whose two-point functions are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    /// `sigma_x`, averaged over the layers.
    Spin,
    /// `rho_x + rho'_x` with `rho_x = s_x s_{x+e0} + s_x s_{x+e1}`.
    EnergySum,
    /// `rho_x - rho'_x`.
    EnergyDiff,
    /// `sigma_x sigma'_x`.
    Polarization,
    /// Bond occupation `I_b`, parallel bonds along their own axis.
    Dimer,
    /// Bond occupation `I_b`, parallel bonds separated perpendicular to them.
    DimerTransverse,
    /// Height variance along straight dual paths.
    HeightPair,
    /// `cos(pi (h_x - h_y))` with the deterministic phase removed.
    Electric,
}

impl ObservableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObservableKind::Spin => "spin",
            ObservableKind::EnergySum => "energy_sum",
            ObservableKind::EnergyDiff => "energy_diff",
            ObservableKind::Polarization => "polarization",
            ObservableKind::Dimer => "dimer",
            ObservableKind::DimerTransverse => "dimer_transverse",
            ObservableKind::HeightPair => "height_variance",
            ObservableKind::Electric => "electric",
        }
    }
}

/// Single-number averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScalarObservable {
    Energy,
    EnergySquared,
    /// `m^2` of the first layer, `m = N^{-1} sum_x s_x`.
    Magnetization2,
    /// `p^2` with `p = N^{-1} sum_x s_x s'_x`.
    Polarization2,
    ParallelPlaquettes,
    /// `< prod_i s_i >` over flat spin indices.
    SpinProduct(Vec<usize>),
    /// `< prod_b I_b >`.
    BondProduct(Vec<usize>),
}

/// Order parameter whose Binder cumulant is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderParameter {
    Magnetization,
    Polarization,
}

fn bins_for(n: usize) -> Result<usize, McError> {
    if n < MIN_RECORDS {
        return Err(McError::TooFewRecords {
            need: MIN_RECORDS,
            got: n,
        });
    }
    Ok((n / 5).clamp(MIN_BINS, MAX_BINS))
}

/// Bins a per-record vector stream: result `[bin][component]`.
fn binned(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, McError> {
    let nbins = bins_for(rows.len())?;
    let k = rows[0].len();
    let mut out = vec![vec![0.0; k]; nbins];
    for c in 0..k {
        let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        for (b, m) in bin_means(&col, nbins)?.into_iter().enumerate() {
            out[b][c] = m;
        }
    }
    Ok(out)
}

fn spin_records(run: &McRun) -> Result<Vec<&SpinRecord>, McError> {
    if run.config.model.is_dimer() {
        return Err(McError::WrongModel("spin observable on dimer run".into()));
    }
    Ok(run.spin_records().collect())
}

fn dimer_records(run: &McRun) -> Result<Vec<&DimerRecord>, McError> {
    if !run.config.model.is_dimer() {
        return Err(McError::WrongModel("dimer observable on spin run".into()));
    }
    Ok(run.dimer_records().collect())
}

fn layers(run: &McRun) -> usize {
    run.config.model.spin_model().map_or(0, |(m, _)| m.num_layers())
}

fn layer_mean(spins: &[i8], layer: usize, n: usize) -> f64 {
    spins[layer * n..(layer + 1) * n].iter().map(|&s| s as f64).sum::<f64>() / n as f64
}

fn polarization(spins: &[i8], n: usize) -> f64 {
    (0..n).map(|x| (spins[x] * spins[n + x]) as f64).sum::<f64>() / n as f64
}

/// Mean of a scalar observable with jackknife error.
pub fn measure_scalar(run: &McRun, obs: &ScalarObservable) -> Result<Measured, McError> {
    let rows: Vec<Vec<f64>> = match obs {
        ScalarObservable::ParallelPlaquettes => dimer_records(run)?
            .iter()
            .map(|r| vec![r.parallel_plaquettes as f64])
            .collect(),
        ScalarObservable::BondProduct(bonds) => {
            let nb = run.config.lattice()?.num_bonds();
            if bonds.iter().any(|&b| b >= nb) {
                return Err(McError::InvalidConfig("bond index out of range".into()));
            }
            dimer_records(run)?
                .iter()
                .map(|r| vec![if bonds.iter().all(|&b| r.occupied(b)) { 1.0 } else { 0.0 }])
                .collect()
        }
        _ => {
            let n = run.config.side * run.config.side;
            let two = layers(run) == 2;
            if matches!(obs, ScalarObservable::Polarization2) && !two {
                return Err(McError::WrongModel("polarization needs two layers".into()));
            }
            if let ScalarObservable::SpinProduct(sites) = obs {
                if sites.iter().any(|&s| s >= layers(run) * n) {
                    return Err(McError::InvalidConfig("spin index out of range".into()));
                }
            }
            spin_records(run)?
                .iter()
                .map(|r| {
                    vec![match obs {
                        ScalarObservable::Energy => r.energy,
                        ScalarObservable::EnergySquared => r.energy * r.energy,
                        ScalarObservable::Magnetization2 => layer_mean(&r.spins, 0, n).powi(2),
                        ScalarObservable::Polarization2 => polarization(&r.spins, n).powi(2),
                        ScalarObservable::SpinProduct(sites) => sites.iter().map(|&s| r.spins[s] as f64).product(),
                        _ => unreachable!("dimer observables handled above"),
                    }]
                })
                .collect()
        }
    };
    let bins = binned(&rows)?;
    Ok(jackknife(&bins, |v| v[0])?)
}

/// Binder cumulant `1 - <q^4> / (3 <q^2>^2)` of the chosen order parameter.
pub fn measure_binder(run: &McRun, order: OrderParameter) -> Result<Measured, McError> {
    let n = run.config.side * run.config.side;
    if order == OrderParameter::Polarization && layers(run) != 2 {
        return Err(McError::WrongModel("polarization needs two layers".into()));
    }
    let rows: Vec<Vec<f64>> = spin_records(run)?
        .iter()
        .map(|r| {
            let q = match order {
                OrderParameter::Magnetization => layer_mean(&r.spins, 0, n),
                OrderParameter::Polarization => polarization(&r.spins, n),
            };
            vec![q * q, q.powi(4)]
        })
        .collect();
    let bins = binned(&rows)?;
    Ok(jackknife(&bins, |v| crate::fitting::binder_cumulant(v[0], v[1]))?)
}

/// Local fields of one record and the axes each is correlated along.
fn spin_fields(lattice: &TorusLattice, spins: &[i8], layers: usize, kind: ObservableKind) -> Vec<Vec<f64>> {
    let n = lattice.num_vertices();
    let rho = |layer: usize| -> Vec<f64> {
        (0..n)
            .map(|x| {
                let s = spins[layer * n + x] as f64;
                s * (spins[layer * n + lattice.neighbor(x, 0)] as f64 + spins[layer * n + lattice.neighbor(x, 1)] as f64)
            })
            .collect()
    };
    match kind {
        ObservableKind::Spin => (0..layers)
            .map(|l| spins[l * n..(l + 1) * n].iter().map(|&s| s as f64).collect())
            .collect(),
        ObservableKind::EnergySum if layers == 1 => vec![rho(0)],
        ObservableKind::EnergySum => {
            let (a, b) = (rho(0), rho(1));
            vec![a.iter().zip(&b).map(|(x, y)| x + y).collect()]
        }
        ObservableKind::EnergyDiff => {
            let (a, b) = (rho(0), rho(1));
            vec![a.iter().zip(&b).map(|(x, y)| x - y).collect()]
        }
        ObservableKind::Polarization => vec![(0..n).map(|x| (spins[x] * spins[n + x]) as f64).collect()],
        _ => unreachable!("not a spin field"),
    }
}

/// Per-record row `[m, a(1..=R)]` for a field correlated along `axis`.
fn correlation_row(lattice: &TorusLattice, field: &[f64], axis: usize, r_max: usize, out: &mut Vec<f64>) {
    let n = lattice.num_vertices();
    out.push(field.iter().sum::<f64>() / n as f64);
    for r in 1..=r_max as i64 {
        let (dx, dy) = if axis == 0 { (r, 0) } else { (0, r) };
        let s: f64 = (0..n).map(|v| field[v] * field[lattice.shift(v, dx, dy)]).sum();
        out.push(s / n as f64);
    }
}

/// Truncated two-point function `<O_x; O_{x + r e}>` for `r = 1..=L/2`,
/// averaged over translations and axes. `Dimer` pairs horizontal bonds along
/// `x` and vertical bonds along `y`, `DimerTransverse` the other way; use
/// [`CorrelationSeries::split_channels`] for the staggered and plain parts.
pub fn measure_correlations(run: &McRun, kind: ObservableKind) -> Result<CorrelationSeries, McError> {
    let side = run.config.side;
    match kind {
        ObservableKind::HeightPair => return Ok(measure_height_moments(run, side / 2)?.variance),
        ObservableKind::Electric => return measure_electric(run, side / 2),
        _ => {}
    }
    let lattice = run.config.lattice()?;
    let r_max = side / 2;
    let n = lattice.num_vertices();
    let rows: Vec<Vec<f64>> = if matches!(kind, ObservableKind::Dimer | ObservableKind::DimerTransverse) {
        let across = kind == ObservableKind::DimerTransverse;
        dimer_records(run)?
            .iter()
            .map(|rec| {
                let mut row = Vec::with_capacity(2 * (r_max + 1));
                for axis in 0..2 {
                    let field: Vec<f64> = (0..n)
                        .map(|v| if rec.occupied(lattice.bond(v, axis)) { 1.0 } else { 0.0 })
                        .collect();
                    let shift = if across { 1 - axis } else { axis };
                    correlation_row(&lattice, &field, shift, r_max, &mut row);
                }
                row
            })
            .collect()
    } else {
        let nl = layers(run);
        if nl == 1 && matches!(kind, ObservableKind::EnergyDiff | ObservableKind::Polarization) {
            return Err(McError::WrongModel(format!("{} needs two layers", kind.as_str())));
        }
        spin_records(run)?
            .iter()
            .map(|rec| {
                let mut row = Vec::new();
                for field in spin_fields(&lattice, &rec.spins, nl, kind) {
                    for axis in 0..2 {
                        correlation_row(&lattice, &field, axis, r_max, &mut row);
                    }
                }
                row
            })
            .collect()
    };
    let bins = binned(&rows)?;
    let width = r_max + 1;
    let comps = bins[0].len() / width;
    let mut s = CorrelationSeries::new(kind.as_str(), Channel::Full, side);
    for r in 1..=r_max {
        let m = jackknife(&bins, |v| {
            (0..comps)
                .map(|c| v[c * width + r] - v[c * width].powi(2))
                .sum::<f64>()
                / comps as f64
        })?;
        s.push(r, m.mean, m.stderr, rows.len());
    }
    Ok(s)
}

/// Crossing table of straight dual paths: for each face and direction
/// (East, North) the crossed bond, its sign and the next face.
fn path_table(lattice: &TorusLattice) -> Vec<[(usize, i8, usize); 2]> {
    (0..lattice.num_faces())
        .map(|f| {
            let (x, y) = lattice.coords(f);
            let (x, y) = (x as i64, y as i64);
            let e = crate::lattice::crossing(lattice, x, y, Step::East);
            let n = crate::lattice::crossing(lattice, x, y, Step::North);
            [(e.0, e.1, lattice.face(x + 1, y)), (n.0, n.1, lattice.face(x, y + 1))]
        })
        .collect()
}

fn check_r(side: usize, r_max: usize) -> Result<(), McError> {
    if 2 * r_max > side {
        return Err(McError::SeparationTooLarge { r: r_max, half: side / 2 });
    }
    Ok(())
}

/// Height-difference statistics as a function of separation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightMoments {
    /// `<(h_x - h_y)^2> - <h_x - h_y>^2`, starting at `r = 0`.
    pub variance: CorrelationSeries,
    /// Fourth cumulant of `h_x - h_y`.
    pub cumulant4: CorrelationSeries,
}

/// Variance and fourth cumulant of height differences between faces `r`
/// apart along straight East and North paths from every face, `r = 0..=r_max`.
pub fn measure_height_moments(run: &McRun, r_max: usize) -> Result<HeightMoments, McError> {
    let side = run.config.side;
    check_r(side, r_max)?;
    let recs = dimer_records(run)?;
    let lattice = run.config.lattice()?;
    let table = path_table(&lattice);
    let nf = lattice.num_faces();
    let norm = 1.0 / (2 * nf) as f64;
    let rows: Vec<Vec<f64>> = recs
        .iter()
        .map(|rec| {
            // raw moments m1..m4 for each r
            let mut row = vec![0.0; 4 * (r_max + 1)];
            for f0 in 0..nf {
                for dir in 0..2 {
                    let (mut f, mut q) = (f0, 0i64);
                    for r in 1..=r_max {
                        let (b, s, next) = table[f][dir];
                        q += (if rec.occupied(b) { 3 } else { -1 }) * s as i64;
                        f = next;
                        let h = q as f64 / 4.0;
                        let h2 = h * h;
                        row[4 * r] += h;
                        row[4 * r + 1] += h2;
                        row[4 * r + 2] += h2 * h;
                        row[4 * r + 3] += h2 * h2;
                    }
                }
            }
            row.iter_mut().for_each(|v| *v *= norm);
            row
        })
        .collect();
    let bins = binned(&rows)?;
    let mut variance = CorrelationSeries::new("height_variance", Channel::Full, side);
    let mut cumulant4 = CorrelationSeries::new("height_cumulant4", Channel::Full, side);
    for r in 0..=r_max {
        let o = 4 * r;
        let v = jackknife(&bins, |m| m[o + 1] - m[o] * m[o])?;
        let k = jackknife(&bins, |m| {
            let (m1, m2, m3, m4) = (m[o], m[o + 1], m[o + 2], m[o + 3]);
            m4 - 4.0 * m3 * m1 - 3.0 * m2 * m2 + 12.0 * m2 * m1 * m1 - 6.0 * m1.powi(4)
        })?;
        variance.push(r, v.mean, v.stderr, rows.len());
        cumulant4.push(r, k.mean, k.stderr, rows.len());
    }
    Ok(HeightMoments { variance, cumulant4 })
}

/// Electric correlator `|<exp(i pi (h_x - h_y))>|` for `r = 0..=r_max`.
///
/// Along a fixed path `h_x - h_y = phi_0 + sum_b I_b sigma_b` with a
/// configuration-independent `phi_0 = -(1/4) sum_b sigma_b`; removing that
/// phase leaves `(-1)^{#occupied crossed bonds}`, which is real, so the
/// imaginary part vanishes identically.
pub fn measure_electric(run: &McRun, r_max: usize) -> Result<CorrelationSeries, McError> {
    let side = run.config.side;
    check_r(side, r_max)?;
    let recs = dimer_records(run)?;
    let lattice = run.config.lattice()?;
    let table = path_table(&lattice);
    let nf = lattice.num_faces();
    let norm = 1.0 / (2 * nf) as f64;
    let rows: Vec<Vec<f64>> = recs
        .iter()
        .map(|rec| {
            let mut row = vec![0.0; r_max + 1];
            row[0] = 1.0;
            for f0 in 0..nf {
                for dir in 0..2 {
                    let (mut f, mut parity) = (f0, 0u32);
                    for v in row.iter_mut().skip(1) {
                        let (b, _, next) = table[f][dir];
                        parity ^= rec.occupied(b) as u32;
                        f = next;
                        *v += if parity == 0 { norm } else { -norm };
                    }
                }
            }
            row
        })
        .collect();
    let bins = binned(&rows)?;
    let mut s = CorrelationSeries::new("electric", Channel::Full, side);
    for r in 0..=r_max {
        let m = jackknife(&bins, |v| v[r])?;
        s.push(r, m.mean, m.stderr, rows.len());
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactsol::CouplingParams;
    use crate::lattice::DimerCover;
    use crate::montecarlo::{DimerParams, McConfig, Model, Record};

    fn fake_spin_run(side: usize, configs: Vec<Vec<i8>>) -> McRun {
        let p = CouplingParams {
            j: 1.0,
            j_prime: 1.0,
            lambda: 0.0,
            j4: 0.0,
            beta: 0.3,
        };
        McRun {
            config: McConfig::new(Model::CoupledIsingAt(p), side, 1, 0),
            rng: String::new(),
            acceptance: 0.0,
            records: configs
                .into_iter()
                .enumerate()
                .map(|(i, spins)| Record::Spin(SpinRecord { sweep: i, energy: 0.0, spins }))
                .collect(),
        }
    }

    fn columnar_run(side: usize, count: usize) -> McRun {
        let t = TorusLattice::build(side).unwrap();
        let c = DimerCover::columnar(&t);
        let mut bits = vec![0u64; t.num_bonds().div_ceil(64)];
        for (b, _) in c.matched.iter().enumerate().filter(|(_, &m)| m) {
            bits[b / 64] |= 1 << (b % 64);
        }
        McRun {
            config: McConfig::new(Model::InteractingDimer(DimerParams::uniform(0.0)), side, 1, 0),
            rng: String::new(),
            acceptance: 0.0,
            records: (0..count)
                .map(|i| {
                    Record::Dimer(DimerRecord {
                        sweep: i,
                        parallel_plaquettes: c.parallel_plaquettes(&t),
                        matched: bits.clone(),
                    })
                })
                .collect(),
        }
    }

    #[test]
    fn constant_observable_has_zero_truncated_correlation() {
        let run = fake_spin_run(4, vec![vec![1; 32]; 200]);
        for kind in [ObservableKind::Spin, ObservableKind::EnergySum, ObservableKind::Polarization] {
            let s = measure_correlations(&run, kind).unwrap();
            assert_eq!(s.r, vec![1, 2]);
            assert!(s.mean.iter().all(|&c| c.abs() < 1e-14));
        }
    }

    #[test]
    fn too_few_records() {
        let run = fake_spin_run(4, vec![vec![1; 32]; 99]);
        assert_eq!(
            measure_correlations(&run, ObservableKind::Spin),
            Err(McError::TooFewRecords { need: 100, got: 99 })
        );
    }

    #[test]
    fn wrong_model_rejected() {
        let run = fake_spin_run(4, vec![vec![1; 32]; 100]);
        assert!(matches!(measure_height_moments(&run, 2), Err(McError::WrongModel(_))));
        let d = columnar_run(4, 100);
        assert!(matches!(measure_correlations(&d, ObservableKind::Spin), Err(McError::WrongModel(_))));
    }

    #[test]
    fn alternating_layers_give_known_spin_correlation() {
        // records alternate between all up and a checkerboard in both layers
        let t = TorusLattice::for_spins(4).unwrap();
        let cb: Vec<i8> = (0..32)
            .map(|k| {
                let (x, y) = t.coords(k % 16);
                if (x + y) % 2 == 0 { 1 } else { -1 }
            })
            .collect();
        let configs: Vec<Vec<i8>> = (0..200).map(|i| if i % 2 == 0 { vec![1; 32] } else { cb.clone() }).collect();
        let s = measure_correlations(&fake_spin_run(4, configs), ObservableKind::Spin).unwrap();
        // <s_x s_{x+r}> = (1 + (-1)^r) / 2, <s> = 1/2
        assert!((s.mean[0] - (0.0 - 0.25)).abs() < 1e-12);
        assert!((s.mean[1] - (1.0 - 0.25)).abs() < 1e-12);
    }

    #[test]
    fn columnar_height_statistics() {
        let run = columnar_run(8, 100);
        let hm = measure_height_moments(&run, 4).unwrap();
        assert_eq!(hm.variance.mean[0], 0.0);
        // every record identical: zero errors
        assert!(hm.variance.stderr.iter().all(|&e| e < 1e-12));
        let e = measure_electric(&run, 4).unwrap();
        assert_eq!(e.mean[0], 1.0);
        assert!(e.mean.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        assert!(matches!(measure_height_moments(&run, 5), Err(McError::SeparationTooLarge { .. })));
    }

    #[test]
    fn columnar_dimer_correlation() {
        // horizontal occupation along x alternates 1,0; vertical bonds empty
        let run = columnar_run(8, 100);
        let s = measure_correlations(&run, ObservableKind::Dimer).unwrap();
        for (i, &r) in s.r.iter().enumerate() {
            let want = 0.5 * (if r % 2 == 0 { 0.5 } else { 0.0 } - 0.25);
            assert!((s.mean[i] - want).abs() < 1e-12, "r={r}");
        }
    }
}
