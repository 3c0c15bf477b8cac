use super::{describe, finish, fit_entry, Report};
use crate::args::{ModelChoice, OrderChoice, Window};
use crate::config::{ExperimentConfig, McExperiment};
use crate::error::CliError;
use crate::persist::RunDir;
use crate::record::{OracleCheck, ResultRecord};
use planarstat::exactsol::Estimate;
use planarstat::fitting::{fit_log_variance, fit_power_law_with, fit_two_channel, FitResult, PowerModel, VarianceModel};
use planarstat::lattice::TorusLattice;
use planarstat::montecarlo::{
    self, dimer_transition_matrix, exact_spin_averages, measure_binder, measure_correlations, measure_electric,
    measure_height_moments, measure_scalar, DimerParams, McConfig, McError, Model, ObservableKind, OrderParameter,
    ScalarObservable, SiteOrder,
};
use planarstat::stats::{CorrelationSeries, Measured};
use planarstat::{CouplingParams, ExponentName};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Pull beyond which an oracle comparison fails.
pub const ORACLE_PULL: f64 = 3.0;

pub fn core_model(cfg: &McExperiment) -> Model {
    let params = CouplingParams {
        j: cfg.j.unwrap_or(1.0),
        j_prime: cfg.j_prime.unwrap_or(0.0),
        lambda: cfg.lambda,
        j4: cfg.j4.unwrap_or(0.0),
        beta: cfg.beta.unwrap_or(1.0),
    };
    match cfg.model {
        ModelChoice::CoupledAt => Model::CoupledIsingAt(params),
        ModelChoice::Coupled8v => Model::CoupledIsing8v(params),
        ModelChoice::Ising | ModelChoice::Generalized => Model::GeneralizedIsing {
            params,
            kernel: Default::default(),
        },
        ModelChoice::Dimer => Model::InteractingDimer(DimerParams {
            t: cfg.t.unwrap_or([1.0; 4]),
            lambda: cfg.lambda,
        }),
    }
}

/// Chain configuration for one seed.
pub fn core_config(cfg: &McExperiment, seed: u64) -> McConfig {
    let order = match cfg.order {
        Some(OrderChoice::RandomSite) => SiteOrder::RandomSite,
        _ => SiteOrder::Checkerboard,
    };
    McConfig::new(core_model(cfg), cfg.side, cfg.sweeps, seed)
        .with_order(order)
        .with_thermalization(cfg.thermalization)
        .with_stride(cfg.stride)
}

/// Measurements of one chain, in a fixed order shared by all chains.
struct ChainResult {
    series: Vec<(String, CorrelationSeries)>,
    scalars: Vec<(String, Measured)>,
    acceptance: f64,
    rng: String,
}

fn two_layers(model: ModelChoice) -> bool {
    matches!(model, ModelChoice::CoupledAt | ModelChoice::Coupled8v)
}

/// Bonds of the dimer oracle and the joint occupations compared.
fn oracle_bond_sets(lattice: &TorusLattice) -> Vec<Vec<usize>> {
    let b = [
        lattice.bond_at(0, 0, 0),
        lattice.bond_at(1, 0, 0),
        lattice.bond_at(0, 0, 1),
        lattice.bond_at(0, 1, 1),
        lattice.bond_at(2, 0, 0),
        lattice.bond_at(0, 1, 0),
    ];
    let mut sets: Vec<Vec<usize>> = b.iter().map(|&x| vec![x]).collect();
    sets.extend([vec![b[0], b[4]], vec![b[0], b[5]], vec![b[1], b[3]]]);
    sets
}

fn scalar_list(cfg: &McExperiment) -> Result<Vec<(String, ScalarObservable)>, CliError> {
    let mut list = Vec::new();
    if cfg.model == ModelChoice::Dimer {
        list.push(("parallel_plaquettes".to_string(), ScalarObservable::ParallelPlaquettes));
        if cfg.oracle_check {
            let lattice = TorusLattice::build(cfg.side)?;
            for set in oracle_bond_sets(&lattice) {
                list.push((format!("bond_product{set:?}"), ScalarObservable::BondProduct(set)));
            }
        }
    } else {
        list.push(("energy".to_string(), ScalarObservable::Energy));
        list.push(("energy_squared".to_string(), ScalarObservable::EnergySquared));
        list.push(("magnetization2".to_string(), ScalarObservable::Magnetization2));
        if two_layers(cfg.model) {
            list.push(("polarization2".to_string(), ScalarObservable::Polarization2));
        }
    }
    Ok(list)
}

fn measure_chain(cfg: &McExperiment, seed: u64, scalars: &[(String, ScalarObservable)]) -> Result<ChainResult, McError> {
    let run = montecarlo::run(&core_config(cfg, seed))?;
    let half = cfg.side / 2;
    let mut series = Vec::new();
    if cfg.model == ModelChoice::Dimer {
        series.push(("dimer".into(), measure_correlations(&run, ObservableKind::Dimer)?));
        series.push(("dimer_transverse".into(), measure_correlations(&run, ObservableKind::DimerTransverse)?));
        let h = measure_height_moments(&run, half)?;
        series.push(("height_variance".into(), h.variance));
        series.push(("height_cumulant4".into(), h.cumulant4));
        series.push(("electric".into(), measure_electric(&run, half)?));
    } else {
        series.push(("spin".into(), measure_correlations(&run, ObservableKind::Spin)?));
        series.push(("energy_sum".into(), measure_correlations(&run, ObservableKind::EnergySum)?));
        if two_layers(cfg.model) {
            series.push(("energy_diff".into(), measure_correlations(&run, ObservableKind::EnergyDiff)?));
            series.push(("polarization".into(), measure_correlations(&run, ObservableKind::Polarization)?));
        }
    }
    let mut out = Vec::new();
    for (name, obs) in scalars {
        out.push((name.clone(), measure_scalar(&run, obs)?));
    }
    if cfg.model != ModelChoice::Dimer {
        out.push(("binder_magnetization".into(), measure_binder(&run, OrderParameter::Magnetization)?));
        if two_layers(cfg.model) {
            out.push(("binder_polarization".into(), measure_binder(&run, OrderParameter::Polarization)?));
        }
    }
    Ok(ChainResult {
        series,
        scalars: out,
        acceptance: run.acceptance,
        rng: run.rng,
    })
}

/// Runs `jobs` on a pool of `threads` workers; results keep job order.
fn run_pool<T: Send>(jobs: usize, threads: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..jobs).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, jobs.max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= jobs {
                    break;
                }
                let r = f(k);
                slots.lock().expect("no worker panics while holding the lock")[k] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// Mean over chains with `stderr = sqrt(sum sigma^2) / N`.
fn combine(parts: &[Measured]) -> Measured {
    let n = parts.len() as f64;
    let mean = parts.iter().map(|m| m.mean).sum::<f64>() / n;
    let var = parts.iter().map(|m| m.stderr * m.stderr).sum::<f64>();
    Measured::new(mean, var.sqrt() / n)
}

fn combine_series(parts: &[&CorrelationSeries]) -> CorrelationSeries {
    let first = parts[0];
    let mut s = CorrelationSeries::new(&first.observable, first.channel, first.side);
    for i in 0..first.len() {
        let m: Vec<Measured> = parts.iter().map(|p| Measured::new(p.mean[i], p.stderr[i])).collect();
        let c = combine(&m);
        s.push(first.r[i], c.mean, c.stderr, parts.iter().map(|p| p.n[i]).sum());
    }
    s
}

fn oracle_exact(cfg: &McExperiment) -> Result<Vec<(String, f64)>, CliError> {
    let model = core_model(cfg);
    if cfg.model == ModelChoice::Dimer {
        if cfg.side != 4 {
            return Err(CliError::Config("the dimer oracle needs L = 4".into()));
        }
        let Model::InteractingDimer(params) = &model else {
            unreachable!("dimer model")
        };
        let (tm, covers) = dimer_transition_matrix(params, 4, (0, 0))?;
        let lattice = TorusLattice::build(4)?;
        let avg = |f: &dyn Fn(&planarstat::DimerCover) -> f64| -> f64 {
            tm.pi.iter().zip(&covers).map(|(p, c)| p * f(c)).sum()
        };
        let mut out = vec![(
            "parallel_plaquettes".to_string(),
            avg(&|c| c.parallel_plaquettes(&lattice) as f64),
        )];
        for set in oracle_bond_sets(&lattice) {
            let v = avg(&|c| set.iter().all(|&b| c.matched[b]) as u8 as f64);
            out.push((format!("bond_product{set:?}"), v));
        }
        Ok(out)
    } else {
        if cfg.side != 2 {
            return Err(CliError::Config("the spin oracle needs L = 2".into()));
        }
        let e = exact_spin_averages(&model, 2)?;
        let mut out = vec![
            ("energy".to_string(), e.energy),
            ("energy_squared".to_string(), e.energy_squared),
            ("magnetization2".to_string(), e.magnetization2),
        ];
        if two_layers(cfg.model) {
            out.push(("polarization2".to_string(), e.polarization2));
        }
        Ok(out)
    }
}

fn oracle_check(quantity: &str, m: Measured, exact: f64) -> OracleCheck {
    let diff = m.mean - exact;
    let (pull, passed) = if m.stderr > 0.0 {
        (diff / m.stderr, (diff / m.stderr).abs() <= ORACLE_PULL)
    } else {
        (0.0, diff.abs() <= 1e-12 * exact.abs().max(1.0))
    };
    OracleCheck {
        quantity: quantity.to_string(),
        measured: m.mean,
        stderr: m.stderr,
        exact,
        pull,
        passed,
    }
}

struct Fitter<'a> {
    rec: &'a mut ResultRecord,
}

impl Fitter<'_> {
    fn add(&mut self, name: ExponentName, result: Result<(FitResult, f64), String>, series: &str, how: &str) {
        match result {
            Ok((f, scale)) => {
                self.rec
                    .exponents
                    .insert(name, Estimate::fitted(scale * f.value, scale * f.stderr));
                self.rec.sources.insert(
                    name.as_str().into(),
                    format!("{series}.csv: {how} on [{}, {}], times {scale}", f.window.0, f.window.1),
                );
                self.rec.fits.push(fit_entry(name.as_str(), series, how, &f));
            }
            Err(e) => self.rec.notes.push(format!("{name} fit skipped: {e}")),
        }
    }
}

pub fn run(cfg: &McExperiment, out: &Path, threads: usize) -> Result<Report, CliError> {
    let exact = if cfg.oracle_check { Some(oracle_exact(cfg)?) } else { None };
    let scalars = scalar_list(cfg)?;
    let results = run_pool(cfg.chains, threads, |k| measure_chain(cfg, cfg.seed + k as u64, &scalars));
    let results: Vec<ChainResult> = results.into_iter().collect::<Result<_, _>>()?;

    let config = ExperimentConfig::Mc(cfg.clone());
    let rng = format!("{} (chain k uses seed + k)", results[0].rng);
    let dir = RunDir::create(out, config.kind(), &config.hash())?;
    let mut rec = ResultRecord::new(config, Some(rng));
    let mut series = Vec::new();
    for (i, (name, _)) in results[0].series.iter().enumerate() {
        let parts: Vec<&CorrelationSeries> = results.iter().map(|r| &r.series[i].1).collect();
        let s = combine_series(&parts);
        rec.series.push(dir.write_series(name, &s)?);
        series.push((name.clone(), s));
    }
    let mut measured = Vec::new();
    for (i, (name, _)) in results[0].scalars.iter().enumerate() {
        let parts: Vec<Measured> = results.iter().map(|r| r.scalars[i].1).collect();
        let m = combine(&parts);
        rec.values.insert(name.clone(), m.mean);
        rec.values.insert(format!("{name}_stderr"), m.stderr);
        measured.push((name.clone(), m));
    }
    let acceptance = results.iter().map(|r| r.acceptance).sum::<f64>() / results.len() as f64;
    rec.values.insert("acceptance".into(), acceptance);

    let mut passed = true;
    if let Some(exact) = exact {
        for (name, value) in exact {
            let m = measured.iter().find(|(n, _)| *n == name).expect("oracle quantities are measured").1;
            let c = oracle_check(&name, m, value);
            passed &= c.passed;
            rec.checks.push(c);
        }
    }
    if cfg.fit {
        let get = |name: &str| &series.iter().find(|(n, _)| n == name).expect("measured series").1;
        let mut fitter = Fitter { rec: &mut rec };
        let power = |s: &str, w: Option<Window>, model: PowerModel, scale: f64| -> Result<(FitResult, f64), String> {
            let w = w.ok_or("L too small for the default window")?;
            fit_power_law_with(get(s), Some(w.into()), model)
                .map(|f| (f, scale))
                .map_err(|e| e.to_string())
        };
        let (pure, torus) = (PowerModel::Pure, PowerModel::TorusCorrected);
        if cfg.model == ModelChoice::Dimer {
            let eta = cfg
                .eta_window
                .ok_or_else(|| "L too small for the default window".to_string())
                .and_then(|w| fit_two_channel(get("dimer_transverse"), Some(w.into()), 2.0).map_err(|e| e.to_string()))
                .map(|f| (f.plain, 0.5));
            fitter.add(ExponentName::Eta1, eta, "dimer_transverse", "two-channel fit, plain exponent");
            let a = cfg
                .a_window
                .ok_or_else(|| "L too small for the default window".to_string())
                .and_then(|w| {
                    fit_log_variance(get("height_variance"), Some(w.into()), VarianceModel::TorusCorrected)
                        .map_err(|e| e.to_string())
                })
                .map(|f| (f, 1.0));
            fitter.add(ExponentName::A, a, "height_variance", "torus-corrected log fit");
            fitter.add(ExponentName::Xa, power("electric", cfg.a_window, pure, 0.5), "electric", "power law");
        } else {
            let (w, m) = (cfg.window, cfg.magnetic_window);
            let corrected = "torus-corrected power law";
            fitter.add(ExponentName::Xe, power("energy_sum", w, pure, 0.5), "energy_sum", "power law");
            fitter.add(ExponentName::Eta, power("spin", m, torus, 1.0), "spin", corrected);
            if two_layers(cfg.model) {
                fitter.add(ExponentName::Xcr, power("energy_diff", w, pure, 0.5), "energy_diff", "power law");
                fitter.add(ExponentName::Xp, power("polarization", m, torus, 0.5), "polarization", corrected);
            }
        }
    }
    let mut summary = describe(&rec);
    for c in &rec.checks {
        summary.push_str(&format!(
            "oracle {:<28} {:>24.16e} +- {:<10.3e} exact {:>24.16e} pull {:>6.2} {}\n",
            c.quantity,
            c.measured,
            c.stderr,
            c.exact,
            c.pull,
            if c.passed { "PASS" } else { "FAIL" }
        ));
    }
    finish(dir, rec, passed, summary)
}
