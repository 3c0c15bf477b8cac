use super::{describe, finish, fit_entry, Report};
use crate::args::EnsembleChoice;
use crate::config::{ExactDimerConfig, ExperimentConfig, FormulasConfig};
use crate::error::CliError;
use crate::persist::RunDir;
use crate::record::ResultRecord;
use planarstat::exactsol::{
    amplitude_a, anomaly_tau, baxter_mu, baxter_nu, continuum_exponents, electric_exponent, eta1_continuum,
    kadanoff_relations, verify_relations_with, ContinuumCoupling, Estimate,
};
use planarstat::fitting::{fit_log_variance, fit_power_law, VarianceModel};
use planarstat::lattice::TorusLattice;
use planarstat::pfaffian::{
    dimer_pair_series_exact, height_variance_series_exact, ln_dimer_partition, ln_winding_partition, Ensemble,
    KasteleynSystem,
};
use planarstat::stats::PairAxis;
use planarstat::ExponentName;
use std::path::Path;

pub fn dimer(cfg: &ExactDimerConfig, out: &Path) -> Result<Report, CliError> {
    let lattice = TorusLattice::build(cfg.side)?;
    let system = KasteleynSystem::build(&lattice, cfg.t)?;
    let (ensemble, ln_z) = match cfg.ensemble {
        EnsembleChoice::All => (Ensemble::AllWindings, ln_dimer_partition(&system)?),
        EnsembleChoice::Zero => (Ensemble::Winding(0, 0), ln_winding_partition(&system, (0, 0))?),
    };
    let r_max = cfg.side / 2 - 1;
    let along = dimer_pair_series_exact(&system, ensemble, r_max, PairAxis::Along)?;
    let (plain, staggered) = along.split_channels()?;
    let mut across = dimer_pair_series_exact(&system, ensemble, r_max, PairAxis::Across)?;
    across.observable = "dimer_transverse".into();
    let variance = height_variance_series_exact(&system, ensemble, r_max)?;

    let config = ExperimentConfig::ExactDimer(cfg.clone());
    let dir = RunDir::create(out, config.kind(), &config.hash())?;
    let mut rec = ResultRecord::new(config, None);
    for (name, s) in [
        ("dimer", &along),
        ("dimer_plain", &plain),
        ("dimer_staggered", &staggered),
        ("dimer_transverse", &across),
        ("height_variance", &variance),
    ] {
        rec.series.push(dir.write_series(name, s)?);
    }
    rec.values.insert("ln_partition".into(), ln_z);
    rec.sources.insert(
        "ln_partition".into(),
        match cfg.ensemble {
            EnsembleChoice::All => "formula: ln_dimer_partition (four Pfaffian sectors)".into(),
            EnsembleChoice::Zero => "formula: ln_winding_partition (Fourier projection on w = (0, 0))".into(),
        },
    );
    if let Some(w) = cfg.eta_window {
        match fit_power_law(&staggered, Some(w.into())) {
            Ok(f) => {
                rec.exponents.insert(ExponentName::Eta1, Estimate::fitted(f.value / 2.0, f.stderr / 2.0));
                rec.sources.insert(
                    "eta1".into(),
                    format!("dimer_staggered.csv: power law on [{}, {}], exponent / 2", f.window.0, f.window.1),
                );
                rec.fits.push(fit_entry("eta1", "dimer_staggered", "power", &f));
            }
            Err(e) => rec.notes.push(format!("eta1 fit skipped: {e}")),
        }
    } else {
        rec.notes.push("eta1 fit skipped: L too small for the default window".into());
    }
    if let Some(w) = cfg.a_window {
        match fit_log_variance(&variance, Some(w.into()), VarianceModel::TorusCorrected) {
            Ok(f) => {
                rec.exponents.insert(ExponentName::A, Estimate::fitted(f.value, f.stderr));
                rec.sources.insert(
                    "A".into(),
                    format!("height_variance.csv: torus-corrected log fit on [{}, {}]", f.window.0, f.window.1),
                );
                rec.fits.push(fit_entry("A", "height_variance", "log-variance torus-corrected", &f));
            }
            Err(e) => rec.notes.push(format!("A fit skipped: {e}")),
        }
    } else {
        rec.notes.push("A fit skipped: L too small for the default window".into());
    }
    let summary = describe(&rec);
    finish(dir, rec, true, summary)
}

pub fn formulas(cfg: &FormulasConfig, out: &Path) -> Result<Report, CliError> {
    let config = ExperimentConfig::ExactFormulas(cfg.clone());
    let mut rec = ResultRecord::new(config.clone(), None);
    let put = |rec: &mut ResultRecord, name: ExponentName, value: f64, formula: &str| {
        rec.exponents.insert(name, Estimate::exact(value));
        rec.sources.insert(name.as_str().into(), format!("formula: {formula}"));
    };
    let xe = if let Some(lambda) = cfg.baxter_lambda {
        let nu = baxter_nu(lambda);
        put(&mut rec, ExponentName::Nu, nu, "baxter_nu");
        put(&mut rec, ExponentName::MuBaxter, baxter_mu(lambda), "baxter_mu");
        let xe = 2.0 - 1.0 / nu;
        put(&mut rec, ExponentName::Xe, xe, "2 - 1/nu");
        rec.values.insert("baxter_nu".into(), nu);
        rec.values.insert("baxter_mu".into(), baxter_mu(lambda));
        xe
    } else {
        let c = ContinuumCoupling::new(cfg.lambda_tilde, cfg.v, cfg.lambda_inf.unwrap_or(0.0), cfg.z);
        let set = continuum_exponents(&c)?;
        for name in [ExponentName::Xe, ExponentName::Xcr] {
            put(&mut rec, name, set.value(name).expect("present"), "continuum_exponents");
        }
        rec.values.insert("tau".into(), anomaly_tau(&c)?);
        rec.sources.insert("tau".into(), "formula: anomaly_tau".into());
        if let Some(li) = cfg.lambda_inf {
            let a = amplitude_a(&c)?;
            put(&mut rec, ExponentName::Eta1, eta1_continuum(li)?, "eta1_continuum");
            put(&mut rec, ExponentName::A, a, "amplitude_a");
            put(&mut rec, ExponentName::Xa, electric_exponent(a), "electric_exponent");
        }
        set.value(ExponentName::Xe).expect("present")
    };
    match kadanoff_relations(xe) {
        Ok(k) => {
            for (name, e) in &k.values {
                if rec.exponents.get(*name).is_none() {
                    put(&mut rec, *name, e.value, "kadanoff_relations");
                }
            }
        }
        Err(e) => rec.notes.push(format!("kadanoff_relations skipped: {e}")),
    }
    let report = verify_relations_with(&rec.exponents, cfg.tolerance, 2.0);
    let mut summary = describe(&rec);
    summary.push_str(&report.to_string());
    rec.relations = Some(report);
    let dir = RunDir::create(out, config.kind(), &config.hash())?;
    finish(dir, rec, true, summary)
}
