use super::{describe, finish, fit_entry, Report};
use crate::args::{FitKind, ModelVariant};
use crate::config::{ExperimentConfig, FitConfig};
use crate::error::CliError;
use crate::persist::{read_series, RunDir};
use crate::record::{ResultRecord, SeriesRef};
use planarstat::exactsol::Estimate;
use planarstat::fitting::{
    fit_correlation_length, fit_log_variance, fit_power_law_with, fit_two_channel, DecayModel, PowerModel,
    VarianceModel,
};
use planarstat::ExponentName;
use std::path::{Path, PathBuf};

const INPUT: &str = "input.csv";

pub fn run(cfg: &FitConfig, out: &Path) -> Result<Report, CliError> {
    let observable = cfg.series.file_stem().and_then(|s| s.to_str()).unwrap_or("series");
    let series = read_series(&cfg.series, observable, cfg.side)?;
    let window = cfg.window.map(Into::into);
    let torus = cfg.model == ModelVariant::TorusCorrected;
    let mut staggered = None;
    let (method, f) = match cfg.fit {
        FitKind::Power => {
            let m = if torus { PowerModel::TorusCorrected } else { PowerModel::Pure };
            ("power", fit_power_law_with(&series, window, m)?)
        }
        FitKind::LogVariance => {
            let m = if torus { VarianceModel::TorusCorrected } else { VarianceModel::Logarithmic };
            ("log-variance", fit_log_variance(&series, window, m)?)
        }
        FitKind::CorrelationLength => {
            let m = match cfg.model {
                ModelVariant::PowerCorrected => DecayModel::PowerCorrected,
                _ => DecayModel::Pure,
            };
            ("correlation-length", fit_correlation_length(&series, window, m)?)
        }
        FitKind::TwoChannel => {
            let f = fit_two_channel(&series, window, cfg.staggered_exponent)?;
            staggered = Some(f.staggered);
            ("two-channel", f.plain)
        }
    };
    let config = ExperimentConfig::Fit(cfg.clone());
    let dir = RunDir::create(out, config.kind(), &config.hash())?;
    dir.copy_in(&cfg.series, INPUT)?;
    let mut rec = ResultRecord::new(config, None);
    rec.series.push(SeriesRef {
        name: observable.to_string(),
        path: PathBuf::from(INPUT),
        observable: observable.to_string(),
        channel: "full".into(),
    });
    rec.fits.push(fit_entry("fit", observable, method, &f));
    let origin = format!("{INPUT}: {method} fit on [{}, {}]", f.window.0, f.window.1);
    rec.values.insert("value".into(), f.value);
    rec.values.insert("stderr".into(), f.stderr);
    rec.values.insert("reduced_chi2".into(), f.reduced_chi2);
    rec.sources.insert("value".into(), origin.clone());
    if let Some(s) = staggered {
        rec.values.insert("staggered_amplitude".into(), s.mean);
        rec.values.insert("staggered_amplitude_stderr".into(), s.stderr);
    }
    if let Some(name) = &cfg.record_as {
        let n = ExponentName::parse(name).expect("validated during resolution");
        rec.exponents.insert(n, Estimate::fitted(cfg.scale * f.value, cfg.scale * f.stderr));
        rec.sources.insert(n.as_str().into(), format!("{origin}, scaled by {}", cfg.scale));
    }
    let summary = describe(&rec);
    finish(dir, rec, true, summary)
}
