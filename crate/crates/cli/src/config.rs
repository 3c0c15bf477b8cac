//! Resolved experiment configurations and their content hash.
//!
//! A resolved configuration has every default filled in, so the `config.toml`
//! written next to a record can be passed back through `--config` and yields
//! the same hash.

use crate::args::{
    EnsembleChoice, ExactDimerArgs, ExactFormulasArgs, FitArgs, FitKind, FlowModeChoice, McArgs, ModelChoice,
    ModelVariant, OrderChoice, RgflowArgs, VerifyArgs, Window,
};
use crate::error::CliError;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    ExactDimer(ExactDimerConfig),
    ExactFormulas(FormulasConfig),
    Mc(McExperiment),
    Fit(FitConfig),
    Verify(VerifyConfig),
    Rgflow(RgflowConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDimerConfig {
    #[serde(rename = "L")]
    pub side: usize,
    pub t: [f64; 4],
    pub ensemble: EnsembleChoice,
    /// Absent when `L` is too small for a fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_window: Option<Window>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_window: Option<Window>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulasConfig {
    pub lambda_tilde: f64,
    pub v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_inf: Option<f64>,
    pub z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baxter_lambda: Option<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McExperiment {
    pub seed: u64,
    pub model: ModelChoice,
    #[serde(rename = "L")]
    pub side: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j4: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<[f64; 4]>,
    pub sweeps: usize,
    pub thermalization: usize,
    pub stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<OrderChoice>,
    pub chains: usize,
    pub oracle_check: bool,
    pub fit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnetic_window: Option<Window>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_window: Option<Window>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_window: Option<Window>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub series: PathBuf,
    #[serde(rename = "L")]
    pub side: usize,
    pub fit: FitKind,
    pub model: ModelVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    pub staggered_exponent: f64,
    #[serde(default, rename = "as", skip_serializing_if = "Option::is_none")]
    pub record_as: Option<String>,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub records: Vec<PathBuf>,
    pub tolerance: f64,
    pub n_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RgflowConfig {
    pub lambda0: f64,
    pub mode: FlowModeChoice,
    pub coef: f64,
    pub b: f64,
    pub gamma: f64,
    pub hmin: i64,
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::ExactDimer(_) => "exact-dimer",
            ExperimentConfig::ExactFormulas(_) => "exact-formulas",
            ExperimentConfig::Mc(_) => "mc",
            ExperimentConfig::Fit(_) => "fit",
            ExperimentConfig::Verify(_) => "verify",
            ExperimentConfig::Rgflow(_) => "rgflow",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ExperimentConfig::Mc(m) => Some(m.seed),
            _ => None,
        }
    }

    /// SHA-256 of the canonical JSON form (object keys sorted), hex encoded.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("configurations serialize");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configurations serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Parses a `--config` file into the argument struct `T`, checking the
/// optional `kind` key against `kind`.
pub fn load_file<T: DeserializeOwned + Default>(path: Option<&Path>, kind: &str) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(k) = table.get("kind") {
        if k.as_str() != Some(kind) {
            return Err(CliError::Config(format!("{}: kind {k} does not match {kind}", path.display())));
        }
    }
    table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.display())))
}

fn four(t: Option<Vec<f64>>, what: &str) -> Result<Option<[f64; 4]>, CliError> {
    t.map(|v| {
        <[f64; 4]>::try_from(v.as_slice()).map_err(|_| CliError::Config(format!("{what} needs 4 values, got {}", v.len())))
    })
    .transpose()
}

fn check_window(w: Window, what: &str) -> Result<Window, CliError> {
    if w.0 == 0 || w.0 >= w.1 {
        return Err(CliError::Config(format!("{what} {w} must satisfy 1 <= lo < hi")));
    }
    Ok(w)
}

/// Default window of the height-variance amplitude and of power-law exponents
/// on dimer data: `[max(3, L/8), max(lo + 4, 3L/8)]`, capped at `L/2 - 1`;
/// `None` when fewer than five separations remain.
pub fn dimer_a_window(side: usize) -> Option<Window> {
    let lo = (side / 8).max(3);
    let hi = (lo + 4).max(3 * side / 8).min(side / 2 - 1);
    (hi >= lo + 4).then_some(Window(lo, hi))
}

/// Default window of the two-channel dimer fit:
/// `[max(2, 3L/32), max(lo + 4, 5L/16)]`, capped at `L/2 - 1`.
pub fn dimer_eta_window(side: usize) -> Option<Window> {
    let lo = (3 * side / 32).max(2);
    let hi = (lo + 4).max(5 * side / 16).min(side / 2 - 1);
    (hi >= lo + 4).then_some(Window(lo, hi))
}

/// Default window of energy-type power-law fits: `[2, max(5, L/4)]`, capped
/// at `L/2`.
pub fn energy_window(side: usize) -> Option<Window> {
    let hi = (side / 4).max(5).min(side / 2);
    (hi >= 5).then_some(Window(2, hi))
}

/// Default window of spin-type fits: `[2, L/2 - 2]`, which needs `L >= 18`
/// for the six points of the torus-corrected model.
pub fn magnetic_window(side: usize) -> Option<Window> {
    (side >= 18).then(|| Window(2, side / 2 - 2))
}

pub fn resolve_exact_dimer(flags: ExactDimerArgs) -> Result<ExperimentConfig, CliError> {
    let file: ExactDimerArgs = load_file(flags.config.as_deref(), "exact-dimer")?;
    let side = flags.side.or(file.side).unwrap_or(32);
    if side < 4 || side % 2 == 1 {
        return Err(CliError::Config(format!("L = {side} must be even and at least 4")));
    }
    let t = four(flags.t.or(file.t), "t")?.unwrap_or([1.0; 4]);
    let eta_window = flags.eta_window.or(file.eta_window).or(dimer_a_window(side));
    let a_window = flags.a_window.or(file.a_window).or(dimer_a_window(side));
    for w in [eta_window, a_window].into_iter().flatten() {
        check_window(w, "window")?;
    }
    Ok(ExperimentConfig::ExactDimer(ExactDimerConfig {
        side,
        t,
        ensemble: flags.ensemble.or(file.ensemble).unwrap_or(EnsembleChoice::All),
        eta_window,
        a_window,
    }))
}

pub fn resolve_formulas(flags: ExactFormulasArgs) -> Result<ExperimentConfig, CliError> {
    let file: ExactFormulasArgs = load_file(flags.config.as_deref(), "exact-formulas")?;
    let cfg = FormulasConfig {
        lambda_tilde: flags.lambda_tilde.or(file.lambda_tilde).unwrap_or(0.0),
        v: flags.v.or(file.v).unwrap_or(1.0),
        lambda_inf: flags.lambda_inf.or(file.lambda_inf),
        z: flags.z.or(file.z).unwrap_or(1.0),
        baxter_lambda: flags.baxter_lambda.or(file.baxter_lambda),
        tolerance: flags.tolerance.or(file.tolerance).unwrap_or(1e-12),
    };
    let finite = [cfg.lambda_tilde, cfg.v, cfg.z, cfg.tolerance, cfg.lambda_inf.unwrap_or(0.0), cfg.baxter_lambda.unwrap_or(0.0)];
    if finite.iter().any(|x| !x.is_finite()) || cfg.tolerance < 0.0 {
        return Err(CliError::Config("formula inputs must be finite, tolerance >= 0".into()));
    }
    if cfg.baxter_lambda.is_some() && (cfg.lambda_tilde != 0.0 || cfg.lambda_inf.is_some()) {
        return Err(CliError::Config(
            "baxter_lambda fixes the exponents by itself; drop lambda_tilde and lambda_inf".into(),
        ));
    }
    Ok(ExperimentConfig::ExactFormulas(cfg))
}

pub fn resolve_mc(flags: McArgs, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let file: McArgs = load_file(flags.config.as_deref(), "mc")?;
    let model = flags.model.or(file.model).ok_or_else(|| CliError::Config("--model is required".into()))?;
    let side = flags.side.or(file.side).ok_or_else(|| CliError::Config("--L is required".into()))?;
    let dimer = model == ModelChoice::Dimer;
    let beta = flags.beta.or(file.beta);
    let j = flags.j.or(file.j);
    let j_prime = flags.j_prime.or(file.j_prime);
    let j4 = flags.j4.or(file.j4);
    let t = four(flags.t.or(file.t), "t")?;
    let lambda = flags.lambda.or(file.lambda).unwrap_or(0.0);
    let order = flags.order.or(file.order);
    let two_layers = matches!(model, ModelChoice::CoupledAt | ModelChoice::Coupled8v);
    let mut cfg = McExperiment {
        seed: seed.or(file.seed).unwrap_or(1),
        model,
        side,
        beta: None,
        lambda,
        j: None,
        j_prime: None,
        j4: None,
        t: None,
        sweeps: flags.sweeps.or(file.sweeps).unwrap_or(10_000),
        thermalization: 0,
        stride: 0,
        order: None,
        chains: flags.chains.or(file.chains).unwrap_or(1),
        oracle_check: flags.oracle_check.or(file.oracle_check).unwrap_or(false),
        fit: flags.fit.or(file.fit).unwrap_or(false),
        window: flags.window.or(file.window),
        magnetic_window: flags.magnetic_window.or(file.magnetic_window),
        eta_window: flags.eta_window.or(file.eta_window),
        a_window: flags.a_window.or(file.a_window),
    };
    if dimer {
        if beta.is_some() || j.is_some() || j_prime.is_some() || j4.is_some() || order.is_some() {
            return Err(CliError::Config("beta, j, j_prime, j4 and order do not apply to dimers".into()));
        }
        cfg.t = Some(t.unwrap_or([1.0; 4]));
        if cfg.window.is_some() || cfg.magnetic_window.is_some() {
            return Err(CliError::Config("dimer fits take eta_window and a_window".into()));
        }
        cfg.eta_window = cfg.eta_window.or(dimer_eta_window(side));
        cfg.a_window = cfg.a_window.or(dimer_a_window(side));
    } else {
        if t.is_some() || cfg.eta_window.is_some() || cfg.a_window.is_some() {
            return Err(CliError::Config("t, eta_window and a_window apply to dimers only".into()));
        }
        if model == ModelChoice::Ising && (lambda != 0.0 || j_prime.is_some() || j4.is_some()) {
            return Err(CliError::Config("the Ising model takes only j and beta".into()));
        }
        if model == ModelChoice::Generalized && (j_prime.is_some() || j4.is_some()) {
            return Err(CliError::Config("the generalized model takes j, lambda and beta".into()));
        }
        cfg.beta = Some(beta.ok_or_else(|| CliError::Config("--beta is required for spin models".into()))?);
        cfg.j = Some(j.unwrap_or(1.0));
        if two_layers {
            cfg.j_prime = Some(j_prime.unwrap_or(1.0));
            cfg.j4 = Some(j4.unwrap_or(0.0));
        }
        cfg.window = cfg.window.or(energy_window(side));
        cfg.magnetic_window = cfg.magnetic_window.or(magnetic_window(side));
        let default_order = if side == 2 { OrderChoice::RandomSite } else { OrderChoice::Checkerboard };
        cfg.order = Some(order.unwrap_or(default_order));
    }
    for w in [cfg.window, cfg.magnetic_window, cfg.eta_window, cfg.a_window].into_iter().flatten() {
        check_window(w, "window")?;
    }
    if cfg.chains == 0 {
        return Err(CliError::Config("chains must be at least 1".into()));
    }
    let core = planarstat::montecarlo::McConfig::new(crate::commands::mc::core_model(&cfg), side, cfg.sweeps, cfg.seed);
    cfg.thermalization = flags.thermalization.or(file.thermalization).unwrap_or(core.thermalization_sweeps());
    cfg.stride = flags.stride.or(file.stride).unwrap_or(core.stride_sweeps());
    crate::commands::mc::core_config(&cfg, cfg.seed).validate()?;
    Ok(ExperimentConfig::Mc(cfg))
}

pub fn resolve_fit(flags: FitArgs) -> Result<ExperimentConfig, CliError> {
    let file: FitArgs = load_file(flags.config.as_deref(), "fit")?;
    let fit = flags.fit_kind.or(file.fit_kind).unwrap_or(FitKind::Power);
    let model = flags.model.or(file.model).unwrap_or(ModelVariant::Pure);
    let allowed = match fit {
        FitKind::Power | FitKind::LogVariance => model != ModelVariant::PowerCorrected,
        FitKind::CorrelationLength => model != ModelVariant::TorusCorrected,
        FitKind::TwoChannel => model == ModelVariant::Pure,
    };
    if !allowed {
        return Err(CliError::Config(format!("model {model:?} does not apply to fit {fit:?}")));
    }
    let record_as = flags.record_as.or(file.record_as);
    if let Some(name) = &record_as {
        if planarstat::ExponentName::parse(name).is_none() {
            return Err(CliError::Config(format!("unknown exponent name {name:?}")));
        }
    }
    let window = flags.window.or(file.window).map(|w| check_window(w, "window")).transpose()?;
    Ok(ExperimentConfig::Fit(FitConfig {
        series: flags.series.or(file.series).ok_or_else(|| CliError::Config("--series is required".into()))?,
        side: flags.side.or(file.side).ok_or_else(|| CliError::Config("--L is required".into()))?,
        fit,
        model,
        window,
        staggered_exponent: flags.staggered_exponent.or(file.staggered_exponent).unwrap_or(2.0),
        record_as,
        scale: flags.scale.or(file.scale).unwrap_or(1.0),
    }))
}

pub fn resolve_verify(flags: VerifyArgs) -> Result<ExperimentConfig, CliError> {
    let file: VerifyArgs = load_file(flags.config.as_deref(), "verify")?;
    let records = flags.records.or(file.records).unwrap_or_default();
    if records.is_empty() {
        return Err(CliError::Config("at least one --record is required".into()));
    }
    let cfg = VerifyConfig {
        records,
        tolerance: flags.tolerance.or(file.tolerance).unwrap_or(1e-9),
        n_sigma: flags.n_sigma.or(file.n_sigma).unwrap_or(2.0),
    };
    if !(cfg.tolerance >= 0.0 && cfg.n_sigma >= 0.0) {
        return Err(CliError::Config("tolerance and n_sigma must be non-negative".into()));
    }
    Ok(ExperimentConfig::Verify(cfg))
}

pub fn resolve_rgflow(flags: RgflowArgs) -> Result<ExperimentConfig, CliError> {
    let file: RgflowArgs = load_file(flags.config.as_deref(), "rgflow")?;
    Ok(ExperimentConfig::Rgflow(RgflowConfig {
        lambda0: flags.lambda0.or(file.lambda0).ok_or_else(|| CliError::Config("--lambda0 is required".into()))?,
        mode: flags.mode.or(file.mode).unwrap_or(FlowModeChoice::Anchored),
        coef: flags.coef.or(file.coef).unwrap_or(1.0),
        b: flags.b.or(file.b).unwrap_or(1.0),
        gamma: flags.gamma.or(file.gamma).unwrap_or(2.0),
        hmin: flags.hmin.or(file.hmin).unwrap_or(-200),
    }))
}
