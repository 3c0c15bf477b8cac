//! Command-line surface. Every subcommand struct doubles as the schema of its
//! `--config` file: fields are optional, flags override file values.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Parser)]
#[command(name = "planarstat", version, about = "Exact and Monte Carlo critical data for planar lattice models")]
pub struct Cli {
    /// Base seed of the random streams.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory under which run directories are created.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// Worker threads for independent chains.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact dimer statistics and closed-form exponents.
    Exact {
        #[command(subcommand)]
        target: ExactTarget,
    },
    /// Monte Carlo chains with correlation measurements.
    Mc(McArgs),
    /// Fit a stored correlation series.
    Fit(FitArgs),
    /// Check scaling relations across result records.
    Verify(VerifyArgs),
    /// Iterate the running-coupling recursion.
    Rgflow(RgflowArgs),
}

#[derive(Debug, Subcommand)]
pub enum ExactTarget {
    /// Pfaffian correlations of the free dimer model.
    Dimer(ExactDimerArgs),
    /// Closed-form exponents and the relation table.
    Formulas(ExactFormulasArgs),
}

/// Inclusive separation window written `lo,hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window(pub usize, pub usize);

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected lo,hi, got {s:?}"))?;
        let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
        Ok(Window(p(lo)?, p(hi)?))
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0, self.1)
    }
}

impl From<Window> for (usize, usize) {
    fn from(w: Window) -> Self {
        (w.0, w.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleChoice {
    /// All covers of the torus.
    All,
    /// Zero-winding covers, the sector sampled by the plaquette chain.
    Zero,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactDimerArgs {
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(skip)]
    pub kind: Option<String>,
    /// Linear size (even, at least 4).
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub side: Option<usize>,
    /// Bond weights t1..t4.
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub ensemble: Option<EnsembleChoice>,
    /// Window for the dimer exponent.
    #[arg(long)]
    pub eta_window: Option<Window>,
    /// Window for the height-variance amplitude.
    #[arg(long)]
    pub a_window: Option<Window>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactFormulasArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(skip)]
    pub kind: Option<String>,
    /// Current-current coupling of the continuum model.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_tilde: Option<f64>,
    /// Velocity.
    #[arg(long)]
    pub v: Option<f64>,
    /// Fixed-point coupling of the dimer sector; when absent its exponents
    /// follow from X_e.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_inf: Option<f64>,
    /// Field strength Z.
    #[arg(long)]
    pub z: Option<f64>,
    /// Quartic coupling of the eight-vertex map.
    #[arg(long, allow_hyphen_values = true)]
    pub baxter_lambda: Option<f64>,
    /// Absolute tolerance of the relation checks.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    /// Two Ising layers with the Ashkin-Teller quartic term.
    #[value(name = "coupled-at", alias = "coupled-AT")]
    CoupledAt,
    /// Two Ising layers with the eight-vertex quartic term.
    #[value(name = "coupled-8v", alias = "coupled-8V")]
    #[serde(rename = "coupled-8v")]
    Coupled8v,
    /// Nearest-neighbour Ising model.
    Ising,
    /// Single layer with the next-nearest-neighbour quartic kernel.
    Generalized,
    /// Interacting dimers.
    Dimer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderChoice {
    Checkerboard,
    RandomSite,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(skip)]
    pub kind: Option<String>,
    #[arg(skip)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub model: Option<ModelChoice>,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub side: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Quartic (spins) or plaquette (dimers) coupling.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j_prime: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j4: Option<f64>,
    /// Dimer bond weights t1..t4.
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    /// Measurement sweeps per chain.
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub thermalization: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Site order of spin updates; random-site on L = 2.
    #[arg(long, value_enum)]
    pub order: Option<OrderChoice>,
    /// Independent chains with seeds seed, seed+1, ...
    #[arg(long)]
    pub chains: Option<usize>,
    /// Compare against exact enumeration (spins L = 2, dimers L = 4).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub oracle_check: Option<bool>,
    /// Fit exponents from the measured series.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub fit: Option<bool>,
    /// Window of the energy-type fits (pure power law).
    #[arg(long)]
    pub window: Option<Window>,
    /// Window of the spin and polarization fits (torus-corrected power law).
    #[arg(long)]
    pub magnetic_window: Option<Window>,
    /// Window of the dimer exponent fit.
    #[arg(long)]
    pub eta_window: Option<Window>,
    /// Window of the height-variance fit.
    #[arg(long)]
    pub a_window: Option<Window>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    /// `|C| ~ r^-x`.
    Power,
    /// `V = (A / pi^2) ln r + c`.
    LogVariance,
    /// `|C| ~ e^{-r/xi}`.
    CorrelationLength,
    /// Plain power law plus a staggered term of fixed exponent.
    TwoChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    /// Leading form only.
    Pure,
    /// Adds the torus `(r/L)^2` and sublattice `(-1)^r` regressors.
    TorusCorrected,
    /// Exponential with a fitted power prefactor.
    PowerCorrected,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(skip)]
    pub kind: Option<String>,
    /// CSV file with header r,mean,stderr,n.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Lattice size the series was measured on.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub side: Option<usize>,
    #[arg(long = "kind", value_enum)]
    #[serde(rename = "fit")]
    pub fit_kind: Option<FitKind>,
    #[arg(long, value_enum)]
    pub model: Option<ModelVariant>,
    #[arg(long)]
    pub window: Option<Window>,
    #[arg(long)]
    pub staggered_exponent: Option<f64>,
    /// Exponent name the fitted value is recorded as (X_e, eta1, A, ...).
    #[arg(long = "as")]
    #[serde(rename = "as")]
    pub record_as: Option<String>,
    /// Factor applied to the fitted value before recording.
    #[arg(long)]
    pub scale: Option<f64>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(skip)]
    pub kind: Option<String>,
    /// Record files; later records win on duplicate exponents.
    #[arg(long = "record")]
    pub records: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub n_sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowModeChoice {
    /// `c gamma^h lambda^2`.
    Anchored,
    /// `a lambda^2`.
    Runaway,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RgflowArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(skip)]
    pub kind: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<FlowModeChoice>,
    /// Coefficient `c` or `a` of the beta function.
    #[arg(long, allow_hyphen_values = true)]
    pub coef: Option<f64>,
    /// Field-strength coefficient.
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub hmin: Option<i64>,
}
