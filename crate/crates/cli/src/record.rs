//! Result records (`record.toml`, schema 1).
//!
//! Layout:
//!
//! * `schema`: format version, currently 1.
//! * `[meta]`: kind, config hash, seed, unix timestamp, tool version, RNG.
//! * `[config]`: the resolved configuration, tagged by `kind`.
//! * `[exponents.values.<name>]`: value, uncertainty, provenance.
//! * `[sources]`: for every exponent and value, the series file and fit or
//!   the closed-form formula it came from.
//! * `[values]`: further named numbers.
//! * `[relations]`: relation table, when one was evaluated.
//! * `[[series]]`, `[[fits]]`, `[[checks]]`: series files (relative to the
//!   run directory), fit summaries and oracle comparisons.
//! * `notes`: skipped fits and other diagnostics.

use crate::config::ExperimentConfig;
use crate::error::CliError;
use planarstat::{ExponentSet, RelationReport};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const SCHEMA: u32 = 1;
pub const RECORD_FILE: &str = "record.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub kind: String,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRef {
    pub name: String,
    /// Relative to the run directory.
    pub path: PathBuf,
    pub observable: String,
    pub channel: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub name: String,
    pub series: String,
    pub method: String,
    pub window: (usize, usize),
    pub points: usize,
    pub value: f64,
    pub stderr: f64,
    pub prefactor: f64,
    pub reduced_chi2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub quantity: String,
    pub measured: f64,
    pub stderr: f64,
    pub exact: f64,
    /// `(measured - exact) / stderr`; zero when both agree exactly.
    pub pull: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema: u32,
    pub meta: Meta,
    pub config: ExperimentConfig,
    #[serde(default)]
    pub exponents: ExponentSet,
    #[serde(default)]
    pub sources: BTreeMap<String, String>,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relations: Option<RelationReport>,
    #[serde(default)]
    pub series: Vec<SeriesRef>,
    #[serde(default)]
    pub fits: Vec<FitEntry>,
    #[serde(default)]
    pub checks: Vec<OracleCheck>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl ResultRecord {
    pub fn new(config: ExperimentConfig, rng: Option<String>) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        ResultRecord {
            schema: SCHEMA,
            meta: Meta {
                kind: config.kind().to_string(),
                config_hash: config.hash(),
                seed: config.seed(),
                timestamp,
                version: env!("CARGO_PKG_VERSION").to_string(),
                rng,
            },
            config,
            exponents: ExponentSet::new(),
            sources: BTreeMap::new(),
            values: BTreeMap::new(),
            relations: None,
            series: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Numeric(format!("record serialization: {e}")))
    }

    /// Reads and validates a record: schema version and existence of every
    /// referenced series file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let rec: ResultRecord =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if rec.schema != SCHEMA {
            return Err(CliError::Config(format!(
                "{}: schema {} is not supported (expected {SCHEMA})",
                path.display(),
                rec.schema
            )));
        }
        let dir = path.parent().unwrap_or(Path::new("."));
        for s in &rec.series {
            let p = dir.join(&s.path);
            if !p.is_file() {
                return Err(CliError::Io(format!("{}: series file {} is missing", path.display(), p.display())));
            }
        }
        Ok(rec)
    }
}
