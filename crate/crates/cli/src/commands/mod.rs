//! One module per subcommand. Each resolves nothing itself: it takes a
//! resolved configuration, writes a run directory and returns a [`Report`].

pub mod exact;
pub mod fit;
pub mod mc;
pub mod rgflow;
pub mod verify;

use crate::error::CliError;
use crate::persist::RunDir;
use crate::record::{FitEntry, ResultRecord};
use planarstat::fitting::FitResult;
use std::path::PathBuf;

/// Outcome of a subcommand.
#[derive(Debug)]
pub struct Report {
    pub dir: PathBuf,
    pub record_path: PathBuf,
    pub record: ResultRecord,
    /// False when a verification or oracle comparison failed.
    pub passed: bool,
    /// Human-readable summary printed to stdout.
    pub summary: String,
}

pub(crate) fn finish(dir: RunDir, record: ResultRecord, passed: bool, summary: String) -> Result<Report, CliError> {
    let record_path = dir.write_record(&record)?;
    Ok(Report {
        dir: dir.path,
        record_path,
        record,
        passed,
        summary,
    })
}

pub(crate) fn fit_entry(name: &str, series: &str, method: &str, f: &FitResult) -> FitEntry {
    FitEntry {
        name: name.to_string(),
        series: series.to_string(),
        method: method.to_string(),
        window: f.window,
        points: f.points,
        value: f.value,
        stderr: f.stderr,
        prefactor: f.prefactor,
        reduced_chi2: f.reduced_chi2,
    }
}

/// Table of exponents and values for the summary.
pub(crate) fn describe(record: &ResultRecord) -> String {
    let mut out = String::new();
    for (name, e) in &record.exponents.values {
        out.push_str(&format!(
            "{:<28} {:>24.16e} +- {:<10.3e} {}\n",
            name.as_str(),
            e.value,
            e.uncertainty,
            record.sources.get(name.as_str()).map_or("", String::as_str)
        ));
    }
    for (name, v) in &record.values {
        out.push_str(&format!("{name:<28} {v:>24.16e}\n"));
    }
    for n in &record.notes {
        out.push_str(&format!("note: {n}\n"));
    }
    out
}
