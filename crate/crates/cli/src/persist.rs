//! Run directories, series CSV files and gnuplot data.
//!
//! Every file is created with `create_new`, so nothing is ever overwritten.
//! Floats are printed with 17 significant digits.

use crate::error::CliError;
use crate::record::{ResultRecord, SeriesRef, RECORD_FILE};
use planarstat::stats::{Channel, CorrelationSeries};
use serde::Deserialize;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, ErrorKind, Write};
use std::path::{Path, PathBuf};

pub const CONFIG_FILE: &str = "config.toml";

/// Seventeen significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn channel_name(c: Channel) -> &'static str {
    match c {
        Channel::Full => "full",
        Channel::Plain => "plain",
        Channel::Staggered => "staggered",
    }
}

/// A fresh directory `<out>/<kind>-<hash16>-<k>` with the smallest free `k`.
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn create(out: &Path, kind: &str, hash: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        for k in 0.. {
            let path = out.join(format!("{kind}-{}-{k}", &hash[..16]));
            match std::fs::create_dir(&path) {
                Ok(()) => return Ok(RunDir { path }),
                Err(e) if e.kind() == ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(CliError::io(&path, e)),
            }
        }
        unreachable!("unbounded search")
    }

    /// Writes `<name>.csv` and its gnuplot twin `<name>.dat`.
    pub fn write_series(&self, name: &str, s: &CorrelationSeries) -> Result<SeriesRef, CliError> {
        let file = format!("{name}.csv");
        let path = self.path.join(&file);
        let mut w = csv::Writer::from_writer(create(&path)?);
        let io = |e: csv::Error| CliError::io(&path, e);
        w.write_record(["r", "mean", "stderr", "n"]).map_err(io)?;
        for i in 0..s.len() {
            w.write_record([s.r[i].to_string(), float(s.mean[i]), float(s.stderr[i]), s.n[i].to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        let rows: Vec<Vec<f64>> = (0..s.len()).map(|i| vec![s.r[i] as f64, s.mean[i], s.stderr[i]]).collect();
        self.write_plot(&format!("{name}.dat"), &["r", "mean", "stderr"], &rows)?;
        Ok(SeriesRef {
            name: name.to_string(),
            path: PathBuf::from(file),
            observable: s.observable.clone(),
            channel: channel_name(s.channel).to_string(),
        })
    }

    /// Whitespace-separated columns with a `#` header line.
    pub fn write_plot(&self, file: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf, CliError> {
        let path = self.path.join(file);
        let mut w = create(&path)?;
        let io = |e: std::io::Error| CliError::io(&path, e);
        writeln!(w, "# {}", columns.join(" ")).map_err(io)?;
        for row in rows {
            let line: Vec<String> = row.iter().map(|&x| float(x)).collect();
            writeln!(w, "{}", line.join(" ")).map_err(io)?;
        }
        w.flush().map_err(io)?;
        Ok(path)
    }

    /// Copies an input file into the run directory.
    pub fn copy_in(&self, src: &Path, file: &str) -> Result<PathBuf, CliError> {
        let dst = self.path.join(file);
        let bytes = std::fs::read(src).map_err(|e| CliError::io(src, e))?;
        let mut w = create(&dst)?;
        w.write_all(&bytes).and_then(|_| w.flush()).map_err(|e| CliError::io(&dst, e))?;
        Ok(dst)
    }

    /// Writes `record.toml` and the resolved `config.toml`.
    pub fn write_record(&self, record: &ResultRecord) -> Result<PathBuf, CliError> {
        let cfg = self.path.join(CONFIG_FILE);
        let mut w = create(&cfg)?;
        w.write_all(record.config.to_toml().as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&cfg, e))?;
        let path = self.path.join(RECORD_FILE);
        let text = record.to_toml()?;
        let mut w = create(&path)?;
        w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

#[derive(Deserialize)]
struct Row {
    r: usize,
    mean: f64,
    stderr: f64,
    n: usize,
}

/// Reads a `r,mean,stderr,n` CSV file.
pub fn read_series(path: &Path, observable: &str, side: usize) -> Result<CorrelationSeries, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let header = rdr.headers().map_err(|e| CliError::io(path, e))?;
    if header.iter().collect::<Vec<_>>() != ["r", "mean", "stderr", "n"] {
        return Err(CliError::Config(format!("{}: header must be r,mean,stderr,n", path.display())));
    }
    let mut s = CorrelationSeries::new(observable, Channel::Full, side);
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        s.push(row.r, row.mean, row.stderr, row.n);
    }
    if s.is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", path.display())));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_round_trip_is_bit_exact() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = RunDir::create(tmp.path(), "fit", &"0".repeat(64)).unwrap();
        let mut s = CorrelationSeries::new("x", Channel::Full, 8);
        s.push(1, 0.1 + 0.2, 1.0 / 3.0, 7);
        s.push(2, -2.5e-300, f64::MIN_POSITIVE, 0);
        let r = dir.write_series("x", &s).unwrap();
        let back = read_series(&dir.path.join(r.path), "x", 8).unwrap();
        assert_eq!(back, s);
        assert!(dir.write_series("x", &s).is_err(), "files are never overwritten");
    }

    #[test]
    fn run_directories_are_fresh() {
        let tmp = tempfile::tempdir().unwrap();
        let h = "ab".repeat(32);
        let a = RunDir::create(tmp.path(), "mc", &h).unwrap();
        let b = RunDir::create(tmp.path(), "mc", &h).unwrap();
        assert_ne!(a.path, b.path);
        assert!(a.path.ends_with(format!("mc-{}-0", &h[..16])));
    }
}
