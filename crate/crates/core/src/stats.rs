//! Binning, jackknife errors and correlation series.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("need at least {need} bins, got {got}")]
    TooFewBins { need: usize, got: usize },
    #[error("invalid series: {0}")]
    InvalidSeries(String),
}

pub const MIN_BINS: usize = 20;

/// A value with its one-sigma error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub mean: f64,
    pub stderr: f64,
}

impl Measured {
    pub fn new(mean: f64, stderr: f64) -> Self {
        Measured { mean, stderr }
    }

    /// Number of combined standard deviations separating `self` from `other`.
    pub fn pull(&self, other: &Measured) -> f64 {
        let s = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        if s == 0.0 {
            if self.mean == other.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - other.mean).abs() / s
        }
    }
}

/// Means of `nbins` consecutive equal blocks; a remainder at the end is dropped.
pub fn bin_means(data: &[f64], nbins: usize) -> Result<Vec<f64>, StatsError> {
    if nbins == 0 || data.len() < nbins {
        return Err(StatsError::TooFewSamples {
            need: nbins.max(1),
            got: data.len(),
        });
    }
    let size = data.len() / nbins;
    Ok(data
        .chunks_exact(size)
        .take(nbins)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect())
}

/// Jackknife estimate of `f` over bins. `bins[i]` holds the bin averages of
/// every input quantity for bin `i`.
pub fn jackknife<F>(bins: &[Vec<f64>], f: F) -> Result<Measured, StatsError>
where
    F: Fn(&[f64]) -> f64,
{
    let n = bins.len();
    if n < 2 {
        return Err(StatsError::TooFewBins { need: 2, got: n });
    }
    let k = bins[0].len();
    let mut total = vec![0.0; k];
    for b in bins {
        for (t, v) in total.iter_mut().zip(b) {
            *t += v;
        }
    }
    let full: Vec<f64> = total.iter().map(|t| t / n as f64).collect();
    let estimate = f(&full);
    let mut leave = vec![0.0; k];
    let mut values = Vec::with_capacity(n);
    for b in bins {
        for j in 0..k {
            leave[j] = (total[j] - b[j]) / (n - 1) as f64;
        }
        values.push(f(&leave));
    }
    let avg = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - avg).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    Ok(Measured::new(estimate, var.sqrt()))
}

/// Mean of a stream with a binned error estimate.
pub fn binned_mean(data: &[f64], nbins: usize) -> Result<Measured, StatsError> {
    let bins = bin_means(data, nbins)?;
    let n = bins.len() as f64;
    let mean = bins.iter().sum::<f64>() / n;
    let var = bins.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(Measured::new(mean, (var / n).sqrt()))
}

/// Which part of an oscillating correlation a series holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Full,
    Plain,
    /// Amplitude of the `(-1)^{x1 + x2}` component.
    Staggered,
}

/// Direction of the separation between two parallel bonds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairAxis {
    /// Along the bonds' own axis.
    #[default]
    Along,
    /// Perpendicular to the bonds.
    Across,
}

/// Correlation (or variance) data as a function of separation along an axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub observable: String,
    pub channel: Channel,
    pub side: usize,
    pub r: Vec<usize>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n: Vec<usize>,
}

impl CorrelationSeries {
    pub fn new(observable: &str, channel: Channel, side: usize) -> Self {
        CorrelationSeries {
            observable: observable.to_string(),
            channel,
            side,
            r: Vec::new(),
            mean: Vec::new(),
            stderr: Vec::new(),
            n: Vec::new(),
        }
    }

    pub fn push(&mut self, r: usize, mean: f64, stderr: f64, n: usize) {
        self.r.push(r);
        self.mean.push(mean);
        self.stderr.push(stderr);
        self.n.push(n);
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        let k = self.r.len();
        if self.mean.len() != k || self.stderr.len() != k || self.n.len() != k {
            return Err(StatsError::InvalidSeries("column lengths differ".into()));
        }
        if self.r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(StatsError::InvalidSeries("separations not strictly increasing".into()));
        }
        if self.r.last().is_some_and(|&r| 2 * r > self.side) {
            return Err(StatsError::InvalidSeries(format!(
                "separation beyond L/2 = {}",
                self.side / 2
            )));
        }
        if self.stderr.iter().any(|&e| !(e >= 0.0)) {
            return Err(StatsError::InvalidSeries("negative or NaN stderr".into()));
        }
        Ok(())
    }

    /// Points with `lo <= r <= hi`.
    pub fn window(&self, lo: usize, hi: usize) -> CorrelationSeries {
        let mut out = CorrelationSeries::new(&self.observable, self.channel, self.side);
        for i in 0..self.len() {
            if self.r[i] >= lo && self.r[i] <= hi {
                out.push(self.r[i], self.mean[i], self.stderr[i], self.n[i]);
            }
        }
        out
    }

    /// Splits `C(r) = (-1)^r a(r) + p(r)` with smooth `a`, `p` into the
    /// staggered amplitude `a` and the plain part `p`, using the three-point
    /// combinations `a ~ (-1)^r [C(r) - (C(r-1) + C(r+1))/2] / 2` and
    /// `p ~ [C(r) + (C(r-1) + C(r+1))/2] / 2`. Needs consecutive separations;
    /// the end points are lost.
    pub fn split_channels(&self) -> Result<(CorrelationSeries, CorrelationSeries), StatsError> {
        if self.r.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(StatsError::InvalidSeries("channel split needs consecutive r".into()));
        }
        let mut plain = CorrelationSeries::new(&self.observable, Channel::Plain, self.side);
        let mut stag = CorrelationSeries::new(&self.observable, Channel::Staggered, self.side);
        for i in 1..self.len().saturating_sub(1) {
            let c = self.mean[i];
            let nb = 0.5 * (self.mean[i - 1] + self.mean[i + 1]);
            let sign = if self.r[i].is_multiple_of(2) { 1.0 } else { -1.0 };
            // neighbours enter with weight 1/4 each
            let err = (0.25 * self.stderr[i].powi(2)
                + 0.0625 * (self.stderr[i - 1].powi(2) + self.stderr[i + 1].powi(2)))
            .sqrt();
            let n = self.n[i - 1].min(self.n[i]).min(self.n[i + 1]);
            stag.push(self.r[i], sign * 0.5 * (c - nb), err, n);
            plain.push(self.r[i], 0.5 * (c + nb), err, n);
        }
        Ok((plain, stag))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bins_average_blocks() {
        let d: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(bin_means(&d, 5).unwrap(), vec![0.5, 2.5, 4.5, 6.5, 8.5]);
        assert_eq!(bin_means(&d, 3).unwrap(), vec![1.0, 4.0, 7.0]);
        assert!(bin_means(&d, 11).is_err());
    }

    #[test]
    fn jackknife_of_mean_matches_naive_error() {
        let bins: Vec<Vec<f64>> = [1.0, 2.0, 4.0, 7.0].iter().map(|&x| vec![x]).collect();
        let j = jackknife(&bins, |v| v[0]).unwrap();
        let m = binned_mean(&[1.0, 2.0, 4.0, 7.0], 4).unwrap();
        assert!((j.mean - 3.5).abs() < 1e-15);
        assert!((j.stderr - m.stderr).abs() < 1e-14);
    }

    #[test]
    fn uncorrelated_stream_error_is_sigma_over_root_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..200_000).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let est = binned_mean(&data, 50).unwrap();
        let analytic = (1.0f64 / 3.0).sqrt() / (data.len() as f64).sqrt();
        assert!((est.stderr / analytic - 1.0).abs() < 0.2, "{} vs {}", est.stderr, analytic);
    }

    #[test]
    fn channel_split_recovers_components() {
        let mut s = CorrelationSeries::new("x", Channel::Full, 64);
        for r in 1..20usize {
            let rf = r as f64;
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            s.push(r, sign * 3.0 + 0.5 + 0.0 * rf, 0.0, 1);
        }
        let (p, a) = s.split_channels().unwrap();
        assert!(a.mean.iter().all(|&v| (v - 3.0).abs() < 1e-12));
        assert!(p.mean.iter().all(|&v| (v - 0.5).abs() < 1e-12));
        assert_eq!(a.r.first(), Some(&2));
    }

    #[test]
    fn series_validation() {
        let mut s = CorrelationSeries::new("x", Channel::Full, 8);
        s.push(1, 0.1, 0.0, 1);
        s.push(5, 0.1, 0.0, 1);
        assert!(s.validate().is_err());
        let mut s = CorrelationSeries::new("x", Channel::Full, 8);
        s.push(2, 0.1, 0.0, 1);
        s.push(2, 0.1, 0.0, 1);
        assert!(s.validate().is_err());
    }
}
