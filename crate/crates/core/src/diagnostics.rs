//! Model checking: PIT uniformity (Kolmogorov-Smirnov), normal QQ data
//! and PIT histograms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::distributions::std_normal_quantile;
use crate::error::{Error, Result};
use crate::indices::IndexSeries;

/// Model-checking summary of one index run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// Kolmogorov distance of the PIT probabilities from uniform.
    pub ks_stat: f64,
    /// Whether the distance stays below the asymptotic critical value.
    pub ks_pass: bool,
    pub alpha: f64,
    pub pit_histogram: Vec<usize>,
    /// (theoretical, empirical) normal quantile pairs.
    pub qq_points: Vec<(f64, f64)>,
    /// Count of defined entries.
    pub n: usize,
}

/// Kolmogorov-Smirnov statistic of `probs` against the standard uniform,
/// with the asymptotic pass/fail verdict at level `alpha`.
///
/// The critical value `sqrt(ln(2/alpha)/2)/sqrt(n)` is asymptotic; for
/// n below ~35 it is conservative only approximately.
pub fn ks_uniform(probs: &[f64], alpha: f64) -> Result<(f64, bool)> {
    if probs.len() < 5 {
        return Err(Error::TooFewPoints { got: probs.len(), need: 5 });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("ks_uniform", format!("alpha must lie in (0,1), got {alpha}")));
    }
    for &p in probs {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain("ks_uniform", format!("probability {p} outside (0,1)")));
        }
    }
    let mut sorted = probs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut stat = 0.0f64;
    for (i, &p) in sorted.iter().enumerate() {
        let hi = (i + 1) as f64 / n - p;
        let lo = p - i as f64 / n;
        stat = stat.max(hi).max(lo);
    }
    let critical = (f64::ln(2.0 / alpha) / 2.0).sqrt() / n.sqrt();
    Ok((stat, stat < critical))
}

/// Normal QQ pairs: empirical = sorted values, theoretical at plotting
/// positions `(i - 0.5) / n`.
pub fn qq_points(z_values: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n = z_values.len();
    if n < 5 {
        return Err(Error::TooFewPoints { got: n, need: 5 });
    }
    let mut sorted = z_values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let p = (i as f64 + 0.5) / n as f64;
            Ok((std_normal_quantile(p)?, z))
        })
        .collect()
}

/// Largest |empirical - theoretical| over the central share of plotting
/// positions.
///
/// Extreme order statistics of even perfectly normal samples fluctuate by
/// several tenths at realistic n, so a fixed closeness bound is only
/// meaningful away from the tails; `central = 0.95` restricts to plotting
/// positions in [0.025, 0.975], matching the coverage-interval
/// convention. `central = 1.0` uses every point.
pub fn qq_max_deviation(points: &[(f64, f64)], central: f64) -> f64 {
    let n = points.len() as f64;
    let tail = 0.5 * (1.0 - central);
    points
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let p = (*i as f64 + 0.5) / n;
            p >= tail && p <= 1.0 - tail
        })
        .map(|(_, &(th, emp))| (emp - th).abs())
        .fold(0.0, f64::max)
}

/// Equal-width histogram of PIT probabilities on [0, 1]; the last bin is
/// right-closed.
pub fn pit_histogram(probs: &[f64], bins: usize) -> Result<Vec<usize>> {
    if bins < 2 {
        return Err(Error::domain("pit_histogram", format!("bins must be >= 2, got {bins}")));
    }
    let mut counts = vec![0usize; bins];
    for &p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain("pit_histogram", format!("probability {p} outside [0,1]")));
        }
        let b = ((p * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Ok(counts)
}

/// Full diagnostics of an index run at significance `alpha` with
/// `hist_bins` histogram bins.
pub fn diagnostics_report(
    index: &IndexSeries,
    alpha: f64,
    hist_bins: usize,
) -> Result<DiagnosticsReport> {
    let probs = index.probs();
    let z = index.z_values();
    let (ks_stat, ks_pass) = ks_uniform(&probs, alpha)?;
    Ok(DiagnosticsReport {
        ks_stat,
        ks_pass,
        alpha,
        pit_histogram: pit_histogram(&probs, hist_bins)?,
        qq_points: qq_points(&z)?,
        n: probs.len(),
    })
}

/// Writes `theoretical,empirical` QQ rows for plotting.
pub fn write_qq_csv<W: Write>(points: &[(f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "theoretical,empirical")?;
    for (th, emp) in points {
        writeln!(w, "{th},{emp}")?;
    }
    Ok(())
}

/// Writes `bin_lo,bin_hi,count` histogram rows for plotting.
pub fn write_histogram_csv<W: Write>(counts: &[usize], mut w: W) -> Result<()> {
    writeln!(w, "bin_lo,bin_hi,count")?;
    let bins = counts.len() as f64;
    for (i, c) in counts.iter().enumerate() {
        writeln!(w, "{},{},{}", i as f64 / bins, (i + 1) as f64 / bins, c)?;
    }
    Ok(())
}
