//! End-to-end standardized index pipelines (SPI, MBSI-1, MBSI-2) and
//! coverage intervals.
//!
//! All three methods share the final steps: evaluate the fitted CDF at
//! each smoothed observation (the probability integral transform) and map
//! the probability to a standard normal quantile. They differ in how the
//! CDF is obtained:
//!
//! * SPI fits one ZAGA per seasonal bin of the k-scale moving average;
//! * MBSI-1 fits the seasonal regression to the k-scale moving average;
//! * MBSI-2 fits the seasonal regression once to the raw series and
//!   estimates the k-scale CDF by Monte Carlo.
//!
//! Zero observations sit on the CDF's atom; SPI and MBSI-1 use the
//! midpoint `pi/2` of the jump, which keeps the PIT uniform in
//! expectation. Probabilities are clamped to `[1/(n+1), n/(n+1)]`
//! (`n = m` for the Monte Carlo estimator, 1e6 otherwise) so standardized
//! values stay finite.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    std_normal_quantile, zaga_cdf, zaga_quantile, zaga_sample, ZagaParams,
};
use crate::error::{Error, Result};
use crate::fit::{fit_binned_zaga, fit_seasonal_zaga, FitConfig, SeasonalZagaModel};
use crate::timeseries::{moving_average, split_by_season, PrecipSeries};

/// Effective sample size governing the probability clamp for the
/// analytically evaluated methods (SPI, MBSI-1).
const ANALYTIC_N_EFF: f64 = 1e6;

/// Index method identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Spi,
    Mbsi1,
    Mbsi2,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Spi => "spi",
            Method::Mbsi1 => "mbsi1",
            Method::Mbsi2 => "mbsi2",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spi" => Ok(Method::Spi),
            "mbsi1" => Ok(Method::Mbsi1),
            "mbsi2" => Ok(Method::Mbsi2),
            other => Err(Error::domain("method", format!("unknown method `{other}`"))),
        }
    }
}

/// One timestamped index entry. The index fields (`ma`, `prob`, `z`) are
/// undefined exactly where the moving average is undefined; the fitted
/// parameters are recorded for every timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub date: NaiveDate,
    pub ma: Option<f64>,
    pub prob: Option<f64>,
    pub z: Option<f64>,
    pub params: Option<ZagaParams>,
}

/// Sidecar metadata of an index run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexMeta {
    pub method: Method,
    pub scale: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model_file: Option<String>,
}

/// A standardized index series with its run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    pub meta: IndexMeta,
    pub entries: Vec<IndexEntry>,
}

impl IndexSeries {
    pub fn defined(&self) -> usize {
        self.entries.iter().filter(|e| e.z.is_some()).count()
    }

    /// PIT probabilities of the defined entries.
    pub fn probs(&self) -> Vec<f64> {
        self.entries.iter().filter_map(|e| e.prob).collect()
    }

    /// Standardized values of the defined entries.
    pub fn z_values(&self) -> Vec<f64> {
        self.entries.iter().filter_map(|e| e.z).collect()
    }

    /// Writes `date,ma,prob,z,pi,mu,sigma` rows; undefined fields stay
    /// empty. Floats use the shortest round-trip decimal form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "date,ma,prob,z,pi,mu,sigma")?;
        for e in &self.entries {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let (pi, mu, sigma) = match &e.params {
                Some(p) => (p.pi().to_string(), p.mu().to_string(), p.sigma().to_string()),
                None => (String::new(), String::new(), String::new()),
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                e.date,
                opt(e.ma),
                opt(e.prob),
                opt(e.z),
                pi,
                mu,
                sigma
            )?;
        }
        Ok(())
    }

    /// Reads entries back from [`IndexSeries::write_csv`] output.
    pub fn read_csv<R: Read>(r: R) -> Result<Vec<IndexEntry>> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or(Error::IndexFormat { line: 0, msg: "empty file".into() })??;
        if header.trim() != "date,ma,prob,z,pi,mu,sigma" {
            return Err(Error::IndexFormat { line: 0, msg: format!("bad header `{header}`") });
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = i + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::IndexFormat {
                    line: row,
                    msg: format!("expected 7 fields, got {}", fields.len()),
                });
            }
            let date = NaiveDate::parse_from_str(fields[0], "%Y-%m-%d")
                .map_err(|e| Error::IndexFormat { line: row, msg: format!("bad date: {e}") })?;
            let num = |s: &str| -> Result<Option<f64>> {
                let s = s.trim();
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|e| Error::IndexFormat { line: row, msg: format!("bad number `{s}`: {e}") })
            };
            let params = match (num(fields[4])?, num(fields[5])?, num(fields[6])?) {
                (Some(pi), Some(mu), Some(sigma)) => Some(ZagaParams::new(pi, mu, sigma)?),
                (None, None, None) => None,
                _ => {
                    return Err(Error::IndexFormat {
                        line: row,
                        msg: "incomplete parameter triple".into(),
                    })
                }
            };
            entries.push(IndexEntry {
                date,
                ma: num(fields[1])?,
                prob: num(fields[2])?,
                z: num(fields[3])?,
                params,
            });
        }
        if entries.is_empty() {
            return Err(Error::IndexFormat { line: 0, msg: "no data rows".into() });
        }
        Ok(entries)
    }
}

/// Configuration of the classical SPI pipeline.
#[derive(Debug, Clone)]
pub struct SpiConfig {
    /// Number of equal-width seasonal bins (12 for the monthly SPI).
    pub bins: usize,
    /// Smallest acceptable bin population: two observations per fitted
    /// parameter. Estimates from bins near this floor are statistically
    /// weak; at least 30 values per bin is the usual recommendation.
    pub min_bin_size: usize,
}

impl Default for SpiConfig {
    fn default() -> Self {
        Self { bins: 12, min_bin_size: 6 }
    }
}

/// Monte Carlo settings for MBSI-2.
#[derive(Debug, Clone)]
pub struct McConfig {
    /// Replicate count; at least 100.
    pub m: usize,
    pub seed: u64,
    /// Count ties between simulated and observed averages with weight 1/2
    /// instead of the strict `<` of the plain estimator. Off by default.
    pub tie_half_weight: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { m: 10_000, seed: 0, tie_half_weight: false }
    }
}

/// PIT probability of one observation under fitted parameters; zero
/// observations take the midpoint of the CDF jump at the atom.
fn pit_probability(params: &ZagaParams, x: f64) -> Result<f64> {
    if x == 0.0 {
        Ok(0.5 * params.pi())
    } else {
        zaga_cdf(x, params)
    }
}

fn clamp_probability(p: f64, n_eff: f64) -> f64 {
    p.clamp(1.0 / (n_eff + 1.0), n_eff / (n_eff + 1.0))
}

fn standardized_entry(
    date: NaiveDate,
    ma: Option<f64>,
    params: ZagaParams,
    n_eff: f64,
) -> Result<IndexEntry> {
    let (prob, z) = match ma {
        Some(x) => {
            let p = clamp_probability(pit_probability(&params, x)?, n_eff);
            (Some(p), Some(std_normal_quantile(p)?))
        }
        None => (None, None),
    };
    Ok(IndexEntry { date, ma, prob, z, params: Some(params) })
}

/// Classical SPI: per-bin maximum likelihood on the k-scale moving
/// average. Fails with the offending bin index when a bin is too small
/// for a usable fit (short records; see [`SpiConfig::min_bin_size`]).
pub fn compute_spi(series: &PrecipSeries, k: usize, config: &SpiConfig) -> Result<IndexSeries> {
    if config.bins < 1 {
        return Err(Error::domain("compute_spi", "bins must be >= 1"));
    }
    let ma = moving_average(series, k)?;
    let groups = split_by_season(&ma, config.bins);
    for (j, g) in groups.iter().enumerate() {
        if g.len() < config.min_bin_size {
            return Err(Error::UnderPopulatedBin {
                bin: j,
                size: g.len(),
                min: config.min_bin_size,
            });
        }
    }
    let model = fit_binned_zaga(&ma, config.bins)?;
    let entries = ma
        .entries()
        .iter()
        .map(|&(date, value)| {
            standardized_entry(date, value, *model.params_for(date), ANALYTIC_N_EFF)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexSeries {
        meta: IndexMeta {
            method: Method::Spi,
            scale: k,
            bins: Some(config.bins),
            m: None,
            seed: None,
            model_file: None,
        },
        entries,
    })
}

/// MBSI-1: seasonal regression fitted to the k-scale moving average.
pub fn compute_mbsi1(series: &PrecipSeries, k: usize, config: &FitConfig) -> Result<IndexSeries> {
    let ma = moving_average(series, k)?;
    let model = fit_seasonal_zaga(&ma, config)?;
    compute_mbsi1_with_model(series, k, &model)
}

/// MBSI-1 with an already fitted model (which must have been fitted at
/// the same scale).
pub fn compute_mbsi1_with_model(
    series: &PrecipSeries,
    k: usize,
    model: &SeasonalZagaModel,
) -> Result<IndexSeries> {
    if model.fitted_scale() != k {
        return Err(Error::ScaleMismatch { fitted: model.fitted_scale(), requested: k });
    }
    let ma = moving_average(series, k)?;
    let dates: Vec<NaiveDate> = ma.entries().iter().map(|&(d, _)| d).collect();
    let params = model.predict(&dates);
    let entries = ma
        .entries()
        .iter()
        .zip(params)
        .map(|(&(date, value), p)| standardized_entry(date, value, p, ANALYTIC_N_EFF))
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexSeries {
        meta: IndexMeta {
            method: Method::Mbsi1,
            scale: k,
            bins: None,
            m: None,
            seed: None,
            model_file: None,
        },
        entries,
    })
}

/// MBSI-2: seasonal regression fitted once to the raw series, k-scale CDF
/// estimated by Monte Carlo.
pub fn compute_mbsi2(
    series: &PrecipSeries,
    k: usize,
    mc: &McConfig,
    config: &FitConfig,
) -> Result<IndexSeries> {
    let raw = moving_average(series, 1)?;
    let model = fit_seasonal_zaga(&raw, config)?;
    compute_mbsi2_with_model(series, k, mc, &model)
}

/// MBSI-2 with an already fitted scale-1 model.
///
/// The replicate loop is data-parallel; each replicate derives its RNG
/// stream from `(seed, replicate index)` and the per-timestamp tallies
/// are exact integer sums, so the result does not depend on how rayon
/// schedules the work.
pub fn compute_mbsi2_with_model(
    series: &PrecipSeries,
    k: usize,
    mc: &McConfig,
    model: &SeasonalZagaModel,
) -> Result<IndexSeries> {
    if mc.m < 100 {
        return Err(Error::ReplicateCountTooSmall { m: mc.m });
    }
    if model.fitted_scale() != 1 {
        return Err(Error::ScaleMismatch { fitted: model.fitted_scale(), requested: 1 });
    }
    let ma_obs = moving_average(series, k)?;
    let dates: Vec<NaiveDate> = series.dates().collect();
    let params = model.predict(&dates);
    let observed: Vec<Option<f64>> = ma_obs.entries().iter().map(|&(_, v)| v).collect();
    let n = dates.len();

    let zero_tallies = || (vec![0u64; n], vec![0u64; n]);
    let (below, ties) = (0..mc.m as u64)
        .into_par_iter()
        .fold(zero_tallies, |(mut below, mut ties), replicate| {
            let mut rng = replicate_rng(mc.seed, replicate);
            let mut window = vec![0.0f64; k];
            let mut sum = 0.0f64;
            for t in 0..n {
                let draw = zaga_sample(&mut rng, &params[t]);
                sum += draw;
                let slot = t % k;
                if t >= k {
                    sum -= window[slot];
                }
                window[slot] = draw;
                if t + 1 >= k {
                    if let Some(x) = observed[t] {
                        let sim = sum / k as f64;
                        if sim < x {
                            below[t] += 1;
                        } else if sim == x {
                            ties[t] += 1;
                        }
                    }
                }
            }
            (below, ties)
        })
        .reduce(zero_tallies, |(mut b1, mut t1), (b2, t2)| {
            for i in 0..n {
                b1[i] += b2[i];
                t1[i] += t2[i];
            }
            (b1, t1)
        });

    let m = mc.m as f64;
    let entries = (0..n)
        .map(|t| {
            let (prob, z) = match observed[t] {
                Some(_) => {
                    let count =
                        below[t] as f64 + if mc.tie_half_weight { 0.5 * ties[t] as f64 } else { 0.0 };
                    let p = clamp_probability(count / m, m);
                    (Some(p), Some(std_normal_quantile(p)?))
                }
                None => (None, None),
            };
            Ok(IndexEntry {
                date: dates[t],
                ma: observed[t],
                prob,
                z,
                params: Some(params[t]),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(IndexSeries {
        meta: IndexMeta {
            method: Method::Mbsi2,
            scale: k,
            bins: None,
            m: Some(mc.m),
            seed: Some(mc.seed),
            model_file: None,
        },
        entries,
    })
}

/// Central coverage interval of a fitted ZAGA: the `(1-level)/2` and
/// `1-(1-level)/2` quantiles. The point mean is `params.mean()`.
pub fn coverage_interval(params: &ZagaParams, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(
            "coverage_interval",
            format!("level must lie in (0,1), got {level}"),
        ));
    }
    let tail = 0.5 * (1.0 - level);
    Ok((zaga_quantile(tail, params)?, zaga_quantile(1.0 - tail, params)?))
}

/// Independent ChaCha stream for one Monte Carlo replicate.
fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replicate.to_le_bytes());
    key[16] = 0x5a;
    ChaCha8Rng::from_seed(key)
}
