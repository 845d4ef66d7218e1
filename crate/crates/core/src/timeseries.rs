//! Precipitation series ingestion, moving averages and seasonal covariates.
//!
//! A [`PrecipSeries`] holds timestamped, possibly gappy, non-negative
//! observations. Gaps are missing *values* at present timestamps; rows with
//! an empty value field in the CSV become `None` entries. The moving
//! average (the time-scale smoother every index is built on) is taken over
//! consecutive entries and is undefined wherever its window is incomplete.

use std::io::{BufRead, BufReader, Read};

use chrono::{Datelike, Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nominal spacing between consecutive entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    /// Fixed spacing in days (7 for weekly data).
    Days(u32),
    /// Calendar months per step (1 for monthly data); spacing in days varies.
    CalendarMonths(u32),
}

impl Step {
    /// Number of steps per seasonal cycle (one year).
    pub fn period_steps(&self) -> f64 {
        match *self {
            Step::Days(d) => 365.2425 / d as f64,
            Step::CalendarMonths(m) => 12.0 / m as f64,
        }
    }
}

/// Options for [`load_csv`].
#[derive(Debug, Clone, Default)]
pub struct LoadConfig {
    /// Overrides the step inferred from the modal date spacing.
    pub step_override: Option<Step>,
}

/// A timestamped precipitation series.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecipSeries {
    entries: Vec<(NaiveDate, Option<f64>)>,
    step: Step,
    period_steps: f64,
}

impl PrecipSeries {
    /// Builds a series from already-parsed entries, validating the
    /// invariants: strictly increasing timestamps, non-negative values.
    pub fn new(entries: Vec<(NaiveDate, Option<f64>)>, step: Step) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::TooFewRows { got: entries.len(), need: 2 });
        }
        for pair in entries.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::DuplicateDate { date: pair[1].0 });
            }
        }
        for (i, (_, v)) in entries.iter().enumerate() {
            if let Some(v) = v {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::NegativeValue { line: i + 1, value: *v });
                }
            }
        }
        let period_steps = step.period_steps();
        Ok(Self { entries, step, period_steps })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(NaiveDate, Option<f64>)] {
        &self.entries
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.entries.iter().map(|(d, _)| *d)
    }

    pub fn step(&self) -> Step {
        self.step
    }

    pub fn period_steps(&self) -> f64 {
        self.period_steps
    }
}

/// Moving average of a [`PrecipSeries`] at one time-scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MaSeries {
    scale: usize,
    entries: Vec<(NaiveDate, Option<f64>)>,
}

impl MaSeries {
    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn entries(&self) -> &[(NaiveDate, Option<f64>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Count of defined entries.
    pub fn defined(&self) -> usize {
        self.entries.iter().filter(|(_, v)| v.is_some()).count()
    }
}

/// Treatment of windows that contain missing source values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Any missing value in the window makes the average undefined.
    #[default]
    Strict,
    /// Average the available values when at least half the window is
    /// present; undefined otherwise.
    MeanOfAvailable,
}

/// Reads a `date,precip` CSV stream into a [`PrecipSeries`].
///
/// Dates are ISO-8601; an empty precip field marks a missing value. Rows
/// are sorted by date; duplicate dates are rejected. The step is inferred
/// from the modal date spacing unless overridden in `config`.
pub fn load_csv<R: Read>(source: R, config: &LoadConfig) -> Result<PrecipSeries> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines();

    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::TooFewRows { got: 0, need: 2 }),
    };
    let header = header.trim_start_matches('\u{feff}').trim();
    if header != "date,precip" {
        return Err(Error::MalformedRow {
            line: 0,
            msg: format!("expected header `date,precip`, got `{header}`"),
        });
    }

    let mut entries: Vec<(NaiveDate, Option<f64>)> = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1; // 1-based data row
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, ',');
        let date_str = fields.next().unwrap_or("").trim();
        let value_str = fields.next().ok_or_else(|| Error::MalformedRow {
            line: row,
            msg: "missing precip field".into(),
        })?;
        if fields.next().is_some() {
            return Err(Error::MalformedRow { line: row, msg: "too many fields".into() });
        }
        let date = NaiveDate::parse_from_str(date_str, "%Y-%m-%d").map_err(|e| {
            Error::MalformedRow { line: row, msg: format!("bad date `{date_str}`: {e}") }
        })?;
        let value_str = value_str.trim();
        let value = if value_str.is_empty() {
            None
        } else {
            let v: f64 = value_str.parse().map_err(|e| Error::MalformedRow {
                line: row,
                msg: format!("bad precip `{value_str}`: {e}"),
            })?;
            if !v.is_finite() {
                return Err(Error::MalformedRow {
                    line: row,
                    msg: format!("non-finite precip `{value_str}`"),
                });
            }
            if v < 0.0 {
                return Err(Error::NegativeValue { line: row, value: v });
            }
            Some(v)
        };
        entries.push((date, value));
    }

    if entries.len() < 2 {
        return Err(Error::TooFewRows { got: entries.len(), need: 2 });
    }
    entries.sort_by_key(|(d, _)| *d);
    for pair in entries.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::DuplicateDate { date: pair[0].0 });
        }
    }

    let step = match config.step_override {
        Some(s) => s,
        None => infer_step(&entries),
    };
    PrecipSeries::new(entries, step)
}

/// Modal day spacing, promoted to a calendar-month step when every gap is
/// an exact month increment.
fn infer_step(entries: &[(NaiveDate, Option<f64>)]) -> Step {
    if let Some(m) = calendar_month_step(entries) {
        return Step::CalendarMonths(m);
    }
    let mut gaps: Vec<i64> = entries
        .windows(2)
        .map(|p| (p[1].0 - p[0].0).num_days())
        .collect();
    gaps.sort_unstable();
    let mut best = (gaps[0], 0usize);
    let mut run = (gaps[0], 0usize);
    for &g in &gaps {
        if g == run.0 {
            run.1 += 1;
        } else {
            run = (g, 1);
        }
        if run.1 > best.1 {
            best = run;
        }
    }
    Step::Days(best.0.max(1) as u32)
}

fn calendar_month_step(entries: &[(NaiveDate, Option<f64>)]) -> Option<u32> {
    let d0 = entries[0].0;
    let d1 = entries[1].0;
    let months = (d1.year() - d0.year()) * 12 + (d1.month() as i32 - d0.month() as i32);
    if months < 1 || months > 12 {
        return None;
    }
    let m = months as u32;
    let ok = entries
        .windows(2)
        .all(|p| p[0].0.checked_add_months(Months::new(m)) == Some(p[1].0));
    ok.then_some(m)
}

/// k-order moving average with the strict missing-value policy.
pub fn moving_average(series: &PrecipSeries, k: usize) -> Result<MaSeries> {
    moving_average_with_policy(series, k, MissingPolicy::Strict)
}

/// k-order moving average. Entry `t` (1-based) is defined only for
/// `t >= k`; under [`MissingPolicy::Strict`] every one of the k window
/// values must be present.
pub fn moving_average_with_policy(
    series: &PrecipSeries,
    k: usize,
    policy: MissingPolicy,
) -> Result<MaSeries> {
    let n = series.len();
    if k < 1 || k > n {
        return Err(Error::WindowOutOfRange { k, len: n });
    }
    let entries = series.entries();
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let date = entries[t].0;
        if t + 1 < k {
            out.push((date, None));
            continue;
        }
        let window = &entries[t + 1 - k..=t];
        let present: Vec<f64> = window.iter().filter_map(|(_, v)| *v).collect();
        let value = match policy {
            MissingPolicy::Strict if present.len() == k => {
                Some(present.iter().sum::<f64>() / k as f64)
            }
            MissingPolicy::MeanOfAvailable if 2 * present.len() >= k => {
                Some(present.iter().sum::<f64>() / present.len() as f64)
            }
            _ => None,
        };
        out.push((date, value));
    }
    Ok(MaSeries { scale: k, entries: out })
}

/// Position of a date within the seasonal cycle, in [0, 1):
/// `(day_of_year - 1) / days_in_year`, with 366 days in leap years.
pub fn seasonal_position(date: NaiveDate) -> f64 {
    let days_in_year = if date.leap_year() { 366.0 } else { 365.0 };
    (date.ordinal() as f64 - 1.0) / days_in_year
}

/// Equal-width seasonal bin index for a date, in `0..bins`.
pub fn seasonal_bin(date: NaiveDate, bins: usize) -> usize {
    let u = seasonal_position(date);
    ((u * bins as f64) as usize).min(bins - 1)
}

/// Partitions the defined moving-average values into equal-width seasonal
/// bins by the seasonal position of their timestamps.
pub fn split_by_season(ma: &MaSeries, bins: usize) -> Vec<Vec<f64>> {
    assert!(bins >= 1, "bins must be >= 1");
    let mut out = vec![Vec::new(); bins];
    for (date, value) in ma.entries() {
        if let Some(v) = value {
            out[seasonal_bin(*date, bins)].push(*v);
        }
    }
    out
}
