//! Flood and drought detection on a standardized index series.
//!
//! An event is a maximal run of same-sign standardized values containing
//! at least one exceedance of the detection threshold. Undefined entries
//! and exact zeros terminate runs; droughts come from negative runs,
//! floods from positive ones. The magnitude is the absolute sum of the
//! index over the run, the intensity classifies the peak.

use std::fmt;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::IndexEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Drought,
    Flood,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Drought => "drought",
            EventKind::Flood => "flood",
        })
    }
}

/// Intensity classes of the peak standardized value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intensity {
    ExtremeFlood,
    SevereFlood,
    ModerateFlood,
    NearNormal,
    ModerateDrought,
    SevereDrought,
    ExtremeDrought,
}

impl fmt::Display for Intensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Intensity::ExtremeFlood => "extreme_flood",
            Intensity::SevereFlood => "severe_flood",
            Intensity::ModerateFlood => "moderate_flood",
            Intensity::NearNormal => "near_normal",
            Intensity::ModerateDrought => "moderate_drought",
            Intensity::SevereDrought => "severe_drought",
            Intensity::ExtremeDrought => "extreme_drought",
        })
    }
}

/// Intensity class of a standardized value.
///
/// Boundaries: floods include their lower bound (`1 <= z < 1.5` is
/// moderate), droughts include their upper bound (`-1.5 < z <= -1` is
/// moderate), and `z <= -2` is an extreme drought.
pub fn classify_intensity(z: f64) -> Result<Intensity> {
    if !z.is_finite() {
        return Err(Error::domain("classify_intensity", format!("non-finite value {z}")));
    }
    Ok(if z >= 2.0 {
        Intensity::ExtremeFlood
    } else if z >= 1.5 {
        Intensity::SevereFlood
    } else if z >= 1.0 {
        Intensity::ModerateFlood
    } else if z > -1.0 {
        Intensity::NearNormal
    } else if z > -1.5 {
        Intensity::ModerateDrought
    } else if z > -2.0 {
        Intensity::SevereDrought
    } else {
        Intensity::ExtremeDrought
    })
}

/// One detected flood or drought.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeEvent {
    pub kind: EventKind,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Extremal standardized value in the run.
    pub peak: f64,
    /// Absolute sum of the standardized values over the run.
    pub magnitude: f64,
    pub intensity: Intensity,
}

/// Detects events as maximal same-sign runs containing at least one
/// `|z| >= threshold`. Runs split at undefined entries and at exact
/// zeros. Events come back ordered by start and never overlap.
pub fn detect_events(entries: &[IndexEntry], threshold: f64) -> Result<Vec<ExtremeEvent>> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::domain(
            "detect_events",
            format!("threshold must be positive, got {threshold}"),
        ));
    }
    let mut events = Vec::new();
    let mut run: Vec<(NaiveDate, f64)> = Vec::new();
    let mut sign = 0i8;

    let mut close = |run: &mut Vec<(NaiveDate, f64)>, sign: i8| {
        if run.is_empty() {
            return;
        }
        let peak = run
            .iter()
            .map(|&(_, z)| z)
            .fold(0.0f64, |acc, z| if z.abs() > acc.abs() { z } else { acc });
        if peak.abs() >= threshold {
            let sum: f64 = run.iter().map(|&(_, z)| z).sum();
            events.push(ExtremeEvent {
                kind: if sign > 0 { EventKind::Flood } else { EventKind::Drought },
                start: run[0].0,
                end: run[run.len() - 1].0,
                peak,
                magnitude: sum.abs(),
                intensity: classify_intensity(peak).expect("finite peak"),
            });
        }
        run.clear();
    };

    for e in entries {
        match e.z {
            Some(z) if z > 0.0 => {
                if sign != 1 {
                    close(&mut run, sign);
                    sign = 1;
                }
                run.push((e.date, z));
            }
            Some(z) if z < 0.0 => {
                if sign != -1 {
                    close(&mut run, sign);
                    sign = -1;
                }
                run.push((e.date, z));
            }
            _ => {
                // undefined or exactly zero: terminate any open run
                close(&mut run, sign);
                sign = 0;
            }
        }
    }
    close(&mut run, sign);
    Ok(events)
}

/// Writes `kind,start,end,peak,magnitude,intensity` rows.
pub fn write_events_csv<W: Write>(events: &[ExtremeEvent], mut w: W) -> Result<()> {
    writeln!(w, "kind,start,end,peak,magnitude,intensity")?;
    for e in events {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e.kind, e.start, e.end, e.peak, e.magnitude, e.intensity
        )?;
    }
    Ok(())
}
