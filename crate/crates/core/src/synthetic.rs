//! Seeded synthetic precipitation fixtures.
//!
//! Used by the test suites and benchmarks, and handy for generating
//! example inputs. Monthly stamps sit mid-month so that equal-width
//! seasonal bins coincide with calendar months.

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distributions::{zaga_sample, ZagaParams};
use crate::error::Result;
use crate::timeseries::{seasonal_position, PrecipSeries, Step};

/// `n` weekly dates starting at `start`.
pub fn weekly_dates(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    (0..n).map(|i| start + Days::new(7 * i as u64)).collect()
}

/// `n` mid-month dates starting January of `start_year`.
pub fn monthly_dates(start_year: i32, n: usize) -> Vec<NaiveDate> {
    (0..n)
        .map(|i| {
            let year = start_year + (i / 12) as i32;
            let month = (i % 12) as u32 + 1;
            NaiveDate::from_ymd_opt(year, month, 15).expect("mid-month date")
        })
        .collect()
}

/// One ZAGA draw per date from seasonal parameter curves, each a function
/// of the seasonal position in [0, 1).
pub fn generate_zaga_series<FP, FM, FS>(
    dates: &[NaiveDate],
    step: Step,
    pi: FP,
    mu: FM,
    sigma: FS,
    seed: u64,
) -> Result<PrecipSeries>
where
    FP: Fn(f64) -> f64,
    FM: Fn(f64) -> f64,
    FS: Fn(f64) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = dates
        .iter()
        .map(|&d| {
            let u = seasonal_position(d);
            let params = ZagaParams::new(pi(u), mu(u), sigma(u))?;
            Ok((d, Some(zaga_sample(&mut rng, &params))))
        })
        .collect::<Result<Vec<_>>>()?;
    PrecipSeries::new(entries, step)
}
