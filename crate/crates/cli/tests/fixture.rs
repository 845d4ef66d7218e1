//! Golden input fixture: a 522-week synthetic precipitation CSV with
//! seasonal zero probability, mean and shape. The file is checked in;
//! `regenerate_golden_input` (ignored by default) rewrites it from the
//! frozen generator so the recipe stays executable.

use std::path::PathBuf;

use chrono::NaiveDate;
use hydroindex::synthetic::{generate_zaga_series, weekly_dates};
use hydroindex::{LoadConfig, Step};

pub const GOLDEN_SEED: u64 = 20_040_105;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/synthetic_522w.csv")
}

/// The frozen generator behind the checked-in fixture: weekly totals with
/// a wet/dry seasonal cycle, zero weeks concentrated in the dry season.
pub fn golden_series_csv() -> String {
    let dates = weekly_dates(NaiveDate::from_ymd_opt(2004, 1, 5).unwrap(), 522);
    let series = generate_zaga_series(
        &dates,
        Step::Days(7),
        |u| 1.0 / (1.0 + (2.2 - 1.6 * (TWO_PI * u + 1.0).sin()).exp()),
        |u| (3.0 + 0.9 * (TWO_PI * u - 0.5).cos()).exp(),
        |u| (0.6 + 0.25 * (TWO_PI * u).sin()).exp(),
        GOLDEN_SEED,
    )
    .unwrap();
    let mut csv = String::from("date,precip\n");
    for (date, value) in series.entries() {
        let rounded = (value.unwrap() * 100.0).round() / 100.0;
        csv.push_str(&format!("{date},{rounded}\n"));
    }
    csv
}

#[test]
#[ignore = "writes tests/data/synthetic_522w.csv; run manually to refresh"]
fn regenerate_golden_input() {
    let path = golden_path();
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(&path, golden_series_csv()).unwrap();
}

#[test]
fn golden_input_matches_generator() {
    let on_disk = std::fs::read_to_string(golden_path()).expect("fixture present");
    assert_eq!(on_disk, golden_series_csv(), "fixture drifted from its generator");
}

#[test]
fn golden_input_supports_every_golden_run_configuration() {
    let file = std::fs::File::open(golden_path()).unwrap();
    let series = hydroindex::load_csv(file, &LoadConfig::default()).unwrap();
    assert_eq!(series.len(), 522);
    assert_eq!(series.step(), Step::Days(7));

    for k in [1usize, 4, 8, 12] {
        let spi = hydroindex::SpiConfig { bins: 52, ..Default::default() };
        hydroindex::compute_spi(&series, k, &spi)
            .unwrap_or_else(|e| panic!("spi k={k}: {e}"));
    }
}
