//! Standardized hydro-climatic indices from precipitation time series.
//!
//! Three methods are implemented on top of a shared zero-augmented gamma
//! (ZAGA) layer:
//!
//! * **SPI** — the classical index: split the k-scale moving average into
//!   seasonal bins and fit each bin independently by maximum likelihood.
//! * **MBSI-1** — fit one seasonal ZAGA regression (cyclic-spline
//!   predictors for pi, mu and sigma) to the k-scale moving average.
//! * **MBSI-2** — fit the seasonal model once to the raw series, then
//!   obtain the k-scale CDF by Monte Carlo simulation.
//!
//! Every method maps each smoothed observation through its fitted CDF and
//! on to standard normal quantiles; maximal same-sign runs of the
//! standardized values that cross a threshold are flood/drought events.
//!
//! The crate is a library first; the `hydroindex` binary in the companion
//! CLI crate wires the pipelines to CSV/JSON/SVG files.

pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod events;
pub mod fit;
pub mod indices;
pub mod splines;
pub mod synthetic;
pub mod timeseries;

pub use diagnostics::{diagnostics_report, ks_uniform, pit_histogram, qq_points, DiagnosticsReport};
pub use distributions::{
    gamma_cdf, gamma_logpdf, gamma_quantile, std_normal_cdf, std_normal_pdf, std_normal_quantile,
    zaga_cdf, zaga_mle, zaga_quantile, zaga_sample, ZagaParams,
};
pub use error::{Error, ErrorCategory, Result};
pub use events::{classify_intensity, detect_events, EventKind, ExtremeEvent, Intensity};
pub use fit::{
    fit_binned_zaga, fit_seasonal_zaga, BinnedZagaModel, FitConfig, FitStats, LambdaSelect,
    SeasonalZagaModel,
};
pub use indices::{
    compute_mbsi1, compute_mbsi1_with_model, compute_mbsi2, compute_mbsi2_with_model, compute_spi,
    coverage_interval, IndexEntry, IndexMeta, IndexSeries, McConfig, Method, SpiConfig,
};
pub use splines::CyclicBasis;
pub use timeseries::{
    load_csv, moving_average, moving_average_with_policy, seasonal_bin, seasonal_position,
    split_by_season, LoadConfig, MaSeries, MissingPolicy, PrecipSeries, Step,
};
