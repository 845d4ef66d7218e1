//! Implementations of the four subcommands.

use std::fs;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use hydroindex::{
    detect_events, diagnostics_report, load_csv, moving_average, FitConfig, IndexSeries,
    LambdaSelect, LoadConfig, Method, PrecipSeries, SeasonalZagaModel, SpiConfig,
};

use crate::plot;
use crate::{CliError, DiagnoseArgs, EventsArgs, FitArgs, IndexArgs};

type CliResult = Result<(), CliError>;

const SEED_ENV: &str = "HYDROINDEX_SEED";

fn read_series(path: &Path) -> Result<PrecipSeries, CliError> {
    let file = File::open(path).map_err(hydroindex::Error::Io)?;
    Ok(load_csv(file, &LoadConfig::default())?)
}

fn parse_dims(text: &str) -> Result<[usize; 3], CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::usage(format!("--dims expects three integers, got `{text}`")));
    }
    let mut dims = [0usize; 3];
    for (i, p) in parts.iter().enumerate() {
        dims[i] = p
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("--dims: bad integer `{p}`")))?;
    }
    Ok(dims)
}

fn parse_lambda(text: &str) -> Result<LambdaSelect, CliError> {
    if let Some(target) = text.strip_prefix("edf:") {
        let t: f64 = target
            .parse()
            .map_err(|_| CliError::usage(format!("--lambda: bad EDF target `{target}`")))?;
        if !(t > 0.0) {
            return Err(CliError::usage("--lambda: EDF target must be positive"));
        }
        return Ok(LambdaSelect::TargetEdf(t));
    }
    if text == "aic" {
        return Ok(LambdaSelect::GridAic(Vec::new()));
    }
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::usage(format!(
            "--lambda expects `edf:<target>`, `aic` or three numbers, got `{text}`"
        )));
    }
    let mut lam = [0.0f64; 3];
    for (i, p) in parts.iter().enumerate() {
        let v: f64 = p
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("--lambda: bad number `{p}`")))?;
        if !(v >= 0.0) {
            return Err(CliError::usage("--lambda: weights must be non-negative"));
        }
        lam[i] = v;
    }
    Ok(LambdaSelect::Fixed(lam))
}

fn fit_config(dims: &str, lambda: &str, pi_zero: bool) -> Result<FitConfig, CliError> {
    Ok(FitConfig {
        dims: parse_dims(dims)?,
        lambda: parse_lambda(lambda)?,
        fix_pi_zero: pi_zero,
        ..FitConfig::default()
    })
}

pub fn cmd_fit(args: &FitArgs) -> CliResult {
    if args.scale < 1 {
        return Err(CliError::usage("--scale must be at least 1"));
    }
    let config = fit_config(&args.dims, &args.lambda, args.pi_zero)?;
    let series = read_series(&args.input)?;
    let ma = moving_average(&series, args.scale)?;
    let model = hydroindex::fit_seasonal_zaga(&ma, &config)?;
    model.save(&args.output)?;
    Ok(())
}

pub fn cmd_index(args: &IndexArgs) -> CliResult {
    let method: Method = args
        .method
        .parse()
        .map_err(|_| CliError::usage(format!("--method must be spi, mbsi1 or mbsi2, got `{}`", args.method)))?;
    if args.scale < 1 {
        return Err(CliError::usage("--scale must be at least 1"));
    }

    // method-specific flag validation before any computation
    if method != Method::Spi && args.bins.is_some() {
        return Err(CliError::usage("--bins applies to --method spi only"));
    }
    if method == Method::Spi {
        for (flag, given) in [
            ("--dims", args.dims.is_some()),
            ("--lambda", args.lambda.is_some()),
            ("--model", args.model.is_some()),
        ] {
            if given {
                return Err(CliError::usage(format!("{flag} does not apply to --method spi")));
            }
        }
    }
    if method != Method::Mbsi2 {
        if args.m.is_some() {
            return Err(CliError::usage("--m applies to --method mbsi2 only"));
        }
        if args.seed.is_some() {
            return Err(CliError::usage("--seed applies to --method mbsi2 only"));
        }
    }
    if args.model.is_some() && (args.dims.is_some() || args.lambda.is_some()) {
        return Err(CliError::usage("--dims/--lambda conflict with --model"));
    }

    let series = read_series(&args.input)?;
    let config = fit_config(
        args.dims.as_deref().unwrap_or("10,10,10"),
        args.lambda.as_deref().unwrap_or("edf:4"),
        false,
    )?;

    let load_model = |path: &Path| -> Result<SeasonalZagaModel, CliError> {
        Ok(SeasonalZagaModel::load(path)?)
    };

    let mut index = match method {
        Method::Spi => {
            let spi = SpiConfig { bins: args.bins.unwrap_or(12), ..SpiConfig::default() };
            hydroindex::compute_spi(&series, args.scale, &spi)?
        }
        Method::Mbsi1 => match &args.model {
            Some(path) => {
                let model = load_model(path)?;
                hydroindex::compute_mbsi1_with_model(&series, args.scale, &model)?
            }
            None => hydroindex::compute_mbsi1(&series, args.scale, &config)?,
        },
        Method::Mbsi2 => {
            let seed = match args.seed {
                Some(s) => s,
                None => env_seed()?,
            };
            let mc = hydroindex::McConfig {
                m: args.m.unwrap_or(10_000),
                seed,
                ..hydroindex::McConfig::default()
            };
            match &args.model {
                Some(path) => {
                    let model = load_model(path)?;
                    hydroindex::compute_mbsi2_with_model(&series, args.scale, &mc, &model)?
                }
                None => hydroindex::compute_mbsi2(&series, args.scale, &mc, &config)?,
            }
        }
    };
    index.meta.model_file = args.model.as_ref().map(|p| p.display().to_string());

    fs::create_dir_all(&args.output).map_err(hydroindex::Error::Io)?;
    let csv = File::create(args.output.join("index.csv")).map_err(hydroindex::Error::Io)?;
    index.write_csv(BufWriter::new(csv))?;
    let meta =
        serde_json::to_string_pretty(&index.meta).map_err(hydroindex::Error::Json)?;
    fs::write(args.output.join("meta.json"), meta + "\n").map_err(hydroindex::Error::Io)?;
    Ok(())
}

fn env_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .parse()
            .map_err(|_| CliError::usage(format!("{SEED_ENV} must be an unsigned integer, got `{text}`"))),
        Err(_) => Ok(0),
    }
}

pub fn cmd_events(args: &EventsArgs) -> CliResult {
    if !(args.threshold > 0.0) || !args.threshold.is_finite() {
        return Err(CliError::usage("--threshold must be a positive number"));
    }
    let file = File::open(&args.input).map_err(hydroindex::Error::Io)?;
    let entries = IndexSeries::read_csv(file)?;
    let events = detect_events(&entries, args.threshold)?;
    let out = File::create(&args.output).map_err(hydroindex::Error::Io)?;
    hydroindex::events::write_events_csv(&events, BufWriter::new(out))?;
    Ok(())
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> CliResult {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::usage("--alpha must lie in (0,1)"));
    }
    if args.hist_bins < 2 {
        return Err(CliError::usage("--hist-bins must be at least 2"));
    }
    if !(args.threshold > 0.0) || !args.threshold.is_finite() {
        return Err(CliError::usage("--threshold must be a positive number"));
    }

    let file = File::open(&args.input).map_err(hydroindex::Error::Io)?;
    let entries = IndexSeries::read_csv(file)?;
    // meta is only needed for plot labels; fall back to a generic label
    // when the sidecar is absent
    let label = read_meta_label(&args.input);

    let index = IndexSeries {
        meta: hydroindex::IndexMeta {
            method: Method::Spi,
            scale: 0,
            bins: None,
            m: None,
            seed: None,
            model_file: None,
        },
        entries,
    };
    let report = diagnostics_report(&index, args.alpha, args.hist_bins)?;

    fs::create_dir_all(&args.output).map_err(hydroindex::Error::Io)?;
    let json = serde_json::to_string_pretty(&report).map_err(hydroindex::Error::Json)?;
    fs::write(args.output.join("diagnostics.json"), json + "\n").map_err(hydroindex::Error::Io)?;

    let qq = File::create(args.output.join("qq.csv")).map_err(hydroindex::Error::Io)?;
    hydroindex::diagnostics::write_qq_csv(&report.qq_points, BufWriter::new(qq))?;
    let hist =
        File::create(args.output.join("pit_histogram.csv")).map_err(hydroindex::Error::Io)?;
    hydroindex::diagnostics::write_histogram_csv(&report.pit_histogram, BufWriter::new(hist))?;

    if args.plot {
        let events = detect_events(&index.entries, args.threshold)?;
        let files = [
            ("timeline.svg", plot::timeline_svg(&index.entries, &label)),
            ("pit_histogram.svg", plot::pit_histogram_svg(&report.pit_histogram, report.n, &label)),
            ("qq.svg", plot::qq_svg(&report.qq_points, &label)),
            ("events.svg", plot::events_svg(&index.entries, &events, args.threshold, &label)),
        ];
        for (name, svg) in files {
            let mut f = BufWriter::new(
                File::create(args.output.join(name)).map_err(hydroindex::Error::Io)?,
            );
            f.write_all(svg.as_bytes()).map_err(hydroindex::Error::Io)?;
        }
    }
    Ok(())
}

/// `method k=<scale>` from the sidecar next to the index CSV, when present.
fn read_meta_label(index_path: &Path) -> String {
    let sidecar = index_path.parent().map(|d| d.join("meta.json"));
    if let Some(path) = sidecar {
        if let Ok(text) = fs::read_to_string(path) {
            if let Ok(meta) = serde_json::from_str::<hydroindex::IndexMeta>(&text) {
                return format!("{} k={}", meta.method, meta.scale);
            }
        }
    }
    "index".to_string()
}
