use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hybridcast::additive::AdditiveConfig;
use hybridcast::arima::{ArimaOptions, ArimaOrder, Intercept, OrderGrid};
use hybridcast::eval::{ModelSettings, DEFAULT_SEED};
use hybridcast::hybrid::HybridConfig;
use hybridcast::neural::{LstmConfig, NarnnConfig};
use hybridcast::smoothing::DEFAULT_SEASON;

use crate::error::CliError;

/// Forecast cumulative case counts with ARIMA, Holt-Winters, LSTM, an
/// additive trend model and an ARIMA-NARNN hybrid.
///
/// Any flag may also come from a flat `key = value` file given with
/// `--config`; flags on the command line win.
#[derive(Debug, Parser)]
#[command(name = "hybridcast", version, args_override_self = true)]
pub struct Cli {
    /// Flat `key = value` file whose entries are applied as flags of the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract one country from a JHU confirmed-cases CSV into `date,value` form.
    Ingest(IngestArgs),
    /// Score every model on every test window and write a ranked table.
    Benchmark(BenchmarkArgs),
    /// Fit one model on all available data and forecast future days.
    Forecast(ForecastArgs),
    /// Draw actuals and forecast CSVs as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// JHU CSV path or http(s) URL. Defaults to the snapshot in the data
    /// directory ($HYBRIDCAST_DATA_DIR, else ./data).
    #[arg(long, value_name = "PATH|URL")]
    pub data: Option<String>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct IngestArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub country: String,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Comma-separated subset of the default countries (India, US, Brazil).
    #[arg(long)]
    pub countries: Option<String>,
    /// Comma-separated subset of arima, hybrid, holt_winters, lstm, additive.
    #[arg(long)]
    pub models: Option<String>,
    /// Comma-separated `START:END` ISO date pairs replacing every country's
    /// test windows (default 2020-05-06:2020-05-15 for all, plus
    /// 2020-07-21:2020-07-30 and 2020-08-01:2020-08-10 for India).
    #[arg(long)]
    pub intervals: Option<String>,
    /// Base seed; each cell derives its own from (seed, country, interval, model).
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// arima, hybrid, holt_winters, lstm or additive.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub country: String,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub settings: ModelArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct PlotArgs {
    /// Canonical `date,value` CSV of observed values.
    #[arg(long, value_name = "FILE")]
    pub actuals: PathBuf,
    /// Forecast CSV (`date,point,lower90,upper90`, optionally with `actual`),
    /// as `FILE` or `LABEL=FILE`. Repeatable.
    #[arg(long = "forecast", value_name = "[LABEL=]FILE", required = true)]
    pub forecasts: Vec<String>,
    /// Label of the forecast whose 90% band is shaded (default: the first).
    #[arg(long)]
    pub band: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, default_value = "")]
    pub title: String,
}

/// Model hyperparameters shared by `benchmark` and `forecast`.
#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Fixed ARIMA order `p,d,q` for arima and hybrid; searched by AICc when omitted.
    #[arg(long, help_heading = "ARIMA")]
    pub order: Option<String>,
    #[arg(long, default_value_t = 5, help_heading = "ARIMA")]
    pub max_p: usize,
    #[arg(long, default_value_t = 2, help_heading = "ARIMA")]
    pub max_d: usize,
    #[arg(long, default_value_t = 5, help_heading = "ARIMA")]
    pub max_q: usize,
    /// auto (estimated when d <= 1), include or exclude.
    /// Default: auto, or exclude when --order is given.
    #[arg(long, help_heading = "ARIMA")]
    pub intercept: Option<String>,
    /// Observations required beyond d + max(p, q).
    #[arg(long, default_value_t = 20, help_heading = "ARIMA")]
    pub min_extra_obs: usize,
    #[arg(long, default_value_t = 20_000, help_heading = "ARIMA")]
    pub arima_max_iter: usize,

    /// Lag count used when --lag-candidates is empty.
    #[arg(long, default_value_t = 5, help_heading = "NARNN (hybrid)")]
    pub narnn_lags: usize,
    /// Comma-separated lag counts compared on held-out residuals.
    #[arg(long, default_value = "3,5,7", help_heading = "NARNN (hybrid)")]
    pub lag_candidates: String,
    /// Trailing residuals held out when comparing lag counts.
    #[arg(long, default_value_t = 10, help_heading = "NARNN (hybrid)")]
    pub lag_validation: usize,
    #[arg(long, default_value_t = 10, help_heading = "NARNN (hybrid)")]
    pub narnn_hidden: usize,
    #[arg(long, default_value_t = 500, help_heading = "NARNN (hybrid)")]
    pub narnn_epochs: usize,
    #[arg(long, default_value_t = 0.01, help_heading = "NARNN (hybrid)")]
    pub narnn_lr: f64,
    /// Independent initializations; the lowest final loss is kept.
    #[arg(long, default_value_t = 5, help_heading = "NARNN (hybrid)")]
    pub narnn_restarts: usize,

    #[arg(long, default_value_t = DEFAULT_SEASON, help_heading = "Holt-Winters")]
    pub season: usize,

    #[arg(long, default_value_t = 5, help_heading = "LSTM")]
    pub lstm_window: usize,
    #[arg(long, default_value_t = 16, help_heading = "LSTM")]
    pub lstm_hidden: usize,
    #[arg(long, default_value_t = 300, help_heading = "LSTM")]
    pub lstm_epochs: usize,
    #[arg(long, default_value_t = 0.01, help_heading = "LSTM")]
    pub lstm_lr: f64,

    #[arg(long, default_value_t = 10, help_heading = "Additive")]
    pub n_changepoints: usize,
    /// Fraction of the training history that may hold changepoints.
    #[arg(long, default_value_t = 0.8, help_heading = "Additive")]
    pub changepoint_range: f64,
    /// Weekly harmonics.
    #[arg(long, default_value_t = 3, help_heading = "Additive")]
    pub fourier_order: usize,
    /// Ridge penalty on changepoint slope changes.
    #[arg(long, default_value_t = 0.5, help_heading = "Additive")]
    pub ridge_delta: f64,
    /// Ridge penalty on seasonal coefficients.
    #[arg(long, default_value_t = 0.1, help_heading = "Additive")]
    pub ridge_beta: f64,
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

pub fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

impl ModelArgs {
    pub fn settings(&self) -> Result<ModelSettings, CliError> {
        let order: Option<ArimaOrder> = self
            .order
            .as_deref()
            .map(|o| o.parse().map_err(|e: hybridcast::Error| usage(e.to_string())))
            .transpose()?;
        let intercept = match self.intercept.as_deref() {
            None if order.is_some() => Intercept::Exclude,
            None | Some("auto") => Intercept::Auto,
            Some("include") => Intercept::Include,
            Some("exclude") => Intercept::Exclude,
            Some(other) => return Err(usage(format!("--intercept must be auto, include or exclude, got {other:?}"))),
        };
        let lag_candidates = split_list(&self.lag_candidates)
            .iter()
            .map(|v| v.parse::<usize>().map_err(|_| usage(format!("bad lag count {v:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let narnn = NarnnConfig {
            lags: self.narnn_lags,
            hidden: self.narnn_hidden,
            epochs: self.narnn_epochs,
            learning_rate: self.narnn_lr,
            restarts: self.narnn_restarts,
            ..NarnnConfig::default()
        };
        narnn.validate().map_err(|e| usage(e.to_string()))?;
        let additive = AdditiveConfig {
            n_changepoints: self.n_changepoints,
            changepoint_range: self.changepoint_range,
            fourier_order: self.fourier_order,
            ridge_delta: self.ridge_delta,
            ridge_beta: self.ridge_beta,
            ..AdditiveConfig::default()
        };
        additive.validate().map_err(|e| usage(e.to_string()))?;
        if self.season < 2 {
            return Err(usage(format!("--season must be at least 2, got {}", self.season)));
        }
        let grid = OrderGrid {
            max_p: self.max_p,
            max_d: self.max_d,
            max_q: self.max_q,
        };
        let arima = ArimaOptions {
            intercept,
            min_extra_obs: self.min_extra_obs,
            max_iter: self.arima_max_iter,
        };
        let lstm = LstmConfig {
            window: self.lstm_window,
            hidden: self.lstm_hidden,
            epochs: self.lstm_epochs,
            learning_rate: self.lstm_lr,
            ..LstmConfig::default()
        };
        lstm.validate().map_err(|e| usage(e.to_string()))?;
        Ok(ModelSettings {
            arima_order: order,
            grid,
            arima,
            hybrid: HybridConfig {
                order,
                grid,
                arima,
                narnn,
                lag_candidates,
                lag_validation: self.lag_validation,
            },
            season: self.season,
            lstm,
            additive,
        })
    }
}

const SUBCOMMANDS: [&str; 4] = ["ingest", "benchmark", "forecast", "plot"];

/// Inserts the entries of a `--config` file as flags right after the
/// subcommand name, so that later command-line flags override them.
pub fn expand_config(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| usage(format!("cannot read config {path}: {e}")))?;
    let flags = config_flags(&text).map_err(|e| usage(format!("{path}: {e}")))?;
    let Some(at) = argv.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let mut out = argv[..=at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[at + 1..]);
    Ok(out)
}

fn config_flags(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(format!("line {}: invalid key", n + 1));
        }
        out.push(format!("--{key}"));
        out.push(value.trim().to_string());
    }
    Ok(out)
}
