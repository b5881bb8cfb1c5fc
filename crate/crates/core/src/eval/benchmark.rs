use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{csv_writer, rank_with_errors, MetricReport, RankTable};
use crate::additive::{self, AdditiveConfig};
use crate::arima::{self, ArimaOptions, ArimaOrder, OrderGrid};
use crate::error::{Error, Result};
use crate::forecast::ForecastResult;
use crate::hybrid::{self, HybridConfig};
use crate::ingest::{slice_for_interval, IntervalSpec};
use crate::neural::{lstm_fit, LstmConfig};
use crate::seed::derive_seed;
use crate::series::{train_test_split, SplitSpec, TimeSeries};
use crate::smoothing::{self, DEFAULT_SEASON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Arima,
    Hybrid,
    HoltWinters,
    Lstm,
    Additive,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Arima,
        ModelKind::Hybrid,
        ModelKind::HoltWinters,
        ModelKind::Lstm,
        ModelKind::Additive,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Arima => "arima",
            ModelKind::Hybrid => "hybrid",
            ModelKind::HoltWinters => "holt_winters",
            ModelKind::Lstm => "lstm",
            ModelKind::Additive => "additive",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_lowercase().replace('-', "_");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.label() == norm)
            .ok_or_else(|| {
                Error::InvalidParams(format!(
                    "unknown model {s:?}; expected one of arima, hybrid, holt_winters, lstm, additive"
                ))
            })
    }
}

/// Hyperparameters for every model family. Seeds inside `hybrid.narnn`
/// and `lstm` are overwritten per cell by the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    /// Fixed ARIMA order for both `arima` and `hybrid`; `None` searches `grid`.
    pub arima_order: Option<ArimaOrder>,
    pub grid: OrderGrid,
    pub arima: ArimaOptions,
    pub hybrid: HybridConfig,
    pub season: usize,
    pub lstm: LstmConfig,
    pub additive: AdditiveConfig,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            arima_order: None,
            grid: OrderGrid::default(),
            arima: ArimaOptions::default(),
            hybrid: HybridConfig::default(),
            season: DEFAULT_SEASON,
            lstm: LstmConfig::default(),
            additive: AdditiveConfig::default(),
        }
    }
}

/// Fits `kind` on `train` and forecasts `h` days past its end.
pub fn fit_and_forecast(
    kind: ModelKind,
    train: &TimeSeries,
    h: usize,
    settings: &ModelSettings,
    seed: u64,
) -> Result<ForecastResult> {
    let arima_model = || match settings.arima_order {
        Some(order) => arima::fit_with(train, order, &settings.arima),
        None => arima::select_and_fit(train, &settings.grid, &settings.arima),
    };
    let mut f = match kind {
        ModelKind::Arima => arima_model()?.forecast(h)?,
        ModelKind::Hybrid => {
            let mut cfg = settings.hybrid.clone();
            cfg.order = settings.arima_order;
            cfg.grid = settings.grid;
            cfg.arima = settings.arima;
            cfg.narnn.seed = seed;
            hybrid::fit_residuals(arima_model()?, &cfg)?.forecast(h)?
        }
        ModelKind::HoltWinters => smoothing::fit(train, settings.season)?.forecast(h)?,
        ModelKind::Lstm => {
            let cfg = LstmConfig {
                seed,
                ..settings.lstm
            };
            lstm_fit(train, &cfg)?.forecast(h)?
        }
        ModelKind::Additive => additive::fit(train, &settings.additive)?.forecast(h)?,
    };
    f.model = kind.label().into();
    Ok(f)
}

/// One country, its test windows and the models run on each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub country: String,
    pub intervals: Vec<IntervalSpec>,
    pub models: Vec<ModelKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub studies: Vec<Study>,
    pub seed: u64,
    pub horizon: usize,
    pub settings: ModelSettings,
}

pub const DEFAULT_SEED: u64 = 2020;

impl BenchmarkSpec {
    /// India on three windows with all five models; USA and Brazil on the
    /// May window with ARIMA and the hybrid.
    pub fn default_protocol() -> Self {
        let intervals = IntervalSpec::benchmark_defaults();
        let may = vec![intervals[0].clone()];
        let pair = vec![ModelKind::Arima, ModelKind::Hybrid];
        Self {
            studies: vec![
                Study {
                    country: "India".into(),
                    intervals,
                    models: ModelKind::ALL.to_vec(),
                },
                Study {
                    country: "US".into(),
                    intervals: may.clone(),
                    models: pair.clone(),
                },
                Study {
                    country: "Brazil".into(),
                    intervals: may,
                    models: pair,
                },
            ],
            seed: DEFAULT_SEED,
            horizon: 10,
            settings: ModelSettings::default(),
        }
    }

    /// Keeps only the named countries and models (`None` keeps all).
    pub fn filtered(mut self, countries: Option<&[String]>, models: Option<&[ModelKind]>) -> Self {
        if let Some(cs) = countries {
            self.studies.retain(|s| cs.iter().any(|c| c.eq_ignore_ascii_case(&s.country)));
        }
        if let Some(ms) = models {
            for s in &mut self.studies {
                s.models.retain(|m| ms.contains(m));
            }
            self.studies.retain(|s| !s.models.is_empty());
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.studies.iter().all(|s| s.models.is_empty() || s.intervals.is_empty()) {
            return Err(Error::InvalidParams("the benchmark has no cells".into()));
        }
        for s in &self.studies {
            for iv in &s.intervals {
                if iv.len_days() != self.horizon as i64 {
                    return Err(Error::InvalidParams(format!(
                        "interval {} spans {} days but the horizon is {}",
                        iv.label,
                        iv.len_days(),
                        self.horizon
                    )));
                }
            }
        }
        Ok(())
    }

    /// `(country, interval, model)` in protocol order.
    pub fn cells(&self) -> Vec<(String, IntervalSpec, ModelKind)> {
        let mut out = Vec::new();
        for s in &self.studies {
            for iv in &s.intervals {
                for &m in &s.models {
                    out.push((s.country.clone(), iv.clone(), m));
                }
            }
        }
        out
    }

    pub fn cell_seed(&self, country: &str, interval: &str, model: ModelKind) -> u64 {
        derive_seed(self.seed, &[country, interval, model.label()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub report: MetricReport,
    pub actual: TimeSeries,
    pub forecast: ForecastResult,
}

impl Scored {
    /// `date,actual,point,lower90,upper90`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv_writer(writer);
        w.write_record(["date", "actual", "point", "lower90", "upper90"])?;
        let f = &self.forecast;
        for (i, (date, actual)) in self.actual.dates().zip(self.actual.values()).enumerate() {
            w.write_record([
                date.to_string(),
                actual.to_string(),
                f.point[i].to_string(),
                f.lower[i].to_string(),
                f.upper[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub country: String,
    pub interval: String,
    pub model: ModelKind,
    pub outcome: std::result::Result<Scored, String>,
}

fn run_cell(series: &TimeSeries, country: &str, iv: &IntervalSpec, model: ModelKind, spec: &BenchmarkSpec) -> Result<Scored> {
    let window = slice_for_interval(series, iv)?;
    let (train, test) = train_test_split(
        &window,
        SplitSpec {
            test_len: spec.horizon,
            interval_end: Some(iv.end),
        },
    )?;
    let seed = spec.cell_seed(country, &iv.label, model);
    let forecast = fit_and_forecast(model, &train, spec.horizon, &spec.settings, seed)?;
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    if !(finite(&forecast.point) && finite(&forecast.lower) && finite(&forecast.upper)) {
        return Err(Error::InvalidParams("forecast contains non-finite values".into()));
    }
    let report = MetricReport::score(
        model.label(),
        country,
        &iv.label,
        test.values(),
        &forecast.point,
        &forecast.lower,
        &forecast.upper,
    )?;
    Ok(Scored {
        report,
        actual: test,
        forecast,
    })
}

/// Every cell of `spec`, evaluated in parallel and returned in protocol order.
/// A failing cell is recorded with its error message.
pub fn run_cells(dataset: &BTreeMap<String, TimeSeries>, spec: &BenchmarkSpec) -> Vec<BenchmarkCell> {
    spec.cells()
        .into_par_iter()
        .map(|(country, iv, model)| {
            let outcome = dataset
                .get(&country)
                .ok_or_else(|| Error::NotFound {
                    query: country.clone(),
                    suggestions: Vec::new(),
                })
                .and_then(|s| run_cell(s, &country, &iv, model, spec))
                .map_err(|e| e.to_string());
            BenchmarkCell {
                country,
                interval: iv.label,
                model,
                outcome,
            }
        })
        .collect()
}

pub fn rank_cells(cells: &[BenchmarkCell]) -> RankTable {
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for c in cells {
        match &c.outcome {
            Ok(s) => reports.push(s.report.clone()),
            Err(e) => errors.push((c.country.clone(), c.interval.clone(), c.model.label().to_string(), e.clone())),
        }
    }
    rank_with_errors(reports, errors)
}

pub fn run_benchmark(dataset: &BTreeMap<String, TimeSeries>, spec: &BenchmarkSpec) -> RankTable {
    rank_cells(&run_cells(dataset, spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_shape() {
        let spec = BenchmarkSpec::default_protocol();
        spec.validate().unwrap();
        assert_eq!(spec.cells().len(), 19);
        let india_pair = spec.clone().filtered(
            Some(&["India".to_string()]),
            Some(&[ModelKind::Arima, ModelKind::Hybrid]),
        );
        assert_eq!(india_pair.cells().len(), 6);
        let others = spec.filtered(Some(&["US".to_string(), "brazil".to_string()]), None);
        assert_eq!(others.cells().len(), 4);
    }

    #[test]
    fn labels_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.label().parse::<ModelKind>().unwrap(), k);
        }
        assert_eq!("Holt-Winters".parse::<ModelKind>().unwrap(), ModelKind::HoltWinters);
        assert!("prophet".parse::<ModelKind>().is_err());
    }

    #[test]
    fn seeds_differ_per_cell() {
        let spec = BenchmarkSpec::default_protocol();
        let a = spec.cell_seed("India", "6MAY-15MAY", ModelKind::Lstm);
        assert_ne!(a, spec.cell_seed("India", "21JUL-30JUL", ModelKind::Lstm));
        assert_ne!(a, spec.cell_seed("India", "6MAY-15MAY", ModelKind::Hybrid));
    }
}
