use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use hybridcast::eval::{fit_and_forecast, rank_cells, run_cells, BenchmarkSpec, ModelKind, Study};
use hybridcast::ingest::{aggregate_country, slice_for_interval, IntervalSpec, RawCaseTable};
use hybridcast::seed::derive_seed;
use hybridcast::TimeSeries;
use serde::Serialize;

use crate::args::{split_list, BenchmarkArgs, ForecastArgs, IngestArgs, PlotArgs};
use crate::error::CliError;
use crate::plot::{labelled, read_actuals, read_forecast_csv, render_svg, Line};
use crate::source::{load_table, resolve};

/// Days of history drawn before each test window in benchmark figures.
const FIGURE_CONTEXT: i64 = 20;

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// The whole series from the first reported case onward.
fn from_first_case(series: &TimeSeries) -> Result<TimeSeries, CliError> {
    let all = IntervalSpec {
        label: "all".into(),
        start: series.end(),
        end: series.end(),
    };
    slice_for_interval(series, &all).map_err(CliError::data)
}

pub fn ingest(args: &IngestArgs) -> Result<(), CliError> {
    let source = resolve(args.source.data.as_deref());
    let table = load_table(&source)?;
    let series = aggregate_country(&table, &args.country).map_err(CliError::data)?;
    let mut buf = Vec::new();
    series.write_csv(&mut buf).map_err(CliError::data)?;
    write_file(&args.out, &buf)?;
    println!(
        "{}: {} rows, {} to {} -> {}",
        series.name(),
        series.len(),
        series.start(),
        series.end(),
        args.out.display()
    );
    Ok(())
}

fn parse_intervals(s: &str) -> Result<Vec<IntervalSpec>, CliError> {
    split_list(s)
        .iter()
        .map(|item| {
            let bad = || CliError::Usage(format!("interval {item:?} is not START:END with ISO dates"));
            let (a, b) = item.split_once(':').ok_or_else(bad)?;
            let start = NaiveDate::parse_from_str(a.trim(), "%Y-%m-%d").map_err(|_| bad())?;
            let end = NaiveDate::parse_from_str(b.trim(), "%Y-%m-%d").map_err(|_| bad())?;
            if end < start {
                return Err(bad());
            }
            Ok(IntervalSpec::from_dates(start, end))
        })
        .collect()
}

fn parse_models(s: &str) -> Result<Vec<ModelKind>, CliError> {
    split_list(s)
        .iter()
        .map(|m| m.parse::<ModelKind>().map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

pub fn build_spec(args: &BenchmarkArgs) -> Result<BenchmarkSpec, CliError> {
    let countries = args.countries.as_deref().map(split_list);
    let models = args.models.as_deref().map(parse_models).transpose()?;
    let mut spec = BenchmarkSpec::default_protocol();
    if let Some(cs) = &countries {
        for c in cs {
            if !spec.studies.iter().any(|s| s.country.eq_ignore_ascii_case(c)) {
                // countries outside the default protocol get every model on the May window
                spec.studies.push(Study {
                    country: c.clone(),
                    intervals: vec![IntervalSpec::benchmark_defaults()[0].clone()],
                    models: ModelKind::ALL.to_vec(),
                });
            }
        }
    }
    let mut spec = spec.filtered(countries.as_deref(), models.as_deref());
    if let Some(text) = &args.intervals {
        let intervals = parse_intervals(text)?;
        let len = intervals.first().map(|i| i.len_days()).unwrap_or(0);
        if intervals.iter().any(|i| i.len_days() != len) {
            return Err(CliError::Usage("all intervals must have the same length".into()));
        }
        spec.horizon = len as usize;
        for s in &mut spec.studies {
            s.intervals = intervals.clone();
        }
    }
    spec.seed = args.seed;
    spec.settings = args.model.settings()?;
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    source: &'a str,
    cells: usize,
    failed_cells: usize,
    spec: &'a BenchmarkSpec,
}

fn country_series(table: &RawCaseTable, spec: &BenchmarkSpec) -> BTreeMap<String, TimeSeries> {
    spec.studies
        .iter()
        .filter_map(|s| aggregate_country(table, &s.country).ok().map(|v| (s.country.clone(), v)))
        .collect()
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<(), CliError> {
    let spec = build_spec(args)?;
    let source = resolve(args.source.data.as_deref());
    let table = load_table(&source)?;
    let data = country_series(&table, &spec);

    let cells = run_cells(&data, &spec);
    let ranked = rank_cells(&cells);

    let out = &args.out;
    let mut csv = Vec::new();
    ranked.write_csv(&mut csv).map_err(CliError::data)?;
    write_file(&out.join("rank_table.csv"), &csv)?;
    let text = ranked.render_text();
    write_file(&out.join("rank_table.txt"), text.as_bytes())?;

    let mut figures: BTreeMap<(String, String), Vec<Line>> = BTreeMap::new();
    for cell in &cells {
        let Ok(scored) = &cell.outcome else { continue };
        let name = format!("{}_{}_{}.csv", cell.country, cell.interval, cell.model.label());
        let mut buf = Vec::new();
        scored.write_csv(&mut buf).map_err(CliError::data)?;
        write_file(&out.join("forecasts").join(name), &buf)?;
        let f = &scored.forecast;
        figures
            .entry((cell.country.clone(), cell.interval.clone()))
            .or_default()
            .push(Line {
                label: cell.model.label().into(),
                dates: f.dates().collect(),
                point: f.point.clone(),
                lower: f.lower.clone(),
                upper: f.upper.clone(),
            });
    }
    for ((country, interval), lines) in &figures {
        let Some(series) = data.get(country) else { continue };
        let end = lines[0].dates[lines[0].dates.len() - 1];
        let first = lines[0].dates[0] - Duration::days(FIGURE_CONTEXT);
        let (Some(a), Some(b)) = (series.index_of(first.max(series.start())), series.index_of(end)) else {
            continue;
        };
        let actual = series.slice(a, b + 1).map_err(CliError::data)?;
        let band = lines.iter().position(|l| l.label == ModelKind::Hybrid.label()).or(Some(0));
        let svg = render_svg(&format!("{country} {interval}"), &actual, lines, band);
        write_file(&out.join("figures").join(format!("{country}_{interval}.svg")), svg.as_bytes())?;
    }

    let meta = Metadata {
        tool: "hybridcast",
        version: env!("CARGO_PKG_VERSION"),
        source: &source,
        cells: cells.len(),
        failed_cells: cells.iter().filter(|c| c.outcome.is_err()).count(),
        spec: &spec,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Data(e.to_string()))?;
    write_file(&out.join("metadata.json"), format!("{json}\n").as_bytes())?;

    print!("{text}");
    println!("\n{} cells, {} failed; output in {}", meta.cells, meta.failed_cells, out.display());
    Ok(())
}

pub fn forecast(args: &ForecastArgs) -> Result<(), CliError> {
    let kind: ModelKind = args.model.parse().map_err(|e: hybridcast::Error| CliError::Usage(e.to_string()))?;
    let settings = args.settings.settings()?;
    let source = resolve(args.source.data.as_deref());
    let table = load_table(&source)?;
    let series = from_first_case(&aggregate_country(&table, &args.country).map_err(CliError::data)?)?;
    let seed = derive_seed(args.seed, &[series.name(), "forecast", kind.label()]);
    let f = fit_and_forecast(kind, &series, args.horizon as usize, &settings, seed).map_err(CliError::model)?;

    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(["date", "point", "lower90", "upper90"]).map_err(io)?;
        for (i, d) in f.dates().enumerate() {
            w.write_record([
                d.format("%Y-%m-%d").to_string(),
                f.point[i].to_string(),
                f.lower[i].to_string(),
                f.upper[i].to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
    }
    match &args.out {
        Some(p) => write_file(p, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

pub fn plot(args: &PlotArgs) -> Result<(), CliError> {
    let actual = read_actuals(&args.actuals)?;
    let mut lines = Vec::new();
    for spec in &args.forecasts {
        let (label, path) = labelled(spec);
        lines.push(read_forecast_csv(Path::new(&path), &label)?);
    }
    let band = match &args.band {
        None => Some(0),
        Some(b) => Some(
            lines
                .iter()
                .position(|l| &l.label == b)
                .ok_or_else(|| CliError::Usage(format!("--band {b:?} matches no forecast label")))?,
        ),
    };
    let svg = render_svg(&args.title, &actual, &lines, band);
    write_file(&args.out, svg.as_bytes())?;
    Ok(())
}
