use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use hybridcast::TimeSeries;

use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct Line {
    pub label: String,
    pub dates: Vec<NaiveDate>,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Reads `date,point,lower90,upper90` (extra columns such as `actual` are ignored).
pub fn read_forecast_csv(path: &Path, label: &str) -> Result<Line, CliError> {
    let bad = |m: String| CliError::Data(format!("{}: {m}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => CliError::Io(format!("{}: {e}", path.display())),
        _ => bad(e.to_string()),
    })?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("missing column `{name}`")))
    };
    let (cd, cp, cl, cu) = (col("date")?, col("point")?, col("lower90")?, col("upper90")?);
    let mut line = Line {
        label: label.to_string(),
        dates: Vec::new(),
        point: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
    };
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |c: usize| rec.get(c).unwrap_or("").trim();
        let num = |c: usize| {
            field(c)
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: {:?} is not a number", i + 2, field(c))))
        };
        let date = NaiveDate::parse_from_str(field(cd), "%Y-%m-%d")
            .map_err(|_| bad(format!("row {}: bad date {:?}", i + 2, field(cd))))?;
        line.dates.push(date);
        line.point.push(num(cp)?);
        line.lower.push(num(cl)?);
        line.upper.push(num(cu)?);
    }
    if line.dates.is_empty() {
        return Err(bad("no forecast rows".into()));
    }
    Ok(line)
}

pub fn read_actuals(path: &Path) -> Result<TimeSeries, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    TimeSeries::read_csv("actual", file).map_err(|e| match e {
        hybridcast::Error::Io(m) => CliError::Io(m),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const W: f64 = 900.0;
const H: f64 = 500.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Actuals as one polyline, each forecast as another, and the 90% band of
/// `lines[band]` as a polygon.
pub fn render_svg(title: &str, actual: &TimeSeries, lines: &[Line], band: Option<usize>) -> String {
    let mut dates: Vec<NaiveDate> = actual.dates().collect();
    let mut ys: Vec<f64> = actual.values().to_vec();
    for (i, l) in lines.iter().enumerate() {
        dates.extend(&l.dates);
        ys.extend(&l.point);
        if band == Some(i) {
            ys.extend(&l.lower);
            ys.extend(&l.upper);
        }
    }
    let x0 = *dates.iter().min().expect("actuals are non-empty");
    let x1 = *dates.iter().max().expect("actuals are non-empty");
    let span = ((x1 - x0).num_days() as f64).max(1.0);
    let finite = ys.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, lo + 1.0) };
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    let px = |d: NaiveDate| LEFT + (d - x0).num_days() as f64 / span * (W - LEFT - RIGHT);
    let py = |v: f64| TOP + (hi - v.clamp(lo, hi)) / (hi - lo) * (H - TOP - BOTTOM);
    let pts = |ds: &[NaiveDate], vs: &[f64]| {
        ds.iter()
            .zip(vs)
            .map(|(d, v)| format!("{:.2},{:.2}", px(*d), py(*v)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    if !title.is_empty() {
        let _ = writeln!(s, r#"<text x="{LEFT}" y="24" font-size="15">{}</text>"#, escape(title));
    }
    let (bx, by) = (LEFT, H - BOTTOM);
    let _ = writeln!(s, r#"<line x1="{bx}" y1="{TOP}" x2="{bx}" y2="{by}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{bx}" y1="{by}" x2="{}" y2="{by}" stroke="black"/>"#, W - RIGHT);

    let days = (x1 - x0).num_days();
    let step = (days / 8).max(1);
    let mut k = 0;
    while k <= days {
        let d = x0 + chrono::Duration::days(k);
        let x = px(d);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{by}" x2="{x:.2}" y2="{}" stroke="black"/>"#, by + 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            by + 20.0,
            d.format("%Y-%m-%d")
        );
        k += step;
    }
    for i in 0..=5 {
        let v = lo + (hi - lo) * f64::from(i) / 5.0;
        let y = py(v);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{bx}" y2="{y:.2}" stroke="black"/>"#, bx - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.0}</text>"#, bx - 8.0, y + 4.0);
    }

    if let Some(l) = band.and_then(|b| lines.get(b)) {
        let mut ring = pts(&l.dates, &l.upper);
        let back: Vec<NaiveDate> = l.dates.iter().rev().copied().collect();
        let lower: Vec<f64> = l.lower.iter().rev().copied().collect();
        ring.push(' ');
        ring.push_str(&pts(&back, &lower));
        let color = PALETTE[band.unwrap_or(0) % PALETTE.len()];
        let _ = writeln!(s, r#"<polygon points="{ring}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#);
    }
    let actual_dates: Vec<NaiveDate> = actual.dates().collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="black" stroke-width="2"/>"#,
        pts(&actual_dates, actual.values())
    );
    for (i, l) in lines.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts(&l.dates, &l.point),
            PALETTE[i % PALETTE.len()]
        );
    }

    let lx = W - RIGHT + 20.0;
    let mut ly = TOP + 10.0;
    let mut entry = |s: &mut String, color: &str, label: &str| {
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(label));
        ly += 18.0;
    };
    entry(&mut s, "black", "actual");
    for (i, l) in lines.iter().enumerate() {
        entry(&mut s, PALETTE[i % PALETTE.len()], &l.label);
    }
    if let Some(l) = band.and_then(|b| lines.get(b)) {
        let color = PALETTE[band.unwrap_or(0) % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{}" width="20" height="10" fill="{color}" fill-opacity="0.18"/>"#,
            ly - 5.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{} 90%</text>"#, lx + 26.0, ly + 4.0, escape(&l.label));
    }
    s.push_str("</svg>\n");
    s
}

/// Splits `LABEL=FILE`; a bare `FILE` is labelled by its stem.
pub fn labelled(spec: &str) -> (String, String) {
    match spec.split_once('=') {
        Some((l, p)) if !l.is_empty() => (l.to_string(), p.to_string()),
        _ => {
            let stem = Path::new(spec)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            (stem, spec.to_string())
        }
    }
}
