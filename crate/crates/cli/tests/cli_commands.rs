use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/confirmed_global_fixture.csv")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("hybridcast-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybridcast"))
        .args(args)
        .env_remove("HYBRIDCAST_DATA_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

/// Sum of one country's rows in the last date column, read with plain string handling.
fn hand_sum(country: &str) -> u64 {
    let text = read(&fixture());
    let mut total = 0;
    for line in text.lines().skip(1) {
        // province names may be quoted and contain commas
        let rest = match line.strip_prefix('"') {
            Some(r) => &r[r.find('"').unwrap() + 2..],
            None => &line[line.find(',').unwrap() + 1..],
        };
        let fields: Vec<&str> = rest.split(',').collect();
        if fields[0] == country {
            total += fields.last().unwrap().trim().parse::<u64>().unwrap();
        }
    }
    total
}

#[test]
fn ingest_matches_hand_sum() {
    let dir = scratch("ingest");
    let out = dir.join("india.csv");
    let o = run(&["ingest", "--data", fixture().to_str().unwrap(), "--country", "India", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    assert!(text.starts_with("date,value\n"));
    let last: u64 = text.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(last, hand_sum("India"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("rows"));
}

#[test]
fn ingest_error_codes() {
    let dir = scratch("ingest-err");
    let out = dir.join("x.csv");
    let f = fixture();
    let o = run(&["ingest", "--data", f.to_str().unwrap(), "--country", "Indai", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("India"));
    let o = run(&["ingest", "--data", "/no/such/file.csv", "--country", "India", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let bad = dir.join("bad.csv");
    std::fs::write(&bad, "a,b\n1,2\n").unwrap();
    let o = run(&["ingest", "--data", bad.to_str().unwrap(), "--country", "India", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn data_dir_variable_is_honoured() {
    let dir = scratch("datadir");
    std::fs::copy(fixture(), dir.join("confirmed_global_fixture.csv")).unwrap();
    let out = dir.join("us.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_hybridcast"))
        .args(["ingest", "--country", "US", "--out", out.to_str().unwrap()])
        .env("HYBRIDCAST_DATA_DIR", &dir)
        .current_dir(&dir)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let last: u64 = read(&out).lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(last, hand_sum("US"));
}

#[test]
fn ingest_from_url() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let body = std::fs::read(fixture()).unwrap();
    let server = std::thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut buf = [0u8; 4096];
        let _ = stream.read(&mut buf).unwrap();
        let head = format!(
            "HTTP/1.1 200 OK\r\nContent-Type: text/csv\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
            body.len()
        );
        stream.write_all(head.as_bytes()).unwrap();
        stream.write_all(&body).unwrap();
    });
    let dir = scratch("url");
    let out = dir.join("brazil.csv");
    let url = format!("http://127.0.0.1:{port}/confirmed.csv");
    let o = run(&["ingest", "--data", &url, "--country", "Brazil", "--out", out.to_str().unwrap()]);
    server.join().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let last: u64 = read(&out).lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(last, hand_sum("Brazil"));
}

#[test]
fn forecast_shapes_and_codes() {
    let f = fixture();
    let data = f.to_str().unwrap();
    let o = run(&["forecast", "--data", data, "--model", "arima", "--country", "India", "--order", "0,1,0"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "date,point,lower90,upper90");
    assert_eq!(rows.len(), 11);
    let last = hand_sum("India") as f64;
    for r in &rows[1..] {
        let p: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(p, last);
    }

    let dir = scratch("forecast");
    let out = dir.join("h.csv");
    let o = run(&["forecast", "--data", data, "--model", "hybrid", "--country", "India", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dates: Vec<String> = read(&out).lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect();
    assert_eq!(dates.len(), 10);
    assert!(dates.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(dates[0], "2020-08-16");

    assert_eq!(code(&run(&["forecast", "--data", data, "--model", "arima", "--country", "India", "--horizon", "0"])), 1);
    assert_eq!(code(&run(&["forecast", "--data", data, "--model", "prophet", "--country", "India"])), 1);
    // training data too short for the requested order
    let o = run(&["forecast", "--data", data, "--model", "arima", "--country", "India", "--order", "5,2,5", "--min-extra-obs", "500"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn help_lists_defaults() {
    let o = run(&["benchmark", "--help"]);
    assert_eq!(code(&o), 0);
    let help = String::from_utf8(o.stdout).unwrap();
    for needle in [
        "--narnn-epochs", "[default: 500]", "--lstm-hidden", "[default: 16]", "--ridge-delta", "[default: 0.5]",
        "--season", "[default: 7]", "--lag-candidates", "[default: 3,5,7]", "--seed", "[default: 2020]",
    ] {
        assert!(help.contains(needle), "missing {needle}");
    }
    for sub in ["ingest", "forecast", "plot"] {
        assert_eq!(code(&run(&[sub, "--help"])), 0);
    }
    assert_eq!(code(&run(&["benchmark", "--no-such-flag"])), 1);
}

fn write_forecast(path: &Path, offset: f64) {
    let mut s = String::from("date,actual,point,lower90,upper90\n");
    for d in 6..=15 {
        let v = 100.0 * f64::from(d) + offset;
        s.push_str(&format!("2020-05-{d:02},{v},{v},{},{}\n", v - 50.0, v + 50.0));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn plot_element_contract() {
    let dir = scratch("plot");
    let actuals = dir.join("actuals.csv");
    let mut s = String::from("date,value\n");
    for d in 1..=15 {
        s.push_str(&format!("2020-05-{d:02},{}\n", 100 * d));
    }
    std::fs::write(&actuals, s).unwrap();
    let mut args = vec![
        "plot".to_string(),
        "--actuals".into(),
        actuals.to_str().unwrap().into(),
        "--title".into(),
        "A & B <test>".into(),
    ];
    for (i, name) in ["arima", "hybrid", "lstm"].iter().enumerate() {
        let p = dir.join(format!("{name}.csv"));
        write_forecast(&p, 10.0 * i as f64);
        args.push("--forecast".into());
        args.push(format!("{name}={}", p.display()));
    }
    let out = dir.join("fig.svg");
    args.extend(["--band".into(), "hybrid".into(), "--out".into(), out.to_str().unwrap().into()]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = run(&refs);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let svg = read(&out);
    let doc = roxmltree::Document::parse(&svg).expect("well-formed XML");
    let count = |tag: &str| doc.descendants().filter(|n| n.has_tag_name(tag)).count();
    assert_eq!(count("polyline"), 4);
    assert_eq!(count("polygon"), 1);
    assert!(doc.descendants().any(|n| n.text() == Some("2020-05-01")));
    assert!(doc.descendants().any(|n| n.text() == Some("hybrid")));

    let empty = dir.join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["plot", "--actuals", actuals.to_str().unwrap(), "--forecast", empty.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let header_only = dir.join("header.csv");
    std::fs::write(&header_only, "date,point,lower90,upper90\n").unwrap();
    let o = run(&["plot", "--actuals", actuals.to_str().unwrap(), "--forecast", header_only.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let wrong = dir.join("wrong.csv");
    std::fs::write(&wrong, "day,yhat\n1,2\n").unwrap();
    let o = run(&["plot", "--actuals", actuals.to_str().unwrap(), "--forecast", wrong.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn filtered_benchmark_writes_artifacts() {
    let dir = scratch("bench");
    let f = fixture();
    let o = run(&[
        "benchmark", "--data", f.to_str().unwrap(), "--countries", "India", "--models", "arima,holt_winters",
        "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = read(&dir.join("rank_table.csv"));
    assert_eq!(table.lines().count(), 1 + 6);
    assert!(table.starts_with("country,interval,model,rmse,mae,mape_pct,coverage90_pct,rank,error\n"));
    assert!(dir.join("rank_table.txt").exists());
    assert!(dir.join("forecasts/India_6MAY-15MAY_arima.csv").exists());
    let svg = read(&dir.join("figures/India_21JUL-30JUL.svg"));
    roxmltree::Document::parse(&svg).unwrap();
    let meta: String = read(&dir.join("metadata.json"));
    assert!(meta.contains("\"cells\": 6"));

    let o = run(&["benchmark", "--data", f.to_str().unwrap(), "--models", "prophet", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let o = run(&["benchmark", "--data", f.to_str().unwrap(), "--intervals", "2020-05-06:2020-05-10", "--out", dir.to_str().unwrap(), "--countries", "US", "--models", "arima"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(&dir.join("rank_table.csv")).contains("US,6MAY-10MAY,arima"));
}

#[test]
fn config_file_supplies_flags() {
    let dir = scratch("conf");
    let conf = dir.join("run.conf");
    std::fs::write(&conf, format!("# test\ndata = {}\nmodels = arima\ncountries = US\nseed = 5\n", fixture().display())).unwrap();
    let o = run(&["benchmark", "--config", conf.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&dir.join("rank_table.csv")).lines().count(), 2);
    assert!(read(&dir.join("metadata.json")).contains("\"seed\": 5"));
    std::fs::write(&conf, "bogus_key = 1\n").unwrap();
    assert_eq!(code(&run(&["benchmark", "--config", conf.to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["benchmark", "--config", "/no/such.conf"])), 1);
}
