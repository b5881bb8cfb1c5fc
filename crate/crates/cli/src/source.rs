use std::fs::File;
use std::io::Read;
use std::path::PathBuf;

use hybridcast::ingest::{parse_jhu_csv, RawCaseTable};

use crate::error::CliError;

pub const DATA_DIR_VAR: &str = "HYBRIDCAST_DATA_DIR";
/// Preferred file name in the data directory; the committed snapshot is the fallback.
pub const JHU_FILE: &str = "time_series_covid19_confirmed_global.csv";
pub const SNAPSHOT_FILE: &str = "confirmed_global_fixture.csv";

pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// The source actually used: `explicit`, else the data directory's JHU file
/// or snapshot.
pub fn resolve(explicit: Option<&str>) -> String {
    if let Some(s) = explicit {
        return s.to_string();
    }
    let dir = data_dir();
    let full = dir.join(JHU_FILE);
    if full.exists() {
        full.display().to_string()
    } else {
        dir.join(SNAPSHOT_FILE).display().to_string()
    }
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}

pub fn fetch(source: &str) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    if is_url(source) {
        let resp = ureq::get(source)
            .call()
            .map_err(|e| CliError::Io(format!("cannot download {source}: {e}")))?;
        resp.into_reader()
            .read_to_end(&mut buf)
            .map_err(|e| CliError::Io(format!("reading {source}: {e}")))?;
    } else {
        File::open(source)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| CliError::Io(format!("cannot read {source}: {e}")))?;
    }
    Ok(buf)
}

pub fn load_table(source: &str) -> Result<RawCaseTable, CliError> {
    let bytes = fetch(source)?;
    parse_jhu_csv(bytes.as_slice()).map_err(CliError::data)
}
