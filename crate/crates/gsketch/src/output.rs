//! CSV and JSON artifacts with the resolved configuration embedded.

use std::path::Path;

use serde::Serialize;

use crate::error::{io_err, Error, Result};

/// CSV text whose first line is `# config: <json>`, followed by a header
/// row and one row per record.
pub fn render_csv<R: Serialize>(config_json: &str, rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    let body = String::from_utf8(body).expect("csv output is utf-8");
    Ok(format!("# config: {config_json}\n{body}"))
}

pub fn write_csv<R: Serialize>(path: &Path, config_json: &str, rows: &[R]) -> Result<()> {
    std::fs::write(path, render_csv(config_json, rows)?).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

/// `<path>.<suffix>`, e.g. `run.csv` to `run.csv.summary.json`.
pub fn sibling(path: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    s.into()
}
