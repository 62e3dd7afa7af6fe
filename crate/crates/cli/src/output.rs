//! Run directories, JSON reports and CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Creates `<root>/<command>-<UTC timestamp>`, adding a numeric suffix if
/// that directory already exists.
pub fn create_run_dir(root: &Path, command: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(root)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let base = format!("{command}-{stamp}");
    for k in 0.. {
        let dir = if k == 0 { root.join(&base) } else { root.join(format!("{base}-{k}")) };
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

/// Pretty JSON with object keys sorted, so reports diff cleanly.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let v = serde_json::to_value(value)?;
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// File-name form of `p`: `2` for 2.0, `1.5` for 1.5.
pub fn p_label(p: f64) -> String {
    format!("{p}")
}
