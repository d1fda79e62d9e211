//! Line-delimited JSON helpers used by every file format in the crate.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Parse every non-blank line of `path`. Each item carries its 1-based line
/// number so callers can report record-level failures.
pub fn read_lines<T: DeserializeOwned>(
    path: &Path,
) -> Result<Vec<(usize, std::result::Result<T, String>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((
            idx + 1,
            serde_json::from_str::<T>(&line).map_err(|e| e.to_string()),
        ));
    }
    Ok(out)
}

/// Parse every non-blank line, failing on the first malformed one.
pub fn read_all<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, rec)| rec.map_err(|msg| Error::parse(path, line, msg)))
        .collect()
}

pub fn write_all<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        let line = serde_json::to_string(&rec).map_err(|e| Error::Invalid(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
