//! File helpers shared by every artifact writer.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::error::{Error, Result};

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partially written artifact.
pub fn atomic_write<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn open_lines(path: &Path) -> Result<Lines<BufReader<File>>> {
    Ok(BufReader::new(File::open(path)?).lines())
}

#[derive(Serialize, Deserialize)]
struct JsonlHeader {
    format: String,
    version: u32,
}

/// Writes a header record `{"format":..,"version":..}` followed by one
/// JSON record per line.
pub fn write_jsonl<'a, T, I>(path: &Path, format: &str, version: u32, items: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    atomic_write(path, |w| {
        serde_json::to_writer(
            &mut *w,
            &JsonlHeader {
                format: format.to_string(),
                version,
            },
        )?;
        w.write_all(b"\n")?;
        for item in items {
            serde_json::to_writer(&mut *w, item)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path, format: &str, version: u32) -> Result<Vec<T>> {
    let mut lines = open_lines(path)?;
    let header = lines
        .next()
        .ok_or_else(|| Error::Truncated(format!("{}: missing header", path.display())))??;
    let header: JsonlHeader =
        serde_json::from_str(&header).map_err(|e| Error::format(1, "header", e.to_string()))?;
    if header.format != format {
        return Err(Error::format(
            1,
            "format",
            format!("expected `{format}`, found `{}`", header.format),
        ));
    }
    if header.version != version {
        return Err(Error::Version {
            found: header.version,
            expected: version,
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::format(i + 2, "record", e.to_string()))?);
    }
    Ok(out)
}
