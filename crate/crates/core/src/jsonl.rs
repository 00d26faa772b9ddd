use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Parse one JSON object per non-blank line; returns each record with its 1-based line number.
pub fn read_records<T: DeserializeOwned, R: BufRead>(reader: R, source_name: &str) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::parse(source_name, line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::parse(source_name, line_no, e.to_string()))?;
        out.push((line_no, record));
    }
    Ok(out)
}

pub fn read_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(BufReader::new(file), &path.display().to_string())
}

/// Serialize records as JSONL into a byte buffer (one compact object per line).
pub fn to_bytes<'a, T: Serialize + 'a>(records: impl IntoIterator<Item = &'a T>) -> Vec<u8> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("in-memory serialization");
        buf.write_all(b"\n").expect("in-memory write");
    }
    buf
}
