//! Line-oriented JSON record files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Corpus, Dialog, DialogRecord};

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Splits a record file into raw JSON values. A file whose first
/// non-whitespace byte is `[` is read as one JSON array; anything else is
/// one record per non-blank line.
pub fn parse_records(text: &str) -> Result<Vec<serde_json::Value>> {
    if text.trim_start().starts_with('[') {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            index: 0,
            message: e.to_string(),
        })?;
        return match value {
            serde_json::Value::Array(items) => Ok(items),
            _ => unreachable!("input starts with `[`"),
        };
    }
    record_lines(text)
        .par_iter()
        .map(|(index, line)| {
            serde_json::from_str(line).map_err(|e| Error::Parse {
                index: *index,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Non-blank lines with their zero-based record index.
fn record_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned + Send>(path: &Path) -> Result<Vec<T>> {
    let text = read_to_string(path)?;
    record_lines(&text)
        .par_iter()
        .map(|(index, line)| {
            serde_json::from_str(line).map_err(|e| Error::Parse {
                index: *index,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Reads a corpus stored in the generic interchange format.
pub fn read_corpus(path: &Path) -> Result<Corpus> {
    let dialogs: Vec<Dialog> = read_jsonl(path)?;
    let source_tag = dialogs
        .iter()
        .find_map(|d| d.source.clone())
        .unwrap_or_else(|| "generic".to_owned());
    Ok(Corpus::new(source_tag, dialogs))
}

/// Writes a corpus in the generic interchange format; every record carries
/// the corpus source tag.
pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    let records: Vec<DialogRecord> = corpus
        .dialogs
        .iter()
        .map(|d| {
            let mut r = DialogRecord::from(d.clone());
            r.source = Some(corpus.source_tag.clone());
            r
        })
        .collect();
    write_jsonl(path, &records)
}
