//! File helpers shared by the pipeline stages.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::treebank::{parse_ptb, Document};
use crate::{Error, Result};

pub fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Reads newline-delimited JSON, skipping blank lines.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| Error::format(format!("{}:{}", path.display(), n + 1), e))?;
        out.push(record);
    }
    Ok(out)
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::format(path.display().to_string(), e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    write_string(path, &s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = read_string(path)?;
    serde_json::from_str(&s).map_err(|e| Error::format(path.display().to_string(), e))
}

/// Tree files of a directory keyed by document id (the file stem), in id
/// order. Hidden files and subdirectories are ignored.
pub fn tree_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') || !path.is_file() {
            continue;
        }
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or(name);
        if let Some(previous) = out.insert(id.clone(), path.clone()) {
            return Err(Error::format(
                dir.display().to_string(),
                format!(
                    "document id {id} is ambiguous: {} and {}",
                    previous.display(),
                    path.display()
                ),
            ));
        }
    }
    Ok(out)
}

pub fn read_document(id: &str, path: &Path) -> Result<Document> {
    let text = read_string(path)?;
    parse_ptb(id, &text).map_err(|source| Error::Parse {
        document: path.display().to_string(),
        source,
    })
}

/// Loads every tree file of a directory.
pub fn read_tree_dir(dir: &Path) -> Result<BTreeMap<String, Document>> {
    tree_files(dir)?
        .into_iter()
        .map(|(id, path)| read_document(&id, &path).map(|d| (id, d)))
        .collect()
}
