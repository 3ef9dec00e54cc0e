//! JSON-lines reading and writing for every artifact the toolkit emits.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::types::{validate_example, AttributionExample};

pub const DATASET_FORMAT_VERSION: u32 = 1;
pub const PREDICTION_FORMAT_VERSION: u32 = 1;
pub const REPORT_FORMAT_VERSION: u32 = 1;

const EXAMPLE_FIELDS: [&str; 7] = ["id", "query", "answer", "reference", "label", "source", "meta"];

/// Whether unknown JSON fields are rejected or skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate id {id:?}")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },
    #[error("{path}:{line}: invalid example {id:?}: {violations}")]
    Invalid {
        path: PathBuf,
        line: usize,
        id: String,
        violations: String,
    },
}

fn open(path: &Path) -> Result<BufReader<File>, JsonlError> {
    File::open(path).map(BufReader::new).map_err(|source| JsonlError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads every non-blank line of `path` as a `T`.
pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    read_values(path)?
        .into_iter()
        .map(|(line, v)| {
            serde_json::from_value(v).map_err(|e| JsonlError::Parse {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Reads raw JSON objects with their 1-based line numbers.
pub fn read_values(path: &Path) -> Result<Vec<(usize, serde_json::Value)>, JsonlError> {
    let reader = open(path)?;
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| JsonlError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line).map_err(|e| JsonlError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, v));
    }
    Ok(out)
}

/// Reads a canonical example file, enforcing record invariants and id uniqueness.
pub fn read_examples(path: &Path, mode: ReadMode) -> Result<Vec<AttributionExample>, JsonlError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, value) in read_values(path)? {
        let parse_err = |message: String| JsonlError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let value = match value {
            serde_json::Value::Object(mut map) => {
                let unknown: Vec<String> = map
                    .keys()
                    .filter(|k| !EXAMPLE_FIELDS.contains(&k.as_str()))
                    .cloned()
                    .collect();
                if !unknown.is_empty() {
                    match mode {
                        ReadMode::Strict => {
                            return Err(parse_err(format!("unknown field(s): {}", unknown.join(", "))))
                        }
                        ReadMode::Lenient => {
                            for k in unknown {
                                map.remove(&k);
                            }
                        }
                    }
                }
                serde_json::Value::Object(map)
            }
            _ => return Err(parse_err("expected a JSON object".into())),
        };
        let ex: AttributionExample =
            serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?;
        let violations = validate_example(&ex);
        if !violations.is_empty() {
            return Err(JsonlError::Invalid {
                path: path.to_path_buf(),
                line,
                id: ex.id.clone(),
                violations: violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(", "),
            });
        }
        if !seen.insert(ex.id.clone()) {
            return Err(JsonlError::DuplicateId {
                path: path.to_path_buf(),
                line,
                id: ex.id,
            });
        }
        out.push(ex);
    }
    Ok(out)
}

/// Serializes records one per line.
pub fn to_jsonl_string<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_records<T: Serialize>(path: &Path, records: &[T]) -> Result<(), JsonlError> {
    let io_err = |source| JsonlError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| io_err(e.into()))?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
