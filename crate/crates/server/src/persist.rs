//! Append-only session log.
//!
//! Every mutation appends one JSON line holding the full session snapshot
//! and the backend position (`checkpoint`). Replaying the file keeps the
//! last snapshot per session id.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use intellichain_core::DialogueSession;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("session log {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("session log {path}, line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub session: DialogueSession,
    #[serde(default)]
    pub checkpoint: Option<u64>,
}

pub struct SessionLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl SessionLog {
    /// Opens (creating if needed) the log at `path` and returns the latest
    /// snapshot of every session it records, ordered by id.
    pub fn open(path: &Path) -> Result<(Self, Vec<SnapshotRecord>), LogError> {
        let io_err = |source| LogError::Io {
            path: path.to_owned(),
            source,
        };
        let mut latest = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io_err)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: SnapshotRecord =
                    serde_json::from_str(&line).map_err(|e| LogError::Corrupt {
                        path: path.to_owned(),
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                latest.insert(record.session.id.clone(), record);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err)?;
        let log = Self {
            path: path.to_owned(),
            file: Mutex::new(file),
        };
        Ok((log, latest.into_values().collect()))
    }

    pub fn append(&self, record: &SnapshotRecord) -> Result<(), LogError> {
        let mut line = serde_json::to_string(record).expect("snapshot serializes");
        line.push('\n');
        let mut file = self.file.lock().expect("log lock poisoned");
        file.write_all(line.as_bytes())
            .and_then(|()| file.flush())
            .map_err(|source| LogError::Io {
                path: self.path.clone(),
                source,
            })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
