//! One append-only JSON-lines file per session: a header line, then one
//! turn trace per acknowledged turn.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use persona_core::orchestrator::TurnTrace;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {detail}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        detail: String,
    },
}

/// First line of a session file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub session_id: String,
    pub scenario_id: String,
    pub created_at: DateTime<Utc>,
    pub dev_mode: bool,
    pub seed: u64,
}

/// A session file opened for appending.
#[derive(Debug)]
pub struct SessionLog {
    path: PathBuf,
    file: File,
}

impl SessionLog {
    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Creates the file and durably writes the header.
    pub fn create(dir: &Path, header: &SessionHeader) -> Result<Self, StoreError> {
        let path = dir.join(format!("{}.jsonl", header.session_id));
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        let file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(io)?;
        let mut log = Self { path, file };
        log.append_line(header)?;
        // Make the new directory entry itself durable.
        if let Ok(d) = File::open(dir) {
            let _ = d.sync_all();
        }
        Ok(log)
    }

    /// Appends one turn and syncs it to disk before returning.
    pub fn append(&mut self, turn: &TurnTrace) -> Result<(), StoreError> {
        self.append_line(turn)
    }

    fn append_line<T: Serialize>(&mut self, value: &T) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(value).expect("session records serialize");
        line.push(b'\n');
        let io = |source| StoreError::Io {
            path: self.path.clone(),
            source,
        };
        self.file.write_all(&line).map_err(io)?;
        self.file.sync_data().map_err(io)
    }

    /// Reads a session file. A final line without its newline is a write
    /// that was never acknowledged; it is cut off so later appends start
    /// on a clean line.
    pub fn open(path: &Path) -> Result<(Self, SessionHeader, Vec<TurnTrace>), StoreError> {
        let io = |source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .open(path)
            .map_err(io)?;
        let mut reader = BufReader::new(&mut file);
        let mut header = None;
        let mut turns = Vec::new();
        let mut valid_len = 0u64;
        let mut buf = String::new();
        for line in 1.. {
            buf.clear();
            let n = reader.read_line(&mut buf).map_err(io)?;
            if n == 0 {
                break;
            }
            if !buf.ends_with('\n') {
                tracing::warn!(path = %path.display(), line, "dropping incomplete trailing record");
                break;
            }
            let corrupt = |e: serde_json::Error| StoreError::Corrupt {
                path: path.to_path_buf(),
                line,
                detail: e.to_string(),
            };
            if header.is_none() {
                header = Some(serde_json::from_str::<SessionHeader>(&buf).map_err(corrupt)?);
            } else {
                turns.push(serde_json::from_str::<TurnTrace>(&buf).map_err(corrupt)?);
            }
            valid_len += n as u64;
        }
        drop(reader);
        let Some(header) = header else {
            return Err(StoreError::Corrupt {
                path: path.to_path_buf(),
                line: 1,
                detail: "missing session header".into(),
            });
        };
        if file.seek(SeekFrom::End(0)).map_err(io)? != valid_len {
            file.set_len(valid_len).map_err(io)?;
            file.sync_data().map_err(io)?;
        }
        Ok((
            Self {
                path: path.to_path_buf(),
                file,
            },
            header,
            turns,
        ))
    }
}
