//! Per-session append-only event logs on disk.
//!
//! Layout: `<root>/<session id>/events.jsonl`, plus an optional
//! `truth.json` with ground-truth scores for simulated sessions.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use hilrank_core::session::SessionEvent;

use crate::error::{Result, ServiceError};

pub const LOG_FILE: &str = "events.jsonl";
pub const TRUTH_FILE: &str = "truth.json";

/// Session ids double as directory names.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

#[derive(Debug, Clone)]
pub struct EventStore {
    root: PathBuf,
}

impl EventStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> Result<PathBuf> {
        if !valid_session_id(id) {
            return Err(ServiceError::BadRequest(format!("invalid session id {id:?}")));
        }
        Ok(self.root.join(id))
    }

    pub fn log_path(&self, id: &str) -> Result<PathBuf> {
        Ok(self.dir(id)?.join(LOG_FILE))
    }

    pub fn exists(&self, id: &str) -> bool {
        self.log_path(id).is_ok_and(|p| p.exists())
    }

    pub fn append(&self, id: &str, events: &[SessionEvent]) -> Result<()> {
        if events.is_empty() {
            return Ok(());
        }
        let dir = self.dir(id)?;
        fs::create_dir_all(&dir)?;
        append_log(dir.join(LOG_FILE), events)
    }

    pub fn load(&self, id: &str) -> Result<Vec<SessionEvent>> {
        let path = self.log_path(id)?;
        if !path.exists() {
            return Err(ServiceError::UnknownSession(id.to_string()));
        }
        read_log(path)
    }

    /// Ids of every stored session, sorted.
    pub fn sessions(&self) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if valid_session_id(&name) && entry.path().join(LOG_FILE).exists() {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn save_truth(&self, id: &str, truth: &HashMap<String, f64>) -> Result<()> {
        let dir = self.dir(id)?;
        fs::create_dir_all(&dir)?;
        fs::write(dir.join(TRUTH_FILE), serde_json::to_vec(truth)?)?;
        Ok(())
    }

    pub fn load_truth(&self, id: &str) -> Result<Option<HashMap<String, f64>>> {
        let path = self.dir(id)?.join(TRUTH_FILE);
        if !path.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_slice(&fs::read(path)?)?))
    }
}

/// Appends events, one JSON object per line, and syncs the file.
pub fn append_log(path: impl AsRef<Path>, events: &[SessionEvent]) -> Result<()> {
    let mut buf = Vec::new();
    for e in events {
        serde_json::to_writer(&mut buf, e)?;
        buf.push(b'\n');
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(&buf)?;
    f.sync_data()?;
    Ok(())
}

pub fn write_log(path: impl AsRef<Path>, events: &[SessionEvent]) -> Result<()> {
    let path = path.as_ref();
    if path.exists() {
        fs::remove_file(path)?;
    }
    append_log(path, events)
}

/// Reads a log. An unterminated, unparsable final line (a torn append) is
/// dropped; any other bad line is an error.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<SessionEvent>> {
    let path = path.as_ref();
    let mut reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    let mut line = String::new();
    let mut line_no = 0;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        line_no += 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<SessionEvent>(&line) {
            Ok(e) => events.push(e),
            Err(_) if !line.ends_with('\n') => break,
            Err(e) => {
                return Err(ServiceError::Log {
                    path: path.display().to_string(),
                    line: line_no,
                    reason: e.to_string(),
                })
            }
        }
    }
    Ok(events)
}
