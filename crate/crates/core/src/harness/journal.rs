//! Append-only JSON-lines files with torn-tail recovery.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::transcript::Round;
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub item_id: String,
    pub round: Round,
}

fn scan_jsonl<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<(Vec<T>, usize), HarnessError> {
    let mut records = Vec::new();
    let mut good_len = 0usize;
    let mut start = 0usize;
    while start < bytes.len() {
        let end = bytes[start..].iter().position(|&b| b == b'\n').map(|i| start + i);
        let line = &bytes[start..end.unwrap_or(bytes.len())];
        match (end, serde_json::from_slice::<T>(line)) {
            (Some(end), Ok(record)) => {
                records.push(record);
                good_len = end + 1;
                start = end + 1;
            }
            (Some(end), Err(e)) if end + 1 < bytes.len() => {
                return Err(HarnessError::Journal(format!(
                    "{}: corrupt record at byte {start}: {e}",
                    path.display()
                )));
            }
            _ => break,
        }
    }
    Ok((records, good_len))
}

fn read_bytes(path: &Path) -> Result<Option<Vec<u8>>, HarnessError> {
    match std::fs::read(path) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Reads a JSON-lines file, ignoring a trailing line that is incomplete or
/// does not parse (an interrupted write). Damage anywhere else is an error.
/// A missing file reads as empty.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, HarnessError> {
    match read_bytes(path)? {
        Some(bytes) => Ok(scan_jsonl(path, &bytes)?.0),
        None => Ok(Vec::new()),
    }
}

/// Like [`read_jsonl`], and also cuts the torn tail from the file so new
/// records can be appended after it.
pub fn repair_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let Some(bytes) = read_bytes(path)? else {
        return Ok(Vec::new());
    };
    let (records, good_len) = scan_jsonl(path, &bytes)?;
    if good_len < bytes.len() {
        OpenOptions::new().write(true).open(path)?.set_len(good_len as u64)?;
    }
    Ok(records)
}

/// Serialised appender; each record is written with a single call and
/// synced before the call returns.
pub struct JsonlAppender {
    file: Mutex<File>,
}

impl JsonlAppender {
    pub fn open(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { file: Mutex::new(file) })
    }

    pub fn append<T: Serialize>(&self, record: &T) -> io::Result<()> {
        let mut line = serde_json::to_vec(record).map_err(io::Error::other)?;
        line.push(b'\n');
        let mut file = self.file.lock().unwrap_or_else(|p| p.into_inner());
        file.write_all(&line)?;
        file.sync_data()
    }
}

/// Journal of completed rounds, used to resume interrupted items without
/// querying the endpoint again.
pub struct Journal {
    appender: JsonlAppender,
    failed: Mutex<Option<io::Error>>,
}

impl Journal {
    pub fn open(path: &Path) -> io::Result<Self> {
        Ok(Self {
            appender: JsonlAppender::open(path)?,
            failed: Mutex::new(None),
        })
    }

    pub(crate) fn append_round(&self, item_id: &str, round: &Round) {
        let entry = JournalEntry {
            item_id: item_id.to_owned(),
            round: round.clone(),
        };
        if let Err(e) = self.appender.append(&entry) {
            self.failed.lock().unwrap_or_else(|p| p.into_inner()).get_or_insert(e);
        }
    }

    /// First write error, if any.
    pub fn take_error(&self) -> Option<io::Error> {
        self.failed.lock().unwrap_or_else(|p| p.into_inner()).take()
    }
}
