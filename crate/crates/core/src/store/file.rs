//! Single-directory store with a write-ahead journal.
//!
//! Layout under the root directory:
//!
//! ```text
//! journal.log                     one JSON line per committed batch
//! rooms/<room_id>.json            record files, one per key ("rooms/<id>")
//! messages/<room_id>/<seq>.json
//! artifacts/<artifact_id>.png     immutable blobs
//! ```
//!
//! A commit is durable once its journal line is synced. Record files are
//! rewritten lazily and only synced at checkpoints, after which the journal is
//! truncated. Opening the store replays whatever the journal still holds, so a
//! crash between the journal append and the record-file rewrite loses nothing.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{first_conflict, CommitBatch, CommitOutcome, Store, StoreRecord};
use crate::error::{Error, Result};

const JOURNAL: &str = "journal.log";
const BLOB_DIR: &str = "artifacts";
const DEFAULT_CHECKPOINT_EVERY: usize = 1024;

#[derive(Debug, Serialize, Deserialize)]
struct JournalWrite {
    key: String,
    version: u64,
    value: Value,
}

#[derive(Debug, Serialize, Deserialize)]
struct JournalEntry {
    writes: Vec<JournalWrite>,
}

struct Inner {
    records: BTreeMap<String, StoreRecord>,
    journal: File,
    journal_entries: usize,
    dirty: BTreeSet<String>,
}

pub struct FileStore {
    root: PathBuf,
    checkpoint_every: usize,
    inner: Mutex<Inner>,
}

impl std::fmt::Debug for FileStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FileStore").field("root", &self.root).finish()
    }
}

impl FileStore {
    /// Opens (or initializes) a store rooted at `root`, replaying the journal.
    ///
    /// Fails immediately if the directory is not writable.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        Self::open_with_checkpoint(root, DEFAULT_CHECKPOINT_EVERY)
    }

    pub fn open_with_checkpoint(root: impl Into<PathBuf>, checkpoint_every: usize) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join(BLOB_DIR)).map_err(|e| {
            Error::Storage(format!("cannot create {}: {e}", root.display()))
        })?;
        probe_writable(&root)?;

        let mut records = BTreeMap::new();
        load_records(&root, &root, &mut records)?;

        let journal_path = root.join(JOURNAL);
        let replayed = replay_journal(&journal_path, &mut records)?;
        for key in &replayed {
            write_record_file(&root, &records[key], true)?;
        }
        let journal = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&journal_path)?;
        journal.set_len(0)?;
        journal.sync_all()?;
        if !replayed.is_empty() {
            tracing::info!(records = replayed.len(), "replayed journal");
        }

        Ok(Self {
            root,
            checkpoint_every: checkpoint_every.max(1),
            inner: Mutex::new(Inner {
                records,
                journal,
                journal_entries: 0,
                dirty: BTreeSet::new(),
            }),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Syncs every record file written since the last checkpoint and
    /// truncates the journal.
    pub fn checkpoint(&self) -> Result<()> {
        let mut inner = self.inner.lock();
        self.checkpoint_locked(&mut inner)
    }

    fn checkpoint_locked(&self, inner: &mut Inner) -> Result<()> {
        for key in std::mem::take(&mut inner.dirty) {
            File::open(record_path(&self.root, &key))?.sync_all()?;
        }
        inner.journal.set_len(0)?;
        inner.journal.sync_all()?;
        inner.journal_entries = 0;
        Ok(())
    }
}

impl Store for FileStore {
    fn get(&self, key: &str) -> Result<Option<StoreRecord>> {
        Ok(self.inner.lock().records.get(key).cloned())
    }

    fn scan_prefix(&self, prefix: &str) -> Result<Vec<StoreRecord>> {
        let inner = self.inner.lock();
        Ok(inner
            .records
            .range(prefix.to_string()..)
            .take_while(|(k, _)| k.starts_with(prefix))
            .map(|(_, r)| r.clone())
            .collect())
    }

    fn commit(&self, batch: CommitBatch) -> Result<CommitOutcome> {
        let mut inner = self.inner.lock();
        if let Some(key) = first_conflict(&batch, |k| {
            inner.records.get(k).map(|r| r.version).unwrap_or(0)
        }) {
            return Ok(CommitOutcome::Conflict { key });
        }

        for (id, bytes) in &batch.blobs {
            let path = blob_path(&self.root, id);
            write_atomic(&path, bytes, true)?;
        }

        let writes: Vec<JournalWrite> = batch
            .writes
            .into_iter()
            .map(|(key, value)| {
                let version = batch.reads.get(&key).copied().unwrap_or(0) + 1;
                JournalWrite { key, version, value }
            })
            .collect();
        let entry = JournalEntry { writes };
        let mut line = serde_json::to_vec(&entry)?;
        line.push(b'\n');
        inner.journal.write_all(&line)?;
        inner.journal.sync_data()?;

        for w in entry.writes {
            let record = StoreRecord {
                key: w.key.clone(),
                value: w.value,
                version: w.version,
            };
            write_record_file(&self.root, &record, false)?;
            inner.dirty.insert(w.key.clone());
            inner.records.insert(w.key, record);
        }
        inner.journal_entries += 1;
        if inner.journal_entries >= self.checkpoint_every {
            self.checkpoint_locked(&mut inner)?;
        }
        Ok(CommitOutcome::Committed)
    }

    fn get_blob(&self, id: &str) -> Result<Option<Vec<u8>>> {
        match fs::read(blob_path(&self.root, id)) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

fn probe_writable(root: &Path) -> Result<()> {
    let probe = root.join(".write-probe");
    fs::write(&probe, b"ok")
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| Error::Storage(format!("{} is not writable: {e}", root.display())))
}

fn load_records(root: &Path, dir: &Path, out: &mut BTreeMap<String, StoreRecord>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        let file_type = entry.file_type()?;
        if file_type.is_dir() {
            if dir == root && entry.file_name() == BLOB_DIR {
                continue;
            }
            load_records(root, &path, out)?;
        } else if path.extension().is_some_and(|e| e == "json") {
            let bytes = fs::read(&path)?;
            let record: StoreRecord = serde_json::from_slice(&bytes).map_err(|e| {
                Error::Storage(format!("corrupt record file {}: {e}", path.display()))
            })?;
            out.insert(record.key.clone(), record);
        }
    }
    Ok(())
}

/// Applies journal entries newer than the loaded record files. A torn final
/// line (crash mid-append) is ignored; corruption anywhere else is an error.
fn replay_journal(
    path: &Path,
    records: &mut BTreeMap<String, StoreRecord>,
) -> Result<BTreeSet<String>> {
    let mut touched = BTreeSet::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(touched),
        Err(e) => return Err(e.into()),
    };
    let lines: Vec<String> = BufReader::new(file)
        .split(b'\n')
        .map(|l| l.map(|b| String::from_utf8_lossy(&b).into_owned()))
        .collect::<std::io::Result<_>>()?;
    let last = lines.len().saturating_sub(1);
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: JournalEntry = match serde_json::from_str(line) {
            Ok(e) => e,
            Err(_) if i == last => {
                tracing::warn!("discarding torn journal tail");
                break;
            }
            Err(e) => return Err(Error::Storage(format!("corrupt journal line {i}: {e}"))),
        };
        for w in entry.writes {
            let current = records.get(&w.key).map(|r| r.version).unwrap_or(0);
            if w.version > current {
                touched.insert(w.key.clone());
                records.insert(
                    w.key.clone(),
                    StoreRecord {
                        key: w.key,
                        value: w.value,
                        version: w.version,
                    },
                );
            }
        }
    }
    Ok(touched)
}

fn write_record_file(root: &Path, record: &StoreRecord, sync: bool) -> Result<()> {
    let bytes = serde_json::to_vec(record)?;
    write_atomic(&record_path(root, &record.key), &bytes, sync)
}

fn write_atomic(path: &Path, bytes: &[u8], sync: bool) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        if sync {
            f.sync_all()?;
        }
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn record_path(root: &Path, key: &str) -> PathBuf {
    let mut path = root.to_path_buf();
    let segments: Vec<&str> = key.split('/').collect();
    let (last, dirs) = segments.split_last().expect("split yields at least one segment");
    for seg in dirs {
        path.push(escape_segment(seg));
    }
    path.push(format!("{}.json", escape_segment(last)));
    path
}

fn blob_path(root: &Path, id: &str) -> PathBuf {
    root.join(BLOB_DIR).join(format!("{}.png", escape_segment(id)))
}

/// Percent-encodes everything outside `[A-Za-z0-9_.-]`, plus a leading dot.
fn escape_segment(seg: &str) -> String {
    let mut out = String::with_capacity(seg.len());
    for (i, b) in seg.bytes().enumerate() {
        let keep = b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || (b == b'.' && i > 0);
        if keep {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    if out.is_empty() {
        out.push_str("%00");
    }
    out
}
