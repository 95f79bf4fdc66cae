//! Optimistic transactional document store.
//!
//! Every record carries a version that increases by exactly one per committed
//! write. A [`Txn`] remembers the version of every key it reads and the commit
//! succeeds only if none of them moved in the meantime; otherwise the whole
//! closure is re-run against fresh reads (see [`run_transaction`]).

mod file;
mod memory;

use std::collections::BTreeMap;
use std::time::Duration;

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub use file::FileStore;
pub use memory::MemoryStore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreRecord {
    pub key: String,
    pub value: Value,
    pub version: u64,
}

/// A set of writes guarded by read versions. Version `0` means "absent".
#[derive(Debug, Default, Clone)]
pub struct CommitBatch {
    pub reads: BTreeMap<String, u64>,
    pub writes: BTreeMap<String, Value>,
    pub blobs: Vec<(String, Vec<u8>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommitOutcome {
    Committed,
    Conflict { key: String },
}

pub trait Store: Send + Sync {
    fn get(&self, key: &str) -> Result<Option<StoreRecord>>;

    /// All records whose key starts with `prefix`, in key order.
    fn scan_prefix(&self, prefix: &str) -> Result<Vec<StoreRecord>>;

    /// Atomically applies `batch` if every read version is still current.
    /// Each written key is stored at its read version plus one.
    fn commit(&self, batch: CommitBatch) -> Result<CommitOutcome>;

    fn get_blob(&self, id: &str) -> Result<Option<Vec<u8>>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 16,
            base_backoff: Duration::from_micros(50),
            max_backoff: Duration::from_millis(5),
        }
    }
}

impl RetryPolicy {
    /// Full-jitter exponential backoff for the given (1-based) attempt.
    fn backoff(&self, attempt: u32) -> Duration {
        let exp = self
            .base_backoff
            .saturating_mul(1u32 << attempt.min(16))
            .min(self.max_backoff);
        let micros = exp.as_micros() as u64;
        if micros == 0 {
            return Duration::ZERO;
        }
        Duration::from_micros(rand::rng().random_range(0..=micros))
    }
}

/// Read-tracking, write-buffering view over a store.
pub struct Txn<'a> {
    store: &'a dyn Store,
    reads: BTreeMap<String, (u64, Option<Value>)>,
    writes: BTreeMap<String, Value>,
    blobs: Vec<(String, Vec<u8>)>,
}

impl<'a> Txn<'a> {
    fn new(store: &'a dyn Store) -> Self {
        Self {
            store,
            reads: BTreeMap::new(),
            writes: BTreeMap::new(),
            blobs: Vec::new(),
        }
    }

    pub fn get(&mut self, key: &str) -> Result<Option<Value>> {
        if let Some(v) = self.writes.get(key) {
            return Ok(Some(v.clone()));
        }
        if let Some((_, v)) = self.reads.get(key) {
            return Ok(v.clone());
        }
        let record = self.store.get(key)?;
        let (version, value) = match record {
            Some(r) => (r.version, Some(r.value)),
            None => (0, None),
        };
        self.reads.insert(key.to_string(), (version, value.clone()));
        Ok(value)
    }

    pub fn get_as<T: DeserializeOwned>(&mut self, key: &str) -> Result<Option<T>> {
        match self.get(key)? {
            Some(v) => Ok(Some(serde_json::from_value(v)?)),
            None => Ok(None),
        }
    }

    pub fn put(&mut self, key: &str, value: Value) -> Result<()> {
        if !self.reads.contains_key(key) {
            self.get(key)?;
        }
        self.writes.insert(key.to_string(), value);
        Ok(())
    }

    pub fn put_as<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        self.put(key, serde_json::to_value(value)?)
    }

    /// Stages an immutable binary object; written only if the commit succeeds.
    pub fn put_blob(&mut self, id: &str, bytes: Vec<u8>) {
        self.blobs.push((id.to_string(), bytes));
    }

    fn into_batch(self) -> CommitBatch {
        CommitBatch {
            reads: self.reads.into_iter().map(|(k, (v, _))| (k, v)).collect(),
            writes: self.writes,
            blobs: self.blobs,
        }
    }
}

/// Runs `body` as an optimistic transaction, retrying on version conflicts.
///
/// An `Err` from `body` aborts the attempt without writing anything.
pub fn run_transaction<T>(
    store: &dyn Store,
    policy: &RetryPolicy,
    mut body: impl FnMut(&mut Txn<'_>) -> Result<T>,
) -> Result<T> {
    let mut last_conflict = String::new();
    for attempt in 1..=policy.max_attempts.max(1) {
        let mut txn = Txn::new(store);
        let out = body(&mut txn)?;
        if txn.writes.is_empty() && txn.blobs.is_empty() {
            return Ok(out);
        }
        match store.commit(txn.into_batch())? {
            CommitOutcome::Committed => return Ok(out),
            CommitOutcome::Conflict { key } => {
                last_conflict = key;
                if attempt < policy.max_attempts {
                    std::thread::sleep(policy.backoff(attempt));
                }
            }
        }
    }
    Err(Error::ConflictExhausted {
        key: last_conflict,
        attempts: policy.max_attempts.max(1),
    })
}

/// Single-key read-modify-write. `mutate` receives the current value (if
/// any) and returns the replacement.
pub fn transact(
    store: &dyn Store,
    policy: &RetryPolicy,
    key: &str,
    mut mutate: impl FnMut(Option<&Value>) -> Result<Value>,
) -> Result<StoreRecord> {
    run_transaction(store, policy, |txn| {
        let current = txn.get(key)?;
        let next = mutate(current.as_ref())?;
        txn.put(key, next)?;
        Ok(())
    })?;
    store
        .get(key)?
        .ok_or_else(|| Error::Storage(format!("record {key} vanished after commit")))
}

/// Shared version check used by the backends.
fn first_conflict(
    batch: &CommitBatch,
    current_version: impl Fn(&str) -> u64,
) -> Option<String> {
    batch
        .reads
        .iter()
        .find(|(key, expected)| current_version(key) != **expected)
        .map(|(key, _)| key.clone())
}
