use std::collections::{BTreeMap, HashMap};

use parking_lot::Mutex;

use super::{first_conflict, CommitBatch, CommitOutcome, Store, StoreRecord};
use crate::error::Result;

#[derive(Debug, Default)]
struct Inner {
    records: BTreeMap<String, StoreRecord>,
    blobs: HashMap<String, Vec<u8>>,
}

/// Process-local store; the default for tests and ephemeral servers.
#[derive(Debug, Default)]
pub struct MemoryStore {
    inner: Mutex<Inner>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Store for MemoryStore {
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
        for (id, bytes) in batch.blobs {
            inner.blobs.insert(id, bytes);
        }
        for (key, value) in batch.writes {
            let version = batch.reads.get(&key).copied().unwrap_or(0) + 1;
            inner
                .records
                .insert(key.clone(), StoreRecord { key, value, version });
        }
        Ok(CommitOutcome::Committed)
    }

    fn get_blob(&self, id: &str) -> Result<Option<Vec<u8>>> {
        Ok(self.inner.lock().blobs.get(id).cloned())
    }
}
