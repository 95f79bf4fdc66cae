//! Canonical JSON encoding and content digests.
//!
//! Canonical form: object keys sorted, UTF-8, no insignificant whitespace.
//! `serde_json::Map` is ordered by key unless the `preserve_order` feature is
//! enabled, so routing every value through `serde_json::Value` yields sorted
//! keys at every depth.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub fn to_canonical_value<T: Serialize>(value: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(value)?)
}

pub fn to_canonical_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let value = to_canonical_value(value)?;
    Ok(serde_json::to_vec(&value)?)
}

pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    let value = to_canonical_value(value)?;
    Ok(serde_json::to_string(&value)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `sha256:<hex>` digest used for stored artifacts.
pub fn content_hash(bytes: &[u8]) -> String {
    format!("sha256:{}", sha256_hex(bytes))
}

/// Short, path-safe identifier derived from its parts.
pub(crate) fn derived_id(prefix: &str, parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_be_bytes());
        hasher.update(part.as_bytes());
    }
    let digest = hex::encode(hasher.finalize());
    format!("{prefix}-{}", &digest[..16])
}
