//! Request-id deduplication for state-changing endpoints.
//!
//! The first request carrying a given id claims it in the store, runs, and
//! records its response; later requests with the same id get that response
//! back without running again. Ids are scoped to the request fingerprint
//! (method, path, body), so reusing one for a different request is an error.
//! A claim left behind by a crashed handler expires after [`CLAIM_LEASE_MS`].

use std::time::{SystemTime, UNIX_EPOCH};

use axum::http::StatusCode;
use codesign_core::canonical::sha256_hex;
use codesign_core::store::run_transaction;
use codesign_core::Workshop;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ApiError;

pub const HEADER: &str = "idempotency-key";
pub const CLAIM_LEASE_MS: i64 = 30_000;
const MAX_KEY_CHARS: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
enum Record {
    InFlight { fingerprint: String, claimed_at_ms: i64 },
    Done { fingerprint: String, status: u16, body: Value },
    /// The last attempt failed with a retryable error; the id may run again.
    Released { fingerprint: String },
}

impl Record {
    fn fingerprint(&self) -> &str {
        match self {
            Self::InFlight { fingerprint, .. } | Self::Done { fingerprint, .. } | Self::Released { fingerprint } => {
                fingerprint
            }
        }
    }
}

enum Claim {
    Run,
    Replay(u16, Value),
}

fn now_ms() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

fn record_key(id: &str) -> String {
    format!("requests/{id}")
}

pub fn fingerprint(method: &str, path: &str, body: &Value) -> String {
    let body = codesign_core::canonical::to_canonical_string(body).unwrap_or_default();
    sha256_hex(format!("{method} {path} {body}").as_bytes())
}

fn validate_id(id: &str) -> Result<(), ApiError> {
    let ok = !id.is_empty()
        && id.chars().count() <= MAX_KEY_CHARS
        && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.:".contains(c));
    if ok {
        Ok(())
    } else {
        Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "invalid_request_id",
            "Idempotency-Key must be 1-128 characters of [A-Za-z0-9-_.:]",
        ))
    }
}

fn store_err(e: codesign_core::Error) -> ApiError {
    ApiError::from(e)
}

/// Runs `op` at most once per request id. Without an id it simply runs.
pub fn execute(
    ws: &Workshop,
    request_id: Option<&str>,
    fingerprint: &str,
    op: impl FnOnce() -> Result<Value, ApiError>,
) -> (StatusCode, Value) {
    match execute_inner(ws, request_id, fingerprint, op) {
        Ok((status, body)) => (StatusCode::from_u16(status).unwrap_or(StatusCode::OK), body),
        Err(e) => (e.status(), serde_json::to_value(&e).unwrap_or(Value::Null)),
    }
}

fn execute_inner(
    ws: &Workshop,
    request_id: Option<&str>,
    fingerprint: &str,
    op: impl FnOnce() -> Result<Value, ApiError>,
) -> Result<(u16, Value), ApiError> {
    let Some(id) = request_id else {
        return op().map(|v| (200, v));
    };
    validate_id(id)?;
    let key = record_key(id);
    let policy = ws.limits().retry;

    let claim = run_transaction(ws.store().as_ref(), &policy, |txn| {
        let existing: Option<Record> = txn.get_as(&key)?;
        if let Some(rec) = &existing {
            if rec.fingerprint() != fingerprint {
                return Ok(Err(ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "request_id_reused",
                    "this Idempotency-Key was used for a different request",
                )));
            }
        }
        match existing {
            Some(Record::Done { status, body, .. }) => Ok(Ok(Claim::Replay(status, body))),
            Some(Record::InFlight { claimed_at_ms, .. }) if now_ms() - claimed_at_ms < CLAIM_LEASE_MS => {
                Ok(Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "request_in_progress",
                    "a request with this Idempotency-Key is still running",
                )
                .with_retryable()))
            }
            _ => {
                txn.put_as(
                    &key,
                    &Record::InFlight {
                        fingerprint: fingerprint.to_string(),
                        claimed_at_ms: now_ms(),
                    },
                )?;
                Ok(Ok(Claim::Run))
            }
        }
    })
    .map_err(store_err)??;

    if let Claim::Replay(status, body) = claim {
        return Ok((status, body));
    }

    let outcome = op();
    let record = match &outcome {
        Ok(body) => Record::Done {
            fingerprint: fingerprint.to_string(),
            status: 200,
            body: body.clone(),
        },
        Err(e) if e.retryable => Record::Released {
            fingerprint: fingerprint.to_string(),
        },
        Err(e) => Record::Done {
            fingerprint: fingerprint.to_string(),
            status: e.status,
            body: serde_json::to_value(e).unwrap_or(Value::Null),
        },
    };
    run_transaction(ws.store().as_ref(), &policy, |txn| txn.put_as(&key, &record)).map_err(store_err)?;
    outcome.map(|v| (200, v))
}

impl ApiError {
    fn with_retryable(mut self) -> Self {
        self.retryable = true;
        self
    }
}
