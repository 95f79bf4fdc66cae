//! HTTP gateway, configuration, and command-line entry points for the
//! co-design service.

pub mod api;
pub mod config;
pub mod error;
pub mod idempotency;
#[cfg(feature = "live")]
mod live;

pub use api::router;
pub use config::{ConfigError, ServeArgs, ServiceConfig};
pub use error::ApiError;
