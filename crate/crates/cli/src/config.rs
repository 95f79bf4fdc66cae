//! Service configuration: flags, environment, and startup validation.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use codesign_core::agents::HistoryLimits;
use codesign_core::scene::{MockImageProvider, MockSceneProvider};
use codesign_core::{FileStore, Limits, MemoryStore, Personas, RetryPolicy, Store, SystemClock, Workshop};

pub const CHAT_KEY_VAR: &str = "GEMINI_API_KEY";
pub const IMAGE_KEY_VAR: &str = "GEMINI_API_KEY";
pub const SCENE_KEY_VAR: &str = "GOOGLE_MAPS_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid configuration {key}: {message}")]
pub struct ConfigError {
    /// Environment variable (or flag) at fault.
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StoreMode {
    Memory,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderMode {
    Mock,
    Live,
}

/// Every setting is available as a flag and as an environment variable;
/// flags win. Credentials are read from the environment only.
#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, env = "CODESIGN_HOST", default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "CODESIGN_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, env = "CODESIGN_STORE", value_enum, default_value = "memory")]
    pub store: StoreMode,
    #[arg(long, env = "CODESIGN_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, env = "CODESIGN_CHAT_PROVIDER", value_enum, default_value = "mock")]
    pub chat_provider: ProviderMode,
    #[arg(long, env = "CODESIGN_SCENE_PROVIDER", value_enum, default_value = "mock")]
    pub scene_provider: ProviderMode,
    #[arg(long, env = "CODESIGN_IMAGE_PROVIDER", value_enum, default_value = "mock")]
    pub image_provider: ProviderMode,
    #[arg(long, env = "CODESIGN_CHAT_MODEL", default_value = "gemini-2.5-flash")]
    pub chat_model: String,
    #[arg(long, env = "CODESIGN_IMAGE_MODEL", default_value = "gemini-2.5-flash-image")]
    pub image_model: String,
    /// Directory with replacement persona prompt files.
    #[arg(long, env = "CODESIGN_PROMPTS_DIR")]
    pub prompts_dir: Option<PathBuf>,
    #[arg(long, env = "CODESIGN_CORS_ORIGIN", default_value = "http://localhost:5173")]
    pub cors_origin: String,
    #[arg(long, env = "CODESIGN_MAX_PARTICIPANTS", default_value_t = 16)]
    pub max_participants: usize,
    #[arg(long, env = "CODESIGN_HISTORY_MESSAGES", default_value_t = 200)]
    pub history_messages: usize,
    #[arg(long, env = "CODESIGN_HISTORY_CHARS", default_value_t = 60_000)]
    pub history_chars: usize,
    #[arg(long, env = "CODESIGN_RETRY_ATTEMPTS", default_value_t = 16)]
    pub retry_attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoreConfig {
    Memory,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderConfig {
    Mock,
    Live { api_key: String, model: String },
}

/// Fully resolved and validated settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub store: StoreConfig,
    pub chat: ProviderConfig,
    pub scene: ProviderConfig,
    pub image: ProviderConfig,
    pub prompts_dir: Option<PathBuf>,
    pub cors_origin: String,
    pub limits: Limits,
}

fn provider(
    mode: ProviderMode,
    flag: &str,
    key_var: &str,
    model: &str,
    env: &dyn Fn(&str) -> Option<String>,
) -> Result<ProviderConfig, ConfigError> {
    match mode {
        ProviderMode::Mock => Ok(ProviderConfig::Mock),
        ProviderMode::Live => {
            let api_key = env(key_var)
                .filter(|v| !v.trim().is_empty())
                .ok_or_else(|| ConfigError::new(key_var, format!("required when {flag} is live")))?;
            if !cfg!(feature = "live") {
                return Err(ConfigError::new(flag, "live providers need a build with the `live` feature"));
            }
            Ok(ProviderConfig::Live {
                api_key,
                model: model.to_string(),
            })
        }
    }
}

impl ServiceConfig {
    /// Validates `args`, looking credentials up through `env`.
    pub fn resolve(args: &ServeArgs, env: &dyn Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let listen: SocketAddr = format!("{}:{}", args.host, args.port)
            .parse()
            .or_else(|_| {
                use std::net::ToSocketAddrs;
                (args.host.as_str(), args.port)
                    .to_socket_addrs()
                    .ok()
                    .and_then(|mut a| a.next())
                    .ok_or(())
            })
            .map_err(|_| ConfigError::new("CODESIGN_HOST", format!("cannot resolve {:?}", args.host)))?;
        let store = match (args.store, &args.data_dir) {
            (StoreMode::Memory, None) => StoreConfig::Memory,
            (StoreMode::Memory, Some(_)) => {
                return Err(ConfigError::new("CODESIGN_DATA_DIR", "set, but the store is memory"))
            }
            (StoreMode::File, None) => {
                return Err(ConfigError::new("CODESIGN_DATA_DIR", "required when CODESIGN_STORE is file"))
            }
            (StoreMode::File, Some(dir)) => StoreConfig::File(dir.clone()),
        };
        if args.max_participants == 0 {
            return Err(ConfigError::new("CODESIGN_MAX_PARTICIPANTS", "must be at least 1"));
        }
        if args.history_messages == 0 || args.history_chars == 0 {
            return Err(ConfigError::new("CODESIGN_HISTORY_MESSAGES", "history limits must be positive"));
        }
        if args.retry_attempts == 0 {
            return Err(ConfigError::new("CODESIGN_RETRY_ATTEMPTS", "must be at least 1"));
        }
        Ok(Self {
            listen,
            store,
            chat: provider(args.chat_provider, "CODESIGN_CHAT_PROVIDER", CHAT_KEY_VAR, &args.chat_model, env)?,
            scene: provider(args.scene_provider, "CODESIGN_SCENE_PROVIDER", SCENE_KEY_VAR, "streetview", env)?,
            image: provider(args.image_provider, "CODESIGN_IMAGE_PROVIDER", IMAGE_KEY_VAR, &args.image_model, env)?,
            prompts_dir: args.prompts_dir.clone(),
            cors_origin: args.cors_origin.clone(),
            limits: Limits {
                max_participants: args.max_participants,
                history: HistoryLimits {
                    max_messages: args.history_messages,
                    max_chars: args.history_chars,
                },
                retry: RetryPolicy {
                    max_attempts: args.retry_attempts,
                    ..RetryPolicy::default()
                },
            },
        })
    }

    /// Opens the store (probing that a file store is writable) and wires up
    /// the providers.
    pub fn build_workshop(&self) -> Result<Workshop, ConfigError> {
        let store: Arc<dyn Store> = match &self.store {
            StoreConfig::Memory => Arc::new(MemoryStore::new()),
            StoreConfig::File(dir) => Arc::new(
                FileStore::open(dir).map_err(|e| ConfigError::new("CODESIGN_DATA_DIR", e.to_string()))?,
            ),
        };
        let personas = match &self.prompts_dir {
            None => Personas::builtin(),
            Some(dir) => {
                Personas::from_dir(dir).map_err(|e| ConfigError::new("CODESIGN_PROMPTS_DIR", e.to_string()))?
            }
        };
        let builder = Workshop::builder()
            .store(store)
            .clock(Arc::new(SystemClock))
            .personas(personas)
            .limits(self.limits)
            .scenes(Arc::new(MockSceneProvider::default()))
            .images(Arc::new(MockImageProvider));
        #[cfg(feature = "live")]
        let builder = crate::live::apply(builder, self);
        Ok(builder.build())
    }
}
