//! Blob stores that hold uploaded envelopes.
//!
//! Every backend exposes the same put/get/list/delete surface through
//! [`BlobBackend`] and keeps a separate flat namespace per user. The
//! in-memory and local-directory backends take the namespace from the
//! session's username; the HTTP backend sends the session token and lets the
//! service decide.

use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use url::Url;

use crate::auth::SessionToken;

pub mod http;
pub mod local;
pub mod memory;

pub use self::http::CloudClient;
pub use self::local::LocalDirBackend;
pub use self::memory::InMemoryBackend;

pub const MAX_NAME_CHARS: usize = 255;
pub const DEFAULT_MAX_BLOB_SIZE: u64 = 1 << 30;

/// Metadata for one stored blob.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteObject {
    pub name: String,
    pub size: u64,
    pub modified_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StorageError {
    #[error("authentication required: session missing, expired or revoked")]
    AuthRequired,
    #[error("invalid object name: {0}")]
    NameInvalid(&'static str),
    #[error("object not found")]
    NotFound,
    #[error("object of {size} octets exceeds the {max} octet limit")]
    TooLarge { size: u64, max: u64 },
    #[error("storage failure: {0}")]
    StorageFailure(String),
    #[error("cannot reach the cloud service: {0}")]
    ConnectionFailure(String),
}

impl From<std::io::Error> for StorageError {
    fn from(e: std::io::Error) -> Self {
        StorageError::StorageFailure(e.to_string())
    }
}

pub trait BlobBackend: Send + Sync {
    /// Stores `bytes` under `name`, replacing any previous object atomically.
    fn put(&self, session: &SessionToken, name: &str, bytes: &[u8]) -> Result<RemoteObject, StorageError>;

    fn get(&self, session: &SessionToken, name: &str) -> Result<Vec<u8>, StorageError>;

    /// Live objects, sorted by name.
    fn list(&self, session: &SessionToken) -> Result<Vec<RemoteObject>, StorageError>;

    fn delete(&self, session: &SessionToken, name: &str) -> Result<(), StorageError>;
}

impl<B: BlobBackend + ?Sized> BlobBackend for &B {
    fn put(&self, session: &SessionToken, name: &str, bytes: &[u8]) -> Result<RemoteObject, StorageError> {
        (**self).put(session, name, bytes)
    }

    fn get(&self, session: &SessionToken, name: &str) -> Result<Vec<u8>, StorageError> {
        (**self).get(session, name)
    }

    fn list(&self, session: &SessionToken) -> Result<Vec<RemoteObject>, StorageError> {
        (**self).list(session)
    }

    fn delete(&self, session: &SessionToken, name: &str) -> Result<(), StorageError> {
        (**self).delete(session, name)
    }
}

impl<B: BlobBackend + ?Sized> BlobBackend for Box<B> {
    fn put(&self, session: &SessionToken, name: &str, bytes: &[u8]) -> Result<RemoteObject, StorageError> {
        (**self).put(session, name, bytes)
    }

    fn get(&self, session: &SessionToken, name: &str) -> Result<Vec<u8>, StorageError> {
        (**self).get(session, name)
    }

    fn list(&self, session: &SessionToken) -> Result<Vec<RemoteObject>, StorageError> {
        (**self).list(session)
    }

    fn delete(&self, session: &SessionToken, name: &str) -> Result<(), StorageError> {
        (**self).delete(session, name)
    }
}

/// Object names are flat: 1 to 255 characters, no path separators, no
/// control characters, and not `.` or `..`.
pub fn validate_name(name: &str) -> Result<(), StorageError> {
    let chars = name.chars().count();
    if chars == 0 {
        return Err(StorageError::NameInvalid("empty"));
    }
    if chars > MAX_NAME_CHARS {
        return Err(StorageError::NameInvalid("longer than 255 characters"));
    }
    if name.contains(['/', '\\']) {
        return Err(StorageError::NameInvalid("contains a path separator"));
    }
    if name.chars().any(char::is_control) {
        return Err(StorageError::NameInvalid("contains control characters"));
    }
    if name == "." || name == ".." {
        return Err(StorageError::NameInvalid("reserved name"));
    }
    Ok(())
}

fn check_size(len: usize, max: u64) -> Result<(), StorageError> {
    if len as u64 > max {
        return Err(StorageError::TooLarge { size: len as u64, max });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendConfig {
    LocalDir { root_path: PathBuf },
    InMemory,
    Http { base_url: Url },
}

impl BackendConfig {
    pub fn open(&self) -> Result<Box<dyn BlobBackend>, StorageError> {
        Ok(match self {
            BackendConfig::LocalDir { root_path } => Box::new(LocalDirBackend::new(root_path)?),
            BackendConfig::InMemory => Box::new(InMemoryBackend::new()),
            BackendConfig::Http { base_url } => Box::new(CloudClient::new(base_url.clone())?),
        })
    }
}
