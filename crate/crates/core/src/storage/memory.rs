use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};

use super::{check_size, validate_name, BlobBackend, RemoteObject, StorageError, DEFAULT_MAX_BLOB_SIZE};
use crate::auth::SessionToken;

type Namespace = BTreeMap<String, (Arc<[u8]>, DateTime<Utc>)>;

/// Process-local store, mostly for tests and demos.
#[derive(Debug)]
pub struct InMemoryBackend {
    users: RwLock<HashMap<String, Namespace>>,
    max_blob_size: u64,
}

impl Default for InMemoryBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl InMemoryBackend {
    pub fn new() -> Self {
        InMemoryBackend { users: RwLock::new(HashMap::new()), max_blob_size: DEFAULT_MAX_BLOB_SIZE }
    }

    pub fn with_max_blob_size(mut self, max: u64) -> Self {
        self.max_blob_size = max;
        self
    }
}

impl BlobBackend for InMemoryBackend {
    fn put(&self, session: &SessionToken, name: &str, bytes: &[u8]) -> Result<RemoteObject, StorageError> {
        validate_name(name)?;
        check_size(bytes.len(), self.max_blob_size)?;
        let now = Utc::now();
        self.users
            .write()
            .unwrap()
            .entry(session.username.clone())
            .or_default()
            .insert(name.to_owned(), (Arc::from(bytes), now));
        Ok(RemoteObject { name: name.to_owned(), size: bytes.len() as u64, modified_at: now })
    }

    fn get(&self, session: &SessionToken, name: &str) -> Result<Vec<u8>, StorageError> {
        validate_name(name)?;
        let users = self.users.read().unwrap();
        let (bytes, _) = users.get(&session.username).and_then(|ns| ns.get(name)).ok_or(StorageError::NotFound)?;
        Ok(bytes.to_vec())
    }

    fn list(&self, session: &SessionToken) -> Result<Vec<RemoteObject>, StorageError> {
        let users = self.users.read().unwrap();
        Ok(users
            .get(&session.username)
            .map(|ns| {
                ns.iter()
                    .map(|(name, (bytes, at))| RemoteObject {
                        name: name.clone(),
                        size: bytes.len() as u64,
                        modified_at: *at,
                    })
                    .collect()
            })
            .unwrap_or_default())
    }

    fn delete(&self, session: &SessionToken, name: &str) -> Result<(), StorageError> {
        validate_name(name)?;
        self.users
            .write()
            .unwrap()
            .get_mut(&session.username)
            .and_then(|ns| ns.remove(name))
            .map(|_| ())
            .ok_or(StorageError::NotFound)
    }
}
