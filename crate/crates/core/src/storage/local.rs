//! Filesystem-backed blob store.
//!
//! Layout under the root directory:
//!
//! ```text
//! <root>/<ns>/<key>.blob   raw bytes
//! <root>/<ns>/<key>.meta   "name \t size \t modified_at" (RFC 3339)
//! ```
//!
//! where `ns` and `key` are the first 32 hex characters of SHA-256 over the
//! username and the object name, so arbitrary names never touch the
//! filesystem. Both files are written to a temp file and renamed into place;
//! the blob lands before its sidecar and the sidecar goes first on delete, so
//! a listed object always has its bytes.

use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, SecondsFormat, Utc};

use super::{check_size, validate_name, BlobBackend, RemoteObject, StorageError, DEFAULT_MAX_BLOB_SIZE};
use crate::auth::SessionToken;
use crate::crypto::sha256;

#[derive(Debug)]
pub struct LocalDirBackend {
    root: PathBuf,
    max_blob_size: u64,
    // Serializes mutations so a blob and its sidecar change together.
    write_lock: Mutex<()>,
}

fn hashed(s: &str) -> String {
    sha256(s.as_bytes()).to_hex()[..32].to_owned()
}

fn write_atomic(dir: &Path, dest: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dest).map_err(|e| e.error)?;
    Ok(())
}

fn parse_meta(text: &str) -> Option<RemoteObject> {
    let line = text.strip_suffix('\n').unwrap_or(text);
    let mut fields = line.split('\t');
    let name = fields.next()?.to_owned();
    let size = fields.next()?.parse().ok()?;
    let modified_at = DateTime::parse_from_rfc3339(fields.next()?).ok()?.with_timezone(&Utc);
    if fields.next().is_some() {
        return None;
    }
    Some(RemoteObject { name, size, modified_at })
}

impl LocalDirBackend {
    /// Creates the root directory if needed.
    pub fn new(root: impl Into<PathBuf>) -> Result<Self, StorageError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| StorageError::StorageFailure(format!("{}: {e}", root.display())))?;
        Ok(LocalDirBackend { root, max_blob_size: DEFAULT_MAX_BLOB_SIZE, write_lock: Mutex::new(()) })
    }

    pub fn with_max_blob_size(mut self, max: u64) -> Self {
        self.max_blob_size = max;
        self
    }

    pub fn max_blob_size(&self) -> u64 {
        self.max_blob_size
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn namespace_dir(&self, username: &str) -> PathBuf {
        self.root.join(hashed(username))
    }

    fn paths(&self, username: &str, name: &str) -> (PathBuf, PathBuf, PathBuf) {
        let dir = self.namespace_dir(username);
        let key = hashed(name);
        let blob = dir.join(format!("{key}.blob"));
        let meta = dir.join(format!("{key}.meta"));
        (dir, blob, meta)
    }
}

impl BlobBackend for LocalDirBackend {
    fn put(&self, session: &SessionToken, name: &str, bytes: &[u8]) -> Result<RemoteObject, StorageError> {
        validate_name(name)?;
        check_size(bytes.len(), self.max_blob_size)?;
        let (dir, blob, meta) = self.paths(&session.username, name);
        let object = RemoteObject { name: name.to_owned(), size: bytes.len() as u64, modified_at: Utc::now() };
        let sidecar = format!(
            "{}\t{}\t{}\n",
            object.name,
            object.size,
            object.modified_at.to_rfc3339_opts(SecondsFormat::Micros, true)
        );

        let _guard = self.write_lock.lock().unwrap();
        fs::create_dir_all(&dir)?;
        write_atomic(&dir, &blob, bytes)?;
        write_atomic(&dir, &meta, sidecar.as_bytes())?;
        // Re-read so the caller sees exactly what list() will report.
        Ok(parse_meta(&sidecar).unwrap_or(object))
    }

    fn get(&self, session: &SessionToken, name: &str) -> Result<Vec<u8>, StorageError> {
        validate_name(name)?;
        let (_, blob, meta) = self.paths(&session.username, name);
        if !meta.exists() {
            return Err(StorageError::NotFound);
        }
        fs::read(&blob).map_err(|e| match e.kind() {
            ErrorKind::NotFound => StorageError::NotFound,
            _ => e.into(),
        })
    }

    fn list(&self, session: &SessionToken) -> Result<Vec<RemoteObject>, StorageError> {
        let dir = self.namespace_dir(&session.username);
        let entries = match fs::read_dir(&dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut objects = Vec::new();
        for entry in entries {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("meta") {
                continue;
            }
            let text = match fs::read_to_string(&path) {
                Ok(text) => text,
                // Deleted between read_dir and read.
                Err(e) if e.kind() == ErrorKind::NotFound => continue,
                Err(e) => return Err(e.into()),
            };
            let object = parse_meta(&text)
                .ok_or_else(|| StorageError::StorageFailure(format!("{}: malformed sidecar", path.display())))?;
            objects.push(object);
        }
        objects.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(objects)
    }

    fn delete(&self, session: &SessionToken, name: &str) -> Result<(), StorageError> {
        validate_name(name)?;
        let (_, blob, meta) = self.paths(&session.username, name);
        let _guard = self.write_lock.lock().unwrap();
        match fs::remove_file(&meta) {
            Ok(()) => {}
            Err(e) if e.kind() == ErrorKind::NotFound => return Err(StorageError::NotFound),
            Err(e) => return Err(e.into()),
        }
        match fs::remove_file(&blob) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(()),
            Err(e) => Err(e.into()),
        }
    }
}
