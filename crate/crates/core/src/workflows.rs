//! Upload and download flows.
//!
//! Upload: read the local file, seal it under the encryption password with a
//! fresh salt and IV, put the encoded envelope, and only then (if asked)
//! delete the original.
//!
//! Download: fetch the envelope, check the password against its verifier
//! before any decryption, authenticate and decrypt, write the plaintext to a
//! new file, and only then (if asked) delete the remote copy.
//!
//! Callers authenticate first and pass the resulting session in.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::auth::SessionToken;
use crate::envelope::{self, EnvelopeError, DEFAULT_ITERATIONS, FILE_EXTENSION};
use crate::storage::{validate_name, BlobBackend, RemoteObject, StorageError};

#[derive(Debug, thiserror::Error)]
pub enum WorkflowError {
    #[error("cannot read {path}: {reason}")]
    FileUnreadable { path: PathBuf, reason: String },
    #[error("password rejected")]
    PasswordInvalid,
    #[error("integrity check failed: the stored file was modified or corrupted")]
    IntegrityError,
    #[error("destination {0} already exists")]
    DestinationExists(PathBuf),
    #[error("invalid destination {path}: {reason}")]
    DestinationInvalid { path: PathBuf, reason: String },
    #[error("cannot write {path}: {reason}")]
    WriteFailed { path: PathBuf, reason: String },
    #[error("uploaded, but could not delete the original {path}: {reason}")]
    DeleteOriginalFailed { path: PathBuf, reason: String },
    #[error("saved to {saved_to}, but could not delete the remote copy: {source}")]
    DeleteRemoteFailed { saved_to: PathBuf, source: StorageError },
    #[error(transparent)]
    Envelope(EnvelopeError),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

impl From<EnvelopeError> for WorkflowError {
    fn from(e: EnvelopeError) -> Self {
        match e {
            EnvelopeError::PasswordInvalid => WorkflowError::PasswordInvalid,
            EnvelopeError::IntegrityError => WorkflowError::IntegrityError,
            other => WorkflowError::Envelope(other),
        }
    }
}

pub struct UploadRequest {
    pub local_path: PathBuf,
    /// Defaults to the file's basename plus `.esf`.
    pub remote_name: Option<String>,
    pub encryption_password: Vec<u8>,
    pub delete_original: bool,
    pub iterations: u32,
}

impl fmt::Debug for UploadRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UploadRequest")
            .field("local_path", &self.local_path)
            .field("remote_name", &self.remote_name)
            .field("delete_original", &self.delete_original)
            .field("iterations", &self.iterations)
            .finish_non_exhaustive()
    }
}

impl UploadRequest {
    pub fn new(local_path: impl Into<PathBuf>, encryption_password: impl Into<Vec<u8>>) -> Self {
        UploadRequest {
            local_path: local_path.into(),
            remote_name: None,
            encryption_password: encryption_password.into(),
            delete_original: false,
            iterations: DEFAULT_ITERATIONS,
        }
    }

    pub fn remote_name(mut self, name: impl Into<String>) -> Self {
        self.remote_name = Some(name.into());
        self
    }

    pub fn delete_original(mut self, delete: bool) -> Self {
        self.delete_original = delete;
        self
    }

    pub fn iterations(mut self, iterations: u32) -> Self {
        self.iterations = iterations;
        self
    }

    fn resolved_name(&self) -> Result<String, WorkflowError> {
        match &self.remote_name {
            Some(name) => Ok(name.clone()),
            None => default_remote_name(&self.local_path).ok_or_else(|| WorkflowError::FileUnreadable {
                path: self.local_path.clone(),
                reason: "path has no file name".into(),
            }),
        }
    }
}

pub struct DownloadRequest {
    pub remote_name: String,
    pub encryption_password: Vec<u8>,
    pub dest_path: PathBuf,
    pub delete_remote: bool,
}

impl fmt::Debug for DownloadRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DownloadRequest")
            .field("remote_name", &self.remote_name)
            .field("dest_path", &self.dest_path)
            .field("delete_remote", &self.delete_remote)
            .finish_non_exhaustive()
    }
}

impl DownloadRequest {
    pub fn new(
        remote_name: impl Into<String>,
        encryption_password: impl Into<Vec<u8>>,
        dest_path: impl Into<PathBuf>,
    ) -> Self {
        DownloadRequest {
            remote_name: remote_name.into(),
            encryption_password: encryption_password.into(),
            dest_path: dest_path.into(),
            delete_remote: false,
        }
    }

    pub fn delete_remote(mut self, delete: bool) -> Self {
        self.delete_remote = delete;
        self
    }
}

/// `report.txt` becomes `report.txt.esf`.
pub fn default_remote_name(path: &Path) -> Option<String> {
    let base = path.file_name()?.to_str()?;
    Some(format!("{base}.{FILE_EXTENSION}"))
}

/// `report.txt.esf` becomes `report.txt`; names without the suffix get `.dec`.
pub fn default_local_name(remote_name: &str) -> String {
    match remote_name.strip_suffix(&format!(".{FILE_EXTENSION}")) {
        Some(stem) if !stem.is_empty() => stem.to_owned(),
        _ => format!("{remote_name}.dec"),
    }
}

fn read_regular_file(path: &Path) -> Result<Vec<u8>, WorkflowError> {
    let unreadable = |reason: String| WorkflowError::FileUnreadable { path: path.to_owned(), reason };
    let meta = fs::metadata(path).map_err(|e| unreadable(e.to_string()))?;
    if !meta.is_file() {
        return Err(unreadable("not a regular file".into()));
    }
    fs::read(path).map_err(|e| unreadable(e.to_string()))
}

pub fn upload_file(
    session: &SessionToken,
    backend: &dyn BlobBackend,
    request: &UploadRequest,
) -> Result<RemoteObject, WorkflowError> {
    let name = request.resolved_name()?;
    validate_name(&name)?;
    let plaintext = read_regular_file(&request.local_path)?;

    let sealed = envelope::seal_with_random(&plaintext, &request.encryption_password, request.iterations)?;
    let object = backend.put(session, &name, &envelope::encode(&sealed))?;

    if request.delete_original {
        fs::remove_file(&request.local_path).map_err(|e| WorkflowError::DeleteOriginalFailed {
            path: request.local_path.clone(),
            reason: e.to_string(),
        })?;
    }
    Ok(object)
}

fn check_destination(dest: &Path) -> Result<PathBuf, WorkflowError> {
    if dest.symlink_metadata().is_ok() {
        return Err(WorkflowError::DestinationExists(dest.to_owned()));
    }
    let parent = match dest.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
        _ => PathBuf::from("."),
    };
    if !parent.is_dir() {
        return Err(WorkflowError::DestinationInvalid {
            path: dest.to_owned(),
            reason: "parent directory does not exist".into(),
        });
    }
    Ok(parent)
}

// Written next to the destination and linked into place without clobbering.
fn write_new_file(dir: &Path, dest: &Path, bytes: &[u8]) -> Result<(), WorkflowError> {
    let failed = |reason: String| WorkflowError::WriteFailed { path: dest.to_owned(), reason };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| failed(e.to_string()))?;
    tmp.write_all(bytes).map_err(|e| failed(e.to_string()))?;
    tmp.as_file().sync_all().map_err(|e| failed(e.to_string()))?;
    tmp.persist_noclobber(dest).map_err(|e| {
        if e.error.kind() == std::io::ErrorKind::AlreadyExists {
            WorkflowError::DestinationExists(dest.to_owned())
        } else {
            failed(e.error.to_string())
        }
    })?;
    Ok(())
}

pub fn download_file(
    session: &SessionToken,
    backend: &dyn BlobBackend,
    request: &DownloadRequest,
) -> Result<PathBuf, WorkflowError> {
    let dest = &request.dest_path;
    let dir = check_destination(dest)?;
    let bytes = backend.get(session, &request.remote_name)?;
    let sealed = envelope::decode(&bytes)?;

    if !envelope::verify_password(&sealed, &request.encryption_password) {
        return Err(WorkflowError::PasswordInvalid);
    }
    let plaintext = envelope::open(&sealed, &request.encryption_password)?;
    write_new_file(&dir, dest, &plaintext)?;

    if request.delete_remote {
        backend
            .delete(session, &request.remote_name)
            .map_err(|source| WorkflowError::DeleteRemoteFailed { saved_to: dest.clone(), source })?;
    }
    Ok(dest.clone())
}

pub fn list_remote(session: &SessionToken, backend: &dyn BlobBackend) -> Result<Vec<RemoteObject>, WorkflowError> {
    Ok(backend.list(session)?)
}
