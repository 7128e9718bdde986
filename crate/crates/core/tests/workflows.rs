mod common;

use std::sync::Mutex;

use rand::Rng;
use vaultdrop::auth::SessionToken;
use vaultdrop::envelope::{self, MIN_ITERATIONS};
use vaultdrop::storage::{BlobBackend, InMemoryBackend, RemoteObject, StorageError};
use vaultdrop::workflows::{self, DownloadRequest, UploadRequest, WorkflowError};

/// Wraps a backend, records every `put` payload and fails chosen operations.
#[derive(Default)]
struct Probe {
    inner: InMemoryBackend,
    puts: Mutex<Vec<Vec<u8>>>,
    fail_put: bool,
    fail_delete: bool,
}

impl BlobBackend for Probe {
    fn put(&self, session: &SessionToken, name: &str, bytes: &[u8]) -> Result<RemoteObject, StorageError> {
        self.puts.lock().unwrap().push(bytes.to_vec());
        if self.fail_put {
            return Err(StorageError::ConnectionFailure("injected".into()));
        }
        self.inner.put(session, name, bytes)
    }

    fn get(&self, session: &SessionToken, name: &str) -> Result<Vec<u8>, StorageError> {
        self.inner.get(session, name)
    }

    fn list(&self, session: &SessionToken) -> Result<Vec<RemoteObject>, StorageError> {
        self.inner.list(session)
    }

    fn delete(&self, session: &SessionToken, name: &str) -> Result<(), StorageError> {
        if self.fail_delete {
            return Err(StorageError::ConnectionFailure("injected".into()));
        }
        self.inner.delete(session, name)
    }
}

const PW: &str = "file passphrase";

fn upload(
    backend: &dyn BlobBackend,
    dir: &std::path::Path,
    name: &str,
    bytes: &[u8],
) -> Result<RemoteObject, WorkflowError> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).unwrap();
    let request = UploadRequest::new(&path, PW).iterations(MIN_ITERATIONS);
    workflows::upload_file(&common::local_session("u"), backend, &request)
}

#[test]
fn end_to_end_identity_across_lengths() {
    let dir = tempfile::tempdir().unwrap();
    let backend = InMemoryBackend::new();
    let session = common::local_session("u");
    let mut rng = common::rng(12);
    let mut lengths = vec![0, 1, 15, 16, 17, 1_000_000];
    lengths.extend((0..100).map(|_| rng.gen_range(0..5000)));

    for (i, len) in lengths.into_iter().enumerate() {
        let data = common::random_vec(&mut rng, len);
        let object = upload(&backend, dir.path(), &format!("f{i}"), &data).unwrap();
        assert_eq!(object.name, format!("f{i}.esf"));
        let out = dir.path().join(format!("out{i}"));
        workflows::download_file(&session, &backend, &DownloadRequest::new(&object.name, PW, &out)).unwrap();
        assert_eq!(std::fs::read(&out).unwrap(), data, "length {len}");
    }
}

#[test]
fn nothing_but_envelopes_reach_the_backend() {
    let dir = tempfile::tempdir().unwrap();
    let probe = Probe::default();
    let mut rng = common::rng(13);
    for i in 0..20 {
        let len = rng.gen_range(32..4096);
        let data = common::random_vec(&mut rng, len);
        upload(&probe, dir.path(), &format!("f{i}"), &data).unwrap();
        let sent = probe.puts.lock().unwrap().last().unwrap().clone();
        envelope::decode(&sent).expect("payload is an envelope");
        assert!(!sent.windows(data.len()).any(|w| w == data.as_slice()));
        // No 32-octet run of the plaintext survives either.
        for chunk in data.chunks_exact(32) {
            assert!(!sent.windows(32).any(|w| w == chunk));
        }
    }
}

#[test]
fn upload_keeps_original_unless_asked_and_never_on_failure() {
    let dir = tempfile::tempdir().unwrap();
    let session = common::local_session("u");
    let path = dir.path().join("doc.txt");

    std::fs::write(&path, "keep me").unwrap();
    let backend = InMemoryBackend::new();
    workflows::upload_file(&session, &backend, &UploadRequest::new(&path, PW).iterations(MIN_ITERATIONS)).unwrap();
    assert!(path.exists());

    let failing = Probe { fail_put: true, ..Default::default() };
    let request = UploadRequest::new(&path, PW).iterations(MIN_ITERATIONS).delete_original(true);
    let err = workflows::upload_file(&session, &failing, &request).unwrap_err();
    assert!(matches!(err, WorkflowError::Storage(StorageError::ConnectionFailure(_))));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "keep me");
    assert!(failing.list(&session).unwrap().is_empty());

    let object = workflows::upload_file(&session, &backend, &request.remote_name("renamed.esf")).unwrap();
    assert_eq!(object.name, "renamed.esf");
    assert!(!path.exists());
}

#[test]
fn upload_rejects_missing_files_directories_and_bad_names() {
    let dir = tempfile::tempdir().unwrap();
    let session = common::local_session("u");
    let backend = InMemoryBackend::new();
    for path in [dir.path().join("absent"), dir.path().to_path_buf()] {
        let err = workflows::upload_file(&session, &backend, &UploadRequest::new(&path, PW)).unwrap_err();
        assert!(matches!(err, WorkflowError::FileUnreadable { .. }), "{err}");
    }
    let file = dir.path().join("f");
    std::fs::write(&file, "x").unwrap();
    let err =
        workflows::upload_file(&session, &backend, &UploadRequest::new(&file, PW).remote_name("a/b")).unwrap_err();
    assert!(matches!(err, WorkflowError::Storage(StorageError::NameInvalid(_))));
}

#[test]
fn wrong_password_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let session = common::local_session("u");
    let backend = InMemoryBackend::new();
    let object = upload(&backend, dir.path(), "secret.txt", b"top secret").unwrap();
    let before = backend.get(&session, &object.name).unwrap();

    let out = dir.path().join("out.txt");
    let request = DownloadRequest::new(&object.name, "wrong passphrase", &out).delete_remote(true);
    let err = workflows::download_file(&session, &backend, &request).unwrap_err();
    assert!(matches!(err, WorkflowError::PasswordInvalid));
    assert!(!out.exists());
    assert_eq!(backend.get(&session, &object.name).unwrap(), before);
    assert_eq!(backend.list(&session).unwrap().len(), 1);
}

#[test]
fn tampered_blob_is_an_integrity_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let session = common::local_session("u");
    let backend = InMemoryBackend::new();
    let object = upload(&backend, dir.path(), "a.txt", &[7u8; 100]).unwrap();
    let mut bytes = backend.get(&session, &object.name).unwrap();
    let last = bytes.len() - 40;
    bytes[last] ^= 1;
    backend.put(&session, &object.name, &bytes).unwrap();

    let out = dir.path().join("out");
    let request = DownloadRequest::new(&object.name, PW, &out).delete_remote(true);
    assert!(matches!(workflows::download_file(&session, &backend, &request), Err(WorkflowError::IntegrityError)));
    assert!(!out.exists());
    assert!(backend.get(&session, &object.name).is_ok());
}

#[test]
fn download_destination_rules() {
    let dir = tempfile::tempdir().unwrap();
    let session = common::local_session("u");
    let backend = InMemoryBackend::new();
    let object = upload(&backend, dir.path(), "a.txt", b"fresh").unwrap();

    let existing = dir.path().join("existing");
    std::fs::write(&existing, "old").unwrap();
    let err =
        workflows::download_file(&session, &backend, &DownloadRequest::new(&object.name, PW, &existing)).unwrap_err();
    assert!(matches!(err, WorkflowError::DestinationExists(_)));
    assert_eq!(std::fs::read_to_string(&existing).unwrap(), "old");

    let orphan = dir.path().join("no-such-dir").join("out");
    let err =
        workflows::download_file(&session, &backend, &DownloadRequest::new(&object.name, PW, &orphan)).unwrap_err();
    assert!(matches!(err, WorkflowError::DestinationInvalid { .. }));

    let err =
        workflows::download_file(&session, &backend, &DownloadRequest::new("missing.esf", PW, dir.path().join("m")))
            .unwrap_err();
    assert!(matches!(err, WorkflowError::Storage(StorageError::NotFound)));
}

#[test]
fn delete_remote_happens_only_after_the_write() {
    let dir = tempfile::tempdir().unwrap();
    let session = common::local_session("u");
    let backend = InMemoryBackend::new();
    let object = upload(&backend, dir.path(), "a.txt", b"payload").unwrap();

    let out = dir.path().join("out");
    let request = DownloadRequest::new(&object.name, PW, &out).delete_remote(true);
    workflows::download_file(&session, &backend, &request).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), b"payload");
    assert!(backend.list(&session).unwrap().is_empty());

    // A failed remote delete is reported, and the plaintext is kept.
    let probe = Probe { fail_delete: true, ..Default::default() };
    let object = upload(&probe, dir.path(), "b.txt", b"second").unwrap();
    let out = dir.path().join("out-b");
    let err =
        workflows::download_file(&session, &probe, &DownloadRequest::new(&object.name, PW, &out).delete_remote(true))
            .unwrap_err();
    assert!(matches!(err, WorkflowError::DeleteRemoteFailed { .. }));
    assert_eq!(std::fs::read(&out).unwrap(), b"second");
    assert_eq!(probe.list(&session).unwrap().len(), 1);
}

#[test]
fn listing_reflects_uploads_minus_deletions() {
    let dir = tempfile::tempdir().unwrap();
    let session = common::local_session("u");
    let backend = InMemoryBackend::new();
    assert!(workflows::list_remote(&session, &backend).unwrap().is_empty());

    let mut rng = common::rng(14);
    let mut expected = std::collections::BTreeSet::new();
    for step in 0..40 {
        let name = format!("n{}", rng.gen_range(0..6));
        if rng.gen_bool(0.6) {
            upload(&backend, dir.path(), &name, &[step as u8; 10]).unwrap();
            expected.insert(format!("{name}.esf"));
        } else if expected.remove(&format!("{name}.esf")) {
            let out = dir.path().join(format!("dl{step}"));
            let request = DownloadRequest::new(format!("{name}.esf"), PW, out).delete_remote(true);
            workflows::download_file(&session, &backend, &request).unwrap();
        }
        let listed: Vec<String> =
            workflows::list_remote(&session, &backend).unwrap().into_iter().map(|o| o.name).collect();
        assert_eq!(listed, expected.iter().cloned().collect::<Vec<_>>());
    }
}
