//! Uploads and downloads a file through a directory-backed store, with the
//! same workflows the cloud client uses.
//!
//!     cargo run --release --example local_vault

use vaultdrop::auth::AuthStore;
use vaultdrop::storage::LocalDirBackend;
use vaultdrop::workflows::{self, DownloadRequest, UploadRequest, WorkflowError};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scratch = tempfile::tempdir()?;
    let vault = LocalDirBackend::new(scratch.path().join("vault"))?;
    let auth = AuthStore::open(scratch.path().join("users.tsv"))?;

    auth.register("carol", "carol's login password")?;
    let session = auth.authenticate("carol", "carol's login password")?;

    let original = scratch.path().join("diary.txt");
    std::fs::write(&original, "dear diary, nothing happened today\n")?;

    let request = UploadRequest::new(&original, "a different, longer passphrase").delete_original(true);
    let stored = workflows::upload_file(&session, &vault, &request)?;
    println!("stored {} ({} octets), original removed: {}", stored.name, stored.size, !original.exists());

    for object in workflows::list_remote(&session, &vault)? {
        println!("  {}\t{}\t{}", object.name, object.size, object.modified_at);
    }

    let wrong = DownloadRequest::new(&stored.name, "guess", scratch.path().join("nope.txt"));
    assert!(matches!(workflows::download_file(&session, &vault, &wrong), Err(WorkflowError::PasswordInvalid)));
    println!("wrong passphrase rejected, nothing written");

    let right = DownloadRequest::new(&stored.name, "a different, longer passphrase", &original);
    let saved = workflows::download_file(&session, &vault, &right)?;
    print!("{}", std::fs::read_to_string(saved)?);
    Ok(())
}
