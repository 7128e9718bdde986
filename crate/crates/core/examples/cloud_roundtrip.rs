//! Starts the storage service on a free port and drives it over HTTP:
//! register, log in, upload, list, download, log out.
//!
//!     cargo run --release --example cloud_roundtrip

use vaultdrop::service::{self, ServiceConfig};
use vaultdrop::storage::{BlobBackend, CloudClient, StorageError};
use vaultdrop::workflows::{self, DownloadRequest, UploadRequest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scratch = tempfile::tempdir()?;
    let mut config = ServiceConfig::new(scratch.path().join("server"));
    config.bind_address = "127.0.0.1:0".into();
    let server = service::spawn(config)?;
    println!("service at {}", server.base_url());

    let client = CloudClient::new(server.base_url())?;
    client.health()?;
    client.register("dave", "dave's login password")?;
    let session = client.login("dave", "dave's login password")?;

    let local = scratch.path().join("photo.raw");
    std::fs::write(&local, vec![0x5a; 100_000])?;
    let object = workflows::upload_file(&session, &client, &UploadRequest::new(&local, "photo passphrase 2024"))?;
    println!("uploaded {} ({} octets on the server)", object.name, object.size);

    for object in client.list(&session)? {
        println!("  {}\t{}\t{}", object.name, object.size, object.modified_at);
    }

    let out = scratch.path().join("photo.copy");
    let request = DownloadRequest::new(&object.name, "photo passphrase 2024", &out).delete_remote(true);
    workflows::download_file(&session, &client, &request)?;
    assert_eq!(std::fs::read(&out)?, std::fs::read(&local)?);
    println!("downloaded and removed from the server; {} objects left", client.list(&session)?.len());

    client.logout(&session.token)?;
    assert!(matches!(client.list(&session), Err(StorageError::AuthRequired)));
    println!("logged out; the old token is refused");

    server.shutdown()?;
    Ok(())
}
