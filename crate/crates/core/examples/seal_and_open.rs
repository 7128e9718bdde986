//! Seals a file into an `.esf` envelope next to it, then opens it again.
//!
//!     cargo run --release --example seal_and_open -- path/to/file "passphrase"

use std::path::PathBuf;

use vaultdrop::envelope::{self, DEFAULT_ITERATIONS, HEADER_LEN, MAC_LEN};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let (Some(path), Some(password)) = (args.next(), args.next()) else {
        eprintln!("usage: seal_and_open <file> <passphrase>");
        std::process::exit(1);
    };
    let path = PathBuf::from(path);
    let plaintext = std::fs::read(&path)?;

    let sealed = envelope::seal_with_random(&plaintext, password.as_bytes(), DEFAULT_ITERATIONS)?;
    let encoded = envelope::encode(&sealed);
    let out = path.with_extension(format!(
        "{}.{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        envelope::FILE_EXTENSION
    ));
    std::fs::write(&out, &encoded)?;
    println!(
        "{} octets -> {} ({} header + {} ciphertext + {} mac)",
        plaintext.len(),
        out.display(),
        HEADER_LEN,
        sealed.ciphertext.len(),
        MAC_LEN
    );

    let reopened = envelope::decode(&std::fs::read(&out)?)?;
    assert!(envelope::verify_password(&reopened, password.as_bytes()));
    assert!(!envelope::verify_password(&reopened, b"not the passphrase"));
    assert_eq!(envelope::open(&reopened, password.as_bytes())?, plaintext);
    println!("round trip ok");
    Ok(())
}
