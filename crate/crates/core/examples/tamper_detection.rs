//! Flips every bit of a small envelope in turn and counts how each
//! corruption is caught. None of them decrypts.
//!
//!     cargo run --release --example tamper_detection

use vaultdrop::envelope::{self, EnvelopeError, MIN_ITERATIONS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let password = b"tamper-demo-passphrase";
    let sealed = envelope::seal_with_random(b"attack at dawn", password, MIN_ITERATIONS)?;
    let encoded = envelope::encode(&sealed);

    let (mut format, mut rejected, mut integrity, mut opened) = (0, 0, 0, 0);
    for bit in 0..encoded.len() * 8 {
        let mut bytes = encoded.clone();
        bytes[bit / 8] ^= 1 << (bit % 8);
        match envelope::decode(&bytes).and_then(|e| envelope::open(&e, password)) {
            Err(EnvelopeError::FormatError(_)) => format += 1,
            Err(EnvelopeError::PasswordInvalid) => rejected += 1,
            Err(EnvelopeError::IntegrityError) => integrity += 1,
            Err(e) => return Err(e.into()),
            Ok(_) => opened += 1,
        }
    }
    println!("{} bit flips", encoded.len() * 8);
    println!("  malformed header     {format}");
    println!("  verifier mismatch    {rejected}");
    println!("  MAC mismatch         {integrity}");
    println!("  decrypted anyway     {opened}");
    assert_eq!(opened, 0);
    Ok(())
}
