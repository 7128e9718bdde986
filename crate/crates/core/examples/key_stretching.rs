//! Derives envelope key material from a passphrase and shows how the cost
//! grows with the iteration count.
//!
//!     cargo run --release --example key_stretching -- "my passphrase"

use std::time::Instant;

use vaultdrop::crypto::{pbkdf2, random_array};
use vaultdrop::envelope::{derive_key_material, SALT_LEN};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let passphrase = std::env::args().nth(1).unwrap_or_else(|| "correct horse battery staple".into());
    let salt = random_array::<SALT_LEN>()?;
    println!("salt      {}", hex::encode(salt));

    for iterations in [1_000, 10_000, 100_000] {
        let start = Instant::now();
        let keys = derive_key_material(passphrase.as_bytes(), &salt, iterations)?;
        println!("{iterations:>7} iterations  {:>8.1?}  verifier {}", start.elapsed(), hex::encode(keys.verifier()));
    }

    // The same derivation through the raw KDF: enc key, MAC key, verifier.
    let raw = pbkdf2(passphrase.as_bytes(), &salt, 1_000, 80)?;
    println!("enc key   {}", hex::encode(&raw[..32]));
    println!("mac key   {}", hex::encode(&raw[32..64]));
    println!("verifier  {}", hex::encode(&raw[64..]));
    Ok(())
}
