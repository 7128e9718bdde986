//! Encrypts the FIPS-197 appendix C plaintext under 128, 192 and 256-bit keys
//! and decrypts it back.
//!
//!     cargo run --example aes_known_answer

use vaultdrop::crypto::{decrypt_block, encrypt_block, key_expansion, AesKey};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plaintext = hex::decode("00112233445566778899aabbccddeeff")?;
    let key_bytes: Vec<u8> = (0u8..32).collect();

    for len in [16, 24, 32] {
        let key = AesKey::new(&key_bytes[..len])?;
        let schedule = key_expansion(&key);
        let ct = encrypt_block(&schedule, &plaintext)?;
        let back = decrypt_block(&schedule, &ct)?;
        println!("AES-{:<3} rounds={:<2} ct={}", len * 8, schedule.rounds(), hex::encode(ct));
        assert_eq!(back.as_slice(), plaintext.as_slice());
    }
    Ok(())
}
