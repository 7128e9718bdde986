//! Dependency-free cryptographic primitives: AES (128/192/256), CBC mode
//! with PKCS#7 padding, SHA-256, HMAC-SHA256 and PBKDF2-HMAC-SHA256.
//!
//! Everything here is pure and reentrant except [`random_bytes`], which reads
//! from the operating system's CSPRNG.

pub mod aes;
pub mod cbc;
pub mod hmac;
pub mod pbkdf2;
pub mod sha256;

pub use self::aes::{decrypt_block, encrypt_block, key_expansion, AesKey, RoundKeySchedule};
pub use self::cbc::{cbc_decrypt, cbc_encrypt};
pub use self::hmac::{hmac_sha256, HmacSha256};
pub use self::pbkdf2::pbkdf2;
pub use self::sha256::{sha256, Digest256, Sha256};

/// AES block size in octets.
pub const BLOCK_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CryptoError {
    #[error("invalid AES key length {0}; expected 16, 24 or 32 octets")]
    InvalidKeyLength(usize),
    #[error("invalid block length {0}; expected 16 octets")]
    InvalidBlockLength(usize),
    #[error("invalid IV length {0}; expected 16 octets")]
    InvalidIvLength(usize),
    #[error("invalid ciphertext length {0}; expected a non-zero multiple of 16")]
    InvalidCiphertextLength(usize),
    #[error("invalid PKCS#7 padding")]
    PaddingError,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("system entropy source unavailable")]
    EntropyUnavailable,
}

/// Fills a fresh buffer of `n` octets from the operating system CSPRNG.
pub fn random_bytes(n: usize) -> Result<Vec<u8>, CryptoError> {
    let mut buf = vec![0u8; n];
    if n > 0 {
        getrandom::getrandom(&mut buf).map_err(|_| CryptoError::EntropyUnavailable)?;
    }
    Ok(buf)
}

/// Fixed-size variant of [`random_bytes`].
pub fn random_array<const N: usize>() -> Result<[u8; N], CryptoError> {
    let mut buf = [0u8; N];
    getrandom::getrandom(&mut buf).map_err(|_| CryptoError::EntropyUnavailable)?;
    Ok(buf)
}

/// Equality check whose running time depends only on the lengths of the
/// inputs, never on where they first differ.
pub fn ct_eq(a: &[u8], b: &[u8]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let diff = a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y));
    // Keep the optimizer from turning the fold into an early exit.
    std::hint::black_box(diff) == 0
}
