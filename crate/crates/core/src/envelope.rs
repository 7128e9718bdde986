//! The `.esf` encrypted file container.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "ESF1"
//!      4     1  version (0x01)
//!      5     1  kdf id (0x01 = PBKDF2-HMAC-SHA256)
//!      6     4  iterations, u32 big-endian
//!     10    16  salt
//!     26    16  iv
//!     42    16  password verifier
//!     58     8  ciphertext length, u64 big-endian
//!     66     n  AES-256-CBC ciphertext (PKCS#7 padded)
//!   66+n    32  HMAC-SHA256(mac key, header || ciphertext)
//! ```
//!
//! Key material is one 80-octet PBKDF2 output split into the encryption key
//! (0..32), the MAC key (32..64) and the verifier (64..80). The verifier lets
//! a reader reject a wrong password before touching the ciphertext; only the
//! third PBKDF2 block is needed to compute it.

use std::fmt;

use crate::crypto::pbkdf2::Pbkdf2;
use crate::crypto::{self, cbc_decrypt, cbc_encrypt, ct_eq, AesKey, CryptoError, HmacSha256};

pub const MAGIC: [u8; 4] = *b"ESF1";
pub const VERSION: u8 = 0x01;
pub const KDF_PBKDF2_HMAC_SHA256: u8 = 0x01;

pub const SALT_LEN: usize = 16;
pub const IV_LEN: usize = 16;
pub const VERIFIER_LEN: usize = 16;
pub const MAC_LEN: usize = 32;
pub const HEADER_LEN: usize = 4 + 1 + 1 + 4 + SALT_LEN + IV_LEN + VERIFIER_LEN + 8;

pub const MIN_ITERATIONS: u32 = 1_000;
pub const DEFAULT_ITERATIONS: u32 = 100_000;
/// Upper bound accepted when decoding, so a forged header cannot make a
/// reader spin on an absurd iteration count.
pub const MAX_ITERATIONS: u32 = 10_000_000;

/// Recommended file extension for encoded envelopes.
pub const FILE_EXTENSION: &str = "esf";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnvelopeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("password rejected")]
    PasswordInvalid,
    #[error("integrity check failed: envelope was modified")]
    IntegrityError,
    #[error("malformed envelope: {0}")]
    FormatError(&'static str),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// Password-derived secrets for one envelope.
pub struct KeyMaterial {
    enc_key: [u8; 32],
    mac_key: [u8; 32],
    verifier: [u8; VERIFIER_LEN],
}

impl KeyMaterial {
    pub fn enc_key(&self) -> &[u8; 32] {
        &self.enc_key
    }

    pub fn mac_key(&self) -> &[u8; 32] {
        &self.mac_key
    }

    pub fn verifier(&self) -> &[u8; VERIFIER_LEN] {
        &self.verifier
    }
}

impl fmt::Debug for KeyMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("KeyMaterial { .. }")
    }
}

impl Drop for KeyMaterial {
    fn drop(&mut self) {
        self.enc_key.fill(0);
        self.mac_key.fill(0);
        self.verifier.fill(0);
        std::hint::black_box(&self.enc_key);
    }
}

fn check_kdf_params(password: &[u8], iterations: u32) -> Result<(), EnvelopeError> {
    if password.is_empty() {
        return Err(EnvelopeError::InvalidParameter("password must not be empty"));
    }
    if iterations < MIN_ITERATIONS {
        return Err(EnvelopeError::InvalidParameter("iterations below the 1000 floor"));
    }
    Ok(())
}

fn verifier_block(kdf: &Pbkdf2<'_>) -> [u8; VERIFIER_LEN] {
    let mut out = [0u8; VERIFIER_LEN];
    out.copy_from_slice(&kdf.block(3)[..VERIFIER_LEN]);
    out
}

pub fn derive_key_material(
    password: &[u8],
    salt: &[u8; SALT_LEN],
    iterations: u32,
) -> Result<KeyMaterial, EnvelopeError> {
    check_kdf_params(password, iterations)?;
    let kdf = Pbkdf2::new(password, salt, iterations)?;
    let verifier = verifier_block(&kdf);
    Ok(KeyMaterial { enc_key: kdf.block(1), mac_key: kdf.block(2), verifier })
}

#[derive(Clone, PartialEq, Eq)]
pub struct EnvelopeHeader {
    pub iterations: u32,
    pub salt: [u8; SALT_LEN],
    pub iv: [u8; IV_LEN],
    pub verifier: [u8; VERIFIER_LEN],
    pub ciphertext_len: u64,
}

impl fmt::Debug for EnvelopeHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnvelopeHeader")
            .field("iterations", &self.iterations)
            .field("salt", &hex::encode(self.salt))
            .field("iv", &hex::encode(self.iv))
            .field("ciphertext_len", &self.ciphertext_len)
            .finish_non_exhaustive()
    }
}

impl EnvelopeHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4] = VERSION;
        out[5] = KDF_PBKDF2_HMAC_SHA256;
        out[6..10].copy_from_slice(&self.iterations.to_be_bytes());
        out[10..26].copy_from_slice(&self.salt);
        out[26..42].copy_from_slice(&self.iv);
        out[42..58].copy_from_slice(&self.verifier);
        out[58..66].copy_from_slice(&self.ciphertext_len.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EnvelopeError> {
        if bytes.len() < HEADER_LEN {
            return Err(EnvelopeError::FormatError("truncated header"));
        }
        if bytes[0..4] != MAGIC {
            return Err(EnvelopeError::FormatError("bad magic"));
        }
        if bytes[4] != VERSION {
            return Err(EnvelopeError::FormatError("unsupported version"));
        }
        if bytes[5] != KDF_PBKDF2_HMAC_SHA256 {
            return Err(EnvelopeError::FormatError("unknown kdf id"));
        }
        let field = |range: std::ops::Range<usize>| &bytes[range];
        let header = EnvelopeHeader {
            iterations: u32::from_be_bytes(field(6..10).try_into().unwrap()),
            salt: field(10..26).try_into().unwrap(),
            iv: field(26..42).try_into().unwrap(),
            verifier: field(42..58).try_into().unwrap(),
            ciphertext_len: u64::from_be_bytes(field(58..66).try_into().unwrap()),
        };
        header.validate()?;
        Ok(header)
    }

    fn validate(&self) -> Result<(), EnvelopeError> {
        if !(MIN_ITERATIONS..=MAX_ITERATIONS).contains(&self.iterations) {
            return Err(EnvelopeError::FormatError("iteration count out of range"));
        }
        if self.ciphertext_len == 0 || !self.ciphertext_len.is_multiple_of(16) {
            return Err(EnvelopeError::FormatError("ciphertext length not a positive multiple of 16"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub header: EnvelopeHeader,
    pub ciphertext: Vec<u8>,
    pub mac: [u8; MAC_LEN],
}

impl Envelope {
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.ciphertext.len() + MAC_LEN
    }

    fn check_consistent(&self) -> Result<(), EnvelopeError> {
        self.header.validate()?;
        if self.header.ciphertext_len != self.ciphertext.len() as u64 {
            return Err(EnvelopeError::FormatError("ciphertext length mismatch"));
        }
        Ok(())
    }
}

/// Encrypts `plaintext` under a key stretched from `password`.
///
/// Salt and IV are caller-supplied so that sealing is a pure function; use
/// [`seal_with_random`] for fresh values from the system CSPRNG.
pub fn seal(
    plaintext: &[u8],
    password: &[u8],
    iterations: u32,
    salt: &[u8; SALT_LEN],
    iv: &[u8; IV_LEN],
) -> Result<Envelope, EnvelopeError> {
    let keys = derive_key_material(password, salt, iterations)?;
    let ciphertext = cbc_encrypt(&AesKey::new(keys.enc_key())?, iv, plaintext)?;
    let header = EnvelopeHeader {
        iterations,
        salt: *salt,
        iv: *iv,
        verifier: *keys.verifier(),
        ciphertext_len: ciphertext.len() as u64,
    };
    let mac = HmacSha256::new(keys.mac_key()).mac_parts(&[&header.to_bytes(), &ciphertext]).0;
    Ok(Envelope { header, ciphertext, mac })
}

pub fn seal_with_random(plaintext: &[u8], password: &[u8], iterations: u32) -> Result<Envelope, EnvelopeError> {
    let salt = crypto::random_array::<SALT_LEN>()?;
    let iv = crypto::random_array::<IV_LEN>()?;
    seal(plaintext, password, iterations, &salt, &iv)
}

/// Checks `password` against the header verifier without decrypting.
pub fn verify_password(envelope: &Envelope, password: &[u8]) -> bool {
    let header = &envelope.header;
    if password.is_empty() || header.validate().is_err() {
        return false;
    }
    match Pbkdf2::new(password, &header.salt, header.iterations) {
        Ok(kdf) => ct_eq(&verifier_block(&kdf), &header.verifier),
        Err(_) => false,
    }
}

/// Validates the password, authenticates header and ciphertext, then decrypts.
pub fn open(envelope: &Envelope, password: &[u8]) -> Result<Vec<u8>, EnvelopeError> {
    envelope.check_consistent()?;
    let header = &envelope.header;
    if password.is_empty() {
        return Err(EnvelopeError::PasswordInvalid);
    }
    let kdf = Pbkdf2::new(password, &header.salt, header.iterations)?;
    let verifier = verifier_block(&kdf);
    if !ct_eq(&verifier, &header.verifier) {
        return Err(EnvelopeError::PasswordInvalid);
    }
    let keys = KeyMaterial { enc_key: kdf.block(1), mac_key: kdf.block(2), verifier };

    let expected = HmacSha256::new(keys.mac_key()).mac_parts(&[&header.to_bytes(), &envelope.ciphertext]);
    if !ct_eq(expected.as_bytes(), &envelope.mac) {
        return Err(EnvelopeError::IntegrityError);
    }
    match cbc_decrypt(&AesKey::new(keys.enc_key())?, &header.iv, &envelope.ciphertext) {
        Ok(plaintext) => Ok(plaintext),
        Err(CryptoError::PaddingError | CryptoError::InvalidCiphertextLength(_)) => Err(EnvelopeError::IntegrityError),
        Err(e) => Err(e.into()),
    }
}

pub fn encode(envelope: &Envelope) -> Vec<u8> {
    let mut out = Vec::with_capacity(envelope.encoded_len());
    out.extend_from_slice(&envelope.header.to_bytes());
    out.extend_from_slice(&envelope.ciphertext);
    out.extend_from_slice(&envelope.mac);
    out
}

pub fn decode(bytes: &[u8]) -> Result<Envelope, EnvelopeError> {
    let header = EnvelopeHeader::from_bytes(bytes)?;
    let body = &bytes[HEADER_LEN..];
    let expected = (header.ciphertext_len as u128) + MAC_LEN as u128;
    if body.len() as u128 != expected {
        return Err(EnvelopeError::FormatError("length does not match header"));
    }
    let ct_len = header.ciphertext_len as usize;
    let ciphertext = body[..ct_len].to_vec();
    let mac = body[ct_len..].try_into().expect("length checked above");
    Ok(Envelope { header, ciphertext, mac })
}

#[cfg(test)]
mod tests {
    use super::*;

    // 80-octet PBKDF2-HMAC-SHA256("password", 16 zero octets, 1000), computed with
    // Python's hashlib.
    const PASSWORD_ZERO_SALT_1000: &str = "7460518eb1741d7be7b2914828b97011abdb01f2e6e94ff954490a5c74be5554\
        42faf59277bdd3022ca2f2586f50360d0473c312c653fdda623ca0fdbb6dea28\
        d0829bee11328abd3bf51b9c9b2d60d0";

    // seal(b"hello", b"test", 1000, zero salt, zero iv), built independently with
    // Python's hashlib/hmac and the `cryptography` package's AES-CBC.
    const GOLDEN: &str = "455346310101000003e800000000000000000000000000000000000000000000000000000000\
        00000000d6d121a6efb0579aeb6d7cd4a9dd0f3400000000000000101917307e104c80ec1fc6\
        76a26cdfafa6079fde21f5194aeeda7c9203ddf46c3ddf2e1083dc09372327d9f25b36330197";

    #[test]
    fn header_is_66_octets() {
        assert_eq!(HEADER_LEN, 66);
    }

    #[test]
    fn key_material_split() {
        let km = derive_key_material(b"password", &[0; 16], 1000).unwrap();
        let full = hex::decode(PASSWORD_ZERO_SALT_1000).unwrap();
        assert_eq!(&km.enc_key()[..], &full[..32]);
        assert_eq!(&km.mac_key()[..], &full[32..64]);
        assert_eq!(&km.verifier()[..], &full[64..80]);
    }

    #[test]
    fn key_material_depends_on_salt() {
        let a = derive_key_material(b"pw", &[1; 16], 1000).unwrap();
        let b = derive_key_material(b"pw", &[2; 16], 1000).unwrap();
        assert_ne!(a.enc_key(), b.enc_key());
        assert_ne!(a.mac_key(), b.mac_key());
        assert_ne!(a.verifier(), b.verifier());
        let again = derive_key_material(b"pw", &[1; 16], 1000).unwrap();
        assert_eq!(a.enc_key(), again.enc_key());
        assert_eq!(a.verifier(), again.verifier());
    }

    #[test]
    fn kdf_parameter_floor() {
        assert!(matches!(derive_key_material(b"pw", &[0; 16], 999), Err(EnvelopeError::InvalidParameter(_))));
        assert!(matches!(derive_key_material(b"", &[0; 16], 1000), Err(EnvelopeError::InvalidParameter(_))));
        assert!(matches!(seal(b"x", b"pw", 10, &[0; 16], &[0; 16]), Err(EnvelopeError::InvalidParameter(_))));
    }

    #[test]
    fn golden_envelope() {
        let env = seal(b"hello", b"test", 1000, &[0; 16], &[0; 16]).unwrap();
        let bytes = encode(&env);
        assert_eq!(hex::encode(&bytes), GOLDEN);
        assert_eq!(bytes.len(), HEADER_LEN + 16 + MAC_LEN);
        let decoded = decode(&bytes).unwrap();
        assert_eq!(decoded, env);
        assert_eq!(encode(&decoded), bytes);
        assert_eq!(open(&decoded, b"test").unwrap(), b"hello");
    }

    #[test]
    fn empty_plaintext_has_one_block() {
        let env = seal(b"", b"pw", 1000, &[4; 16], &[5; 16]).unwrap();
        assert_eq!(env.header.ciphertext_len, 16);
        assert_eq!(encode(&env).len(), HEADER_LEN + 16 + MAC_LEN);
        assert_eq!(open(&env, b"pw").unwrap(), b"");
    }

    #[test]
    fn round_trip_boundary_lengths() {
        for n in [0usize, 1, 15, 16, 17, 31, 32, 33, 1000] {
            let msg: Vec<u8> = (0..n).map(|i| (i * 31) as u8).collect();
            let env = seal(&msg, b"pw", 1000, &[n as u8; 16], &[7; 16]).unwrap();
            assert_eq!(env.encoded_len(), HEADER_LEN + 16 * (n / 16) + 16 + MAC_LEN);
            assert_eq!(open(&decode(&encode(&env)).unwrap(), b"pw").unwrap(), msg);
        }
    }

    #[test]
    fn seal_is_deterministic() {
        let a = seal(b"data", b"pw", 1000, &[1; 16], &[2; 16]).unwrap();
        let b = seal(b"data", b"pw", 1000, &[1; 16], &[2; 16]).unwrap();
        assert_eq!(encode(&a), encode(&b));
    }

    #[test]
    fn wrong_password() {
        let env = seal(b"secret", b"right", 1000, &[0; 16], &[0; 16]).unwrap();
        assert!(verify_password(&env, b"right"));
        assert!(!verify_password(&env, b"wrong"));
        assert!(!verify_password(&env, b""));
        assert_eq!(open(&env, b"wrong"), Err(EnvelopeError::PasswordInvalid));
        assert_eq!(open(&env, b""), Err(EnvelopeError::PasswordInvalid));
    }

    #[test]
    fn tampered_ciphertext_and_mac() {
        let env = seal(b"secret message", b"pw", 1000, &[0; 16], &[0; 16]).unwrap();
        let mut ct = env.clone();
        ct.ciphertext[3] ^= 1;
        assert_eq!(open(&ct, b"pw"), Err(EnvelopeError::IntegrityError));
        let mut mac = env.clone();
        mac.mac[31] ^= 0x80;
        assert_eq!(open(&mac, b"pw"), Err(EnvelopeError::IntegrityError));
        let mut iv = env;
        iv.header.iv[0] ^= 1;
        assert_eq!(open(&iv, b"pw"), Err(EnvelopeError::IntegrityError));
    }

    #[test]
    fn decode_errors() {
        let good = hex::decode(GOLDEN).unwrap();
        assert!(matches!(decode(&good[..10]), Err(EnvelopeError::FormatError(_))));
        assert!(matches!(decode(&good[..good.len() - 1]), Err(EnvelopeError::FormatError(_))));
        let mut extra = good.clone();
        extra.push(0);
        assert!(matches!(decode(&extra), Err(EnvelopeError::FormatError(_))));

        let mut magic = good.clone();
        magic[..4].copy_from_slice(b"XXXX");
        assert_eq!(decode(&magic), Err(EnvelopeError::FormatError("bad magic")));
        let mut version = good.clone();
        version[4] = 2;
        assert_eq!(decode(&version), Err(EnvelopeError::FormatError("unsupported version")));
        let mut kdf = good.clone();
        kdf[5] = 9;
        assert_eq!(decode(&kdf), Err(EnvelopeError::FormatError("unknown kdf id")));

        let mut unaligned = good.clone();
        unaligned[65] = 15;
        assert!(matches!(decode(&unaligned), Err(EnvelopeError::FormatError(_))));
        let mut zero = good.clone();
        zero[65] = 0;
        assert!(matches!(decode(&zero), Err(EnvelopeError::FormatError(_))));
        let mut huge = good;
        huge[58] = 0xff;
        assert!(matches!(decode(&huge), Err(EnvelopeError::FormatError(_))));
    }

    #[test]
    fn inconsistent_in_memory_envelope() {
        let mut env = seal(b"abc", b"pw", 1000, &[0; 16], &[0; 16]).unwrap();
        env.ciphertext.extend_from_slice(&[0; 16]);
        assert!(matches!(open(&env, b"pw"), Err(EnvelopeError::FormatError(_))));
    }
}
