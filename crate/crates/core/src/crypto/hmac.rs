//! HMAC-SHA256 (RFC 2104).

use super::sha256::{sha256, Digest256, Sha256, BLOCK_LEN};

/// A keyed HMAC-SHA256 instance.
///
/// The inner and outer hash states are absorbed once at construction, so each
/// subsequent [`HmacSha256::mac`] costs only the message compressions plus one
/// outer block.
#[derive(Clone)]
pub struct HmacSha256 {
    inner: Sha256,
    outer: Sha256,
}

impl HmacSha256 {
    pub fn new(key: &[u8]) -> Self {
        let mut block = [0u8; BLOCK_LEN];
        if key.len() > BLOCK_LEN {
            block[..32].copy_from_slice(sha256(key).as_bytes());
        } else {
            block[..key.len()].copy_from_slice(key);
        }

        let mut ipad = [0x36u8; BLOCK_LEN];
        let mut opad = [0x5cu8; BLOCK_LEN];
        for i in 0..BLOCK_LEN {
            ipad[i] ^= block[i];
            opad[i] ^= block[i];
        }
        let mut inner = Sha256::new();
        inner.update(&ipad);
        let mut outer = Sha256::new();
        outer.update(&opad);
        HmacSha256 { inner, outer }
    }

    /// MAC over the concatenation of `parts`.
    pub fn mac_parts(&self, parts: &[&[u8]]) -> Digest256 {
        let mut inner = self.inner.clone();
        for part in parts {
            inner.update(part);
        }
        let mut outer = self.outer.clone();
        outer.update(inner.finalize().as_bytes());
        outer.finalize()
    }

    pub fn mac(&self, message: &[u8]) -> Digest256 {
        self.mac_parts(&[message])
    }
}

pub fn hmac_sha256(key: &[u8], message: &[u8]) -> Digest256 {
    HmacSha256::new(key).mac(message)
}
