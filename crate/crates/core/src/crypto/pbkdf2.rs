//! PBKDF2 with HMAC-SHA256 as the PRF (RFC 2898 / RFC 8018).

use super::hmac::HmacSha256;
use super::sha256::DIGEST_LEN;
use super::CryptoError;

/// A password keyed once, from which individual PBKDF2 output blocks can be
/// computed independently.
///
/// Output block `i` (1-based) covers octets `32*(i-1) .. 32*i` of the derived
/// key, so a caller that only needs a tail slice can skip the earlier blocks.
pub struct Pbkdf2<'a> {
    prf: HmacSha256,
    salt: &'a [u8],
    iterations: u32,
}

impl<'a> Pbkdf2<'a> {
    pub fn new(password: &[u8], salt: &'a [u8], iterations: u32) -> Result<Self, CryptoError> {
        if iterations == 0 {
            return Err(CryptoError::InvalidParameter("iterations must be at least 1"));
        }
        Ok(Pbkdf2 { prf: HmacSha256::new(password), salt, iterations })
    }

    /// `T_i = U_1 ^ U_2 ^ ... ^ U_c`.
    pub fn block(&self, index: u32) -> [u8; DIGEST_LEN] {
        let mut u = self.prf.mac_parts(&[self.salt, &index.to_be_bytes()]).0;
        let mut t = u;
        for _ in 1..self.iterations {
            u = self.prf.mac(&u).0;
            for (acc, b) in t.iter_mut().zip(u.iter()) {
                *acc ^= b;
            }
        }
        t
    }

    pub fn derive(&self, dklen: usize) -> Result<Vec<u8>, CryptoError> {
        if dklen == 0 {
            return Err(CryptoError::InvalidParameter("derived key length must be at least 1"));
        }
        let blocks = dklen.div_ceil(DIGEST_LEN);
        if blocks > u32::MAX as usize {
            return Err(CryptoError::InvalidParameter("derived key too long"));
        }
        let mut out = Vec::with_capacity(blocks * DIGEST_LEN);
        for i in 1..=blocks as u32 {
            out.extend_from_slice(&self.block(i));
        }
        out.truncate(dklen);
        Ok(out)
    }
}

pub fn pbkdf2(password: &[u8], salt: &[u8], iterations: u32, dklen: usize) -> Result<Vec<u8>, CryptoError> {
    Pbkdf2::new(password, salt, iterations)?.derive(dklen)
}
