//! CBC mode with PKCS#7 padding.

use super::aes::{AesKey, RoundKeySchedule};
use super::{CryptoError, BLOCK_LEN};

fn iv_block(iv: &[u8]) -> Result<[u8; BLOCK_LEN], CryptoError> {
    iv.try_into().map_err(|_| CryptoError::InvalidIvLength(iv.len()))
}

/// Length of the CBC output for a plaintext of `n` octets. There is always at
/// least one padding octet, so aligned inputs gain a whole block.
pub fn padded_len(n: usize) -> usize {
    BLOCK_LEN * (n / BLOCK_LEN) + BLOCK_LEN
}

pub fn cbc_encrypt(key: &AesKey, iv: &[u8], plaintext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    let mut chain = iv_block(iv)?;
    let schedule = RoundKeySchedule::expand(key);

    let pad = BLOCK_LEN - plaintext.len() % BLOCK_LEN;
    let mut out = Vec::with_capacity(plaintext.len() + pad);
    out.extend_from_slice(plaintext);
    out.resize(plaintext.len() + pad, pad as u8);

    for block in out.chunks_exact_mut(BLOCK_LEN) {
        for (c, p) in chain.iter_mut().zip(block.iter()) {
            *c ^= p;
        }
        schedule.encrypt_in_place(&mut chain);
        block.copy_from_slice(&chain);
    }
    Ok(out)
}

pub fn cbc_decrypt(key: &AesKey, iv: &[u8], ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    let mut chain = iv_block(iv)?;
    if ciphertext.is_empty() || !ciphertext.len().is_multiple_of(BLOCK_LEN) {
        return Err(CryptoError::InvalidCiphertextLength(ciphertext.len()));
    }
    let schedule = RoundKeySchedule::expand(key);

    let mut out = ciphertext.to_vec();
    for block in out.chunks_exact_mut(BLOCK_LEN) {
        let mut state: [u8; BLOCK_LEN] = (&*block).try_into().expect("chunk is one block");
        let next_chain = state;
        schedule.decrypt_in_place(&mut state);
        for (s, c) in state.iter_mut().zip(chain.iter()) {
            *s ^= c;
        }
        block.copy_from_slice(&state);
        chain = next_chain;
    }

    let unpadded = unpad_len(&out)?;
    out.truncate(unpadded);
    Ok(out)
}

// Checks every padding octet rather than trusting the last one.
fn unpad_len(data: &[u8]) -> Result<usize, CryptoError> {
    let pad = *data.last().ok_or(CryptoError::PaddingError)? as usize;
    if pad == 0 || pad > BLOCK_LEN || pad > data.len() {
        return Err(CryptoError::PaddingError);
    }
    let bad = data[data.len() - pad..].iter().fold(0u8, |acc, &b| acc | (b ^ pad as u8));
    if bad != 0 {
        return Err(CryptoError::PaddingError);
    }
    Ok(data.len() - pad)
}
