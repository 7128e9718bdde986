//! Helpers shared by the integration test targets. Each target compiles
//! this module separately and uses a different subset of it.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use hmac::{Hmac, Mac};
use rand::rngs::StdRng;
use rand::{Rng, RngCore, SeedableRng};
use sha2::Sha256;
use vaultdrop::auth::SessionToken;
use vaultdrop::service::{self, ServiceConfig, ServiceHandle};
use vaultdrop::storage::{BlobBackend, StorageError};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl RngCore, len: usize) -> Vec<u8> {
    let mut v = vec![0u8; len];
    rng.fill_bytes(&mut v);
    v
}

/// PBKDF2 exactly as RFC 2898 section 5.2 writes it, over the RustCrypto
/// HMAC-SHA256: T_i = U_1 ^ ... ^ U_c, output T_1 || T_2 || ... truncated.
pub fn naive_pbkdf2(password: &[u8], salt: &[u8], iterations: u32, dklen: usize) -> Vec<u8> {
    let prf = |data: &[u8]| -> Vec<u8> {
        let mut mac = Hmac::<Sha256>::new_from_slice(password).unwrap();
        mac.update(data);
        mac.finalize().into_bytes().to_vec()
    };
    let blocks = dklen.div_ceil(32);
    let mut out = Vec::new();
    for i in 1..=blocks as u32 {
        let mut first = salt.to_vec();
        first.extend_from_slice(&i.to_be_bytes());
        let mut u = prf(&first);
        let mut t = u.clone();
        for _ in 1..iterations {
            u = prf(&u);
            for (a, b) in t.iter_mut().zip(&u) {
                *a ^= b;
            }
        }
        out.extend(t);
    }
    out.truncate(dklen);
    out
}

/// A service on a free port with cheap login hashing, rooted in `dir`.
pub fn spawn_service(dir: &Path) -> ServiceHandle {
    service::spawn(test_service_config(dir)).expect("service starts")
}

pub fn test_service_config(dir: &Path) -> ServiceConfig {
    let mut config = ServiceConfig::new(dir);
    config.bind_address = "127.0.0.1:0".into();
    config.login_iterations = 1_000;
    config
}

/// Runs `ops` random operations against `backend` and a map-of-name-to-bytes
/// reference, returning a description of the first divergence.
///
/// Names come from a small pool so that overwrites, repeated deletes and
/// gets of missing names are all common.
pub fn check_against_model(
    backend: &dyn BlobBackend,
    session: &SessionToken,
    rng: &mut StdRng,
    ops: usize,
) -> Result<(), String> {
    const NAMES: [&str; 5] = ["a.esf", "b.esf", "report 2024.esf", "ü-ñ.esf", "x"];
    let mut model: BTreeMap<String, Vec<u8>> = BTreeMap::new();

    // Start from an empty namespace even when the backend is shared.
    for object in backend.list(session).map_err(|e| format!("initial list: {e}"))? {
        backend.delete(session, &object.name).map_err(|e| format!("initial delete: {e}"))?;
    }

    for step in 0..ops {
        let name = NAMES[rng.gen_range(0..NAMES.len())];
        match rng.gen_range(0..4) {
            0 => {
                let len = rng.gen_range(0..96);
                let bytes = random_vec(rng, len);
                let object = backend.put(session, name, &bytes).map_err(|e| format!("step {step}: put {name}: {e}"))?;
                if object.name != name || object.size != bytes.len() as u64 {
                    return Err(format!("step {step}: put returned {object:?}"));
                }
                model.insert(name.to_owned(), bytes);
            }
            1 => match (backend.get(session, name), model.get(name)) {
                (Ok(got), Some(want)) if &got == want => {}
                (Err(StorageError::NotFound), None) => {}
                (got, want) => return Err(format!("step {step}: get {name}: backend {got:?}, model {want:?}")),
            },
            2 => {
                let listed: Vec<(String, u64)> = backend
                    .list(session)
                    .map_err(|e| format!("step {step}: list: {e}"))?
                    .into_iter()
                    .map(|o| (o.name, o.size))
                    .collect();
                let expected: Vec<(String, u64)> = model.iter().map(|(n, b)| (n.clone(), b.len() as u64)).collect();
                if listed != expected {
                    return Err(format!("step {step}: list: backend {listed:?}, model {expected:?}"));
                }
            }
            _ => match (backend.delete(session, name), model.remove(name)) {
                (Ok(()), Some(_)) => {}
                (Err(StorageError::NotFound), None) => {}
                (got, want) => {
                    return Err(format!("step {step}: delete {name}: backend {got:?}, model had {}", want.is_some()))
                }
            },
        }
    }
    Ok(())
}

/// A session token for backends that do not check tokens themselves.
pub fn local_session(username: &str) -> SessionToken {
    SessionToken {
        token: "00".repeat(32),
        username: username.to_owned(),
        expires_at: chrono::Utc::now() + chrono::Duration::hours(1),
    }
}

pub fn random_password(rng: &mut StdRng) -> String {
    let len = rng.gen_range(1..40);
    (0..len).map(|_| rng.gen_range(' '..='~')).collect()
}
