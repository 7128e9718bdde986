//! Acceptance gate: one PASS/FAIL line per criterion, with its time bound.
//!
//!     cargo test -p vaultdrop --test acceptance -- --nocapture

mod common;

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use reqwest::StatusCode;
use vaultdrop::crypto::{decrypt_block, encrypt_block, hmac_sha256, key_expansion, pbkdf2, sha256, AesKey};
use vaultdrop::envelope::{self, EnvelopeError, MIN_ITERATIONS};
use vaultdrop::storage::{CloudClient, InMemoryBackend, LocalDirBackend};

// Written to stderr directly so the lines show without --nocapture.
fn report(line: String) {
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}

type Check = Result<(), String>;
type Criterion = (u32, &'static str, fn() -> Check, Option<Duration>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1_aes_known_answer() -> Check {
    let pt = hex::decode("00112233445566778899aabbccddeeff").unwrap();
    let cases = [
        ("000102030405060708090a0b0c0d0e0f", "69c4e0d86a7b0430d8cdb78070b4c55a"),
        ("000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f", "8ea2b7ca516745bfeafc49904b496089"),
    ];
    for (key, expected) in cases {
        let schedule = key_expansion(&AesKey::new(&hex::decode(key).unwrap()).map_err(|e| e.to_string())?);
        let ct = encrypt_block(&schedule, &pt).map_err(|e| e.to_string())?;
        ensure(hex::encode(ct) == expected, || format!("key {key}: got {}", hex::encode(ct)))?;
        let back = decrypt_block(&schedule, &ct).map_err(|e| e.to_string())?;
        ensure(back.as_slice() == pt.as_slice(), || format!("key {key}: decrypt mismatch"))?;
    }
    Ok(())
}

fn criterion_2_hash_and_mac_known_answer() -> Check {
    let million_a = vec![b'a'; 1_000_000];
    let cases: [(&[u8], &str); 3] = [
        (b"", "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"),
        (b"abc", "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"),
        (&million_a, "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0"),
    ];
    for (msg, expected) in cases {
        let got = sha256(msg).to_hex();
        ensure(got == expected, || format!("sha256 of {} octets: {got}", msg.len()))?;
    }
    let mac = hmac_sha256(b"Jefe", b"what do ya want for nothing?").to_hex();
    ensure(mac == "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843", || format!("hmac: {mac}"))
}

fn criterion_3_kdf_oracle_equivalence() -> Check {
    let fixed = [
        (1, "120fb6cffcf8b32c43e7225256c4f837a86548c92ccc35480805987cb70be17b"),
        (2, "ae4d0c95af6b46d32d0adff928f06dd02a303f8ef3c251dfd6e2d85a95474c43"),
    ];
    for (iterations, expected) in fixed {
        let got = hex::encode(pbkdf2(b"password", b"salt", iterations, 32).map_err(|e| e.to_string())?);
        ensure(got == expected, || format!("c={iterations}: {got}"))?;
    }
    let mut rng = common::rng(3);
    for input in 0..50 {
        let (plen, slen) = (rng.gen_range(1..64), rng.gen_range(0..32));
        let password = common::random_vec(&mut rng, plen);
        let salt = common::random_vec(&mut rng, slen);
        for iterations in [1, 2, 10] {
            for dklen in [1, 20, 32, 33, 64] {
                let ours = pbkdf2(&password, &salt, iterations, dklen).map_err(|e| e.to_string())?;
                let oracle = common::naive_pbkdf2(&password, &salt, iterations, dklen);
                ensure(ours == oracle, || format!("input {input}, c={iterations}, dklen={dklen}"))?;
            }
        }
    }
    Ok(())
}

fn criterion_4_envelope_round_trip() -> Check {
    let mut rng = common::rng(4);
    let mut lengths = vec![0, 1, 15, 16, 17, 1_000_000];
    while lengths.len() < 100 {
        lengths.push(rng.gen_range(0..10_000));
    }
    for len in lengths {
        let pt = common::random_vec(&mut rng, len);
        let password = common::random_password(&mut rng);
        let sealed = envelope::seal_with_random(&pt, password.as_bytes(), MIN_ITERATIONS).map_err(|e| e.to_string())?;
        let decoded = envelope::decode(&envelope::encode(&sealed)).map_err(|e| e.to_string())?;
        let opened = envelope::open(&decoded, password.as_bytes()).map_err(|e| format!("length {len}: {e}"))?;
        ensure(opened == pt, || format!("length {len}: plaintext differs"))?;
    }
    Ok(())
}

fn criterion_5_wrong_password_rejection() -> Check {
    let mut rng = common::rng(5);
    let secret = common::random_vec(&mut rng, 256);
    let sealed =
        envelope::seal_with_random(&secret, b"the right passphrase", MIN_ITERATIONS).map_err(|e| e.to_string())?;
    for i in 0..1000 {
        let mut guess = common::random_password(&mut rng);
        if guess == "the right passphrase" {
            guess.push('!');
        }
        match envelope::open(&sealed, guess.as_bytes()) {
            Err(EnvelopeError::PasswordInvalid) => {}
            Ok(_) => return Err(format!("guess {i} decrypted the envelope")),
            Err(e) => return Err(format!("guess {i}: {e}")),
        }
    }
    Ok(())
}

fn criterion_6_tamper_detection() -> Check {
    let sealed = envelope::seal_with_random(b"tamper target", b"pw", MIN_ITERATIONS).map_err(|e| e.to_string())?;
    let bytes = envelope::encode(&sealed);
    ensure(bytes.len() <= 128, || format!("envelope is {} octets", bytes.len()))?;
    for bit in 0..bytes.len() * 8 {
        let mut tampered = bytes.clone();
        tampered[bit / 8] ^= 1 << (bit % 8);
        match envelope::decode(&tampered).and_then(|e| envelope::open(&e, b"pw")) {
            Err(EnvelopeError::FormatError(_) | EnvelopeError::PasswordInvalid | EnvelopeError::IntegrityError) => {}
            Ok(_) => return Err(format!("bit {bit}: accepted")),
            Err(e) => return Err(format!("bit {bit}: untyped failure {e}")),
        }
    }
    Ok(())
}

fn criterion_7_end_to_end() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let server = common::spawn_service(&dir.path().join("server"));
    let work = dir.path().join("work");
    std::fs::create_dir(&work).unwrap();
    let config = dir.path().join("config");
    let payload = common::random_vec(&mut common::rng(7), 1 << 20);
    std::fs::write(work.join("data.bin"), &payload).unwrap();

    let run = |args: &[&str], password: &str| {
        Command::new(env!("CARGO_BIN_EXE_vaultdrop"))
            .current_dir(&work)
            .args(["--server", server.base_url().as_str()])
            .arg("--config")
            .arg(&config)
            .args(["--non-interactive", "--password-env", "VD_PASSWORD"])
            .args(args)
            .env("VD_PASSWORD", password)
            .output()
            .unwrap()
    };
    let expect = |step: &str, out: std::process::Output, code: i32| -> Result<String, String> {
        ensure(out.status.code() == Some(code), || {
            format!("{step}: exit {:?}, stderr {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
        })?;
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    };

    expect("register", run(&["register", "alice"], "alice login pw"), 0)?;
    expect("login", run(&["login", "alice"], "alice login pw"), 0)?;
    expect("upload", run(&["upload", "data.bin", "--delete-original"], "data passphrase, long"), 0)?;
    ensure(!work.join("data.bin").exists(), || "original not deleted".into())?;

    let listing = expect("list", run(&["list"], ""), 0)?;
    let names: Vec<&str> = listing.lines().map(|l| l.split('\t').next().unwrap_or("")).collect();
    ensure(names == ["data.bin.esf"], || format!("listing {listing:?}"))?;

    expect("download", run(&["download", "data.bin.esf"], "data passphrase, long"), 0)?;
    ensure(std::fs::read(work.join("data.bin")).unwrap() == payload, || "downloaded bytes differ".into())?;

    expect("wrong download", run(&["download", "data.bin.esf", "--out", "wrong.bin"], "not the passphrase"), 2)?;
    ensure(!work.join("wrong.bin").exists(), || "wrong password wrote a file".into())?;
    let listing = expect("list after", run(&["list"], ""), 0)?;
    ensure(listing.starts_with("data.bin.esf\t"), || format!("object gone after rejection: {listing:?}"))
}

fn criterion_8_backend_model_conformance() -> Check {
    let session = common::local_session("alice");
    let memory = InMemoryBackend::new();
    for seed in 0..1000 {
        common::check_against_model(&memory, &session, &mut common::rng(seed), 30)
            .map_err(|e| format!("in_memory seed {seed}: {e}"))?;
    }
    for seed in 0..1000 {
        let dir = tempfile::tempdir().unwrap();
        let local = LocalDirBackend::new(dir.path()).map_err(|e| e.to_string())?;
        common::check_against_model(&local, &session, &mut common::rng(seed), 30)
            .map_err(|e| format!("local_dir seed {seed}: {e}"))?;
    }
    let dir = tempfile::tempdir().unwrap();
    let server = common::spawn_service(dir.path());
    let client = CloudClient::new(server.base_url()).map_err(|e| e.to_string())?;
    client.register("alice", "alice password").map_err(|e| e.to_string())?;
    let remote = client.login("alice", "alice password").map_err(|e| e.to_string())?;
    for seed in 0..100 {
        common::check_against_model(&client, &remote, &mut common::rng(seed), 30)
            .map_err(|e| format!("http seed {seed}: {e}"))?;
    }
    Ok(())
}

fn criterion_9_auth_contract() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut config = common::test_service_config(dir.path());
    config.token_ttl = chrono::Duration::milliseconds(500);
    let server = vaultdrop::service::spawn(config).map_err(|e| e.to_string())?;
    let base = server.base_url();
    let http = reqwest::blocking::Client::new();
    let url = |p: &str| base.join(p).unwrap();
    let creds = |u: &str, p: &str| serde_json::json!({"username": u, "password": p});

    http.post(url("api/register")).json(&creds("alice", "alice password")).send().map_err(|e| e.to_string())?;
    let login = |u: &str, p: &str| http.post(url("api/login")).json(&creds(u, p)).send().unwrap();
    let capture =
        |r: reqwest::blocking::Response| (r.status(), r.headers().get("content-type").cloned(), r.bytes().unwrap());
    let wrong = capture(login("alice", "wrong password"));
    let unknown = capture(login("mallory", "alice password"));
    ensure(wrong.0 == StatusCode::UNAUTHORIZED, || format!("wrong password gave {}", wrong.0))?;
    ensure(wrong == unknown, || format!("401 bodies differ: {wrong:?} vs {unknown:?}"))?;

    let token = |r: reqwest::blocking::Response| -> String {
        r.json::<serde_json::Value>().unwrap()["token"].as_str().unwrap().to_owned()
    };
    let expired = token(login("alice", "alice password"));
    let revoked = token(login("alice", "alice password"));
    http.post(url("api/logout")).bearer_auth(&revoked).send().map_err(|e| e.to_string())?;
    std::thread::sleep(Duration::from_millis(600));
    let live = token(login("alice", "alice password"));
    http.put(url("api/files/kept.esf")).bearer_auth(&live).body("k").send().map_err(|e| e.to_string())?;

    for (label, bad) in [("revoked", &revoked), ("expired", &expired)] {
        let requests = [
            ("list", http.get(url("api/files"))),
            ("put", http.put(url("api/files/new.esf")).body("x")),
            ("get", http.get(url("api/files/kept.esf"))),
            ("delete", http.delete(url("api/files/kept.esf"))),
        ];
        for (op, request) in requests {
            let status = request.bearer_auth(bad).send().map_err(|e| e.to_string())?.status();
            ensure(status == StatusCode::UNAUTHORIZED, || format!("{label} token on {op}: {status}"))?;
        }
    }
    let list: serde_json::Value = http.get(url("api/files")).bearer_auth(&live).send().unwrap().json().unwrap();
    ensure(list.as_array().map(Vec::len) == Some(1), || format!("state changed: {list}"))
}

// KDF time is measured separately and subtracted.
fn criterion_10_throughput() -> Check {
    let mut rng = common::rng(10);
    let pt = common::random_vec(&mut rng, 10 << 20);
    let salt: [u8; 16] = rng.gen();
    let iv: [u8; 16] = rng.gen();

    let kdf_start = Instant::now();
    envelope::derive_key_material(b"pw", &salt, MIN_ITERATIONS).map_err(|e| e.to_string())?;
    // seal derives once; open derives once.
    let kdf = kdf_start.elapsed() * 2;

    let start = Instant::now();
    let sealed = envelope::seal(&pt, b"pw", MIN_ITERATIONS, &salt, &iv).map_err(|e| e.to_string())?;
    let opened = envelope::open(&sealed, b"pw").map_err(|e| e.to_string())?;
    let total = start.elapsed();
    ensure(opened == pt, || "10 MiB round trip differs".into())?;
    report(format!("    10 MiB seal+open {:.2?} (KDF {:.2?})", total, kdf));
    Ok(())
}

#[test]
fn acceptance() {
    report(String::new());
    let criteria: [Criterion; 10] = [
        (1, "AES known-answer", criterion_1_aes_known_answer, Some(Duration::from_secs(1))),
        (2, "hash/MAC known-answer", criterion_2_hash_and_mac_known_answer, None),
        (3, "KDF oracle equivalence", criterion_3_kdf_oracle_equivalence, Some(Duration::from_secs(10))),
        (4, "envelope round trip", criterion_4_envelope_round_trip, Some(Duration::from_secs(30))),
        (5, "wrong-password rejection", criterion_5_wrong_password_rejection, Some(Duration::from_secs(60))),
        (6, "tamper detection", criterion_6_tamper_detection, Some(Duration::from_secs(60))),
        (7, "end-to-end upload/download", criterion_7_end_to_end, Some(Duration::from_secs(30))),
        (8, "backend model conformance", criterion_8_backend_model_conformance, None),
        (9, "auth contract", criterion_9_auth_contract, None),
        (10, "throughput sanity", criterion_10_throughput, Some(Duration::from_secs(10))),
    ];

    let mut failed = Vec::new();
    for (id, label, check, bound) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let verdict = match (&outcome, bound) {
            (Err(e), _) => Err(e.clone()),
            (Ok(()), Some(limit)) if elapsed >= limit => Err(format!("took {elapsed:.2?}, bound {limit:?}")),
            (Ok(()), _) => Ok(()),
        };
        let bound_text = bound.map(|b| format!(" < {b:?}")).unwrap_or_default();
        match verdict {
            Ok(()) => report(format!("criterion {id:>2} {label:<28} PASS  {elapsed:>9.2?}{bound_text}")),
            Err(why) => {
                report(format!("criterion {id:>2} {label:<28} FAIL  {elapsed:>9.2?}{bound_text}  {why}"));
                failed.push(id);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
