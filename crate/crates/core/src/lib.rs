//! Client-side encrypted cloud storage.
//!
//! Files are sealed locally into `.esf` envelopes (AES-256-CBC plus
//! HMAC-SHA256, keys stretched from a passphrase with PBKDF2) before they
//! are handed to a blob store, and are only decrypted after the passphrase
//! checks out against the envelope's stored verifier. The store itself sits
//! behind username/password login and per-session bearer tokens.
//!
//! | module        | role                                                   |
//! |---------------|--------------------------------------------------------|
//! | [`crypto`]    | AES, CBC/PKCS#7, SHA-256, HMAC, PBKDF2, written here   |
//! | [`envelope`]  | the `.esf` container: seal, open, encode, decode       |
//! | [`auth`]      | registration, login, session tokens                    |
//! | [`storage`]   | blob backends: in-memory, local directory, HTTP        |
//! | [`service`]   | the HTTP storage service                               |
//! | [`workflows`] | upload and download flows composed from the above      |
//! | [`cli`]       | the `vaultdrop` command line                           |
//!
//! See the `examples/` directory for one runnable program per capability.

#![forbid(unsafe_code)]

pub mod auth;
pub mod cli;
pub mod crypto;
pub mod envelope;
pub mod service;
pub mod storage;
pub mod workflows;
