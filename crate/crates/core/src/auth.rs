//! User registration, password login and session tokens.
//!
//! Login passwords are stored only as `PBKDF2-HMAC-SHA256(password, salt,
//! iterations, 32)`. When backed by a file, the credential table is one user
//! per line:
//!
//! ```text
//! username \t hex(salt) \t iterations \t hex(hash) \t created_at (RFC 3339)
//! ```
//!
//! and is rewritten through a temp file plus rename on every registration.
//! Sessions live in memory only.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Duration, SecondsFormat, Utc};

use crate::crypto::{self, ct_eq, pbkdf2};

pub const LOGIN_ITERATIONS: u32 = 10_000;
pub const MIN_PASSWORD_CHARS: usize = 8;
/// Passphrases shorter than this get a warning, never a rejection.
pub const RECOMMENDED_PASSPHRASE_CHARS: usize = 16;
pub const MAX_PASSWORD_BYTES: usize = 1024;
pub const MAX_USERNAME_CHARS: usize = 64;
pub const TOKEN_BYTES: usize = 32;

pub fn default_token_ttl() -> Duration {
    Duration::hours(24)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuthError {
    #[error("user already exists")]
    UserExists,
    #[error("password must be at least {MIN_PASSWORD_CHARS} characters")]
    WeakPassword,
    #[error("password longer than {MAX_PASSWORD_BYTES} octets")]
    PasswordTooLong,
    #[error("invalid username: {0}")]
    InvalidUsername(&'static str),
    /// Deliberately identical for unknown users and wrong passwords.
    #[error("authentication error")]
    AuthenticationFailed,
    #[error("session token invalid or expired")]
    TokenInvalid,
    #[error("credential storage failure: {0}")]
    StorageFailure(String),
}

#[derive(Clone)]
pub struct UserRecord {
    pub username: String,
    pub salt: [u8; 16],
    pub iterations: u32,
    pub password_hash: [u8; 32],
    pub created_at: DateTime<Utc>,
}

impl fmt::Debug for UserRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserRecord")
            .field("username", &self.username)
            .field("iterations", &self.iterations)
            .field("created_at", &self.created_at)
            .finish_non_exhaustive()
    }
}

impl UserRecord {
    fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.username,
            hex::encode(self.salt),
            self.iterations,
            hex::encode(self.password_hash),
            self.created_at.to_rfc3339_opts(SecondsFormat::Micros, true)
        )
    }

    fn from_line(line: &str) -> Option<Self> {
        let fields: Vec<&str> = line.split('\t').collect();
        let [username, salt, iterations, hash, created_at] = fields[..] else {
            return None;
        };
        validate_username(username).ok()?;
        Some(UserRecord {
            username: username.to_owned(),
            salt: hex::decode(salt).ok()?.try_into().ok()?,
            iterations: iterations.parse().ok().filter(|&n| n > 0)?,
            password_hash: hex::decode(hash).ok()?.try_into().ok()?,
            created_at: DateTime::parse_from_rfc3339(created_at).ok()?.with_timezone(&Utc),
        })
    }

    fn matches(&self, password: &str) -> bool {
        match pbkdf2(password.as_bytes(), &self.salt, self.iterations, 32) {
            Ok(hash) => ct_eq(&hash, &self.password_hash),
            Err(_) => false,
        }
    }
}

/// Proof of a successful login.
#[derive(Clone, PartialEq, Eq)]
pub struct SessionToken {
    /// 64 lowercase hex characters.
    pub token: String,
    pub username: String,
    pub expires_at: DateTime<Utc>,
}

impl fmt::Debug for SessionToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SessionToken")
            .field("username", &self.username)
            .field("expires_at", &self.expires_at)
            .finish_non_exhaustive()
    }
}

pub fn validate_username(username: &str) -> Result<(), AuthError> {
    let chars = username.chars().count();
    if chars == 0 {
        return Err(AuthError::InvalidUsername("empty"));
    }
    if chars > MAX_USERNAME_CHARS {
        return Err(AuthError::InvalidUsername("longer than 64 characters"));
    }
    if username.chars().any(char::is_control) {
        return Err(AuthError::InvalidUsername("contains control characters"));
    }
    Ok(())
}

pub fn validate_password(password: &str) -> Result<(), AuthError> {
    if password.len() > MAX_PASSWORD_BYTES {
        return Err(AuthError::PasswordTooLong);
    }
    if password.chars().count() < MIN_PASSWORD_CHARS {
        return Err(AuthError::WeakPassword);
    }
    Ok(())
}

struct Session {
    username: String,
    expires_at: DateTime<Utc>,
}

/// Credential table plus live sessions.
///
/// Registrations are serialized; lookups take a shared lock. Each session
/// insert, lookup or removal is a single critical section.
pub struct AuthStore {
    users: RwLock<BTreeMap<String, UserRecord>>,
    write_lock: Mutex<()>,
    sessions: Mutex<HashMap<String, Session>>,
    path: Option<PathBuf>,
    token_ttl: Duration,
    iterations: u32,
}

impl fmt::Debug for AuthStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AuthStore")
            .field("path", &self.path)
            .field("token_ttl", &self.token_ttl)
            .finish_non_exhaustive()
    }
}

impl AuthStore {
    pub fn in_memory() -> Self {
        AuthStore {
            users: RwLock::new(BTreeMap::new()),
            write_lock: Mutex::new(()),
            sessions: Mutex::new(HashMap::new()),
            path: None,
            token_ttl: default_token_ttl(),
            iterations: LOGIN_ITERATIONS,
        }
    }

    /// Opens (or starts) a file-backed credential table.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, AuthError> {
        let path = path.into();
        let mut users = BTreeMap::new();
        match fs::read_to_string(&path) {
            Ok(text) => {
                for (lineno, line) in text.lines().enumerate() {
                    if line.is_empty() {
                        continue;
                    }
                    let record = UserRecord::from_line(line).ok_or_else(|| {
                        AuthError::StorageFailure(format!(
                            "{}: malformed record on line {}",
                            path.display(),
                            lineno + 1
                        ))
                    })?;
                    if users.insert(record.username.clone(), record).is_some() {
                        return Err(AuthError::StorageFailure(format!(
                            "{}: duplicate user on line {}",
                            path.display(),
                            lineno + 1
                        )));
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(AuthError::StorageFailure(format!("{}: {e}", path.display()))),
        }
        Ok(AuthStore { users: RwLock::new(users), path: Some(path), ..AuthStore::in_memory() })
    }

    pub fn with_token_ttl(mut self, ttl: Duration) -> Self {
        self.token_ttl = ttl;
        self
    }

    /// Iteration count for newly registered users. Existing records keep theirs.
    pub fn with_iterations(mut self, iterations: u32) -> Self {
        self.iterations = iterations.max(1);
        self
    }

    pub fn token_ttl(&self) -> Duration {
        self.token_ttl
    }

    pub fn user_count(&self) -> usize {
        self.users.read().unwrap().len()
    }

    pub fn register(&self, username: &str, password: &str) -> Result<UserRecord, AuthError> {
        validate_username(username)?;
        validate_password(password)?;
        if self.users.read().unwrap().contains_key(username) {
            return Err(AuthError::UserExists);
        }

        let salt = crypto::random_array::<16>().map_err(|e| AuthError::StorageFailure(e.to_string()))?;
        let hash = pbkdf2(password.as_bytes(), &salt, self.iterations, 32).expect("iterations >= 1, dklen 32");
        let record = UserRecord {
            username: username.to_owned(),
            salt,
            iterations: self.iterations,
            password_hash: hash.try_into().expect("32 octets"),
            created_at: Utc::now(),
        };

        let _guard = self.write_lock.lock().unwrap();
        let mut snapshot = self.users.read().unwrap().clone();
        if snapshot.contains_key(username) {
            return Err(AuthError::UserExists);
        }
        snapshot.insert(record.username.clone(), record.clone());
        if let Some(path) = &self.path {
            persist(path, &snapshot)?;
        }
        *self.users.write().unwrap() = snapshot;
        Ok(record)
    }

    pub fn authenticate(&self, username: &str, password: &str) -> Result<SessionToken, AuthError> {
        self.authenticate_at(username, password, Utc::now())
    }

    pub fn authenticate_at(
        &self,
        username: &str,
        password: &str,
        now: DateTime<Utc>,
    ) -> Result<SessionToken, AuthError> {
        let record = self.users.read().unwrap().get(username).cloned();
        let ok = match &record {
            Some(record) => record.matches(password),
            None => {
                // Same work as a real check so response time does not reveal
                // whether the account exists.
                let _ = pbkdf2(password.as_bytes(), &[0u8; 16], self.iterations, 32);
                false
            }
        };
        if !ok {
            return Err(AuthError::AuthenticationFailed);
        }

        let token =
            hex::encode(crypto::random_array::<TOKEN_BYTES>().map_err(|e| AuthError::StorageFailure(e.to_string()))?);
        let expires_at = now + self.token_ttl;
        let mut sessions = self.sessions.lock().unwrap();
        sessions.retain(|_, s| s.expires_at > now);
        sessions.insert(token.clone(), Session { username: username.to_owned(), expires_at });
        Ok(SessionToken { token, username: username.to_owned(), expires_at })
    }

    pub fn validate_token(&self, token: &str) -> Result<String, AuthError> {
        self.validate_token_at(token, Utc::now())
    }

    pub fn validate_token_at(&self, token: &str, now: DateTime<Utc>) -> Result<String, AuthError> {
        self.session_at(token, now).map(|s| s.username)
    }

    /// Like [`AuthStore::validate_token`] but returns the whole session.
    pub fn session(&self, token: &str) -> Result<SessionToken, AuthError> {
        self.session_at(token, Utc::now())
    }

    pub fn session_at(&self, token: &str, now: DateTime<Utc>) -> Result<SessionToken, AuthError> {
        let mut sessions = self.sessions.lock().unwrap();
        match sessions.get(token) {
            Some(s) if s.expires_at > now => {
                Ok(SessionToken { token: token.to_owned(), username: s.username.clone(), expires_at: s.expires_at })
            }
            Some(_) => {
                sessions.remove(token);
                Err(AuthError::TokenInvalid)
            }
            None => Err(AuthError::TokenInvalid),
        }
    }

    /// Ends a session. Unknown or already revoked tokens are a no-op.
    pub fn revoke(&self, token: &str) {
        self.sessions.lock().unwrap().remove(token);
    }
}

fn persist(path: &Path, users: &BTreeMap<String, UserRecord>) -> Result<(), AuthError> {
    let fail = |e: std::io::Error| AuthError::StorageFailure(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    for record in users.values() {
        writeln!(tmp, "{}", record.to_line()).map_err(fail)?;
    }
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}
