//! The storage service: registration, login and per-user blob storage over
//! HTTP/1.1.
//!
//! | method | path                | auth   | success                    |
//! |--------|---------------------|--------|----------------------------|
//! | POST   | `/api/register`     | -      | 201                        |
//! | POST   | `/api/login`        | -      | 200 `{token, expires_at}`  |
//! | POST   | `/api/logout`       | bearer | 204                        |
//! | GET    | `/api/files`        | bearer | 200 `[{name, size, modified_at}]` |
//! | PUT    | `/api/files/{name}` | bearer | 201 `{name, size, modified_at}` |
//! | GET    | `/api/files/{name}` | bearer | 200 raw octets             |
//! | DELETE | `/api/files/{name}` | bearer | 204                        |
//! | GET    | `/healthz`          | -      | 200 `ok`                   |
//!
//! The service only ever sees envelopes; it has no notion of encryption
//! passwords. Users are persisted to `<data_dir>/users.tsv` and blobs to a
//! [`LocalDirBackend`] rooted at `<data_dir>/blobs`.

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::{Body, Bytes};
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chrono::Duration;
use serde::Deserialize;
use tokio::sync::oneshot;
use url::Url;

use crate::auth::{self, AuthError, AuthStore, SessionToken};
use crate::storage::http::{ErrorBody, LoginResponse};
use crate::storage::{validate_name, BlobBackend, LocalDirBackend, StorageError, DEFAULT_MAX_BLOB_SIZE};

pub const ENV_BIND: &str = "VAULTDROP_BIND";
pub const ENV_DATA_DIR: &str = "VAULTDROP_DATA_DIR";
pub const ENV_TOKEN_TTL: &str = "VAULTDROP_TOKEN_TTL";
pub const ENV_MAX_BLOB: &str = "VAULTDROP_MAX_BLOB";

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_DATA_DIR: &str = "vaultdrop-data";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {reason}")]
    BindFailure { addr: String, reason: String },
    #[error("data directory {path} unavailable: {reason}")]
    DataDirUnavailable { path: PathBuf, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("server error: {0}")]
    Runtime(String),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind_address: String,
    pub data_dir: PathBuf,
    pub token_ttl: Duration,
    pub max_blob_size: u64,
    /// PBKDF2 iterations for newly registered login passwords.
    pub login_iterations: u32,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind_address: DEFAULT_BIND.to_owned(),
            data_dir: PathBuf::from(DEFAULT_DATA_DIR),
            token_ttl: auth::default_token_ttl(),
            max_blob_size: DEFAULT_MAX_BLOB_SIZE,
            login_iterations: auth::LOGIN_ITERATIONS,
        }
    }
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig { data_dir: data_dir.into(), ..Default::default() }
    }

    /// Defaults overridden by `VAULTDROP_BIND`, `VAULTDROP_DATA_DIR`,
    /// `VAULTDROP_TOKEN_TTL` (seconds) and `VAULTDROP_MAX_BLOB` (octets).
    pub fn from_env() -> Result<Self, ServiceError> {
        Self::from_lookup(|key| std::env::var(key).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ServiceError> {
        let mut config = ServiceConfig::default();
        if let Some(bind) = lookup(ENV_BIND) {
            config.bind_address = bind;
        }
        if let Some(dir) = lookup(ENV_DATA_DIR) {
            config.data_dir = PathBuf::from(dir);
        }
        if let Some(ttl) = lookup(ENV_TOKEN_TTL) {
            let secs: i64 = ttl
                .trim()
                .parse()
                .map_err(|_| ServiceError::Config(format!("{ENV_TOKEN_TTL} must be a number of seconds")))?;
            config.token_ttl = Duration::seconds(secs.max(0));
        }
        if let Some(max) = lookup(ENV_MAX_BLOB) {
            config.max_blob_size = max
                .trim()
                .parse()
                .map_err(|_| ServiceError::Config(format!("{ENV_MAX_BLOB} must be a number of octets")))?;
        }
        Ok(config)
    }
}

pub struct AppState {
    auth: AuthStore,
    blobs: LocalDirBackend,
    max_blob_size: u64,
}

impl AppState {
    /// Loads users and blobs from `config.data_dir`, creating it if needed.
    pub fn open(config: &ServiceConfig) -> Result<Arc<Self>, ServiceError> {
        let dir = &config.data_dir;
        let unavailable = |reason: String| ServiceError::DataDirUnavailable { path: dir.clone(), reason };
        std::fs::create_dir_all(dir).map_err(|e| unavailable(e.to_string()))?;
        tempfile::NamedTempFile::new_in(dir).map_err(|e| unavailable(format!("not writable: {e}")))?;

        let auth = AuthStore::open(dir.join("users.tsv"))
            .map_err(|e| unavailable(e.to_string()))?
            .with_token_ttl(config.token_ttl)
            .with_iterations(config.login_iterations);
        let blobs = LocalDirBackend::new(dir.join("blobs"))
            .map_err(|e| unavailable(e.to_string()))?
            .with_max_blob_size(config.max_blob_size);
        Ok(Arc::new(AppState { auth, blobs, max_blob_size: config.max_blob_size }))
    }

    pub fn auth(&self) -> &AuthStore {
        &self.auth
    }
}

enum ApiError {
    BadRequest(String),
    Unauthorized,
    LoginFailed,
    NotFound,
    Conflict,
    TooLarge(u64),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest(msg) => (StatusCode::BAD_REQUEST, ErrorBody { error: msg, max_blob_size: None }),
            ApiError::Unauthorized => {
                (StatusCode::UNAUTHORIZED, ErrorBody { error: "authentication required".into(), max_blob_size: None })
            }
            ApiError::LoginFailed => (
                StatusCode::UNAUTHORIZED,
                ErrorBody { error: AuthError::AuthenticationFailed.to_string(), max_blob_size: None },
            ),
            ApiError::NotFound => (StatusCode::NOT_FOUND, ErrorBody { error: "not found".into(), max_blob_size: None }),
            ApiError::Conflict => {
                (StatusCode::CONFLICT, ErrorBody { error: "user already exists".into(), max_blob_size: None })
            }
            ApiError::TooLarge(max) => (
                StatusCode::PAYLOAD_TOO_LARGE,
                ErrorBody { error: "blob exceeds size limit".into(), max_blob_size: Some(max) },
            ),
            ApiError::Internal(msg) => {
                log::error!("internal error: {msg}");
                (StatusCode::INTERNAL_SERVER_ERROR, ErrorBody { error: "internal error".into(), max_blob_size: None })
            }
        };
        (status, Json(body)).into_response()
    }
}

impl From<StorageError> for ApiError {
    fn from(e: StorageError) -> Self {
        match e {
            StorageError::NotFound => ApiError::NotFound,
            StorageError::NameInvalid(why) => ApiError::BadRequest(format!("invalid object name: {why}")),
            StorageError::TooLarge { max, .. } => ApiError::TooLarge(max),
            StorageError::AuthRequired => ApiError::Unauthorized,
            other => ApiError::Internal(other.to_string()),
        }
    }
}

#[derive(Deserialize)]
struct CredentialsBody {
    username: String,
    password: String,
}

fn parse_credentials(body: &[u8]) -> Result<CredentialsBody, ApiError> {
    serde_json::from_slice(body).map_err(|_| ApiError::BadRequest("expected JSON {\"username\",\"password\"}".into()))
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    let value = headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = value.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim())
}

fn session(state: &AppState, headers: &HeaderMap) -> Result<SessionToken, ApiError> {
    let token = bearer(headers).ok_or(ApiError::Unauthorized)?;
    state.auth.session(token).map_err(|_| ApiError::Unauthorized)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))
}

async fn handle_register(State(state): State<Arc<AppState>>, body: Bytes) -> Result<StatusCode, ApiError> {
    let creds = parse_credentials(&body)?;
    let result = blocking(move || state.auth.register(&creds.username, &creds.password)).await?;
    match result {
        Ok(record) => {
            log::info!("registered user {}", record.username);
            Ok(StatusCode::CREATED)
        }
        Err(AuthError::UserExists) => Err(ApiError::Conflict),
        Err(e @ (AuthError::WeakPassword | AuthError::PasswordTooLong | AuthError::InvalidUsername(_))) => {
            Err(ApiError::BadRequest(e.to_string()))
        }
        Err(e) => Err(ApiError::Internal(e.to_string())),
    }
}

async fn handle_login(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<LoginResponse>, ApiError> {
    let creds = parse_credentials(&body)?;
    match blocking(move || state.auth.authenticate(&creds.username, &creds.password)).await? {
        Ok(token) => Ok(Json(LoginResponse { token: token.token, expires_at: token.expires_at })),
        Err(AuthError::AuthenticationFailed) => Err(ApiError::LoginFailed),
        Err(e) => Err(ApiError::Internal(e.to_string())),
    }
}

async fn handle_logout(State(state): State<Arc<AppState>>, headers: HeaderMap) -> StatusCode {
    if let Some(token) = bearer(&headers) {
        state.auth.revoke(token);
    }
    StatusCode::NO_CONTENT
}

async fn handle_list(State(state): State<Arc<AppState>>, headers: HeaderMap) -> Result<Response, ApiError> {
    let session = session(&state, &headers)?;
    let objects = blocking(move || state.blobs.list(&session)).await??;
    Ok(Json(objects).into_response())
}

async fn handle_put(
    State(state): State<Arc<AppState>>,
    Path(name): Path<String>,
    headers: HeaderMap,
    body: Body,
) -> Result<Response, ApiError> {
    let session = session(&state, &headers)?;
    validate_name(&name)?;
    let max = state.max_blob_size;
    let declared =
        headers.get(header::CONTENT_LENGTH).and_then(|v| v.to_str().ok()).and_then(|v| v.parse::<u64>().ok());
    if declared.is_some_and(|len| len > max) {
        return Err(ApiError::TooLarge(max));
    }
    let limit = usize::try_from(max).unwrap_or(usize::MAX);
    let bytes = axum::body::to_bytes(body, limit).await.map_err(|_| ApiError::TooLarge(max))?;
    let object = blocking(move || state.blobs.put(&session, &name, &bytes)).await??;
    Ok((StatusCode::CREATED, Json(object)).into_response())
}

async fn handle_get(
    State(state): State<Arc<AppState>>,
    Path(name): Path<String>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let session = session(&state, &headers)?;
    validate_name(&name)?;
    let bytes = blocking(move || state.blobs.get(&session, &name)).await??;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
}

async fn handle_delete(
    State(state): State<Arc<AppState>>,
    Path(name): Path<String>,
    headers: HeaderMap,
) -> Result<StatusCode, ApiError> {
    let session = session(&state, &headers)?;
    validate_name(&name)?;
    blocking(move || state.blobs.delete(&session, &name)).await??;
    Ok(StatusCode::NO_CONTENT)
}

async fn handle_health() -> &'static str {
    "ok"
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/register", post(handle_register))
        .route("/api/login", post(handle_login))
        .route("/api/logout", post(handle_logout))
        .route("/api/files", get(handle_list))
        .route(
            "/api/files/{name}",
            put(handle_put).get(handle_get).delete(handle_delete).layer(DefaultBodyLimit::disable()),
        )
        .route("/healthz", get(handle_health))
        .with_state(state)
}

async fn bind(config: &ServiceConfig) -> Result<tokio::net::TcpListener, ServiceError> {
    tokio::net::TcpListener::bind(&config.bind_address)
        .await
        .map_err(|e| ServiceError::BindFailure { addr: config.bind_address.clone(), reason: e.to_string() })
}

/// Runs the service until `shutdown` resolves.
pub async fn serve_until(
    config: ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let state = AppState::open(&config)?;
    let listener = bind(&config).await?;
    run(listener, state, shutdown).await
}

async fn run(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    if let Ok(addr) = listener.local_addr() {
        log::info!("listening on http://{addr}");
    }
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| ServiceError::Runtime(e.to_string()))
}

/// Blocking entry point: serves until Ctrl-C.
pub fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| ServiceError::Runtime(e.to_string()))?;
    runtime.block_on(serve_until(config, async {
        let _ = tokio::signal::ctrl_c().await;
        log::info!("shutting down");
    }))
}

/// A service running on a background thread.
///
/// Dropping the handle stops the service and waits for it to exit.
pub struct ServiceHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<Result<(), ServiceError>>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> Url {
        Url::parse(&format!("http://{}/", self.addr)).expect("socket address forms a valid URL")
    }

    pub fn shutdown(mut self) -> Result<(), ServiceError> {
        self.stop()
    }

    fn stop(&mut self) -> Result<(), ServiceError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(thread) => thread.join().map_err(|_| ServiceError::Runtime("service thread panicked".into()))?,
            None => Ok(()),
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}

/// Starts the service on a background thread with its own runtime. Returns
/// once the listener is bound, so bind and data-dir errors surface here.
/// Use port 0 in `bind_address` to pick a free port.
pub fn spawn(config: ServiceConfig) -> Result<ServiceHandle, ServiceError> {
    let state = AppState::open(&config)?;
    let (ready_tx, ready_rx) = std::sync::mpsc::channel();
    let (shutdown_tx, shutdown_rx) = oneshot::channel::<()>();

    let thread = std::thread::Builder::new()
        .name("vaultdrop-service".into())
        .spawn(move || -> Result<(), ServiceError> {
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .map_err(|e| ServiceError::Runtime(e.to_string()))?;
            runtime.block_on(async move {
                let listener = match bind(&config).await {
                    Ok(listener) => listener,
                    Err(e) => {
                        let _ = ready_tx.send(Err(e));
                        return Ok(());
                    }
                };
                let addr = listener.local_addr().map_err(|e| ServiceError::Runtime(e.to_string()))?;
                let _ = ready_tx.send(Ok(addr));
                run(listener, state, async {
                    let _ = shutdown_rx.await;
                })
                .await
            })
        })
        .map_err(|e| ServiceError::Runtime(e.to_string()))?;

    match ready_rx.recv() {
        Ok(Ok(addr)) => Ok(ServiceHandle { addr, shutdown: Some(shutdown_tx), thread: Some(thread) }),
        Ok(Err(e)) => {
            let _ = thread.join();
            Err(e)
        }
        Err(_) => match thread.join() {
            Ok(Err(e)) => Err(e),
            _ => Err(ServiceError::Runtime("service thread exited during startup".into())),
        },
    }
}
