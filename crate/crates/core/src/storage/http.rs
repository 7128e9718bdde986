//! Blocking client for the cloud service HTTP API.

use std::time::Duration;

use chrono::{DateTime, Utc};
use reqwest::blocking::{Client, Response};
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use url::Url;

use super::{validate_name, BlobBackend, RemoteObject, StorageError};
use crate::auth::SessionToken;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("user already exists")]
    UserExists,
    #[error("authentication error")]
    AuthenticationFailed,
    #[error("request rejected: {0}")]
    Rejected(String),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

#[derive(Serialize)]
pub(crate) struct Credentials<'a> {
    pub username: &'a str,
    pub password: &'a str,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct LoginResponse {
    pub token: String,
    pub expires_at: DateTime<Utc>,
}

#[derive(Serialize, Deserialize, Default)]
pub(crate) struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_blob_size: Option<u64>,
}

/// Talks to a running cloud service. Also usable as a [`BlobBackend`].
#[derive(Debug, Clone)]
pub struct CloudClient {
    base: Url,
    http: Client,
}

fn connection(e: reqwest::Error) -> StorageError {
    StorageError::ConnectionFailure(e.to_string())
}

fn error_body(resp: Response) -> ErrorBody {
    resp.json::<ErrorBody>().unwrap_or_default()
}

fn status_error(resp: Response, sent: usize) -> StorageError {
    match resp.status() {
        StatusCode::UNAUTHORIZED => StorageError::AuthRequired,
        StatusCode::NOT_FOUND => StorageError::NotFound,
        StatusCode::BAD_REQUEST => StorageError::NameInvalid("rejected by server"),
        StatusCode::PAYLOAD_TOO_LARGE => {
            let max = error_body(resp).max_blob_size.unwrap_or(0);
            StorageError::TooLarge { size: sent as u64, max }
        }
        status => {
            let body = error_body(resp);
            StorageError::StorageFailure(format!("server returned {status}: {}", body.error))
        }
    }
}

impl CloudClient {
    pub fn new(base: Url) -> Result<Self, StorageError> {
        if base.cannot_be_a_base() {
            return Err(StorageError::ConnectionFailure(format!("{base} is not a base URL")));
        }
        let http = Client::builder()
            .connect_timeout(Duration::from_secs(10))
            .timeout(Duration::from_secs(600))
            .build()
            .map_err(connection)?;
        Ok(CloudClient { base, http })
    }

    pub fn base_url(&self) -> &Url {
        &self.base
    }

    fn url(&self, segments: &[&str]) -> Url {
        let mut url = self.base.clone();
        url.path_segments_mut().expect("checked in new()").pop_if_empty().extend(segments);
        url
    }

    pub fn health(&self) -> Result<(), StorageError> {
        let resp = self.http.get(self.url(&["healthz"])).send().map_err(connection)?;
        if resp.status() == StatusCode::OK {
            Ok(())
        } else {
            Err(status_error(resp, 0))
        }
    }

    pub fn register(&self, username: &str, password: &str) -> Result<(), ClientError> {
        let resp = self
            .http
            .post(self.url(&["api", "register"]))
            .json(&Credentials { username, password })
            .send()
            .map_err(connection)?;
        match resp.status() {
            StatusCode::CREATED => Ok(()),
            StatusCode::CONFLICT => Err(ClientError::UserExists),
            StatusCode::BAD_REQUEST => Err(ClientError::Rejected(error_body(resp).error)),
            _ => Err(status_error(resp, 0).into()),
        }
    }

    pub fn login(&self, username: &str, password: &str) -> Result<SessionToken, ClientError> {
        let resp = self
            .http
            .post(self.url(&["api", "login"]))
            .json(&Credentials { username, password })
            .send()
            .map_err(connection)?;
        match resp.status() {
            StatusCode::OK => {
                let body: LoginResponse =
                    resp.json().map_err(|e| StorageError::StorageFailure(format!("bad login response: {e}")))?;
                Ok(SessionToken { token: body.token, username: username.to_owned(), expires_at: body.expires_at })
            }
            StatusCode::UNAUTHORIZED => Err(ClientError::AuthenticationFailed),
            StatusCode::BAD_REQUEST => Err(ClientError::Rejected(error_body(resp).error)),
            _ => Err(status_error(resp, 0).into()),
        }
    }

    /// Revokes `token` on the server. Succeeds for unknown tokens too.
    pub fn logout(&self, token: &str) -> Result<(), StorageError> {
        let resp = self.http.post(self.url(&["api", "logout"])).bearer_auth(token).send().map_err(connection)?;
        match resp.status() {
            StatusCode::NO_CONTENT => Ok(()),
            _ => Err(status_error(resp, 0)),
        }
    }
}

impl BlobBackend for CloudClient {
    fn put(&self, session: &SessionToken, name: &str, bytes: &[u8]) -> Result<RemoteObject, StorageError> {
        validate_name(name)?;
        let resp = self
            .http
            .put(self.url(&["api", "files", name]))
            .bearer_auth(&session.token)
            .header(reqwest::header::CONTENT_TYPE, "application/octet-stream")
            .body(bytes.to_vec())
            .send()
            .map_err(connection)?;
        match resp.status() {
            StatusCode::CREATED => {
                resp.json().map_err(|e| StorageError::StorageFailure(format!("bad put response: {e}")))
            }
            _ => Err(status_error(resp, bytes.len())),
        }
    }

    fn get(&self, session: &SessionToken, name: &str) -> Result<Vec<u8>, StorageError> {
        validate_name(name)?;
        let resp =
            self.http.get(self.url(&["api", "files", name])).bearer_auth(&session.token).send().map_err(connection)?;
        match resp.status() {
            StatusCode::OK => Ok(resp.bytes().map_err(connection)?.to_vec()),
            _ => Err(status_error(resp, 0)),
        }
    }

    fn list(&self, session: &SessionToken) -> Result<Vec<RemoteObject>, StorageError> {
        let resp = self.http.get(self.url(&["api", "files"])).bearer_auth(&session.token).send().map_err(connection)?;
        match resp.status() {
            StatusCode::OK => resp.json().map_err(|e| StorageError::StorageFailure(format!("bad list response: {e}"))),
            _ => Err(status_error(resp, 0)),
        }
    }

    fn delete(&self, session: &SessionToken, name: &str) -> Result<(), StorageError> {
        validate_name(name)?;
        let resp = self
            .http
            .delete(self.url(&["api", "files", name]))
            .bearer_auth(&session.token)
            .send()
            .map_err(connection)?;
        match resp.status() {
            StatusCode::NO_CONTENT => Ok(()),
            _ => Err(status_error(resp, 0)),
        }
    }
}
