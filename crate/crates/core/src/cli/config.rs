//! Client settings persisted between commands as `key=value` lines.

use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CliConfig {
    pub server_url: Option<String>,
    pub username: Option<String>,
    pub token: Option<String>,
    pub token_expires_at: Option<DateTime<Utc>>,
    pub default_iterations: Option<u32>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("config {path}, line {line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
}

/// `<platform config dir>/vaultdrop/config`, e.g. `~/.config/vaultdrop/config`.
pub fn default_path() -> Option<PathBuf> {
    dirs::config_dir().map(|d| d.join("vaultdrop").join("config"))
}

impl CliConfig {
    /// A missing file is an empty config.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = match fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(CliConfig::default()),
            Err(e) => return Err(ConfigError::Io { path: path.to_owned(), reason: e.to_string() }),
        };
        Self::parse(&text).map_err(|(line, reason)| ConfigError::Parse { path: path.to_owned(), line, reason })
    }

    fn parse(text: &str) -> Result<Self, (usize, String)> {
        let mut config = CliConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err((i + 1, "expected key=value".into()));
            };
            let value = value.trim().to_owned();
            match key.trim() {
                "server_url" => config.server_url = Some(value),
                "username" => config.username = Some(value),
                "token" => config.token = Some(value),
                "token_expires_at" => {
                    let at = DateTime::parse_from_rfc3339(&value).map_err(|e| (i + 1, e.to_string()))?;
                    config.token_expires_at = Some(at.with_timezone(&Utc));
                }
                "default_iterations" => {
                    config.default_iterations = Some(value.parse().map_err(|_| (i + 1, "not a number".to_string()))?);
                }
                // Unknown keys are tolerated for forward compatibility.
                _ => {}
            }
        }
        Ok(config)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut field = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                out.push_str(&format!("{key}={v}\n"));
            }
        };
        field("server_url", self.server_url.clone());
        field("username", self.username.clone());
        field("token", self.token.clone());
        field("token_expires_at", self.token_expires_at.map(|t| t.to_rfc3339_opts(SecondsFormat::Secs, true)));
        field("default_iterations", self.default_iterations.map(|n| n.to_string()));
        out
    }

    /// Atomically replaces the file, readable by the owner only.
    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        let io = |e: std::io::Error| ConfigError::Io { path: path.to_owned(), reason: e.to_string() };
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(dir).map_err(io)?;
        // NamedTempFile is created 0600 on unix.
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(self.render().as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }

    pub fn clear_session(&mut self) {
        self.token = None;
        self.token_expires_at = None;
    }
}
