//! The `vaultdrop` command line.
//!
//! Exit codes: 0 success, 1 any other failure (usage, authentication, I/O),
//! 2 wrong encryption password on download.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand};
use url::Url;

use crate::auth::{SessionToken, MAX_PASSWORD_BYTES, RECOMMENDED_PASSPHRASE_CHARS};
use crate::envelope::DEFAULT_ITERATIONS;
use crate::service::{self, ServiceConfig};
use crate::storage::http::ClientError;
use crate::storage::{CloudClient, StorageError};
use crate::workflows::{self, DownloadRequest, UploadRequest, WorkflowError};

pub mod config;
pub mod prompt;

pub use self::config::CliConfig;
pub use self::prompt::{Prompter, ScriptedPrompter, TerminalPrompter};

pub const ENV_SERVER: &str = "VAULTDROP_SERVER";
pub const ENV_CONFIG: &str = "VAULTDROP_CONFIG";
pub const DEFAULT_SERVER: &str = "http://127.0.0.1:8080/";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PASSWORD_REJECTED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vaultdrop", version, about = "Encrypt files locally, store them in the cloud")]
pub struct Cli {
    /// Service URL (overrides VAULTDROP_SERVER and the config file).
    #[arg(long, global = true, value_name = "URL")]
    pub server: Option<String>,

    /// Config file path (default: platform config dir, or VAULTDROP_CONFIG).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Never prompt; take answers from flags and fail if one is missing.
    #[arg(long, global = true)]
    pub non_interactive: bool,

    /// Read the password this command needs from the named environment
    /// variable instead of prompting.
    #[arg(long, global = true, value_name = "VAR")]
    pub password_env: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an account on the service.
    Register { username: String },
    /// Log in and remember the session.
    Login { username: String },
    /// End the session on the service and forget it locally.
    Logout,
    /// Encrypt a local file and upload it.
    Upload(UploadArgs),
    /// Download a stored file and decrypt it.
    Download(DownloadArgs),
    /// List stored files.
    List,
    /// Run the storage service in the foreground.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct UploadArgs {
    pub path: PathBuf,
    /// Remote object name (default: file name + ".esf").
    #[arg(long)]
    pub name: Option<String>,
    /// Delete the local file once the upload is acknowledged.
    #[arg(long)]
    pub delete_original: bool,
    /// PBKDF2 iterations for the encryption key (minimum 1000).
    #[arg(long)]
    pub iterations: Option<u32>,
}

#[derive(Debug, Args)]
pub struct DownloadArgs {
    pub name: String,
    /// Output path (default: name without ".esf").
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Delete the stored copy once the plaintext is written.
    #[arg(long)]
    pub delete_remote: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address (default: VAULTDROP_BIND or 127.0.0.1:8080).
    #[arg(long)]
    pub bind: Option<String>,
    /// Data directory (default: VAULTDROP_DATA_DIR or ./vaultdrop-data).
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

/// Everything a command touches outside its arguments.
pub struct Context<'a> {
    pub prompter: &'a mut dyn Prompter,
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub env: &'a dyn Fn(&str) -> Option<String>,
}

/// A command failure: message for stderr plus exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(message: impl Into<String>) -> Self {
        Failure { code: EXIT_FAILURE, message: message.into() }
    }
}

type CmdResult = Result<(), Failure>;

const RELOGIN: &str = "session expired or invalid; run `vaultdrop login <username>`";

/// Entry point for the binary.
pub fn main() -> i32 {
    let env = |key: &str| std::env::var(key).ok();
    let mut prompter = TerminalPrompter;
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    let mut ctx = Context { prompter: &mut prompter, out: &mut out, err: &mut err, env: &env };
    run(std::env::args_os(), &mut ctx)
}

pub fn run<I, T>(args: I, ctx: &mut Context<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { write!(ctx.err, "{rendered}") } else { write!(ctx.out, "{rendered}") };
            return code;
        }
    };
    execute(&cli, ctx)
}

pub fn execute(cli: &Cli, ctx: &mut Context<'_>) -> i32 {
    let mut session = Session::new(cli, ctx);
    let result = match &cli.command {
        Command::Register { username } => session.register(username),
        Command::Login { username } => session.login(username),
        Command::Logout => session.logout(),
        Command::Upload(args) => session.upload(args),
        Command::Download(args) => session.download(args),
        Command::List => session.list(),
        Command::Serve(args) => session.serve(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            let _ = writeln!(session.ctx.err, "error: {}", failure.message);
            failure.code
        }
    }
}

struct Session<'c, 'a> {
    cli: &'c Cli,
    ctx: &'c mut Context<'a>,
}

impl<'c, 'a> Session<'c, 'a> {
    fn new(cli: &'c Cli, ctx: &'c mut Context<'a>) -> Self {
        Session { cli, ctx }
    }

    fn warn(&mut self, message: impl AsRef<str>) {
        let _ = writeln!(self.ctx.err, "warning: {}", message.as_ref());
    }

    fn say(&mut self, message: impl AsRef<str>) {
        let _ = writeln!(self.ctx.out, "{}", message.as_ref());
    }

    fn config_path(&self) -> Result<PathBuf, Failure> {
        if let Some(path) = &self.cli.config {
            return Ok(path.clone());
        }
        if let Some(path) = (self.ctx.env)(ENV_CONFIG) {
            return Ok(PathBuf::from(path));
        }
        config::default_path().ok_or_else(|| Failure::new("cannot determine config directory; pass --config"))
    }

    fn load_config(&self) -> Result<(PathBuf, CliConfig), Failure> {
        let path = self.config_path()?;
        let config = CliConfig::load(&path).map_err(|e| Failure::new(e.to_string()))?;
        Ok((path, config))
    }

    fn server_url(&self, config: &CliConfig) -> Result<Url, Failure> {
        let raw = self
            .cli
            .server
            .clone()
            .or_else(|| (self.ctx.env)(ENV_SERVER))
            .or_else(|| config.server_url.clone())
            .unwrap_or_else(|| DEFAULT_SERVER.to_owned());
        Url::parse(&raw).map_err(|e| Failure::new(format!("invalid server URL {raw:?}: {e}")))
    }

    fn client(&self, config: &CliConfig) -> Result<CloudClient, Failure> {
        CloudClient::new(self.server_url(config)?).map_err(|e| Failure::new(e.to_string()))
    }

    fn stored_session(&self, config: &CliConfig) -> Result<SessionToken, Failure> {
        let (Some(token), Some(expires_at)) = (&config.token, config.token_expires_at) else {
            return Err(Failure::new("not logged in; run `vaultdrop login <username>`"));
        };
        if expires_at <= Utc::now() {
            return Err(Failure::new(RELOGIN));
        }
        Ok(SessionToken { token: token.clone(), username: config.username.clone().unwrap_or_default(), expires_at })
    }

    /// Reads a password from `--password-env` or a prompt. `confirm` asks
    /// twice and requires both entries to match.
    fn password(&mut self, prompt: &str, confirm: bool) -> Result<String, Failure> {
        let password = if let Some(var) = &self.cli.password_env {
            (self.ctx.env)(var).ok_or_else(|| Failure::new(format!("environment variable {var} is not set")))?
        } else if self.cli.non_interactive {
            return Err(Failure::new("a password is required; pass --password-env VAR with --non-interactive"));
        } else {
            let first =
                self.ctx.prompter.password(prompt).map_err(|e| Failure::new(format!("cannot read password: {e}")))?;
            if confirm {
                let again = self
                    .ctx
                    .prompter
                    .password("Confirm password: ")
                    .map_err(|e| Failure::new(format!("cannot read password: {e}")))?;
                if again != first {
                    return Err(Failure::new("passwords do not match"));
                }
            }
            first
        };
        if password.is_empty() {
            return Err(Failure::new("password must not be empty"));
        }
        if password.len() > MAX_PASSWORD_BYTES {
            return Err(Failure::new(format!("password longer than {MAX_PASSWORD_BYTES} octets")));
        }
        Ok(password)
    }

    /// Asks only when interactive; otherwise the answer is no.
    fn ask(&mut self, question: &str) -> Result<bool, Failure> {
        if self.cli.non_interactive {
            return Ok(false);
        }
        self.ctx.prompter.confirm(question).map_err(|e| Failure::new(format!("cannot read answer: {e}")))
    }

    fn register(&mut self, username: &str) -> CmdResult {
        let (_, config) = self.load_config()?;
        let client = self.client(&config)?;
        let password = self.password("Login password: ", true)?;
        match client.register(username, &password) {
            Ok(()) => {
                self.say(format!("registered {username}"));
                Ok(())
            }
            Err(ClientError::UserExists) => Err(Failure::new(format!("user {username} already exists"))),
            Err(e) => Err(Failure::new(e.to_string())),
        }
    }

    fn login(&mut self, username: &str) -> CmdResult {
        let (path, mut config) = self.load_config()?;
        let client = self.client(&config)?;
        let password = self.password("Login password: ", false)?;
        let token = match client.login(username, &password) {
            Ok(token) => token,
            Err(ClientError::AuthenticationFailed) => return Err(Failure::new("authentication error")),
            Err(e) => return Err(Failure::new(e.to_string())),
        };
        config.server_url = Some(client.base_url().to_string());
        config.username = Some(username.to_owned());
        config.token = Some(token.token);
        config.token_expires_at = Some(token.expires_at);
        config.save(&path).map_err(|e| Failure::new(e.to_string()))?;
        self.say(format!(
            "logged in as {username}; session valid until {}",
            token.expires_at.to_rfc3339_opts(SecondsFormat::Secs, true)
        ));
        Ok(())
    }

    fn logout(&mut self) -> CmdResult {
        let (path, mut config) = self.load_config()?;
        if let Some(token) = config.token.clone() {
            match self.client(&config).and_then(|c| c.logout(&token).map_err(|e| Failure::new(e.to_string()))) {
                Ok(()) => {}
                Err(f) => {
                    self.warn(format!("could not end the session on the server ({}); forgetting it locally", f.message))
                }
            }
        }
        config.clear_session();
        config.save(&path).map_err(|e| Failure::new(e.to_string()))?;
        self.say("logged out");
        Ok(())
    }

    fn upload(&mut self, args: &UploadArgs) -> CmdResult {
        let (_, config) = self.load_config()?;
        let session = self.stored_session(&config)?;
        let client = self.client(&config)?;

        match std::fs::metadata(&args.path) {
            Ok(meta) if meta.is_file() => {}
            Ok(_) => return Err(Failure::new(format!("cannot read {}: not a regular file", args.path.display()))),
            Err(e) => return Err(Failure::new(format!("cannot read {}: {e}", args.path.display()))),
        }

        let password = self.password("Encryption password: ", true)?;
        if password.chars().count() < RECOMMENDED_PASSPHRASE_CHARS {
            self.warn(format!(
                "encryption passphrase is shorter than {RECOMMENDED_PASSPHRASE_CHARS} characters; long passphrases resist brute force far better"
            ));
        }
        let iterations = args.iterations.or(config.default_iterations).unwrap_or(DEFAULT_ITERATIONS);
        let mut request = UploadRequest::new(&args.path, password.into_bytes())
            .delete_original(args.delete_original)
            .iterations(iterations);
        if let Some(name) = &args.name {
            request = request.remote_name(name.clone());
        }

        let object = workflows::upload_file(&session, &client, &request).map_err(workflow_failure)?;
        self.say(format!("uploaded {} ({} octets)", object.name, object.size));

        if !args.delete_original {
            let question =
                format!("Delete the original {} now that it is uploaded? (recommended)", args.path.display());
            if self.ask(&question)? {
                std::fs::remove_file(&args.path).map_err(|e| {
                    Failure::new(format!("uploaded, but could not delete {}: {e}", args.path.display()))
                })?;
                self.say(format!("deleted {}", args.path.display()));
            }
        } else {
            self.say(format!("deleted {}", args.path.display()));
        }
        Ok(())
    }

    fn download(&mut self, args: &DownloadArgs) -> CmdResult {
        let (_, config) = self.load_config()?;
        let session = self.stored_session(&config)?;
        let client = self.client(&config)?;
        let dest = args.out.clone().unwrap_or_else(|| PathBuf::from(workflows::default_local_name(&args.name)));
        if dest.symlink_metadata().is_ok() {
            return Err(Failure::new(format!("destination {} already exists", dest.display())));
        }

        let password = self.password("Encryption password: ", false)?;
        let request = DownloadRequest::new(&args.name, password.into_bytes(), &dest).delete_remote(args.delete_remote);
        let saved = workflows::download_file(&session, &client, &request).map_err(workflow_failure)?;
        self.say(format!("saved {}", saved.display()));

        let delete =
            args.delete_remote || self.ask(&format!("Delete the encrypted copy {} from the cloud?", args.name))?;
        if delete && !args.delete_remote {
            use crate::storage::BlobBackend;
            client
                .delete(&session, &args.name)
                .map_err(|e| Failure::new(format!("saved, but could not delete {}: {e}", args.name)))?;
        }
        if delete {
            self.say(format!("deleted remote {}", args.name));
        }
        Ok(())
    }

    fn list(&mut self) -> CmdResult {
        let (_, config) = self.load_config()?;
        let session = self.stored_session(&config)?;
        let client = self.client(&config)?;
        let objects = workflows::list_remote(&session, &client).map_err(workflow_failure)?;
        for object in objects {
            self.say(format!(
                "{}\t{}\t{}",
                object.name,
                object.size,
                object.modified_at.to_rfc3339_opts(SecondsFormat::Secs, true)
            ));
        }
        Ok(())
    }

    fn serve(&mut self, args: &ServeArgs) -> CmdResult {
        let env = self.ctx.env;
        let mut config = ServiceConfig::from_lookup(env).map_err(|e| Failure::new(e.to_string()))?;
        if let Some(bind) = &args.bind {
            config.bind_address = bind.clone();
        }
        if let Some(dir) = &args.data_dir {
            config.data_dir = dir.clone();
        }
        self.say(format!("serving on http://{} (data in {})", config.bind_address, display(&config.data_dir)));
        service::serve(config).map_err(|e| Failure::new(e.to_string()))
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn workflow_failure(e: WorkflowError) -> Failure {
    match e {
        WorkflowError::PasswordInvalid => Failure {
            code: EXIT_PASSWORD_REJECTED,
            message: "password rejected: it does not match the one used to encrypt this file".into(),
        },
        WorkflowError::Storage(StorageError::AuthRequired) => Failure::new(RELOGIN),
        WorkflowError::Storage(StorageError::NotFound) => Failure::new("no such file in the cloud"),
        other => Failure::new(other.to_string()),
    }
}
