//! Registers a user, logs in, checks and revokes a session token.
//!
//!     cargo run --release --example auth_sessions

use chrono::Duration;
use vaultdrop::auth::{AuthError, AuthStore};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = AuthStore::in_memory().with_token_ttl(Duration::minutes(30));

    store.register("alice", "a long login password")?;
    match store.register("alice", "another password") {
        Err(AuthError::UserExists) => println!("second registration refused"),
        other => panic!("unexpected: {other:?}"),
    }
    match store.register("bob", "short") {
        Err(e) => println!("bob: {e}"),
        Ok(_) => unreachable!(),
    }

    // Wrong password and unknown user fail identically.
    for (user, pw) in [("alice", "wrong password!"), ("mallory", "whatever-pass")] {
        println!("{user}: {}", store.authenticate(user, pw).unwrap_err());
    }

    let session = store.authenticate("alice", "a long login password")?;
    println!("token for {} expires {}", session.username, session.expires_at);
    assert_eq!(store.validate_token(&session.token)?, "alice");

    store.revoke(&session.token);
    println!("after logout: {}", store.validate_token(&session.token).unwrap_err());
    Ok(())
}
