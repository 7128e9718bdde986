use std::collections::VecDeque;
use std::io::{self, BufRead, Write};

/// Source of interactive answers.
pub trait Prompter {
    /// Reads a secret without echoing it.
    fn password(&mut self, prompt: &str) -> io::Result<String>;

    /// Yes/no question; anything but an explicit yes is no.
    fn confirm(&mut self, question: &str) -> io::Result<bool>;
}

/// Reads from the controlling terminal.
#[derive(Debug, Default)]
pub struct TerminalPrompter;

impl Prompter for TerminalPrompter {
    fn password(&mut self, prompt: &str) -> io::Result<String> {
        rpassword::prompt_password(prompt)
    }

    fn confirm(&mut self, question: &str) -> io::Result<bool> {
        eprint!("{question} [y/N] ");
        io::stderr().flush()?;
        let mut line = String::new();
        io::stdin().lock().read_line(&mut line)?;
        Ok(matches!(line.trim().to_ascii_lowercase().as_str(), "y" | "yes"))
    }
}

/// Replays canned answers; running out is an error rather than a hang.
#[derive(Debug, Default)]
pub struct ScriptedPrompter {
    passwords: VecDeque<String>,
    answers: VecDeque<bool>,
    /// Every prompt shown, in order.
    pub asked: Vec<String>,
}

impl ScriptedPrompter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_password(mut self, password: impl Into<String>) -> Self {
        self.passwords.push_back(password.into());
        self
    }

    pub fn with_answer(mut self, yes: bool) -> Self {
        self.answers.push_back(yes);
        self
    }
}

fn exhausted(what: &str) -> io::Error {
    io::Error::new(io::ErrorKind::UnexpectedEof, format!("no scripted {what} left"))
}

impl Prompter for ScriptedPrompter {
    fn password(&mut self, prompt: &str) -> io::Result<String> {
        self.asked.push(prompt.to_owned());
        self.passwords.pop_front().ok_or_else(|| exhausted("password"))
    }

    fn confirm(&mut self, question: &str) -> io::Result<bool> {
        self.asked.push(question.to_owned());
        self.answers.pop_front().ok_or_else(|| exhausted("answer"))
    }
}
