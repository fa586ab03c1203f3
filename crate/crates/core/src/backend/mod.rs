//! Chat-completion backends. Both agents talk through the same interface:
//! an OpenAI-compatible HTTP client for live runs and a scripted mock for
//! deterministic replay.

mod http;
mod mock;

pub use http::HttpBackend;
pub use mock::{MockBackend, MockCompletion, MockScript};

use crate::error::{Result, SptError};
use crate::types::McqItem;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }

    fn role_tag(&self) -> &'static str {
        match self.role {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpOpenAiCompatible,
    ScriptedMock,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Base URL for HTTP backends; `/v1/chat/completions` is appended unless
    /// the URL already ends with `/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// Generator answer calls always run at temperature 0; this is the
    /// default for plain `complete` calls.
    pub temperature: f64,
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
    pub timeout_secs: u64,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    /// Max concurrent in-flight HTTP requests.
    pub max_in_flight: usize,
    /// Path to a [`MockScript`] JSON file, for the scripted mock.
    pub mock_script: Option<PathBuf>,
    /// Re-asks of the final answer turn before an answer counts as
    /// unparseable.
    pub re_asks: u32,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::ScriptedMock,
            endpoint: "https://api.openai.com".to_string(),
            model: "gpt-4".to_string(),
            temperature: 0.0,
            max_retries: 3,
            retry_backoff_ms: 200,
            timeout_secs: 60,
            api_key_env: "OPENAI_API_KEY".to_string(),
            max_in_flight: 8,
            mock_script: None,
            re_asks: 1,
        }
    }
}

impl BackendConfig {
    pub fn mock(script: PathBuf) -> Self {
        Self { kind: BackendKind::ScriptedMock, mock_script: Some(script), ..Self::default() }
    }
}

pub enum Backend {
    Http(HttpBackend),
    Mock(MockBackend),
}

impl Backend {
    pub fn from_config(config: &BackendConfig) -> Result<Self> {
        match config.kind {
            BackendKind::HttpOpenAiCompatible => Ok(Backend::Http(HttpBackend::new(config)?)),
            BackendKind::ScriptedMock => {
                let path = config.mock_script.as_ref().ok_or_else(|| {
                    SptError::InvalidConfig("scripted_mock backend requires a mock_script path".into())
                })?;
                Ok(Backend::Mock(MockBackend::from_file(path)?))
            }
        }
    }

    pub fn from_script(script: MockScript) -> Self {
        Backend::Mock(MockBackend::new(script))
    }

    /// Sends a chat request and returns the assistant text.
    pub fn complete(&self, messages: &[ChatMessage], temperature: f64) -> Result<String> {
        validate_messages(messages)?;
        match self {
            Backend::Http(http) => http.complete(messages, temperature),
            Backend::Mock(mock) => mock.complete(messages),
        }
    }
}

fn validate_messages(messages: &[ChatMessage]) -> Result<()> {
    if messages.is_empty() {
        return Err(SptError::InvalidRequest("message list is empty".into()));
    }
    if messages[0].role != Role::System {
        return Err(SptError::InvalidRequest("first message must have role system".into()));
    }
    Ok(())
}

/// Stable fingerprint of a full message list: sha-256 over role-tagged,
/// separator-delimited contents, rendered as lowercase hex.
pub fn messages_fingerprint(messages: &[ChatMessage]) -> String {
    let mut hasher = Sha256::new();
    for message in messages {
        hasher.update(message.role_tag().as_bytes());
        hasher.update([0x1f]);
        hasher.update(message.content.as_bytes());
        hasher.update([0x1e]);
    }
    hex::encode(hasher.finalize())
}

/// Stable fingerprint of a bare prompt text, used by the mock answer table.
pub fn prompt_fingerprint(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Renders an item the way the generator sees it: question, numbered
/// choices, and the first-turn answer cue.
pub fn render_mcq_question(item: &McqItem) -> String {
    let mut out = item.question.clone();
    for (i, choice) in item.choices.iter().enumerate() {
        out.push_str(&format!("\n{}. {}", i + 1, choice));
    }
    out.push_str("\nThe correct answer is:");
    out
}

pub const FINAL_ANSWER_CUE: &str = "Therefore, the number of the correct answer is:";

/// First standalone integer in `1..=n_choices` found in `reply`, converted
/// to a 0-based index. Digit runs out of range are skipped.
pub fn extract_choice_index(reply: &str, n_choices: usize) -> Option<usize> {
    let mut digits = String::new();
    let mut chars = reply.chars().peekable();
    while let Some(ch) = chars.next() {
        if ch.is_ascii_digit() {
            digits.push(ch);
            let run_ends = !chars.peek().is_some_and(|c| c.is_ascii_digit());
            if run_ends {
                if let Ok(value) = digits.parse::<usize>() {
                    if (1..=n_choices).contains(&value) {
                        return Some(value - 1);
                    }
                }
                digits.clear();
            }
        }
    }
    None
}

/// Two-turn answer flow: the generator first answers freely at temperature 0,
/// then is asked for the choice number, which is extracted from the reply.
/// Retries the final turn `re_asks` times before failing as unparseable.
pub fn answer_mcq(backend: &Backend, system_prompt: &str, item: &McqItem, re_asks: u32) -> Result<usize> {
    item.validate()?;

    // Mock shortcut: scripted answers keyed by (prompt fingerprint, item id).
    if let Backend::Mock(mock) = backend {
        if let Some(index) = mock.lookup_answer(system_prompt, &item.id) {
            return match usize::try_from(index).ok().filter(|i| *i < item.choices.len()) {
                Some(i) => Ok(i),
                None => Err(SptError::UnparseableAnswer),
            };
        }
    }

    let turn_one = vec![
        ChatMessage::system(system_prompt),
        ChatMessage::user(render_mcq_question(item)),
    ];
    let free_answer = backend.complete(&turn_one, 0.0)?;

    let mut turn_two = turn_one;
    turn_two.push(ChatMessage::assistant(free_answer));
    turn_two.push(ChatMessage::user(FINAL_ANSWER_CUE));

    for _ in 0..=re_asks {
        let reply = backend.complete(&turn_two, 0.0)?;
        if let Some(index) = extract_choice_index(&reply, item.choices.len()) {
            return Ok(index);
        }
    }
    Err(SptError::UnparseableAnswer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extractor_parses_direct_and_embedded_integers() {
        assert_eq!(extract_choice_index("2", 3), Some(1));
        assert_eq!(extract_choice_index("The answer is option 3.", 3), Some(2));
        assert_eq!(extract_choice_index("none of these", 3), None);
    }

    #[test]
    fn extractor_skips_out_of_range_runs() {
        assert_eq!(extract_choice_index("option 12, so 2", 3), Some(1));
        assert_eq!(extract_choice_index("0 or 5", 4), None);
        // huge runs must not panic or wrap
        assert_eq!(extract_choice_index("999999999999999999999999 then 1", 3), Some(0));
    }

    #[test]
    fn fingerprints_are_stable_and_role_sensitive(){
        let a = vec![ChatMessage::system("s"), ChatMessage::user("u")];
        let b = vec![ChatMessage::system("s"), ChatMessage::assistant("u")];
        assert_eq!(messages_fingerprint(&a), messages_fingerprint(&a));
        assert_ne!(messages_fingerprint(&a), messages_fingerprint(&b));
    }

    #[test]
    fn empty_messages_rejected() {
        let backend = Backend::from_script(MockScript::default());
        assert!(matches!(backend.complete(&[], 0.0), Err(SptError::InvalidRequest(_))));
        let not_system = [ChatMessage::user("hi")];
        assert!(matches!(backend.complete(&not_system, 0.0), Err(SptError::InvalidRequest(_))));
    }

    #[test]
    fn question_rendering_numbers_choices_from_one() {
        let item = McqItem::new(
            "q".into(),
            "Pick one.".into(),
            vec!["a".into(), "b".into(), "c".into()],
            0,
        )
        .unwrap();
        assert_eq!(
            render_mcq_question(&item),
            "Pick one.\n1. a\n2. b\n3. c\nThe correct answer is:"
        );
    }
}
