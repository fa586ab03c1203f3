//! OpenAI-compatible chat completions client with bounded concurrency and
//! exponential-backoff retries.

use super::{BackendConfig, ChatMessage};
use crate::error::{Result, SptError};
use serde::{Deserialize, Serialize};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

#[derive(Debug, Serialize)]
pub struct ChatCompletionRequest<'a> {
    pub model: &'a str,
    pub messages: &'a [ChatMessage],
    pub temperature: f64,
}

#[derive(Debug, Deserialize)]
struct ChatCompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Debug, Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

pub struct HttpBackend {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    api_key: Option<String>,
    max_retries: u32,
    retry_backoff: Duration,
    limiter: Semaphore,
}

impl HttpBackend {
    pub fn new(config: &BackendConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| SptError::Transport(e.to_string()))?;
        let base = config.endpoint.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/v1/chat/completions")
        };
        Ok(Self {
            client,
            url,
            model: config.model.clone(),
            api_key: std::env::var(&config.api_key_env).ok(),
            max_retries: config.max_retries,
            retry_backoff: Duration::from_millis(config.retry_backoff_ms),
            limiter: Semaphore::new(config.max_in_flight.max(1)),
        })
    }

    pub fn complete(&self, messages: &[ChatMessage], temperature: f64) -> Result<String> {
        let _permit = self.limiter.acquire();
        let body = ChatCompletionRequest { model: &self.model, messages, temperature };

        let mut last_error = None;
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.retry_backoff * 2u32.pow(attempt - 1));
            }
            let mut request = self.client.post(&self.url).json(&body);
            if let Some(key) = &self.api_key {
                request = request.bearer_auth(key);
            }
            match request.send() {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let parsed: ChatCompletionResponse = response
                            .json()
                            .map_err(|e| SptError::Transport(format!("bad response body: {e}")))?;
                        return parsed
                            .choices
                            .first()
                            .and_then(|c| c.message.content.clone())
                            .ok_or_else(|| SptError::Transport("response had no choices".into()));
                    }
                    let body = response.text().unwrap_or_default();
                    let err = SptError::Provider { status: status.as_u16(), body };
                    // 429 and 5xx are transient; anything else fails fast.
                    if status.as_u16() == 429 || status.is_server_error() {
                        last_error = Some(err);
                    } else {
                        return Err(err);
                    }
                }
                Err(e) => last_error = Some(SptError::Transport(e.to_string())),
            }
        }
        Err(last_error.unwrap_or_else(|| SptError::Transport("retries exhausted".into())))
    }
}

/// Minimal counting semaphore; caps concurrent in-flight requests.
struct Semaphore {
    state: Mutex<usize>,
    condvar: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(permits: usize) -> Self {
        Self { state: Mutex::new(permits), condvar: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut available = self.state.lock().unwrap();
        while *available == 0 {
            available = self.condvar.wait(available).unwrap();
        }
        *available -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.state.lock().unwrap() += 1;
        self.0.condvar.notify_one();
    }
}
