use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::ExtractorConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: "assistant".into(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("API key variable `{0}` is not set")]
    MissingApiKey(String),
    #[error("request failed: {0}")]
    Transport(String),
    #[error("provider answered with status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    Shape(String),
    #[error("no fixture recorded for this text (expected {0})")]
    MissingFixture(String),
    #[error("fixture {0} has no more recorded responses")]
    FixtureExhausted(String),
    #[error("unreadable fixture {path}: {message}")]
    BadFixture { path: String, message: String },
}

/// A chat-completion backend: messages in, one text completion out.
pub trait ChatClient: Send + Sync {
    fn complete(&self, messages: &[Message]) -> Result<String, ProviderError>;
}

/// OpenAI-compatible chat-completion client.
pub struct HttpChatClient {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    temperature: f64,
    api_key_env: String,
}

impl HttpChatClient {
    pub fn new(config: &ExtractorConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(config.timeout())
            .timeout_connect(Duration::from_secs(config.timeout_secs.min(10)))
            .build();
        Self {
            agent,
            endpoint: config.provider_endpoint.clone(),
            model: config.model_name.clone(),
            temperature: config.temperature,
            api_key_env: config.api_key_env.clone(),
        }
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, messages: &[Message]) -> Result<String, ProviderError> {
        let key = std::env::var(&self.api_key_env).map_err(|_| ProviderError::MissingApiKey(self.api_key_env.clone()))?;
        let body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "n": 1,
            "messages": messages,
        });
        let response = self
            .agent
            .post(&self.endpoint)
            .set("Authorization", &format!("Bearer {key}"))
            .send_json(body);
        let response = match response {
            Ok(r) => r,
            Err(ureq::Error::Status(status, r)) => {
                let body = r.into_string().unwrap_or_default();
                return Err(ProviderError::Status { status, body });
            }
            Err(e) => return Err(ProviderError::Transport(e.to_string())),
        };
        let value: Value = response.into_json().map_err(|e| ProviderError::Shape(e.to_string()))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Shape("missing choices[0].message.content".into()))
    }
}

/// Answers with a fixed list of responses, in order. Used to author fixtures
/// and in tests.
#[derive(Debug, Default)]
pub struct ScriptedClient {
    responses: Mutex<VecDeque<String>>,
}

impl ScriptedClient {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self {
            responses: Mutex::new(responses.into_iter().map(Into::into).collect()),
        }
    }

    pub fn remaining(&self) -> usize {
        self.responses.lock().unwrap().len()
    }
}

impl ChatClient for ScriptedClient {
    fn complete(&self, _messages: &[Message]) -> Result<String, ProviderError> {
        self.responses
            .lock()
            .unwrap()
            .pop_front()
            .ok_or_else(|| ProviderError::FixtureExhausted("script".into()))
    }
}
