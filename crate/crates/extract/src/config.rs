use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Calls a chat-completion endpoint over HTTPS.
    Live,
    /// Replays recorded responses from `fixture_dir`.
    Fixture,
}

/// Settings of the extraction pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractorConfig {
    pub provider_endpoint: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_repair_retries: u32,
    pub mode: Mode,
    pub fixture_dir: Option<PathBuf>,
    /// Live mode only: also write every trace as a fixture into this directory.
    pub record_dir: Option<PathBuf>,
    pub timeout_secs: u64,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            provider_endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4o".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            temperature: 0.0,
            max_repair_retries: 2,
            mode: Mode::Live,
            fixture_dir: None,
            record_dir: None,
            timeout_secs: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("fixture mode requires a fixture directory")]
    MissingFixtureDir,
    #[error("temperature must lie in [0, 2], got {0}")]
    Temperature(f64),
    #[error("timeout must be positive")]
    Timeout,
    #[error("invalid value `{value}` for {var}")]
    Env { var: String, value: String },
}

impl ExtractorConfig {
    pub fn fixture(dir: impl Into<PathBuf>) -> Self {
        Self {
            mode: Mode::Fixture,
            fixture_dir: Some(dir.into()),
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if self.mode == Mode::Fixture && self.fixture_dir.is_none() {
            return Err(ConfigError::MissingFixtureDir);
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ConfigError::Temperature(self.temperature));
        }
        if self.timeout_secs == 0 {
            return Err(ConfigError::Timeout);
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    /// Reads `XLINT_LLM_*` variables on top of the defaults:
    /// `MODE`, `ENDPOINT`, `MODEL`, `API_KEY_ENV`, `TEMPERATURE`, `RETRIES`,
    /// `FIXTURES`, `RECORD` and `TIMEOUT_SECS`.
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|name| std::env::var(name).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        let get = |suffix: &str| {
            let var = format!("XLINT_LLM_{suffix}");
            lookup(&var).map(|value| (var, value))
        };
        fn parse<T: std::str::FromStr>((var, value): (String, String)) -> Result<T, ConfigError> {
            value.trim().parse().map_err(|_| ConfigError::Env { var, value })
        }
        if let Some((var, value)) = get("MODE") {
            config.mode = match value.trim().to_ascii_lowercase().as_str() {
                "live" => Mode::Live,
                "fixture" => Mode::Fixture,
                _ => return Err(ConfigError::Env { var, value }),
            };
        }
        if let Some((_, v)) = get("ENDPOINT") {
            config.provider_endpoint = v;
        }
        if let Some((_, v)) = get("MODEL") {
            config.model_name = v;
        }
        if let Some((_, v)) = get("API_KEY_ENV") {
            config.api_key_env = v;
        }
        if let Some(kv) = get("TEMPERATURE") {
            config.temperature = parse(kv)?;
        }
        if let Some(kv) = get("RETRIES") {
            config.max_repair_retries = parse(kv)?;
        }
        if let Some(kv) = get("TIMEOUT_SECS") {
            config.timeout_secs = parse(kv)?;
        }
        if let Some((_, v)) = get("FIXTURES") {
            config.fixture_dir = Some(v.into());
        }
        if let Some((_, v)) = get("RECORD") {
            config.record_dir = Some(v.into());
        }
        config.check()?;
        Ok(config)
    }
}
