//! Where replies come from: recorded fixtures or a chat-completion endpoint.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::GatewayError;

/// The two generation stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Instructions,
    Tree,
}

impl Stage {
    /// Fixture file name for the `index`-th generation (0-based; files are
    /// numbered from 1).
    pub fn file_name(self, index: usize) -> String {
        match self {
            Stage::Instructions => format!("steps_{}.txt", index + 1),
            Stage::Tree => format!("tree_{}.json", index + 1),
        }
    }
}

/// Trim, collapse whitespace and lowercase.
pub fn normalize_demand(demand: &str) -> String {
    demand.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// Fixture directory name of a demand: the first 16 hex digits of the
/// SHA-256 of its normalized form.
pub fn demand_key(demand: &str) -> String {
    let digest = Sha256::digest(normalize_demand(demand).as_bytes());
    hex::encode(&digest[..8])
}

/// One completion per call. Implementations must be usable from several
/// threads at once.
pub trait Backend: Send + Sync {
    fn complete(&self, stage: Stage, demand: &str, index: usize, prompt: &str) -> Result<String, GatewayError>;
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(&self, stage: Stage, demand: &str, index: usize, prompt: &str) -> Result<String, GatewayError> {
        (**self).complete(stage, demand, index, prompt)
    }
}

/// Replays `<dir>/<demand key>/steps_k.txt` and `tree_k.json`. The prompt is
/// ignored, so a recorded run replays byte for byte.
#[derive(Debug, Clone)]
pub struct FixtureBackend {
    dir: PathBuf,
}

impl FixtureBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureBackend { dir: dir.into() }
    }

    pub fn path_for(&self, stage: Stage, demand: &str, index: usize) -> PathBuf {
        self.dir.join(demand_key(demand)).join(stage.file_name(index))
    }
}

impl Backend for FixtureBackend {
    fn complete(&self, stage: Stage, demand: &str, index: usize, _prompt: &str) -> Result<String, GatewayError> {
        let path = self.path_for(stage, demand, index);
        std::fs::read_to_string(&path)
            .map_err(|e| GatewayError::BackendUnavailable(format!("fixture-miss: {}: {e}", path.display())))
    }
}

/// Connection settings for a chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiveConfig {
    /// Full URL of the completions route.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the API key. No auth header is sent when
    /// it is unset.
    pub api_key_var: String,
    pub auth_header: String,
    pub timeout: Duration,
    /// Replies are written here in fixture layout when set.
    pub archive: Option<PathBuf>,
}

impl LiveConfig {
    pub fn new(endpoint: &str, model: &str) -> Self {
        LiveConfig {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            api_key_var: "TREEPLAN_API_KEY".to_string(),
            auth_header: "Authorization".to_string(),
            timeout: Duration::from_secs(60),
            archive: None,
        }
    }
}

/// Speaks the common chat-completion contract: POST `{model, messages}`,
/// read `choices[0].message.content`.
#[derive(Debug)]
pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        Ok(LiveBackend { config, client })
    }

    fn archive(&self, dir: &Path, stage: Stage, demand: &str, index: usize, content: &str) -> Result<(), GatewayError> {
        let target = dir.join(demand_key(demand));
        let io = |e: std::io::Error| GatewayError::Archive(format!("{}: {e}", target.display()));
        std::fs::create_dir_all(&target).map_err(io)?;
        std::fs::write(target.join("demand.txt"), format!("{}\n", demand.trim())).map_err(io)?;
        std::fs::write(target.join(stage.file_name(index)), content).map_err(io)
    }
}

impl Backend for LiveBackend {
    fn complete(&self, stage: Stage, demand: &str, index: usize, prompt: &str) -> Result<String, GatewayError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = self.client.post(&self.config.endpoint).json(&body);
        if let Ok(key) = std::env::var(&self.config.api_key_var) {
            request = request.header(self.config.auth_header.as_str(), format!("Bearer {key}"));
        }
        let response = request.send().map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        if !status.is_success() {
            return Err(GatewayError::BackendUnavailable(format!("HTTP {status}: {text}")));
        }
        let content = serde_json::from_str::<Value>(&text)
            .ok()
            .and_then(|v| v["choices"][0]["message"]["content"].as_str().map(str::to_string))
            .ok_or_else(|| GatewayError::MalformedResponse { reason: "no choices[0].message.content".into(), body: text })?;
        if let Some(dir) = &self.config.archive {
            self.archive(dir, stage, demand, index, &content)?;
        }
        Ok(content)
    }
}
