use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use log::{debug, info};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::chat::{parse_response, ChatMessage, ChatRequest};
use crate::error::AgentError;

/// Blocking chat-completion transport.
pub trait Transport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatMessage, AgentError>;

    /// Model name placed in outgoing requests.
    fn model(&self) -> &str {
        "mock"
    }

    fn temperature(&self) -> Option<f64> {
        None
    }
}

/// SHA-256 of the serialized request body, lowercase hex.
pub fn request_hash(request: &ChatRequest) -> String {
    let body = serde_json::to_vec(request).expect("request serializes");
    hex::encode(Sha256::digest(&body))
}

/// Where requests go: a live endpoint or a fixture directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransportConfig {
    Http {
        base_url: String,
        model: String,
        /// Name of the environment variable holding the bearer token.
        #[serde(default = "default_token_env")]
        token_env: String,
        #[serde(default)]
        temperature: Option<f64>,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
    Mock { dir: PathBuf },
}

fn default_token_env() -> String {
    "FLUIDC_API_KEY".into()
}

fn default_timeout() -> u64 {
    120
}

impl TransportConfig {
    pub fn build(&self) -> Result<Box<dyn Transport>, AgentError> {
        Ok(match self {
            TransportConfig::Http {
                base_url,
                model,
                token_env,
                temperature,
                timeout_secs,
            } => Box::new(HttpTransport::new(
                base_url,
                model,
                token_env,
                *temperature,
                Duration::from_secs(*timeout_secs),
            )?),
            TransportConfig::Mock { dir } => Box::new(MockTransport::from_dir(dir)?),
        })
    }
}

/// OpenAI-style `POST {base_url}/chat/completions`.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    token_env: String,
    temperature: Option<f64>,
}

impl HttpTransport {
    pub fn new(
        base_url: &str,
        model: &str,
        token_env: &str,
        temperature: Option<f64>,
        timeout: Duration,
    ) -> Result<Self, AgentError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        Ok(HttpTransport {
            client,
            url: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            model: model.into(),
            token_env: token_env.into(),
            temperature,
        })
    }
}

impl Transport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<ChatMessage, AgentError> {
        let mut req = self.client.post(&self.url).json(request);
        match std::env::var(&self.token_env) {
            Ok(token) => req = req.bearer_auth(token),
            Err(_) => debug!("{} is unset; sending without authorization", self.token_env),
        }
        info!("{} -> {}", request.agent, self.url);
        let resp = req.send().map_err(|e| AgentError::Transport(e.without_url().to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(AgentError::Transport(format!("endpoint returned {status}")));
        }
        let body: Value = resp
            .json()
            .map_err(|e| AgentError::Transport(e.without_url().to_string()))?;
        parse_response(&body)
            .ok_or_else(|| AgentError::Transport("response has no assistant message".into()))
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn temperature(&self) -> Option<f64> {
        self.temperature
    }
}

/// Offline transport answering from fixtures.
///
/// Lookup order: `<request-hash>.json`, then `<agent>_<k>.json` where `k`
/// counts that agent's calls from 1.
#[derive(Default)]
pub struct MockTransport {
    fixtures: HashMap<String, Value>,
    counters: Mutex<HashMap<String, usize>>,
    log: Mutex<Vec<ChatRequest>>,
}

impl MockTransport {
    pub fn from_dir(dir: &Path) -> Result<Self, AgentError> {
        let mut fixtures = HashMap::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
                let body: Value = serde_json::from_slice(&fs::read(&path)?).map_err(|e| {
                    AgentError::Transport(format!("fixture {}: {e}", path.display()))
                })?;
                fixtures.insert(stem, body);
            }
        }
        Ok(Self::from_map(fixtures))
    }

    pub fn from_map(fixtures: HashMap<String, Value>) -> Self {
        MockTransport {
            fixtures,
            ..Default::default()
        }
    }

    /// Requests received so far, in arrival order.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.log.lock().unwrap().clone()
    }

    pub fn calls_for(&self, agent: &str) -> usize {
        self.counters.lock().unwrap().get(agent).copied().unwrap_or(0)
    }
}

impl Transport for MockTransport {
    fn complete(&self, request: &ChatRequest) -> Result<ChatMessage, AgentError> {
        let call = {
            let mut counters = self.counters.lock().unwrap();
            let c = counters.entry(request.agent.clone()).or_insert(0);
            *c += 1;
            *c
        };
        self.log.lock().unwrap().push(request.clone());
        let hash = request_hash(request);
        let body = self
            .fixtures
            .get(&hash)
            .or_else(|| self.fixtures.get(&format!("{}_{call}", request.agent)))
            .ok_or_else(|| AgentError::FixtureMissing {
                agent: request.agent.clone(),
                hash: hash.clone(),
                call,
            })?;
        parse_response(body).ok_or_else(|| {
            AgentError::Transport(format!("fixture for {} call {call} is not a message", request.agent))
        })
    }
}

/// Forwards to another transport and saves each response as
/// `<agent>_<k>.json`, producing a directory [`MockTransport`] can replay.
pub struct RecordingTransport<T> {
    inner: T,
    dir: PathBuf,
    counters: Mutex<HashMap<String, usize>>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> Result<Self, AgentError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(RecordingTransport {
            inner,
            dir,
            counters: Mutex::new(HashMap::new()),
        })
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatMessage, AgentError> {
        let reply = self.inner.complete(request)?;
        let call = {
            let mut counters = self.counters.lock().unwrap();
            let c = counters.entry(request.agent.clone()).or_insert(0);
            *c += 1;
            *c
        };
        let path = self.dir.join(format!("{}_{call}.json", request.agent));
        fs::write(path, serde_json::to_vec_pretty(&reply).expect("message serializes"))?;
        Ok(reply)
    }

    fn model(&self) -> &str {
        self.inner.model()
    }

    fn temperature(&self) -> Option<f64> {
        self.inner.temperature()
    }
}
