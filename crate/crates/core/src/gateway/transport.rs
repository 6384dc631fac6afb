use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    OpenAi,
    Azure,
    Anthropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub name: String,
    pub kind: ProviderKind,
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_base_secs: f64,
    pub max_in_flight: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            name: "openai".into(),
            kind: ProviderKind::OpenAi,
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            temperature: 0.2,
            timeout_secs: 60.0,
            max_retries: 3,
            backoff_base_secs: 1.0,
            max_in_flight: 4,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(format!("temperature {} outside [0, 1]", self.temperature));
        }
        if !self.backoff_base_secs.is_finite() || self.backoff_base_secs < 0.0 {
            return Err("backoff_base_secs must be non-negative".into());
        }
        if self.max_in_flight == 0 {
            return Err("max_in_flight must be at least 1".into());
        }
        Ok(())
    }

    /// Reads the key from the configured environment variable.
    pub fn api_key(&self) -> Option<String> {
        std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty())
    }
}

/// Provider-neutral chat request handed to a [`Transport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChatResponse {
    pub content: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransportFailure {
    /// Connection problems and timeouts.
    Network(String),
    Status { code: u16, body: String },
}

impl TransportFailure {
    /// 429 and 5xx are worth retrying; other statuses are final.
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportFailure::Network(_) => true,
            TransportFailure::Status { code, .. } => *code == 429 || (500..600).contains(code),
        }
    }
}

impl std::fmt::Display for TransportFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransportFailure::Network(m) => write!(f, "network error: {m}"),
            TransportFailure::Status { code, body } => write!(f, "HTTP {code}: {body}"),
        }
    }
}

pub trait Transport: Send + Sync {
    fn send(&self, req: &ChatRequest) -> Result<ChatResponse, TransportFailure>;
}

/// A fully specified HTTP POST for one provider.
#[derive(Debug, Clone, PartialEq)]
pub struct HttpCall {
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: Value,
}

/// Builds the provider-specific path, headers and body for a chat request.
pub fn build_http_call(cfg: &ProviderConfig, api_key: &str, req: &ChatRequest) -> HttpCall {
    let base = cfg.base_url.trim_end_matches('/');
    match cfg.kind {
        ProviderKind::OpenAi => HttpCall {
            url: format!("{base}/chat/completions"),
            headers: vec![("Authorization".into(), format!("Bearer {api_key}"))],
            body: chat_body(req, true),
        },
        ProviderKind::Azure => HttpCall {
            url: format!("{base}/openai/deployments/{}/chat/completions?api-version=2024-06-01", req.model),
            headers: vec![("api-key".into(), api_key.to_owned())],
            body: chat_body(req, false),
        },
        ProviderKind::Anthropic => HttpCall {
            url: format!("{base}/messages"),
            headers: vec![
                ("x-api-key".into(), api_key.to_owned()),
                ("anthropic-version".into(), "2023-06-01".into()),
            ],
            body: json!({
                "model": req.model,
                "max_tokens": 4096,
                "temperature": req.temperature,
                "system": req.system,
                "messages": [{"role": "user", "content": req.user}],
            }),
        },
    }
}

fn chat_body(req: &ChatRequest, with_model: bool) -> Value {
    let mut body = json!({
        "temperature": req.temperature,
        "response_format": {"type": "json_object"},
        "messages": [
            {"role": "system", "content": req.system},
            {"role": "user", "content": req.user},
        ],
    });
    if with_model {
        body["model"] = json!(req.model);
    }
    body
}

/// Extracts the assistant text and token usage from a provider response body.
pub fn parse_http_response(kind: ProviderKind, body: &Value) -> Result<ChatResponse, String> {
    match kind {
        ProviderKind::OpenAi | ProviderKind::Azure => {
            let content = body
                .pointer("/choices/0/message/content")
                .and_then(Value::as_str)
                .ok_or("response has no choices[0].message.content")?;
            Ok(ChatResponse {
                content: content.to_owned(),
                prompt_tokens: body.pointer("/usage/prompt_tokens").and_then(Value::as_u64),
                completion_tokens: body.pointer("/usage/completion_tokens").and_then(Value::as_u64),
            })
        }
        ProviderKind::Anthropic => {
            let content = body
                .get("content")
                .and_then(Value::as_array)
                .and_then(|blocks| blocks.iter().find_map(|b| b.get("text").and_then(Value::as_str)))
                .ok_or("response has no text content block")?;
            Ok(ChatResponse {
                content: content.to_owned(),
                prompt_tokens: body.pointer("/usage/input_tokens").and_then(Value::as_u64),
                completion_tokens: body.pointer("/usage/output_tokens").and_then(Value::as_u64),
            })
        }
    }
}
