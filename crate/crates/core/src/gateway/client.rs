use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

use super::audit::{now_ms, AuditLog, AuditRecord, CallStatus};
use super::schema;
use super::transport::{ChatRequest, ProviderConfig, Transport, TransportFailure};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("transport failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("no schema-valid reply after {attempts} attempts: {}", errors.join("; "))]
    Schema { attempts: u32, errors: Vec<String> },
    #[error("provider refused the request (HTTP {status}): {body}")]
    ProviderRefused { status: u16, body: String },
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub schema: Value,
    pub temperature: Option<f64>,
    /// Free-form tag copied into the audit record, e.g. "manufacturer-2/decide/p3".
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredReply {
    pub doc: Value,
    pub attempts: u32,
}

pub trait Sleeper: Send + Sync {
    fn sleep(&self, d: Duration);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Records requested delays instead of sleeping.
#[derive(Debug, Default)]
pub struct RecordingSleeper {
    delays: Mutex<Vec<Duration>>,
}

impl RecordingSleeper {
    pub fn delays(&self) -> Vec<Duration> {
        self.delays.lock().unwrap().clone()
    }
}

impl Sleeper for RecordingSleeper {
    fn sleep(&self, d: Duration) {
        self.delays.lock().unwrap().push(d);
    }
}

#[derive(Debug)]
struct InFlight {
    busy: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

struct Slot<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self) -> Slot<'_> {
        let mut busy = self.busy.lock().unwrap();
        while *busy >= self.cap {
            busy = self.freed.wait(busy).unwrap();
        }
        *busy += 1;
        Slot(self)
    }
}

impl Drop for Slot<'_> {
    fn drop(&mut self) {
        *self.0.busy.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

/// Delay before retry number `retry` (1-based): `base * 2^(retry - 1)`.
pub fn backoff_delay(base_secs: f64, retry: u32) -> Duration {
    Duration::from_secs_f64(base_secs * 2f64.powi(retry as i32 - 1))
}

/// Pulls a JSON value out of model text, tolerating code fences and chatter
/// around a single top-level object.
pub fn extract_json(content: &str) -> Result<Value, String> {
    let trimmed = content.trim();
    if let Ok(v) = serde_json::from_str(trimmed) {
        return Ok(v);
    }
    match (trimmed.find('{'), trimmed.rfind('}')) {
        (Some(start), Some(end)) if start < end => serde_json::from_str(&trimmed[start..=end])
            .map_err(|e| format!("reply is not valid JSON: {e}")),
        _ => Err("reply contains no JSON object".into()),
    }
}

/// Schema-checked structured completions with retry and exponential backoff.
#[derive(Clone)]
pub struct Gateway {
    config: ProviderConfig,
    transport: Arc<dyn Transport>,
    sleeper: Arc<dyn Sleeper>,
    audit: AuditLog,
    in_flight: Arc<InFlight>,
}

impl Gateway {
    pub fn new(config: ProviderConfig, transport: Arc<dyn Transport>) -> Self {
        let cap = config.max_in_flight.max(1);
        Self {
            config,
            transport,
            sleeper: Arc::new(ThreadSleeper),
            audit: AuditLog::new(),
            in_flight: Arc::new(InFlight { busy: Mutex::new(0), freed: Condvar::new(), cap }),
        }
    }

    pub fn with_sleeper(mut self, sleeper: Arc<dyn Sleeper>) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn with_audit(mut self, audit: AuditLog) -> Self {
        self.audit = audit;
        self
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    pub fn complete_structured(&self, req: &CompletionRequest) -> Result<StructuredReply, GatewayError> {
        if req.system_prompt.trim().is_empty() || req.user_prompt.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("prompts must be non-empty".into()));
        }
        if !req.schema.is_object() {
            return Err(GatewayError::InvalidRequest("schema must be a JSON object".into()));
        }

        let _slot = self.in_flight.acquire();
        let started_ms = now_ms();
        let base_user = format!(
            "{}\n\nRespond with one JSON object that validates against this JSON schema:\n{}",
            req.user_prompt, req.schema
        );
        let mut user = base_user.clone();
        let mut failures: Vec<String> = Vec::new();
        let mut last_schema_errors: Option<Vec<String>>;
        let mut tokens = (None, None);
        let max_attempts = 1 + self.config.max_retries;

        let mut attempt = 0;
        let outcome = loop {
            attempt += 1;
            if attempt > 1 {
                self.sleeper.sleep(backoff_delay(self.config.backoff_base_secs, attempt - 1));
            }
            let chat = ChatRequest {
                model: self.config.model.clone(),
                temperature: req.temperature.unwrap_or(self.config.temperature),
                system: req.system_prompt.clone(),
                user: user.clone(),
            };
            match self.transport.send(&chat) {
                Ok(resp) => {
                    tokens = (resp.prompt_tokens, resp.completion_tokens);
                    let errors = match extract_json(&resp.content) {
                        Ok(doc) => {
                            let errs = schema::validate(&req.schema, &doc);
                            if errs.is_empty() {
                                break Ok(doc);
                            }
                            errs
                        }
                        Err(e) => vec![e],
                    };
                    failures.push(errors.join("; "));
                    user = format!(
                        "{base_user}\n\nYour previous reply was rejected for these reasons:\n- {}\nReply again with a single corrected JSON object.",
                        errors.join("\n- ")
                    );
                    last_schema_errors = Some(errors);
                }
                Err(failure) => {
                    failures.push(failure.to_string());
                    if !failure.is_retryable() {
                        if let TransportFailure::Status { code, body } = failure {
                            break Err(GatewayError::ProviderRefused { status: code, body });
                        }
                    }
                    last_schema_errors = None;
                }
            }
            if attempt >= max_attempts {
                break Err(match last_schema_errors.take() {
                    Some(errors) => GatewayError::Schema { attempts: attempt, errors },
                    None => GatewayError::Transport {
                        attempts: attempt,
                        message: failures.last().cloned().unwrap_or_default(),
                    },
                });
            }
        };

        let status = match &outcome {
            Ok(_) => CallStatus::Ok,
            Err(GatewayError::Schema { .. }) => CallStatus::SchemaError,
            Err(GatewayError::ProviderRefused { .. }) => CallStatus::ProviderRefused,
            Err(_) => CallStatus::TransportError,
        };
        self.audit.append(AuditRecord {
            seq: 0,
            label: req.label.clone(),
            provider: self.config.name.clone(),
            model: self.config.model.clone(),
            started_ms,
            finished_ms: now_ms(),
            attempts: attempt,
            errors: failures,
            status,
            prompt_tokens: tokens.0,
            completion_tokens: tokens.1,
        });
        outcome.map(|doc| StructuredReply { doc, attempts: attempt })
    }
}
