#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Map, Value};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shortage"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn core_fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

type Handler = dyn Fn(&Value) -> (u16, Value) + Send + Sync;

/// An OpenAI-style chat endpoint on a loopback port.
pub struct MockProvider {
    pub base_url: String,
    pub calls: Arc<AtomicUsize>,
}

impl MockProvider {
    pub fn start(handler: impl Fn(&Value) -> (u16, Value) + Send + Sync + 'static) -> Self {
        let calls = Arc::new(AtomicUsize::new(0));
        let state: (Arc<Handler>, Arc<AtomicUsize>) = (Arc::new(handler), calls.clone());
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        listener.set_nonblocking(true).unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().unwrap();
            rt.block_on(async move {
                let app = Router::new().route("/v1/chat/completions", post(chat)).with_state(state);
                let listener = tokio::net::TcpListener::from_std(listener).unwrap();
                axum::serve(listener, app).await.unwrap();
            });
        });
        Self { base_url: format!("http://{addr}/v1"), calls }
    }

    /// Answers every request with a document filled in from the schema in the prompt.
    pub fn schema_filling() -> Self {
        Self::start(|body| (200, chat_reply(&answer_for(body).to_string())))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Provider config JSON pointing at this mock.
    pub fn config(&self, key_env: &str, max_retries: u32) -> Value {
        json!({
            "name": "mock", "kind": "open_ai", "base_url": self.base_url, "model": "mock-model",
            "api_key_env": key_env, "max_retries": max_retries, "backoff_base_secs": 0.0, "timeout_secs": 5.0,
        })
    }
}

async fn chat(State((handler, calls)): State<(Arc<Handler>, Arc<AtomicUsize>)>, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    calls.fetch_add(1, Ordering::SeqCst);
    let (status, reply) = handler(&body);
    (StatusCode::from_u16(status).unwrap(), Json(reply))
}

pub fn chat_reply(content: &str) -> Value {
    json!({"choices": [{"message": {"role": "assistant", "content": content}}], "usage": {"prompt_tokens": 10, "completion_tokens": 5}})
}

pub fn user_prompt(body: &Value) -> String {
    body["messages"].as_array().unwrap().iter().rev().find(|m| m["role"] == "user").unwrap()["content"].as_str().unwrap().to_owned()
}

/// The schema the gateway appended to the prompt.
pub fn schema_in(prompt: &str) -> Value {
    let marker = "validates against this JSON schema:\n";
    let start = prompt.find(marker).unwrap() + marker.len();
    let line = prompt[start..].lines().next().unwrap();
    serde_json::from_str(line).unwrap()
}

pub fn answer_for(body: &Value) -> Value {
    fill(&schema_in(&user_prompt(body)), 0)
}

/// A schema-valid value: middle enum members, small numbers, periods counted from 1.
pub fn fill(schema: &Value, index: usize) -> Value {
    if let Some(options) = schema["enum"].as_array() {
        return options[options.len() / 2].clone();
    }
    match schema["type"].as_str().unwrap_or("object") {
        "object" => {
            let mut out = Map::new();
            for key in schema["required"].as_array().into_iter().flatten() {
                let key = key.as_str().unwrap();
                out.insert(key.to_owned(), fill(&schema["properties"][key], index));
            }
            Value::Object(out)
        }
        "array" => {
            let n = schema["minItems"].as_u64().unwrap_or(0) as usize;
            Value::Array((0..n).map(|i| fill(&schema["items"], i)).collect())
        }
        "integer" => json!(index + 1),
        "number" => json!(0.1),
        "boolean" => json!(true),
        _ => json!("Mock reply text."),
    }
}
