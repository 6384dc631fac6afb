//! Local HTTP control API: simulation sessions stepped one quarter at a time, with an
//! optional human in the FDA seat.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use shortage_core::agents::{
    announcement_text, build_context, validate_decision, Decision, LlmPolicy, Role, RoleContext, Script, ScriptStep,
    ScriptedPolicy, Severity,
};
use shortage_core::engine::{EngineError, Policies, Simulation, Stage, TrajectoryRecord};
use shortage_core::gateway::{Gateway, ProviderConfig, TemplateStore};
use shortage_core::market::SimConfig;

use crate::transport::HttpTransport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Auto,
    HumanFda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    AwaitingFda,
    Running,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PolicyChoice {
    #[default]
    Rule,
    Llm,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    #[serde(default)]
    config: SimConfig,
    #[serde(default)]
    mode: Mode,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    policies: PolicyChoice,
    #[serde(default)]
    case_id: Option<String>,
}

/// Body of `POST /sessions/{id}/fda-decision`. Missing `announce` follows the
/// severity; missing `text` uses the standard wording for that severity.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HumanDecision {
    severity: Value,
    #[serde(default)]
    announce: Option<bool>,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    rationale: Option<String>,
    /// When given, must name the pending quarter; guards against double submits.
    #[serde(default)]
    period: Option<u32>,
}

struct Session {
    id: String,
    mode: Mode,
    sim: Simulation,
    /// FDA script fed by the human in HumanFDA mode.
    script: Option<Script>,
}

impl Session {
    fn status(&self) -> Status {
        match (self.sim.stage(), self.mode) {
            (Stage::Finished, _) => Status::Finished,
            (Stage::Opened, Mode::HumanFda) => Status::AwaitingFda,
            _ => Status::Running,
        }
    }

    fn view(&self) -> SessionView {
        let status = self.status();
        let pending_fda_context =
            (status == Status::AwaitingFda).then(|| build_context(Role::Fda, self.sim.world(), self.sim.config()));
        SessionView {
            id: self.id.clone(),
            mode: self.mode,
            status,
            periods_completed: self.sim.records().len() as u32,
            horizon: self.sim.config().horizon,
            n_manufacturers: self.sim.config().n_manufacturers,
            latest_record: self.sim.records().last().cloned(),
            pending_fda_context,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub mode: Mode,
    pub status: Status,
    pub periods_completed: u32,
    pub horizon: u32,
    pub n_manufacturers: usize,
    pub latest_record: Option<TrajectoryRecord>,
    /// What the FDA sees for the quarter awaiting a human decision.
    pub pending_fda_context: Option<RoleContext>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn conflict(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": {"code": self.code, "message": self.message}}))).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Finished => ApiError::conflict("session_finished", e.to_string()),
            EngineError::OutOfOrder(_) => ApiError::conflict("out_of_order", e.to_string()),
            EngineError::Config(_) | EngineError::PolicyCount { .. } => ApiError::bad_request("invalid_config", e.to_string()),
            EngineError::PolicyUnavailable { .. } => {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "policy_unavailable", e.to_string())
            }
            EngineError::Invariant { .. } => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "invariant", e.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Server-wide settings.
#[derive(Clone, Default)]
pub struct ServerConfig {
    /// Provider used by sessions created with `"policies": "llm"`.
    pub provider: Option<ProviderConfig>,
    pub templates: Arc<TemplateStore>,
    /// Finished trajectories are written here as `<session id>.jsonl`.
    pub persist_dir: Option<PathBuf>,
}

#[derive(Clone)]
pub struct AppState {
    config: ServerConfig,
    sessions: Arc<Mutex<HashMap<String, Arc<Mutex<Session>>>>>,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Self {
        Self { config, sessions: Arc::default() }
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions
            .lock()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}")))
    }

    fn persist(&self, s: &Session) {
        if let (Some(dir), Stage::Finished) = (&self.config.persist_dir, s.sim.stage()) {
            if let Err(e) = s.sim.trajectory().write_files(dir, &s.id) {
                eprintln!("warning: could not persist session {}: {e}", s.id);
            }
        }
    }
}

fn lock(s: &Mutex<Session>) -> MutexGuard<'_, Session> {
    s.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/step", post(step_session))
        .route("/sessions/{id}/fda-decision", post(post_fda_decision))
        .route("/sessions/{id}/trajectory", get(get_trajectory))
        .with_state(state)
}

/// Binds and serves until the process is interrupted.
pub async fn serve(addr: std::net::SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    let text = if body.is_empty() { "{}".as_bytes() } else { body.as_ref() };
    serde_json::from_slice(text).map_err(|e| ApiError::bad_request("invalid_body", e.to_string()))
}

/// Runs `f` on the blocking pool so slow policies never stall the runtime.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

fn build_policies(state: &AppState, choice: PolicyChoice, n: usize) -> ApiResult<Policies> {
    match choice {
        PolicyChoice::Rule => Ok(Policies::rule(n)),
        PolicyChoice::Llm => {
            let provider = state
                .config
                .provider
                .clone()
                .ok_or_else(|| ApiError::bad_request("no_provider", "server was started without a provider config"))?;
            let transport = HttpTransport::from_env(&provider).map_err(|e| ApiError::bad_request("missing_api_key", e.to_string()))?;
            let gateway = Arc::new(Gateway::new(provider, Arc::new(transport)));
            let templates = state.config.templates.clone();
            Ok(Policies::from_fn(n, |_| Box::new(LlmPolicy::new(gateway.clone(), templates.clone()))))
        }
    }
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let req: CreateSession = parse_body(&body)?;
    req.config.validate().map_err(|e| ApiError::bad_request("invalid_config", e.to_string()))?;
    let n = req.config.n_manufacturers;
    let seed = req.seed.unwrap_or(req.config.seed);
    let mut policies = build_policies(&state, req.policies, n)?;
    let script = (req.mode == Mode::HumanFda).then(Script::new);
    if let Some(s) = &script {
        policies.fda = Box::new(ScriptedPolicy::new(s.clone()));
    }
    let mut sim = Simulation::new(req.config, policies, seed)?.with_case(req.case_id, 0);
    if req.mode == Mode::HumanFda {
        sim.open_period()?;
    }
    let session = Session { id: uuid::Uuid::new_v4().simple().to_string(), mode: req.mode, sim, script };
    let view = session.view();
    state.sessions.lock().expect("session table lock").insert(view.id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let s = state.session(&id)?;
    let view = lock(&s).view();
    Ok(Json(view))
}

async fn step_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let s = state.session(&id)?;
    blocking(move || {
        let mut s = lock(&s);
        match s.status() {
            Status::Finished => return Err(ApiError::conflict("session_finished", "all quarters have been played")),
            Status::AwaitingFda => {
                return Err(ApiError::conflict("awaiting_fda_decision", "post an FDA decision to advance this session"))
            }
            Status::Running => {}
        }
        s.sim.step()?;
        state.persist(&s);
        Ok(Json(s.view()))
    })
    .await
}

fn human_decision(body: &Bytes, cfg: &SimConfig) -> ApiResult<(Option<u32>, Decision)> {
    let req: HumanDecision = parse_body(body)?;
    let severity: Severity = serde_json::from_value(req.severity.clone()).map_err(|_| {
        ApiError::bad_request("invalid_severity", format!("severity must be one of none, monitoring, elevated, high_alert; got {}", req.severity))
    })?;
    let announce = req.announce.unwrap_or(severity != Severity::None);
    if announce != (severity != Severity::None) {
        return Err(ApiError::bad_request("inconsistent_decision", "announce must be true exactly when severity is not none"));
    }
    let text = match req.text {
        Some(t) if announce => t,
        Some(t) if !t.is_empty() => {
            return Err(ApiError::bad_request("inconsistent_decision", format!("text {t:?} given for a silent decision")))
        }
        _ => announcement_text(severity).to_owned(),
    };
    if announce && text.trim().is_empty() {
        return Err(ApiError::bad_request("invalid_text", "an announcement needs text"));
    }
    let raw = json!({
        "announce": announce,
        "severity": severity,
        "text": text,
        "rationale": req.rationale.unwrap_or_else(|| "Decision entered by the operator.".to_owned()),
    });
    let decided = validate_decision(&raw, Role::Fda, cfg).map_err(|e| ApiError::bad_request("invalid_decision", e.to_string()))?;
    Ok((req.period, decided.decision))
}

async fn post_fda_decision(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<SessionView>> {
    let s = state.session(&id)?;
    blocking(move || {
        let mut s = lock(&s);
        let (period, decision) = human_decision(&body, s.sim.config())?;
        let script = match (s.mode, &s.script) {
            (Mode::HumanFda, Some(script)) => script.clone(),
            _ => return Err(ApiError::conflict("not_human_fda", "this session has no human FDA seat")),
        };
        match s.status() {
            Status::Finished => return Err(ApiError::conflict("session_finished", "all quarters have been played")),
            Status::Running => return Err(ApiError::conflict("not_awaiting_decision", "no FDA decision is pending")),
            Status::AwaitingFda => {}
        }
        let pending = s.sim.world().period;
        if let Some(p) = period {
            if p != pending {
                return Err(ApiError::conflict("period_already_decided", format!("quarter {p} is not pending; quarter {pending} is")));
            }
        }
        script.push(pending, ScriptStep { assessment: None, decision });
        s.sim.fda_phase()?;
        s.sim.close_period()?;
        if !s.sim.is_finished() {
            s.sim.open_period()?;
        }
        state.persist(&s);
        Ok(Json(s.view()))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct TrajectoryQuery {
    #[serde(default)]
    format: Option<String>,
}

async fn get_trajectory(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<TrajectoryQuery>,
) -> ApiResult<Response> {
    let s = state.session(&id)?;
    let t = lock(&s).sim.trajectory();
    match q.format.as_deref() {
        None | Some("jsonl") => Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], t.records_jsonl()).into_response()),
        Some("json") => Ok(Json(json!({"header": t.header, "records": t.records})).into_response()),
        Some(other) => Err(ApiError::bad_request("invalid_format", format!("unknown format {other:?}; use jsonl or json"))),
    }
}
