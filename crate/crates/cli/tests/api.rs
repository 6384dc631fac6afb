use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reqwest::blocking::Client;
use serde_json::{json, Value};
use shortage_cli::server::{router, AppState, ServerConfig};
use shortage_core::agents::{Decision, FdaDecision, Role, Script, ScriptStep, ScriptedPolicy, Severity};
use shortage_core::engine::{Policies, Simulation};
use shortage_core::market::SimConfig;

struct Server {
    base: String,
    http: Client,
}

impl Server {
    fn start(config: ServerConfig) -> Self {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        listener.set_nonblocking(true).unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).unwrap();
                axum::serve(listener, router(AppState::new(config))).await.unwrap();
            });
        });
        Self { base: format!("http://{addr}"), http: Client::new() }
    }

    fn get(&self, path: &str) -> (u16, String) {
        let r = self.http.get(format!("{}{path}", self.base)).send().unwrap();
        (r.status().as_u16(), r.text().unwrap())
    }

    fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        let r = self.http.post(format!("{}{path}", self.base)).json(body).send().unwrap();
        let status = r.status().as_u16();
        (status, r.json().unwrap())
    }

    fn session(&self, body: Value) -> Value {
        let (status, v) = self.post("/sessions", &body);
        assert_eq!(status, 201, "{v}");
        v
    }
}

fn error_code(v: &Value) -> &str {
    v["error"]["code"].as_str().unwrap_or("")
}

#[test]
fn health() {
    let s = Server::start(ServerConfig::default());
    let (status, body) = s.get("/health");
    assert_eq!(status, 200);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["status"], "ok");
}

#[test]
fn auto_session_runs_to_the_end() {
    let s = Server::start(ServerConfig::default());
    let created = s.session(json!({"config": {"n_manufacturers": 4, "horizon": 6}, "seed": 3}));
    assert_eq!(created["status"], "running");
    let id = created["id"].as_str().unwrap();
    let mut last = Value::Null;
    for k in 1..=6 {
        let (status, v) = s.post(&format!("/sessions/{id}/step"), &json!({}));
        assert_eq!(status, 200, "{v}");
        assert_eq!(v["periods_completed"], k);
        assert_ne!(v["status"], "awaiting_fda");
        last = v;
    }
    assert_eq!(last["status"], "finished");
    let (status, v) = s.post(&format!("/sessions/{id}/step"), &json!({}));
    assert_eq!((status, error_code(&v)), (409, "session_finished"));

    let (status, jsonl) = s.get(&format!("/sessions/{id}/trajectory"));
    assert_eq!(status, 200);
    assert_eq!(jsonl.lines().count(), 6);
    let (_, json_form) = s.get(&format!("/sessions/{id}/trajectory?format=json"));
    let parsed: Value = serde_json::from_str(&json_form).unwrap();
    assert_eq!(parsed["records"].as_array().unwrap().len(), 6);
    assert_eq!(parsed["header"]["seed"], 3);

    let (status, v) = s.post(&format!("/sessions/{id}/fda-decision"), &json!({"severity": "elevated"}));
    assert_eq!((status, error_code(&v)), (409, "not_human_fda"));
}

#[test]
fn human_fda_round_trip() {
    let s = Server::start(ServerConfig::default());
    let created = s.session(json!({"config": {"disruption_prob": 0.0}, "mode": "human_fda", "seed": 0}));
    assert_eq!(created["status"], "awaiting_fda");
    assert!(created["pending_fda_context"].is_object());
    let id = created["id"].as_str().unwrap();

    let (status, v) = s.post(&format!("/sessions/{id}/step"), &json!({}));
    assert_eq!((status, error_code(&v)), (409, "awaiting_fda_decision"));

    let text = "Operator notice: expect constrained supply next quarter.";
    let (status, v) = s.post(&format!("/sessions/{id}/fda-decision"), &json!({"severity": "elevated", "text": text, "period": 1}));
    assert_eq!(status, 200, "{v}");
    assert_eq!(v["periods_completed"], 1);
    assert_eq!(v["status"], "awaiting_fda");

    let (_, body) = s.get(&format!("/sessions/{id}"));
    let view: Value = serde_json::from_str(&body).unwrap();
    let decisions = view["latest_record"]["decisions"].as_array().unwrap();
    let manufacturers: Vec<&Value> = decisions.iter().filter(|d| d["role"]["kind"] == "manufacturer").collect();
    assert_eq!(manufacturers.len(), 4);
    for m in manufacturers {
        assert!(m["context"].to_string().contains(text), "{}", m["context"]);
        assert_eq!(m["decision"]["invest_fraction"], 0.3);
    }
    assert_eq!(view["latest_record"]["fda_announcement"]["text"], text);

    // Period 1 is decided; a resubmission for it is a conflict and changes nothing.
    let (status, v) = s.post(&format!("/sessions/{id}/fda-decision"), &json!({"severity": "elevated", "text": text, "period": 1}));
    assert_eq!((status, error_code(&v)), (409, "period_already_decided"));
    let (_, again) = s.get(&format!("/sessions/{id}"));
    assert_eq!(serde_json::from_str::<Value>(&again).unwrap(), view);
}

#[test]
fn validation_errors_leave_state_alone() {
    let s = Server::start(ServerConfig::default());
    let created = s.session(json!({"mode": "human_fda"}));
    let id = created["id"].as_str().unwrap();
    let (_, before) = s.get(&format!("/sessions/{id}"));

    let bad = [
        (json!({"severity": "critical"}), "invalid_severity"),
        (json!({"severity": "none", "announce": true}), "inconsistent_decision"),
        (json!({"severity": "elevated", "colour": "red"}), "invalid_body"),
        (json!({"severity": "elevated", "text": "  "}), "invalid_text"),
    ];
    for (body, code) in bad {
        let (status, v) = s.post(&format!("/sessions/{id}/fda-decision"), &body);
        assert_eq!((status, error_code(&v)), (400, code), "{body}");
    }
    let raw = s.http.post(format!("{}/sessions/{id}/fda-decision", s.base)).body("{not json").send().unwrap();
    assert_eq!(raw.status().as_u16(), 400);
    let (_, after) = s.get(&format!("/sessions/{id}"));
    assert_eq!(before, after);

    let (status, v) = s.post("/sessions", &json!({"config": {"horizon": 13}}));
    assert_eq!((status, error_code(&v)), (400, "invalid_config"));
    let (status, v) = s.post("/sessions", &json!({"config": {"n_manufacturers": 4}, "mode": "robot"}));
    assert_eq!((status, error_code(&v)), (400, "invalid_body"));
}

#[test]
fn unknown_session_is_404() {
    let s = Server::start(ServerConfig::default());
    let (status, body) = s.get("/sessions/nope");
    assert_eq!(status, 404);
    assert_eq!(error_code(&serde_json::from_str(&body).unwrap()), "unknown_session");
    let (status, _) = s.post("/sessions/nope/step", &json!({}));
    assert_eq!(status, 404);
    let (status, _) = s.get("/sessions/nope/trajectory");
    assert_eq!(status, 404);
}

fn random_decision(rng: &mut ChaCha8Rng) -> (Value, FdaDecision) {
    let severity = Severity::ALL[rng.random_range(0..4)];
    let text = format!("Notice {}", rng.random_range(0..1000));
    let rationale = "replayed".to_owned();
    if severity == Severity::None {
        (json!({"severity": "none", "rationale": rationale}), FdaDecision::silent(rationale))
    } else {
        (
            json!({"severity": severity, "text": text, "rationale": rationale}),
            FdaDecision::announce(severity, text, rationale),
        )
    }
}

#[test]
fn human_session_equals_scripted_auto_run() {
    let s = Server::start(ServerConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..8 {
        let n = rng.random_range(2..=6);
        let horizon = rng.random_range(4..=8);
        let seed: u64 = rng.random_range(0..1000);
        let cfg = SimConfig { n_manufacturers: n, horizon, disruption_prob: 0.3, ..SimConfig::default() };
        let created = s.session(json!({"config": cfg, "mode": "human_fda", "seed": seed}));
        let id = created["id"].as_str().unwrap().to_owned();
        let script = Script::new();
        for period in 1..=horizon {
            let (body, decision) = random_decision(&mut rng);
            let (status, v) = s.post(&format!("/sessions/{id}/fda-decision"), &body);
            assert_eq!(status, 200, "{v}");
            script.push(period, ScriptStep { assessment: None, decision: Decision::Fda(decision) });
        }
        let (_, served) = s.get(&format!("/sessions/{id}/trajectory"));

        let mut policies = Policies::rule(n);
        policies.fda = Box::new(ScriptedPolicy::new(script));
        let direct = Simulation::new(cfg, policies, seed).unwrap().run().unwrap();
        assert_eq!(served, direct.records_jsonl(), "case {case}");
        assert!(direct.records.iter().all(|r| r.decisions.iter().find(|d| d.role == Role::Fda).unwrap().backend == "scripted"));
    }
}

#[test]
fn sessions_advance_concurrently() {
    let s = std::sync::Arc::new(Server::start(ServerConfig::default()));
    let ids: Vec<String> = (0..8)
        .map(|k| s.session(json!({"config": {"disruption_prob": 0.2}, "seed": k}))["id"].as_str().unwrap().to_owned())
        .collect();
    let handles: Vec<_> = ids
        .iter()
        .cloned()
        .map(|id| {
            let s = s.clone();
            std::thread::spawn(move || {
                for _ in 0..6 {
                    let (status, v) = s.post(&format!("/sessions/{id}/step"), &json!({}));
                    assert_eq!(status, 200, "{v}");
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    for id in ids {
        let (_, body) = s.get(&format!("/sessions/{id}"));
        assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["status"], "finished");
    }
}

#[test]
fn finished_sessions_are_persisted() {
    let dir = tempfile::tempdir().unwrap();
    let s = Server::start(ServerConfig { persist_dir: Some(dir.path().to_owned()), ..ServerConfig::default() });
    let created = s.session(json!({"config": {"horizon": 4}}));
    let id = created["id"].as_str().unwrap();
    for _ in 0..4 {
        s.post(&format!("/sessions/{id}/step"), &json!({}));
    }
    let path = dir.path().join(format!("{id}.jsonl"));
    assert!(Path::new(&path).is_file());
    assert_eq!(std::fs::read_to_string(path).unwrap().lines().count(), 4);
}

#[test]
fn llm_sessions_need_a_provider() {
    let s = Server::start(ServerConfig::default());
    let (status, v) = s.post("/sessions", &json!({"policies": "llm"}));
    assert_eq!((status, error_code(&v)), (400, "no_provider"));
}
