use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shortage_core::agents::{LlmPolicy, Role, Script, ScriptStep, ScriptedPolicy};
use shortage_core::dataset::{curate, read_gt, DatasetError, GtOptions, GtTrajectory};
use shortage_core::engine::{
    read_dir, scenario_from_gt, EngineError, EngineOptions, Policies, RunLabel, Simulation, Trajectory,
};
use shortage_core::eval::{evaluate, plot_csv, zero_shot_run, BaselineError, EpsilonPolicy};
use shortage_core::gateway::{AuditLog, Gateway, GatewayError, ProviderConfig, TemplateStore};
use shortage_core::market::SimConfig;

use crate::server::{self, AppState, ServerConfig};
use crate::transport::HttpTransport;

/// Exit statuses shared by every subcommand.
pub mod exit {
    pub const FAILURE: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const GATEWAY: u8 = 3;
    pub const PAIRING: u8 = 4;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    fn config(message: impl Into<String>) -> Self {
        Self::new(exit::CONFIG, message)
    }

    fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::new(exit::FAILURE, format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        Self::new(exit::GATEWAY, e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::Config(_) | EngineError::PolicyCount { .. } => exit::CONFIG,
            EngineError::PolicyUnavailable { .. } => exit::GATEWAY,
            _ => exit::FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "shortage", version, about = "Drug-shortage market game: simulate, curate, evaluate, serve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the market game and write trajectories.
    Simulate(SimulateArgs),
    /// Ask a model for whole trajectories in one completion (zero-shot baseline).
    Baseline(BaselineArgs),
    /// Turn shortage-list snapshots into events and ground-truth trajectories.
    Curate(CurateArgs),
    /// Score trajectories against ground truth.
    Eval(EvalArgs),
    /// Start the HTTP control API.
    Serve(ServeArgs),
    /// Re-run a recorded trajectory from its logged decisions.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    Llm,
    Rule,
    Script,
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    /// Provider settings as JSON; the API key is read from the variable it names.
    #[arg(long)]
    pub provider: Option<PathBuf>,
    /// Directory of `<id>.txt` files overriding the bundled prompt templates.
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CaseArgs {
    /// Ground-truth trajectories; the run takes its scenario from one case.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Case id within `--gt`, e.g. GT-3. Without it every usable case is run.
    #[arg(long, requires = "gt")]
    pub case: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// SimConfig as JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "rule")]
    pub policies: PolicyKind,
    /// Recorded trajectory whose decisions `--policies script` replays.
    #[arg(long, required_if_eq("policies", "script"))]
    pub script: Option<PathBuf>,
    /// Number of replicates; defaults to the config's `replications`.
    #[arg(long)]
    pub replicates: Option<u32>,
    /// Abort instead of falling back to rules when a policy fails.
    #[arg(long)]
    pub no_fallback: bool,
    #[command(flatten)]
    pub case: CaseArgs,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// SimConfig as JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub case: CaseArgs,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    #[arg(long)]
    pub snapshots: PathBuf,
    #[arg(long)]
    pub ndc_directory: PathBuf,
    /// Options for trajectory construction as JSON.
    #[arg(long)]
    pub options: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    Simulated,
    ZeroShot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of `<stem>.jsonl` + `<stem>.header.json` trajectories.
    #[arg(long)]
    pub runs: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, value_enum, default_value = "simulated")]
    pub scenario: ScenarioName,
    #[arg(long, default_value_t = shortage_core::eval::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: ReportFormat,
    /// Also write report.json, report.txt and plot.csv here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: std::net::IpAddr,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Write finished sessions here as JSON-lines.
    #[arg(long)]
    pub persist: Option<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// The `.jsonl` file of a recorded trajectory (its header sits next to it).
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Baseline(a) => baseline(a),
        Command::Curate(a) => curate_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Serve(a) => serve(a),
        Command::Replay(a) => replay(a),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let bytes = fs::read(path).map_err(|e| CliError::config(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::config(format!("invalid {what} {}: {e}", path.display())))
}

fn load_config(path: &Path) -> CliResult<SimConfig> {
    let cfg: SimConfig = read_json(path, "config")?;
    cfg.validate().map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

fn load_templates(args: &ProviderArgs) -> CliResult<TemplateStore> {
    let mut store = TemplateStore::builtin();
    if let Some(dir) = &args.templates {
        store.load_overrides(dir).map_err(|e| CliError::config(e.to_string()))?;
    }
    Ok(store)
}

fn load_provider(args: &ProviderArgs) -> CliResult<ProviderConfig> {
    let cfg = match &args.provider {
        Some(path) => read_json(path, "provider config")?,
        None => ProviderConfig::default(),
    };
    cfg.validate().map_err(CliError::config)?;
    Ok(cfg)
}

/// Builds a gateway whose audit trail goes to `audit` (JSON-lines).
fn gateway(args: &ProviderArgs, audit: &Path) -> CliResult<Gateway> {
    let provider = load_provider(args)?;
    let transport = HttpTransport::from_env(&provider)?;
    Ok(Gateway::new(provider, Arc::new(transport)).with_audit(AuditLog::with_file(audit)))
}

/// The run configurations to execute: the config itself, or one per ground-truth case.
fn cases(base: &SimConfig, args: &CaseArgs) -> CliResult<Vec<(Option<String>, SimConfig)>> {
    let Some(gt_path) = &args.gt else {
        return Ok(vec![(None, base.clone())]);
    };
    let gt = read_gt(gt_path).map_err(|e| CliError::config(e.to_string()))?;
    let selected: Vec<&GtTrajectory> = match &args.case {
        Some(id) => {
            let hit: Vec<_> = gt.iter().filter(|t| &t.case_id == id).collect();
            if hit.is_empty() {
                return Err(CliError::config(format!("case {id} is not in {}", gt_path.display())));
            }
            hit
        }
        None => gt.iter().collect(),
    };
    let mut out = Vec::new();
    for t in selected {
        match scenario_from_gt(t, base) {
            Ok(cfg) => out.push((Some(t.case_id.clone()), cfg)),
            Err(e) if args.case.is_some() => return Err(CliError::config(e.to_string())),
            Err(e) => eprintln!("skipping {}: {}", t.case_id, e.reason),
        }
    }
    if out.is_empty() {
        return Err(CliError::config("no usable ground-truth case"));
    }
    Ok(out)
}

fn stem(case_id: Option<&str>, replicate: u32) -> String {
    format!("{}_r{replicate}", case_id.unwrap_or("run"))
}

/// Per-role scripts rebuilt from the decisions logged in a trajectory.
pub fn scripts_from(t: &Trajectory) -> impl Fn(Role) -> Script + '_ {
    move |role| {
        Script::from_steps(t.records.iter().filter_map(|r| {
            r.decisions.iter().find(|d| d.role == role).map(|d| {
                (r.period, ScriptStep { assessment: Some(d.assessment.clone()), decision: d.decision.clone() })
            })
        }))
    }
}

fn scripted_policies(t: &Trajectory, n: usize) -> Policies {
    let script = scripts_from(t);
    Policies::from_fn(n, |role| Box::new(ScriptedPolicy::new(script(role))))
}

fn simulate(a: SimulateArgs) -> CliResult {
    let base = load_config(&a.config)?;
    let runs = cases(&base, &a.case)?;
    let templates = Arc::new(load_templates(&a.provider)?);
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let recorded = match &a.script {
        Some(path) if a.policies == PolicyKind::Script => {
            Some(Trajectory::read_files(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?)
        }
        _ => None,
    };
    let gateway = match a.policies {
        PolicyKind::Llm => Some(Arc::new(gateway(&a.provider, &a.out.join("audit.jsonl"))?)),
        _ => None,
    };
    let options = EngineOptions { allow_fallback: !a.no_fallback };
    let replicates = a.replicates.unwrap_or(base.replications).max(1);
    for (case_id, cfg) in runs {
        let n = cfg.n_manufacturers;
        if let Some(t) = &recorded {
            if t.header.config.n_manufacturers != n {
                return Err(CliError::config(format!("script has {} manufacturers, config has {n}", t.header.config.n_manufacturers)));
            }
        }
        let seed = a.seed.unwrap_or(cfg.seed);
        for r in 0..replicates {
            let policies = match (a.policies, &recorded, &gateway) {
                (PolicyKind::Rule, ..) => Policies::rule(n),
                (PolicyKind::Script, Some(t), _) => scripted_policies(t, n),
                (PolicyKind::Llm, _, Some(g)) => {
                    Policies::from_fn(n, |_| Box::new(LlmPolicy::new(g.clone(), templates.clone())))
                }
                _ => unreachable!("policy inputs prepared above"),
            };
            let t = Simulation::new(cfg.clone(), policies, seed.wrapping_add(u64::from(r)))?
                .with_options(options)
                .with_case(case_id.clone(), r)
                .run()?;
            let (_, path) = t.write_files(&a.out, &stem(case_id.as_deref(), r)).map_err(|e| CliError::io(&a.out, e))?;
            let fallbacks = t.records.iter().flat_map(|r| &r.decisions).filter(|d| d.fallback).count();
            eprintln!("wrote {} ({} periods, {fallbacks} fallback decisions)", path.display(), t.records.len());
        }
    }
    Ok(())
}

fn baseline(a: BaselineArgs) -> CliResult {
    let base = load_config(&a.config)?;
    let runs = cases(&base, &a.case)?;
    let templates = load_templates(&a.provider)?;
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let g = gateway(&a.provider, &a.out.join("audit.jsonl"))?;
    for (case_id, cfg) in runs {
        let t = zero_shot_run(&cfg, &g, &templates, case_id.clone()).map_err(|e| match e {
            BaselineError::BaselineUnavailable(g) => CliError::from(g),
            other => CliError::new(exit::FAILURE, other.to_string()),
        })?;
        let (_, path) = t.write_files(&a.out, &stem(case_id.as_deref(), 0)).map_err(|e| CliError::io(&a.out, e))?;
        let flagged: usize = t.records.iter().map(|r| r.flags.len()).sum();
        eprintln!("wrote {} ({flagged} consistency flags)", path.display());
    }
    Ok(())
}

fn curate_cmd(a: CurateArgs) -> CliResult {
    let opts: GtOptions = match &a.options {
        Some(p) => read_json(p, "curation options")?,
        None => GtOptions::default(),
    };
    let c = curate(&a.snapshots, &a.ndc_directory, &opts).map_err(|e| match e {
        DatasetError::NoSnapshots(_) | DatasetError::Directory(_) | DatasetError::SnapshotDate(_) => {
            CliError::config(e.to_string())
        }
        other => CliError::new(exit::FAILURE, other.to_string()),
    })?;
    c.write(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let s = &c.summary;
    println!(
        "snapshots {}  rows {}  rejected {}  quarantined {}  events {} ({} resolved)  trajectories {}  excluded {}",
        s.snapshots, s.rows_read, s.rejected_rows, s.quarantined_rows, s.events, s.resolved_events, s.trajectories, s.excluded_cases
    );
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> CliResult {
    let eps = EpsilonPolicy::new(a.epsilon).map_err(|e| CliError::config(e.to_string()))?;
    let gt = read_gt(&a.gt).map_err(|e| CliError::config(e.to_string()))?;
    let runs: Vec<Trajectory> =
        read_dir(&a.runs).map_err(|e| CliError::io(&a.runs, e))?.into_iter().map(|(_, t)| t).collect();
    let label = match a.scenario {
        ScenarioName::Simulated => RunLabel::Simulated,
        ScenarioName::ZeroShot => RunLabel::ZeroShot,
    };
    let report = evaluate(&runs, &gt, label, eps).map_err(|e| CliError::new(exit::PAIRING, e.to_string()))?;
    match a.format {
        ReportFormat::Table => print!("{}", report.to_table()),
        ReportFormat::Json => println!("{}", report.to_json()),
    }
    if let Some(out) = &a.out {
        fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let t_gt: BTreeMap<&str, u32> = gt.iter().map(|g| (g.case_id.as_str(), g.horizon)).collect();
        let plot = plot_csv(runs.iter().map(|t| (t, t.header.case_id.as_deref().and_then(|c| t_gt.get(c).copied()))));
        for (name, body) in [("report.json", report.to_json()), ("report.txt", report.to_table()), ("plot.csv", plot)] {
            fs::write(out.join(name), body).map_err(|e| CliError::io(&out.join(name), e))?;
        }
    }
    Ok(())
}

fn serve(a: ServeArgs) -> CliResult {
    let provider = match &a.provider.provider {
        Some(_) => Some(load_provider(&a.provider)?),
        None => None,
    };
    if let Some(dir) = &a.persist {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let config = ServerConfig { provider, templates: Arc::new(load_templates(&a.provider)?), persist_dir: a.persist };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::new(exit::FAILURE, e.to_string()))?;
    rt.block_on(server::serve((a.bind, a.port).into(), AppState::new(config)))
        .map_err(|e| CliError::new(exit::FAILURE, format!("server: {e}")))
}

/// First period whose market outcome differs, if any.
pub fn first_divergence(a: &Trajectory, b: &Trajectory) -> Option<u32> {
    let key = |t: &Trajectory| -> Vec<(u32, f64, f64, f64, f64)> {
        t.records.iter().map(|r| (r.period, r.total_demand, r.total_supply, r.shortage, r.buyer_inventory)).collect()
    };
    let (ka, kb) = (key(a), key(b));
    ka.iter()
        .zip(&kb)
        .find(|(x, y)| x != y)
        .map(|(x, _)| x.0)
        .or_else(|| (ka.len() != kb.len()).then(|| ka.len().min(kb.len()) as u32 + 1))
}

fn replay(a: ReplayArgs) -> CliResult {
    let original = Trajectory::read_files(&a.trajectory).map_err(|e| CliError::config(format!("{}: {e}", a.trajectory.display())))?;
    let h = &original.header;
    let policies = scripted_policies(&original, h.config.n_manufacturers);
    let replayed = Simulation::new(h.config.clone(), policies, h.seed)?
        .with_options(EngineOptions { allow_fallback: false })
        .with_case(h.case_id.clone(), h.replicate)
        .run()?;
    if let Some(out) = &a.out {
        let name = a.trajectory.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
        replayed.write_files(out, &format!("{name}.replay")).map_err(|e| CliError::io(out, e))?;
    }
    match first_divergence(&original, &replayed) {
        None => {
            println!("replay matches all {} periods", replayed.records.len());
            Ok(())
        }
        Some(p) => Err(CliError::new(exit::FAILURE, format!("replay diverges from the recording at period {p}"))),
    }
}
