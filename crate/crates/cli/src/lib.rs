//! The `jagarin` command line.
//!
//! Exit codes: 0 success, 1 the input was read but is invalid, 2 I/O, store,
//! configuration or usage errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use jagarin_core::ace::{self, Codec, ToDutyError};
use jagarin_core::aria::{classify, header, InboundMessage, PurchasePatternModel};
use jagarin_core::duty::store::Store;
use jagarin_core::engine::{Defer, EngineConfig};
use jagarin_core::notify::MemorySink;
use jagarin_core::sim::{self, SimConfig};
use jagarin_gateway::{views, AppState, ContextParams, DutyView, Gateway, LogSink};

#[derive(Debug, Parser)]
#[command(name = "jagarin", version, about = "Duty-aware wake scoring for a hibernating personal agent")]
pub struct Cli {
    /// Output style.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    /// JSON, in the same shapes the gateway returns.
    Structured,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every active duty in a store.
    Evaluate(EvaluateArgs),
    /// Run the reminder-policy simulation.
    Simulate(SimulateArgs),
    #[command(subcommand)]
    Ace(AceCommand),
    #[command(subcommand)]
    Aria(AriaCommand),
    /// Run the HTTP gateway until interrupted.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, env = "JAGARIN_STORE")]
    pub store: PathBuf,
    /// Evaluation time (RFC 3339); defaults to now.
    #[arg(long)]
    pub at: Option<DateTime<Utc>>,
    #[arg(long)]
    pub hour: Option<u8>,
    #[arg(long)]
    pub charging: bool,
    #[arg(long)]
    pub wifi: bool,
    #[arg(long, default_value_t = 0)]
    pub ignore_streak: u32,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file; the shipped default when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving report.txt and metrics.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the scenario's user count.
    #[arg(long)]
    pub users: Option<usize>,
    /// Override the scenario's horizon.
    #[arg(long)]
    pub days: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum AceCommand {
    /// Decode and validate; lists every problem found.
    Validate { file: PathBuf },
    /// Map a valid envelope to the duty it creates.
    ToDuty {
        file: PathBuf,
        #[arg(long)]
        at: Option<DateTime<Utc>>,
    },
}

#[derive(Debug, Subcommand)]
pub enum AriaCommand {
    /// Print the message category.
    Classify { file: PathBuf },
    /// Classify, route and apply the action to a store.
    Route {
        file: PathBuf,
        #[arg(long, env = "JAGARIN_STORE")]
        store: PathBuf,
        /// Purchase history used to judge promotions.
        #[arg(long)]
        purchases: Option<PathBuf>,
        /// Engagement estimate at ingest; falls back to an X-Engagement header, then 0.5.
        #[arg(long)]
        bep: Option<f64>,
        #[arg(long)]
        at: Option<DateTime<Utc>>,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "JAGARIN_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, env = "JAGARIN_STORE")]
    pub store: PathBuf,
}

/// A command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn env(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::env(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::env(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| Failure::env(e.to_string()))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| Failure::env(e.to_string()))?
    };
}

/// Runs one command, writing results to `out`. Returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Outcome {
    let fmt = cli.format;
    match cli.command {
        Command::Evaluate(a) => evaluate(a, fmt, out),
        Command::Simulate(a) => simulate(a, fmt, out),
        Command::Ace(AceCommand::Validate { file }) => ace_validate(&file, fmt, out),
        Command::Ace(AceCommand::ToDuty { file, at }) => ace_to_duty(&file, at, fmt, out),
        Command::Aria(AriaCommand::Classify { file }) => aria_classify(&file, fmt, out),
        Command::Aria(AriaCommand::Route {
            file,
            store,
            purchases,
            bep,
            at,
        }) => aria_route(&file, &store, purchases.as_deref(), bep, at, fmt, out),
        Command::Serve(a) => serve(a),
    }
}

fn evaluate(a: EvaluateArgs, fmt: Format, out: &mut dyn Write) -> Outcome {
    let now = a.at.unwrap_or_else(Utc::now);
    let engine = EngineConfig::default();
    let mut registry = Store::new(&a.store)
        .restore(&engine)
        .map_err(|e| Failure::env(format!("{e:?}: {e}")))?;
    let params = ContextParams {
        hour: a.hour,
        charging: Some(a.charging),
        wifi: Some(a.wifi),
        ignore_streak: Some(a.ignore_streak),
        ..ContextParams::default()
    };
    let ctx = params.context(now).map_err(Failure::env)?;
    let rows = views(&registry.snapshot(now), &ctx, &engine, None, now);
    if fmt == Format::Structured {
        emit(out, &rows)?;
    } else if rows.is_empty() {
        say!(out, "no active duties");
    } else {
        say!(out, "{}", duty_table(&rows));
    }
    Ok(0)
}

/// One row per duty: the four signals, the composite, thresholds, zone and timing advice.
pub fn duty_table(rows: &[DutyView]) -> String {
    let mut s = format!(
        "{:<24} {:<20} {:>7} {:>5} {:>5} {:>5} {:>5} {:>5} {:>5} {:>5}  {:<8} {:<12} {}\n",
        "duty", "type", "t_days", "toc", "bep", "vdi", "cdr", "S", "th1", "th2", "zone", "reason", "defer"
    );
    for r in rows {
        let d = &r.decision;
        let defer = match d.defer {
            Defer::ActNow => "act now".to_owned(),
            Defer::DeferDays(n) => format!("defer {n}d"),
        };
        s.push_str(&format!(
            "{:<24} {:<20} {:>7.2} {:>5.3} {:>5.3} {:>5.3} {:>5.3} {:>5.3} {:>5.3} {:>5.3}  {:<8} {:<12} {}\n",
            r.duty.id.as_str(),
            r.duty.duty_type.name(),
            d.t_days,
            d.signals.toc,
            d.signals.bep,
            d.signals.vdi,
            d.signals.cdr,
            d.score,
            r.thresholds.theta1,
            r.thresholds.theta2,
            d.zone.label(),
            format!("{:?}", d.zone_reason),
            defer,
        ));
    }
    s.pop();
    s
}

fn simulate(a: SimulateArgs, fmt: Format, out: &mut dyn Write) -> Outcome {
    let mut cfg = match &a.scenario {
        Some(p) => SimConfig::from_json(&read(p)?).map_err(|e| Failure::env(e.to_string()))?,
        None => SimConfig::default_scenario(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(n) = a.users {
        cfg.n_users = n;
    }
    if let Some(d) = a.days {
        cfg.horizon_days = d;
    }
    let metrics = sim::run(&cfg).map_err(|e| Failure::env(e.to_string()))?;
    let report = format!(
        "seed {}  users {}  days {}\n{}\n",
        metrics.seed,
        metrics.n_users,
        metrics.horizon_days,
        sim::render_table(&metrics)
    );
    if let Some(dir) = &a.out {
        let io = |e: std::io::Error| Failure::env(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        fs::write(dir.join("report.txt"), &report).map_err(io)?;
        fs::write(dir.join("metrics.json"), metrics.to_json() + "\n").map_err(io)?;
    }
    match fmt {
        Format::Structured => emit(out, &metrics)?,
        Format::Table => say!(out, "{}", report.trim_end()),
    }
    Ok(0)
}

fn ace_validate(file: &Path, fmt: Format, out: &mut dyn Write) -> Outcome {
    let text = read(file)?;
    let errors = match Codec::default().decode(&text) {
        Ok(_) => Vec::new(),
        Err(e) => e,
    };
    if fmt == Format::Structured {
        emit(out, &serde_json::json!({ "valid": errors.is_empty(), "errors": errors }))?;
    } else if errors.is_empty() {
        say!(out, "valid");
    } else {
        for e in &errors {
            say!(out, "{}: {e}", e.code());
        }
    }
    Ok(if errors.is_empty() { 0 } else { 1 })
}

fn ace_to_duty(file: &Path, at: Option<DateTime<Utc>>, fmt: Format, out: &mut dyn Write) -> Outcome {
    let text = read(file)?;
    let env = match Codec::default().decode(&text) {
        Ok(env) => env,
        Err(errors) => {
            for e in &errors {
                say!(out, "{}: {e}", e.code());
            }
            return Ok(1);
        }
    };
    match ace::to_duty(&env, None, at.unwrap_or_else(Utc::now)) {
        Ok(duty) => emit(out, &duty)?,
        Err(ToDutyError::NotADuty(c)) => match fmt {
            Format::Structured => emit(out, &serde_json::json!({ "not_a_duty": c }))?,
            Format::Table => say!(out, "NotADuty: {} messages do not create duties", c.name()),
        },
        Err(e @ ToDutyError::MappingFailure(_)) => return Err(Failure::invalid(e.to_string())),
    }
    Ok(0)
}

fn message(file: &Path) -> Result<(String, InboundMessage), Failure> {
    let text = read(file)?;
    let msg = InboundMessage::parse(&text).map_err(|e| Failure::invalid(format!("{}: {e}", file.display())))?;
    Ok((text, msg))
}

fn aria_classify(file: &Path, fmt: Format, out: &mut dyn Write) -> Outcome {
    let (_, msg) = message(file)?;
    let category = classify(&msg);
    match fmt {
        Format::Structured => emit(out, &serde_json::json!({ "category": category }))?,
        Format::Table => say!(out, "{}", category.name()),
    }
    Ok(0)
}

fn aria_route(
    file: &Path,
    store: &Path,
    purchases: Option<&Path>,
    bep: Option<f64>,
    at: Option<DateTime<Utc>>,
    fmt: Format,
    out: &mut dyn Write,
) -> Outcome {
    let (text, msg) = message(file)?;
    let bep = match bep {
        Some(b) => b,
        None => header(&text, "X-Engagement")
            .map(|v| v.parse::<f64>().map_err(|e| Failure::invalid(format!("X-Engagement {v:?}: {e}"))))
            .transpose()?
            .unwrap_or(0.5),
    };
    let mut gw = Gateway::open(store, EngineConfig::default()).map_err(|e| Failure::env(format!("{e:?}: {e}")))?;
    if let Some(p) = purchases {
        let ppm: PurchasePatternModel =
            serde_json::from_str(&read(p)?).map_err(|e| Failure::invalid(format!("{}: {e}", p.display())))?;
        gw = gw.with_purchases(ppm);
    }
    let sink = MemorySink::new();
    let routed = gw
        .route_inbound(&msg, bep, &sink, at.unwrap_or(msg.received_at))
        .map_err(|e| match e {
            jagarin_gateway::GatewayError::Store(e) => Failure::env(e.to_string()),
            other => Failure::invalid(other.to_string()),
        })?;
    if fmt == Format::Structured {
        emit(out, &routed)?;
        return Ok(0);
    }
    match (routed.action.as_str(), &routed.duty_id) {
        ("RegisterDuty", Some(id)) => say!(out, "{}: duty registered {id}", routed.category.name()),
        ("ArchiveSilently", _) => say!(out, "{}: archived (silent)", routed.category.name()),
        (action, _) => say!(out, "{}: {action}", routed.category.name()),
    }
    for e in sink.events() {
        say!(out, "  push {:?}: {}", e.kind, e.body);
    }
    Ok(0)
}

fn serve(a: ServeArgs) -> Outcome {
    let _ = tracing_subscriber::fmt().json().with_target(false).try_init();
    let gateway = Gateway::open(&a.store, EngineConfig::default()).map_err(|e| Failure::env(e.to_string()))?;
    let state = AppState::new(gateway).with_sink(Arc::new(LogSink));
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::env(e.to_string()))?;
    rt.block_on(async {
        let listener = jagarin_gateway::bind(a.port)
            .await
            .map_err(|e| Failure::env(format!("cannot bind port {}: {e}", a.port)))?;
        jagarin_gateway::serve(listener, state).await.map_err(|e| Failure::env(e.to_string()))
    })?;
    Ok(0)
}
