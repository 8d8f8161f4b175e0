use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use morai_core::agent::{
    load_agent, markov_train, pretrain, save_agent, AgentKind, CnnAgent, CnnConfig, Partner, PretrainConfig,
};
use morai_core::stats::ranking_tables;
use morai_core::{Level, TileManifest};
use morai_session::http::router;
use morai_session::{SessionConfig, SessionManager, Templates};
use morai_sim::{pair_runs, simulate_session, Persona, RunSummary, SimConfig, SIM_TAU};

#[derive(Debug, Parser)]
#[command(name = "morai", version, about = "Co-creative level design partner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Cnn,
    Markov,
}

impl From<Kind> for AgentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Cnn => AgentKind::Cnn,
            Kind::Markov => AgentKind::Markov,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train an agent on a directory of level text files and save it.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "cnn")]
        agent: Kind,
        #[arg(long, default_value_t = 4)]
        epochs: usize,
        #[arg(long, default_value_t = 50)]
        steps_per_epoch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        tau: f64,
        #[arg(long, default_value_t = 15)]
        cap: usize,
        /// Checkpoint directory to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the additions a checkpoint proposes for a level.
    Propose {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        level: PathBuf,
        /// Column the window is centred on.
        #[arg(long)]
        focus: usize,
        #[arg(long)]
        json: bool,
    },
    /// Run the session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Agent checkpoint new sessions start from.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Level corpus for a Markov model when no Markov checkpoint is given.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_enum)]
        agent: Option<Kind>,
        #[arg(long, default_value_t = 0.5)]
        tau: f64,
        #[arg(long, default_value_t = 15)]
        cap: usize,
        #[arg(long, env = "MORAI_SESSIONS_DIR", default_value = "sessions")]
        sessions_dir: PathBuf,
    },
    /// Run one persona-driven session and write its report and log.
    Simulate {
        #[arg(long)]
        persona: PathBuf,
        #[arg(long, default_value_t = 30)]
        turns: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        agent_checkpoint: PathBuf,
        /// Proposal threshold for CNN partners.
        #[arg(long, default_value_t = SIM_TAU)]
        tau: f64,
        #[arg(long)]
        explanations: bool,
        /// Report path; the session log goes next to it with a `.jsonl`
        /// extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Pair simulated runs of two partners and test their rankings.
    Analyze {
        /// Directory of simulation reports.
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Train { corpus, agent, epochs, steps_per_epoch, seed, tau, cap, out } => {
            train(&corpus, agent.into(), epochs, steps_per_epoch, seed, CnnConfig { tau, cap }, &out)
        }
        Command::Propose { checkpoint, level, focus, json } => propose(&checkpoint, &level, focus, json),
        Command::Serve { host, port, checkpoint, corpus, agent, tau, cap, sessions_dir } => {
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad host or port")?;
            let manager =
                service(checkpoint.as_deref(), corpus.as_deref(), agent.map(Into::into), tau, cap, sessions_dir)?;
            serve(addr, manager)
        }
        Command::Simulate { persona, turns, seed, agent_checkpoint, tau, explanations, out } => {
            let config = SimConfig { turns, explanations, tau: Some(tau), ..SimConfig::default() };
            simulate(&persona, &agent_checkpoint, &config, seed, &out)
        }
        Command::Analyze { logs, out } => analyze(&logs, &out),
    }
}

fn load_corpus(dir: &Path) -> Result<Vec<Level>> {
    let manifest = TileManifest::builtin();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading corpus {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "txt"));
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)?;
            Level::parse(&text, &manifest).with_context(|| format!("parsing {}", p.display()))
        })
        .collect()
}

fn train(
    corpus: &Path,
    kind: AgentKind,
    epochs: usize,
    steps_per_epoch: usize,
    seed: u64,
    config: CnnConfig,
    out: &Path,
) -> Result<()> {
    let levels = load_corpus(corpus)?;
    let partner = match kind {
        AgentKind::Cnn => {
            let mut agent = CnnAgent::<f32>::new(config, seed)?;
            let report =
                pretrain(&mut agent, &levels, &PretrainConfig { epochs, steps_per_epoch, seed, ..Default::default() })?;
            for (i, loss) in report.epoch_losses.iter().enumerate() {
                println!("epoch {} loss {loss:.6}", i + 1);
            }
            Partner::cnn(agent)
        }
        AgentKind::Markov => {
            let model = markov_train(&levels)?;
            println!("{} contexts", model.contexts().count());
            Partner::markov(model, config.cap, seed)?
        }
    };
    save_agent(out, &partner, seed)?;
    println!("saved {} agent to {}", partner.kind(), out.display());
    Ok(())
}

fn propose(checkpoint: &Path, level: &Path, focus: usize, json: bool) -> Result<()> {
    let manifest = TileManifest::builtin();
    let (mut partner, _) = load_agent(checkpoint)?;
    let text = std::fs::read_to_string(level).with_context(|| format!("reading {}", level.display()))?;
    let level = Level::parse(&text, &manifest)?;
    let window = level.extract_window(focus)?;
    let proposal = partner.propose(&window, 0)?;
    for a in &proposal.additions {
        if json {
            let line = serde_json::json!({
                "x": a.x, "y": a.y, "tile": a.tile, "name": manifest.name(a.tile), "activation": a.activation,
            });
            println!("{line}");
        } else {
            println!("{:>4} {:>2} {:<16} {:.4}", a.x, a.y, manifest.name(a.tile), a.activation);
        }
    }
    Ok(())
}

fn service(
    checkpoint: Option<&Path>,
    corpus: Option<&Path>,
    agent: Option<AgentKind>,
    tau: f64,
    cap: usize,
    sessions_dir: PathBuf,
) -> Result<SessionManager> {
    let mut templates = Templates::default();
    let mut default_kind = AgentKind::Cnn;
    if let Some(dir) = checkpoint {
        let (partner, _) = load_agent(dir)?;
        default_kind = partner.kind();
        match partner {
            Partner::Cnn(a) => templates.cnn = Some(*a),
            Partner::Markov { model, .. } => templates.markov = Some(model),
        }
    }
    if templates.markov.is_none() {
        if let Some(dir) = corpus {
            templates.markov = Some(markov_train(&load_corpus(dir)?)?);
        }
    }
    let kind = agent.unwrap_or(default_kind);
    if kind == AgentKind::Markov && templates.markov.is_none() {
        bail!("Markov sessions need a Markov checkpoint or --corpus");
    }
    if kind == AgentKind::Cnn && templates.cnn.is_none() {
        tracing::warn!("no CNN checkpoint given; CNN sessions start from an untrained network");
    }
    let defaults = SessionConfig { agent: kind, tau, cap, ..SessionConfig::default() };
    defaults.validate()?;
    std::fs::create_dir_all(&sessions_dir)
        .with_context(|| format!("creating sessions directory {}", sessions_dir.display()))?;
    Ok(SessionManager::new(templates, defaults, Some(sessions_dir)))
}

fn serve(addr: SocketAddr, manager: SessionManager) -> Result<()> {
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        let local = listener.local_addr()?;
        // Scripts read this line to find an ephemeral port.
        println!("listening on http://{local}");
        tracing::info!(%local, sessions_dir = ?manager.sessions_dir(), "serving");
        axum::serve(listener, router(Arc::new(manager)))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn simulate(persona: &Path, checkpoint: &Path, config: &SimConfig, seed: u64, out: &Path) -> Result<()> {
    let manifest = TileManifest::builtin();
    let persona = Persona::load(persona, &manifest)?;
    let (partner, _) = load_agent(checkpoint)?;
    let kind = partner.kind();
    let outcome = simulate_session(&persona, partner, config, seed)?;
    let summary = RunSummary {
        persona: persona.name().to_string(),
        agent: kind,
        seed,
        turns: config.turns,
        ranking: outcome.ranking,
        report: outcome.report,
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(out, serde_json::to_string_pretty(&summary)?)?;
    std::fs::write(out.with_extension("jsonl"), morai_session::log::to_jsonl(&outcome.records))?;
    let fmt = |r: Option<f64>| r.map_or("null".to_string(), |r| format!("{r:.3}"));
    println!(
        "{} {kind} seed {seed}: early {} late {} aggregate {}",
        summary.persona,
        fmt(summary.report.early_ratio),
        fmt(summary.report.late_ratio),
        fmt(summary.report.aggregate_ratio)
    );
    Ok(())
}

fn analyze(logs: &Path, out: &Path) -> Result<()> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(logs)
        .with_context(|| format!("reading {}", logs.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    let runs = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str::<RunSummary>(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let table = ranking_tables(&pair_runs(&runs)?)?;
    std::fs::write(out, serde_json::to_string_pretty(&table)?)?;
    print!("{}", table.to_text());
    Ok(())
}
