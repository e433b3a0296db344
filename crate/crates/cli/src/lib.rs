//! `intellichain` command dispatch.
//!
//! [`run_cli`] parses arguments and returns the process exit code:
//! 0 on success, 1 on a domain error, 2 on a usage error. [`run_with`] is
//! the same entry point with explicit streams, so the interactive `tutor`
//! loop can be driven from tests.

use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use intellichain_core::agent::{BackendError, LearnerScript, RemoteBackend};
use intellichain_core::config::ConfigError;
use intellichain_core::eval::{run_ablation, AblationInputs};
use intellichain_core::kg::{link_knowledge_points, query_context, KgError, KnowledgeGraph};
use intellichain_core::{AppConfig, ProblemInstance, SystemConfig, Tutor, TutorError};
use intellichain_server::{AppState, ServerError};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "intellichain", version, about = "Knowledge-graph-grounded Socratic tutor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Knowledge graph utilities.
    #[command(subcommand)]
    Kg(KgCommand),
    /// Interactive tutoring session on stdin/stdout.
    Tutor(TutorArgs),
    /// Run all three configurations with a scripted learner and write the report.
    Ablate(AblateArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum KgCommand {
    /// Check that a graph file loads.
    Validate { file: PathBuf },
    /// Link a phrase to graph nodes and print the retrieved context as JSON.
    Query {
        file: PathBuf,
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 1)]
        hops: u32,
        #[arg(long, default_value_t = 12)]
        cap: usize,
    },
}

#[derive(Debug, Args)]
pub struct TutorArgs {
    /// Configuration file (TOML); defaults to the bundled demo.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// One of no_agent, agent_no_kg, agent_kg.
    #[arg(long, default_value = "agent_kg")]
    pub system: String,
    /// Problem id from the configuration.
    #[arg(long)]
    pub problem: Option<String>,
    /// Model name used when the remote backend is selected from the environment.
    #[arg(long, default_value = "default")]
    pub model: String,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Supplies backend, arms and thresholds; defaults to the bundled demo.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Graph {
        path: PathBuf,
        #[source]
        source: KgError,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Tutor(#[from] TutorError),
    #[error(transparent)]
    Server(#[from] ServerError),
    #[error("{0}")]
    Usage(String),
    #[error("terminal I/O: {0}")]
    Terminal(#[from] io::Error),
}

pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdin = io::stdin();
    run_with(argv, &mut stdin.lock(), &mut io::stdout(), &mut io::stderr())
}

pub fn run_with<I, T>(
    argv: I,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return 2;
        }
    };
    match dispatch(cli.command, input, out) {
        Ok(()) => 0,
        Err(CliError::Usage(message)) => {
            let _ = writeln!(err, "error: {message}");
            2
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn dispatch(command: Command, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Kg(KgCommand::Validate { file }) => {
            let graph = load_graph_file(&file)?;
            writeln!(
                out,
                "{}: ok ({} nodes, {} edges, {} aliases)",
                file.display(),
                graph.nodes().len(),
                graph.edges().len(),
                graph.alias_index().len()
            )?;
            Ok(())
        }
        Command::Kg(KgCommand::Query { file, point, hops, cap }) => {
            let graph = load_graph_file(&file)?;
            let seeds = link_knowledge_points(&point, &graph);
            let bundle = query_context(&graph, &seeds, hops, cap)
                .map_err(|source| CliError::Graph { path: file, source })?;
            writeln!(out, "{}", serde_json::to_string_pretty(&bundle).expect("bundle serializes"))?;
            Ok(())
        }
        Command::Tutor(args) => tutor(args, input, out),
        Command::Ablate(args) => ablate(args, out),
        Command::Serve(args) => serve(args, out),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })
}

fn load_graph_file(path: &Path) -> Result<KnowledgeGraph, CliError> {
    KnowledgeGraph::from_json(&read(path)?).map_err(|source| CliError::Graph {
        path: path.to_owned(),
        source,
    })
}

fn load_config(path: Option<&Path>) -> Result<AppConfig, CliError> {
    Ok(match path {
        Some(p) => AppConfig::load(p)?,
        None => AppConfig::bundled(),
    })
}

fn load_problem_file(path: &Path) -> Result<ProblemInstance, CliError> {
    let mut problem: ProblemInstance =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
    if problem.id.is_empty() {
        problem.id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(problem)
}

fn tutor(args: TutorArgs, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    let system: SystemConfig = args
        .system
        .parse()
        .map_err(|e: intellichain_core::dialogue::DialogueError| CliError::Usage(e.to_string()))?;
    let mut config = load_config(args.config.as_deref())?;
    if args.config.is_none() && RemoteBackend::env_configured() {
        config.backend = Arc::new(RemoteBackend::from_env(args.model)?);
        config.backend_kind = "remote";
    }
    let problem = match &args.problem {
        Some(id) => config
            .problem(id)
            .cloned()
            .ok_or_else(|| CliError::Usage(format!("unknown problem `{id}`")))?,
        None => config.problems[0].clone(),
    };

    let tutor = Tutor::new(Arc::clone(&config.graph), config.arms.clone(), config.settings)?;
    let backend = config.backend.create();
    writeln!(out, "{}\n{}\n", problem.title, problem.statement)?;
    writeln!(out, "({system}, {} backend; end input to quit)", config.backend_kind)?;
    let (mut session, opener) = tutor.start_session("cli", system, problem, backend.as_ref())?;
    if let Some(turn) = opener {
        print_instructor(out, &turn, &tutor)?;
    }

    let mut line = String::new();
    while session.is_active() {
        write!(out, "> ")?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            writeln!(out)?;
            break;
        }
        let exchange = tutor.respond(&mut session, backend.as_ref(), line.trim_end_matches(['\r', '\n']))?;
        match exchange.instructor_turn {
            Some(turn) => print_instructor(out, &turn, &tutor)?,
            None => writeln!(out, "Session complete. Well done!")?,
        }
    }
    Ok(())
}

fn print_instructor(
    out: &mut dyn Write,
    turn: &intellichain_core::Turn,
    tutor: &Tutor,
) -> io::Result<()> {
    writeln!(out, "[{}] tutor: {}", turn.stage, turn.text)?;
    for fact in &turn.cited_facts {
        let label = |id: &str| tutor.graph().node(id).map_or(id.to_owned(), |n| n.label.clone());
        writeln!(
            out,
            "    grounded in: {} \u{2014}{}\u{2192} {}",
            label(&fact.subject),
            fact.relation,
            label(&fact.object)
        )?;
    }
    Ok(())
}

/// Path of the transcript written next to `out` for one configuration.
pub fn transcript_path(out: &Path, config: SystemConfig) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    out.with_file_name(format!("{stem}.{config}.jsonl"))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_owned(),
        source,
    })
}

fn ablate(args: AblateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref())?;
    let graph = match &args.graph {
        Some(p) => Arc::new(load_graph_file(p)?),
        None => Arc::clone(&config.graph),
    };
    let problem = match &args.problem {
        Some(p) => load_problem_file(p)?,
        None => config.problems[0].clone(),
    };
    let script = match &args.script {
        Some(p) => LearnerScript::from_json(&read(p)?).map_err(|e| CliError::Parse {
            path: p.clone(),
            message: e.to_string(),
        })?,
        None => LearnerScript::demo(),
    };

    let inputs = AblationInputs {
        problem: &problem,
        graph: &graph,
        backend: config.backend.as_ref(),
        learner_script: &script,
        arms: &config.arms,
        settings: config.settings,
    };
    let outcome = run_ablation(&inputs)?;
    write_file(&args.out, &outcome.report.to_json())?;
    for run in &outcome.runs {
        write_file(&transcript_path(&args.out, run.session.config), &run.session.transcript_jsonl())?;
    }

    writeln!(out, "{:<12} {:>9} {:>9} {:>6} {:>10}", "config", "grounding", "questions", "turns", "completed")?;
    for r in &outcome.report.records {
        writeln!(
            out,
            "{:<12} {:>9.3} {:>9.3} {:>6} {:>10}",
            r.config.as_str(),
            r.grounding_coverage,
            r.question_ratio,
            r.turn_count,
            r.completed
        )?;
    }
    writeln!(out, "report written to {}", args.out.display())?;
    Ok(())
}

fn serve(args: ServeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref())?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async {
        let state = AppState::new(config)?;
        let (listener, addr) = intellichain_server::bind(&args.addr).await?;
        writeln!(out, "listening on http://{addr}")?;
        out.flush()?;
        intellichain_server::serve(listener, state).await?;
        Ok(())
    })
}
