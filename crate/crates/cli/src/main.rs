use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sopforge::config::Settings;
use sopforge::demo;
use sopforge::eval::{self, StatRow};
use sopforge::experience::{apply_experience, handover_feedback, ExperienceStore};
use sopforge::llm::{ChatClient, Gateway, Playbook};
use sopforge::model::{Message, MessageContent};
use sopforge::pool::log::read_log;
use sopforge::sandbox::Sandbox;
use sopforge::sop::{self, PipelineConfig, ProjectResult, RoleKind, SopError};

mod exit;

use exit::Failure;

#[derive(Debug, Parser)]
#[command(name = "sopforge", version, about = "Role-based multi-agent software pipeline")]
struct Cli {
    /// Settings file (TOML). Defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Live,
    Playbook,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the pipeline for one idea and write the workspace.
    Run {
        #[arg(long)]
        idea: String,
        #[arg(long, value_name = "DIR", default_value = "workspace")]
        workspace: PathBuf,
        /// Comma-separated roles, e.g. `pm,architect,engineer`.
        #[arg(long, value_delimiter = ',')]
        roles: Option<Vec<String>>,
        #[arg(long, value_enum)]
        backend: Option<Backend>,
        /// Scripted responses (JSONL). The bundled demo is used when absent.
        #[arg(long, value_name = "FILE")]
        playbook: Option<PathBuf>,
        #[arg(long)]
        max_rounds: Option<usize>,
    },
    /// Score sampled completions against benchmark tasks.
    EvalPassk {
        #[arg(long, value_name = "FILE")]
        tasks: PathBuf,
        #[arg(long, value_name = "FILE")]
        samples: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        k: Vec<usize>,
        /// Where to write the JSON summary.
        #[arg(long, value_name = "FILE", default_value = "pass_at_k.json")]
        summary: PathBuf,
    },
    /// Print code statistics for a finished workspace.
    Stats {
        #[arg(long, value_name = "DIR")]
        workspace: PathBuf,
        /// Human-assigned score from 1 (failure) to 4 (flawless).
        #[arg(long)]
        executability: Option<f64>,
        /// Number of human revisions needed.
        #[arg(long)]
        revisions: Option<f64>,
    },
    /// Print a workspace's message log in sequence order.
    Replay {
        #[arg(long, value_name = "DIR")]
        workspace: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::SUCCESS });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    let settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    match cli.command {
        Command::Run {
            idea,
            workspace,
            roles,
            backend,
            playbook,
            max_rounds,
        } => {
            let backend = backend.unwrap_or(if playbook.is_some() {
                Backend::Playbook
            } else {
                Backend::Live
            });
            let opts = RunOptions {
                idea,
                workspace,
                roles,
                backend,
                playbook,
                max_rounds,
            };
            cmd_run(&settings, opts)
        }
        Command::EvalPassk {
            tasks,
            samples,
            k,
            summary,
        } => cmd_eval_passk(&settings, &tasks, &samples, &k, &summary),
        Command::Stats {
            workspace,
            executability,
            revisions,
        } => cmd_stats(&settings, &workspace, executability, revisions),
        Command::Replay { workspace } => cmd_replay(&workspace),
    }
}

struct RunOptions {
    idea: String,
    workspace: PathBuf,
    roles: Option<Vec<String>>,
    backend: Backend,
    playbook: Option<PathBuf>,
    max_rounds: Option<usize>,
}

fn pipeline_config(settings: &Settings, opts: &RunOptions) -> Result<PipelineConfig, Failure> {
    let kinds = match &opts.roles {
        Some(names) => names
            .iter()
            .map(|n| n.trim().parse::<RoleKind>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(Failure::usage)?,
        None => settings.role_kinds()?,
    };
    if kinds.is_empty() {
        return Err(Failure::usage("--roles needs at least one role"));
    }
    let mut config = settings.pipeline(&kinds).workspace(&opts.workspace);
    if let Some(n) = opts.max_rounds {
        if n == 0 {
            return Err(Failure::usage("--max-rounds must be positive"));
        }
        config.max_rounds = n;
    }
    Ok(config)
}

fn gateway(settings: &Settings, opts: &RunOptions) -> Result<Gateway, Failure> {
    let gw = match opts.backend {
        Backend::Live => Gateway::new(ChatClient::from_env(
            &settings.backend.base_url,
            settings.backend.model.clone(),
        )),
        Backend::Playbook => {
            let book = match &opts.playbook {
                Some(path) if !path.is_file() => {
                    return Err(Failure::new(
                        exit::NO_INPUT,
                        format!("playbook {} does not exist", path.display()),
                    ))
                }
                Some(path) => Playbook::load(path)?,
                None => demo::color_meter_playbook(),
            };
            Gateway::new(book)
        }
    };
    Ok(match settings.rates {
        Some(rates) => gw.with_rates(rates),
        None => gw,
    })
}

fn experience_store(settings: &Settings) -> Option<ExperienceStore> {
    let exp = &settings.experience;
    if !(exp.load || exp.handover) {
        return None;
    }
    let store = exp.open_store();
    if store.is_none() {
        log::warn!("no data directory for the experience store; set [experience] store");
    }
    store
}

fn cmd_run(settings: &Settings, opts: RunOptions) -> Result<u8, Failure> {
    if opts.idea.trim().is_empty() {
        return Err(Failure::usage("--idea must not be empty"));
    }
    let mut config = pipeline_config(settings, &opts)?;
    let store = experience_store(settings);
    if let (Some(store), true) = (&store, settings.experience.load) {
        let entries = store.entries().map_err(|e| Failure::new(exit::DATA, e))?;
        for role in &mut config.roles {
            apply_experience(&mut role.profile, &entries, settings.experience.budget);
        }
    }
    let gw = gateway(settings, &opts)?;
    let sandbox = Sandbox::new(settings.sandbox.sandbox_config());

    let (result, code) = match sop::run(&config, &opts.idea, &gw, &sandbox) {
        Ok(result) => (result, exit::SUCCESS),
        Err(SopError::RoundLimitExceeded(partial)) => {
            eprintln!(
                "warning: stopped after {} rounds with work pending; partial outputs written",
                partial.rounds
            );
            (*partial, exit::ROUND_LIMIT)
        }
        Err(e) => return Err(e.into()),
    };
    print_summary(&result, &opts.workspace, settings);

    if let (Some(store), true) = (&store, settings.experience.handover && result.completed) {
        let project = opts.workspace.display().to_string();
        for role in &config.roles {
            let transcript = result.transcript(&role.profile.name);
            if transcript.is_empty() {
                continue;
            }
            let prompts = &config.prompts;
            if let Err(e) = handover_feedback(&role.profile, &transcript, &project, &gw, prompts, store) {
                log::warn!("handover for {} failed: {e}", role.profile.name);
            }
        }
    }
    Ok(code)
}

fn print_summary(result: &ProjectResult, workspace: &Path, settings: &Settings) {
    println!("workspace: {}", workspace.display());
    println!("rounds: {}  messages: {}  completed: {}", result.rounds, result.messages.len(), result.completed);
    let docs: Vec<String> = result.documents.iter().map(|d| d.kind.to_string()).collect();
    println!("documents: {}", if docs.is_empty() { "none".into() } else { docs.join(", ") });
    let names = |files: &[sopforge::model::CodeArtifact]| {
        files.iter().map(|f| f.file_name.as_str()).collect::<Vec<_>>().join(", ")
    };
    println!("source files ({}): {}", result.code_files.len(), names(&result.code_files));
    println!("test files ({}): {}", result.test_files.len(), names(&result.test_files));
    for r in &result.test_reports {
        println!(
            "  {} vs {}: {:?} after {} run(s)",
            r.module, r.test_file, r.outcome, r.executions
        );
    }
    let t = result.ledger.totals;
    print!(
        "llm: {} calls, {} prompt + {} completion tokens, {:.2}s",
        t.calls, t.prompt_tokens, t.completion_tokens, t.seconds
    );
    if settings.rates.is_some() {
        if let Ok(cost) = result.ledger.estimate_cost() {
            print!(", cost {cost:.4}");
        }
    }
    println!();
    for w in &result.warnings {
        println!("warning: {w}");
    }
}

fn cmd_eval_passk(
    settings: &Settings,
    tasks: &Path,
    samples: &Path,
    ks: &[usize],
    summary: &Path,
) -> Result<u8, Failure> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Failure::usage("--k values must be positive integers"));
    }
    let tasks = eval::load_tasks(tasks)?;
    let samples = eval::load_samples(samples)?;
    let sandbox = Sandbox::new(settings.sandbox.sandbox_config());
    let mut limits = settings.sandbox.limits();
    limits.timeout = std::time::Duration::try_from_secs_f64(settings.eval.timeout_secs)
        .map_err(|_| Failure::new(exit::DATA, "[eval] timeout_secs must be positive"))?;
    let table = eval::evaluate_samples(&tasks, &samples, &sandbox, &limits, ks)?;
    print!("{}", table.to_tsv());
    let json = serde_json::to_string_pretty(&table.summary_json()).expect("summary serializes");
    fs::write(summary, json + "\n")
        .map_err(|e| Failure::new(exit::FAILURE, format!("writing {}: {e}", summary.display())))?;
    Ok(exit::SUCCESS)
}

fn cmd_stats(
    settings: &Settings,
    workspace: &Path,
    executability: Option<f64>,
    revisions: Option<f64>,
) -> Result<u8, Failure> {
    let exts: Vec<&str> = settings.eval.extensions.iter().map(String::as_str).collect();
    let mut row = StatRow::from_workspace(workspace, &exts)?;
    if executability.is_some() || revisions.is_some() {
        let scored = eval::record_human_scores(
            row.clone(),
            executability.unwrap_or(1.0),
            revisions.unwrap_or(0.0),
        )?;
        row.executability = executability.and(scored.executability);
        row.human_revisions = revisions.and(scored.human_revisions);
    }
    print!("{}", row.to_tsv());
    Ok(exit::SUCCESS)
}

fn cmd_replay(workspace: &Path) -> Result<u8, Failure> {
    let path = workspace.join("logs").join("messages.jsonl");
    let messages = read_log(&path)?;
    let mut out = std::io::stdout().lock();
    for m in &messages {
        let _ = writeln!(out, "{}", replay_row(m));
    }
    let _ = writeln!(out, "{} messages", messages.len());
    Ok(exit::SUCCESS)
}

fn replay_row(m: &Message) -> String {
    let to = if m.send_to.is_empty() {
        "*".to_string()
    } else {
        m.send_to.iter().cloned().collect::<Vec<_>>().join(",")
    };
    let what = match &m.content {
        MessageContent::Text(t) => first_line(t),
        MessageContent::Document(d) => format!("{} ({} sections)", d.kind, d.sections.len()),
        MessageContent::Code(c) => format!("{} rev {}", c.file_name, c.revision),
        MessageContent::TestReport(r) => {
            format!("{} {:?} after {} run(s)", r.module, r.outcome, r.executions)
        }
    };
    format!(
        "{:>4}  {}  {:<18} {:<16} -> {}  {}",
        m.seq,
        m.timestamp.format("%H:%M:%S"),
        m.sent_from,
        m.cause_by.as_str(),
        to,
        what
    )
}

fn first_line(text: &str) -> String {
    let line = text.lines().next().unwrap_or("");
    if line.chars().count() > 60 {
        format!("{}...", line.chars().take(60).collect::<String>())
    } else {
        line.to_string()
    }
}
