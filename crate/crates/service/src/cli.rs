//! `suif` command line. Exit codes: 0 success, 1 domain error (reported as
//! `error[CODE]: message` on stderr), 2 usage error.

use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use suif_core::generation_engine::GenerationOptions;
use suif_core::provider_gateway::{Attachment, LiveConfig, ProviderMode};
use suif_core::{Error, Result};

use crate::config::ServiceConfig;
use crate::ops::Engine;

#[derive(Debug, Parser)]
#[command(name = "suif", version, about = "Semantic UI generation: parse, generate, analyze, refine")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Live,
    Recorded,
    Mock,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Root of the session store.
    #[arg(long, global = true, env = "SUIF_DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,
    /// Provider mode.
    #[arg(long, global = true, value_enum, env = "SUIF_MODE", default_value = "live")]
    pub mode: Mode,
    /// Fixture directory for recorded mode.
    #[arg(long, global = true, default_value = "fixtures")]
    pub fixtures: PathBuf,
    /// In live mode, also record every response as a fixture here.
    #[arg(long, global = true)]
    pub record: Option<PathBuf>,
    /// File whose text replaces the default technical constraints.
    #[arg(long, global = true, conflicts_with = "no_constraints")]
    pub constraints: Option<PathBuf>,
    /// Send the generation prompt without a constraints block.
    #[arg(long, global = true)]
    pub no_constraints: bool,
    /// Provider call timeout in seconds (live mode).
    #[arg(long, global = true, default_value_t = 120)]
    pub timeout_secs: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a session.
    New {
        #[arg(long)]
        name: String,
        /// Use this id instead of a generated one.
        #[arg(long)]
        id: Option<String>,
    },
    /// Parse a free-text brief into the session (created if absent).
    Parse {
        #[arg(long)]
        session: String,
        /// Brief file; stdin when omitted.
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Print the compiled generation prompt.
    Compile {
        #[arg(long)]
        session: String,
        #[arg(long, value_parser = parse_version)]
        version: Option<u64>,
    },
    /// Generate (or scoped-regenerate) code for the current state.
    Generate {
        #[arg(long)]
        session: String,
        /// Also write the code to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read semantics back out of the current artifact and merge them.
    Analyze {
        #[arg(long)]
        session: String,
        /// Optional PNG screenshot of the rendered artifact.
        #[arg(long)]
        screenshot: Option<PathBuf>,
    },
    /// Build and attach a relation graph for the current state.
    Relations {
        #[arg(long)]
        session: String,
    },
    /// Changelog between two versions (`v3` or `3`).
    Diff {
        #[arg(long)]
        session: String,
        #[arg(long, value_parser = parse_version)]
        from: u64,
        #[arg(long, value_parser = parse_version)]
        to: u64,
    },
    /// Version history with changelogs.
    History {
        #[arg(long)]
        session: String,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Print the current state as canonical JSON.
    Show {
        #[arg(long)]
        session: String,
    },
    /// Set one slot as a user edit (session created if absent).
    Set {
        #[arg(long)]
        session: String,
        #[arg(long)]
        path: String,
        text: String,
    },
    /// Clear one slot.
    Clear {
        #[arg(long)]
        session: String,
        #[arg(long)]
        path: String,
    },
    /// Add an empty component.
    AddComponent {
        #[arg(long)]
        session: String,
        name: String,
    },
    /// Commit a copy of an earlier version's state.
    Rollback {
        #[arg(long)]
        session: String,
        #[arg(long, value_parser = parse_version)]
        to: u64,
    },
    /// Write the session as one JSON bundle.
    Export {
        #[arg(long)]
        session: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Import a bundle; prints the session id used.
    Import {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8787")]
        bind: SocketAddr,
    },
}

fn parse_version(s: &str) -> std::result::Result<u64, String> {
    s.strip_prefix('v')
        .unwrap_or(s)
        .parse()
        .map_err(|_| format!("`{s}` is not a version (expected e.g. v3)"))
}

impl GlobalArgs {
    pub fn config(&self) -> Result<ServiceConfig> {
        let mode = match self.mode {
            Mode::Mock => ProviderMode::Mock,
            Mode::Recorded => ProviderMode::Recorded {
                fixture_dir: self.fixtures.clone(),
            },
            Mode::Live => {
                let mut live = LiveConfig::from_env()?;
                live.record_dir = self.record.clone();
                ProviderMode::Live(live)
            }
        };
        let mut config = ServiceConfig::new(&self.data_dir, mode);
        config.request_timeout = Duration::from_secs(self.timeout_secs);
        if self.no_constraints {
            config.generation = GenerationOptions { constraints_text: None };
        } else if let Some(path) = &self.constraints {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::ConfigInvalid(format!("cannot read constraints {}: {e}", path.display()))
            })?;
            config.generation = GenerationOptions {
                constraints_text: Some(text),
            };
        }
        Ok(config)
    }
}

fn print_json(value: &impl Serialize) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(&suif_core::semantic_model::to_canonical_json(value));
}

fn ensure_session(engine: &Engine, id: &str) -> Result<()> {
    if !engine.store.exists(id) {
        engine.store.create_session_with_id(id, id)?;
    }
    Ok(())
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::InvalidRequest(format!("{}: {e}", p.display()))),
        None => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::InvalidRequest(format!("stdin: {e}")))?;
            Ok(s)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let config = cli.global.config()?;
    if let Command::Serve { bind } = cli.command {
        let mut config = config;
        config.bind_address = bind;
        let runtime = tokio::runtime::Runtime::new()
            .map_err(|e| Error::ConfigInvalid(format!("cannot start runtime: {e}")))?;
        return runtime.block_on(crate::api::serve(config, async {
            let _ = tokio::signal::ctrl_c().await;
        }));
    }
    let engine = crate::api::engine_for(&config)?;
    match cli.command {
        Command::New { name, id } => {
            let session = match id {
                Some(id) => engine.store.create_session_with_id(&id, &name)?,
                None => engine.store.create_session(&name)?,
            };
            println!("{}", session.id());
        }
        Command::Parse { session, input } => {
            let text = read_input(input.as_deref())?;
            ensure_session(&engine, &session)?;
            print_json(&engine.parse(&session, &text)?);
        }
        Command::Compile { session, version } => {
            print!("{}", engine.compile(&session, version)?.markdown);
        }
        Command::Generate { session, out } => {
            let outcome = engine.generate(&session)?;
            if let Some(path) = out {
                let code = engine
                    .session(&session)?
                    .current_artifact()
                    .map(|a| a.code.clone())
                    .unwrap_or_default();
                std::fs::write(&path, code).map_err(|e| Error::InvalidRequest(format!("{}: {e}", path.display())))?;
            }
            print_json(&outcome);
        }
        Command::Analyze { session, screenshot } => {
            let screenshot = match screenshot {
                Some(p) => Some(Attachment {
                    media_type: "image/png".into(),
                    bytes: std::fs::read(&p).map_err(|e| Error::InvalidRequest(format!("{}: {e}", p.display())))?,
                }),
                None => None,
            };
            print_json(&engine.analyze(&session, screenshot)?);
        }
        Command::Relations { session } => print_json(&engine.relations(&session)?),
        Command::Diff { session, from, to } => {
            for line in engine.diff(&session, from, to)? {
                println!("{line}");
            }
        }
        Command::History { session, json } => {
            let rows = engine.history(&session)?;
            if json {
                print_json(&rows);
            } else {
                for row in rows {
                    println!("v{}  {}  {}", row.version, row.created_at.to_rfc3339(), row.label);
                    for line in row.changelog {
                        println!("    {line}");
                    }
                }
            }
        }
        Command::Show { session } => print_json(&engine.view(&session)?),
        Command::Set { session, path, text } => {
            ensure_session(&engine, &session)?;
            print_json(&engine.set_slot(&session, &path, Some(&text))?);
        }
        Command::Clear { session, path } => print_json(&engine.set_slot(&session, &path, None)?),
        Command::AddComponent { session, name } => {
            ensure_session(&engine, &session)?;
            print_json(&engine.add_component(&session, &name)?);
        }
        Command::Rollback { session, to } => print_json(&engine.rollback(&session, to)?),
        Command::Export { session, out } => engine.store.export_session(&session, &out)?,
        Command::Import { input } => println!("{}", engine.store.import_session(&input)?),
        Command::Serve { .. } => unreachable!("handled above"),
    }
    Ok(())
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
