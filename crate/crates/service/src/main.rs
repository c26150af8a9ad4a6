use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use glossgraph::api::{CurateRequest, OpenError, QueryRequest};
use glossgraph::http::{self, AppState};
use glossgraph::{render, Actor, ApiError, Config, Role, Service, Users};
use glossgraph_core::curation::CurationPass;

/// Annotate, curate and query a knowledge graph over a glossary corpus.
///
/// Every subcommand prints JSON on stdout (tables with --pretty) and, on
/// failure, a JSON error object on stderr with a nonzero exit status.
#[derive(Debug, Parser)]
#[command(name = "glossgraph", version)]
struct Cli {
    /// Directory holding the corpus, graph and annotation log.
    #[arg(long, env = "DATA_DIR", default_value = "data", global = true)]
    data_dir: PathBuf,
    /// Ontology document; defaults to ontology.json in the data directory, then the bundled one.
    #[arg(long, env = "ONTOLOGY_FILE", global = true)]
    ontology: Option<PathBuf>,
    /// Bearer-token users for `serve`; defaults to users.json in the data directory.
    #[arg(long, env = "USERS_FILE", global = true)]
    users_file: Option<PathBuf>,
    /// Name recorded on annotations and curation actions made from the CLI.
    #[arg(long, env = "GLOSSGRAPH_USER", default_value = "cli", global = true)]
    user: String,
    /// Print human-readable tables instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "HOST", default_value = "0.0.0.0")]
        host: String,
    },
    /// Add corpus lines from a JSON Lines file.
    ImportCorpus { file: PathBuf },
    /// Append an annotation log (JSON Lines) and replay it.
    ImportAnnotations { file: PathBuf },
    /// Replace the base graph with an exported graph document.
    ImportGraph { file: PathBuf },
    /// Print the current graph document, or write it to a file.
    ExportGraph {
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a curation pass: conflicts, infer, canonicalize or all.
    Curate {
        #[arg(long)]
        pass: CurationPass,
        #[arg(long)]
        dry_run: bool,
    },
    /// Collapse synonym groups onto their canonical members.
    Canonicalize {
        #[arg(long)]
        dry_run: bool,
    },
    /// Run a template with arguments, or a raw query with --raw.
    Query {
        #[arg(required_unless_present = "raw")]
        template_id: Option<String>,
        args: Vec<String>,
        #[arg(long, conflicts_with = "template_id")]
        raw: Option<String>,
    },
    /// Lemmas matching a prefix typed in any supported scheme.
    Suggest { prefix: String },
    /// Graph and corpus counts.
    Stats,
    /// The query template catalog.
    Templates,
    /// Lemmas annotated with more than one entity type.
    Conflicts,
}

impl Cli {
    fn config(&self) -> Config {
        Config {
            data_dir: self.data_dir.clone(),
            ontology_file: self.ontology.clone(),
            users_file: self.users_file.clone(),
        }
    }
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

async fn serve(config: Config, host: &str, port: u16) -> Result<()> {
    let service = Service::open(&config)?;
    let users = Users::load(&config.users_path()?)?;
    let addr = format!("{host}:{port}");
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!(%addr, users = users.len(), version = service.version(), "serving");
    axum::serve(listener, http::router(AppState::new(service, users)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn run(cli: &Cli) -> Result<Value> {
    let mut svc = Service::open(&cli.config())?;
    let actor = Actor::new(&cli.user, Role::Admin);
    let out = match &cli.command {
        Command::Serve { .. } => unreachable!("handled in main"),
        Command::ImportCorpus { file } => svc.import_corpus(&actor, &read(file)?)?,
        Command::ImportAnnotations { file } => svc.import_annotations(&actor, &read(file)?)?,
        Command::ImportGraph { file } => svc.import_graph(&actor, &read(file)?)?,
        Command::ExportGraph { out: None } => svc.export_graph(),
        Command::ExportGraph { out: Some(path) } => {
            let doc = serde_json::to_string(&svc.export_graph())?;
            std::fs::write(path, doc).with_context(|| format!("writing {}", path.display()))?;
            json!({"written": path, "stats": svc.stats()})
        }
        Command::Curate { pass, dry_run } => svc.curate(
            &actor,
            &CurateRequest {
                pass: *pass,
                dry_run: *dry_run,
            },
        )?,
        Command::Canonicalize { dry_run } => svc.curate(
            &actor,
            &CurateRequest {
                pass: CurationPass::Canonicalize,
                dry_run: *dry_run,
            },
        )?,
        Command::Query { raw: Some(raw), .. } => svc.query(&QueryRequest::Raw { raw: raw.clone() })?,
        Command::Query {
            template_id, args, ..
        } => svc.query(&QueryRequest::Template {
            template_id: template_id.clone().unwrap_or_default(),
            args: args.clone(),
        })?,
        Command::Suggest { prefix } => svc.suggest(prefix),
        Command::Stats => svc.stats(),
        Command::Templates => svc.templates(),
        Command::Conflicts => svc.conflicts(),
    };
    Ok(out)
}

fn error_json(e: &anyhow::Error) -> Value {
    if let Some(api) = e.downcast_ref::<ApiError>() {
        return api.to_json();
    }
    let kind = match e.downcast_ref::<OpenError>() {
        Some(OpenError::Config(_)) => "config",
        Some(OpenError::Storage(_)) => "storage",
        None if e.downcast_ref::<glossgraph::ConfigError>().is_some() => "config",
        None => "error",
    };
    json!({"error": {"kind": kind, "message": format!("{e:#}")}})
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let message = e.render().to_string();
            eprintln!("{}", json!({"error": {"kind": "usage", "message": message.trim_end()}}));
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Serve { port, host } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .with_writer(std::io::stderr)
                .init();
            serve(cli.config(), host, *port).await.map(|_| None)
        }
        _ => run(&cli).map(Some),
    };
    match result {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(v)) => {
            if cli.pretty {
                print!("{}", render::pretty(&v));
            } else {
                println!("{}", serde_json::to_string(&v).expect("JSON values serialize"));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
