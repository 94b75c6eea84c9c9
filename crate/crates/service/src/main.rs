use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use arbiter_core::decimal::Decimal;
use arbiter_core::explainer::render_text;
use arbiter_core::rule_lang::{render_theory, Diagnostic, Severity, Theory};
use arbiter_core::sbp::{metadata_of, ApplicationMetadata, Mode};
use arbiter_service::api::router;
use arbiter_service::query::{run_query, BindingValues, QueryError, QueryRequest, QueryResponse};
use arbiter_service::registry::{load_app_dir, valid_app_id, Registry, RegisterRequest, RegistryError};
use arbiter_service::source::{compile_source, format_diagnostic, SourceKind};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "arbiter", version, about = "Preference-based argumentation decisions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a `.sbp` policy into a rule theory.
    Compile {
        policy: PathBuf,
        #[arg(long, default_value = "basic")]
        mode: Mode,
        /// Write the theory here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Validate a `.sbp` or `.grg` file and print its diagnostics.
    Check {
        file: PathBuf,
        #[arg(long, default_value = "basic")]
        mode: Mode,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a scenario against a registered application or a source file.
    Query {
        /// Registered application id, application folder, or `.sbp`/`.grg` file.
        target: String,
        #[arg(long = "fact")]
        facts: Vec<String>,
        /// `name=value`; repeat a name for several values.
        #[arg(long = "bind", value_parser = parse_binding)]
        bindings: Vec<(String, Decimal)>,
        /// Also search for assumptions that would make this option acceptable.
        #[arg(long)]
        abduce: Option<String>,
        #[arg(long, default_value = "basic")]
        mode: Mode,
        #[arg(long)]
        json: bool,
        #[arg(long, env = "ARBITER_REGISTRY", default_value = "registry")]
        registry: PathBuf,
    },
    /// Register (or re-register) a source file under an application id.
    Register {
        id: String,
        file: PathBuf,
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value = "basic")]
        mode: Mode,
        #[arg(long, env = "ARBITER_REGISTRY", default_value = "registry")]
        registry: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "ARBITER_REGISTRY", default_value = "registry")]
        registry: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

fn parse_binding(s: &str) -> Result<(String, Decimal), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let value = value.trim().parse::<Decimal>().map_err(|e| e.to_string())?;
    Ok((name.trim().to_string(), value))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Compile { policy, mode, output } => {
            let Some(theory) = compile_file(&policy, mode, Some(SourceKind::Sbp))? else {
                return Ok(ExitCode::FAILURE);
            };
            let text = render_theory(&theory);
            match output {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { file, mode, json } => {
            let (kind, text) = read_source(&file, None)?;
            let diagnostics = match compile_source(kind, &text, mode) {
                Ok(c) => c.diagnostics,
                Err(d) => d,
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&diagnostics)?);
            } else {
                report(&file, &diagnostics);
            }
            Ok(if diagnostics.iter().any(Diagnostic::is_error) { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Query { target, facts, bindings, abduce, mode, json, registry } => {
            let mut grouped: BTreeMap<String, Vec<Decimal>> = BTreeMap::new();
            for (k, v) in bindings {
                grouped.entry(k).or_default().push(v);
            }
            let req = QueryRequest {
                facts,
                bindings: grouped.into_iter().map(|(k, v)| (k, BindingValues(v))).collect(),
                abduce_for: abduce,
            };
            let Some((app_id, revision, theory, metadata)) = resolve_target(&target, mode, &registry)? else {
                return Ok(ExitCode::FAILURE);
            };
            match run_query(&app_id, revision, &theory, &metadata, &req) {
                Ok(resp) => {
                    if json {
                        println!("{}", serde_json::to_string_pretty(&resp)?);
                    } else {
                        print_text(&resp);
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(QueryError::InvalidContext(diags)) => {
                    report(Path::new(&target), &diags);
                    Ok(ExitCode::FAILURE)
                }
                Err(e) => bail!(e),
            }
        }
        Command::Register { id, file, name, mode, registry } => {
            let (kind, text) = read_source(&file, None)?;
            let reg = Registry::open(&registry)?;
            let req = match kind {
                SourceKind::Sbp => RegisterRequest { name, policy: Some(text), grg: None, mode: Some(mode) },
                SourceKind::Grg => RegisterRequest { name, policy: None, grg: Some(text), mode: Some(mode) },
            };
            match reg.register(&id, req) {
                Ok(record) => {
                    report(&file, &record.diagnostics);
                    println!("registered {} revision {}", record.info.app_id, record.info.revision);
                    Ok(ExitCode::SUCCESS)
                }
                Err(RegistryError::Invalid(diags)) => {
                    report(&file, &diags);
                    Ok(ExitCode::FAILURE)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Serve { registry, host, port } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let reg = Arc::new(Registry::open(&registry)?);
            let addr = SocketAddr::new(host, port);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
                tracing::info!(%addr, registry = %registry.display(), "listening");
                axum::serve(listener, router(reg))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                Ok(ExitCode::SUCCESS)
            })
        }
    }
}

fn read_source(path: &Path, expect: Option<SourceKind>) -> Result<(SourceKind, String)> {
    let kind = SourceKind::from_path(path)
        .with_context(|| format!("{}: expected a .sbp or .grg file", path.display()))?;
    if let Some(expected) = expect {
        if kind != expected {
            bail!("{}: expected a .{} file", path.display(), if expected == SourceKind::Sbp { "sbp" } else { "grg" });
        }
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok((kind, text))
}

/// Prints diagnostics; `None` when any was an error.
fn compile_file(path: &Path, mode: Mode, expect: Option<SourceKind>) -> Result<Option<Theory>> {
    let (kind, text) = read_source(path, expect)?;
    match compile_source(kind, &text, mode) {
        Ok(c) => {
            let notable: Vec<Diagnostic> = c.diagnostics.into_iter().filter(|d| d.severity >= Severity::Warning).collect();
            report(path, &notable);
            Ok(Some(c.theory))
        }
        Err(diags) => {
            report(path, &diags);
            Ok(None)
        }
    }
}

fn report(origin: &Path, diagnostics: &[Diagnostic]) {
    for d in diagnostics {
        eprintln!("{}", format_diagnostic(&origin.display().to_string(), d));
    }
}

type Resolved = (String, u64, Theory, ApplicationMetadata);

fn resolve_target(target: &str, mode: Mode, registry: &Path) -> Result<Option<Resolved>> {
    let path = Path::new(target);
    if path.is_file() {
        let Some(theory) = compile_file(path, mode, None)? else { return Ok(None) };
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let metadata = metadata_of(&theory);
        return Ok(Some((id, 0, theory, metadata)));
    }
    if path.is_dir() && path.join("record.json").is_file() {
        let r = load_app_dir(path)?;
        return Ok(Some((r.info.app_id, r.info.revision, r.theory, r.metadata)));
    }
    if !valid_app_id(target) {
        bail!("`{target}` is neither a source file, an application folder nor an application id");
    }
    let reg = Registry::open(registry)?;
    let r = reg.get(target).ok_or_else(|| RegistryError::NotFound(target.to_string()))?;
    Ok(Some((r.info.app_id.clone(), r.info.revision, r.theory.clone(), r.metadata.clone())))
}

fn print_text(resp: &QueryResponse) {
    if resp.acceptable_options.is_empty() {
        println!("no acceptable option");
    }
    for e in &resp.explanations {
        println!("{}", render_text(e));
    }
    if resp.ambiguous {
        println!("ambiguous: conflicting options are both acceptable");
    }
    if let Some(a) = &resp.abduction {
        if a.supports.is_empty() {
            println!("no assumptions make {} acceptable", a.target);
        }
        for s in &a.supports {
            println!("abduced: {}", render_text(&s.explanation));
        }
    }
}
