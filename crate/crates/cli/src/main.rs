use std::io::{BufRead, BufReader};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use normcase_core::lang::{render, Severity};
use normcase_core::{InputEvent, Model, ReasonerState};
use normcase_service::{router, CaseService, ServiceConfig};

#[derive(Parser)]
#[command(name = "normcase", version, about = "Norm models, case reasoning and the case service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model; prints its version id.
    Check { model: PathBuf },
    /// Print a model in canonical layout.
    Fmt {
        model: PathBuf,
        /// Exit non-zero instead of printing when the file is not canonical.
        #[arg(long)]
        check: bool,
    },
    /// Replay input events (one JSON object per line) and print the result.
    Run {
        model: PathBuf,
        /// Events file; `-` reads standard input.
        events: PathBuf,
        /// Print the explained trace instead of the snapshot.
        #[arg(long)]
        explain: bool,
        /// Also print the status of every physical act.
        #[arg(long)]
        statuses: bool,
    },
    /// Run the HTTP case service.
    Serve(ServeArgs),
}

#[derive(clap::Args)]
struct ServeArgs {
    #[arg(long, env = "NORMCASE_STORE_DIR", default_value = "./normcase-data")]
    store_dir: PathBuf,
    #[arg(long, env = "NORMCASE_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Model file registered and made active at startup.
    #[arg(long, env = "NORMCASE_MODEL")]
    model: Option<PathBuf>,
    #[arg(long, env = "NORMCASE_ADMIN_TOKEN", hide_env_values = true)]
    admin_token: Option<String>,
    /// Start a reasoner for every stored case before accepting requests.
    #[arg(long)]
    warm: bool,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn compile(path: &Path) -> Result<Model> {
    let source = read(path)?;
    match Model::from_source(&source) {
        Ok(model) => {
            if !model.warnings().is_empty() {
                eprint!("{}", render(&path.display().to_string(), model.warnings()));
            }
            Ok(model)
        }
        Err(diagnostics) => {
            eprint!("{}", render(&path.display().to_string(), &diagnostics));
            let errors = diagnostics
                .iter()
                .filter(|d| d.severity == Severity::Error)
                .count();
            bail!("{}: {errors} error(s)", path.display())
        }
    }
}

fn read_events(path: &Path) -> Result<Vec<InputEvent>> {
    let reader: Box<dyn BufRead> = if path.as_os_str() == "-" {
        Box::new(BufReader::new(std::io::stdin()))
    } else {
        let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        Box::new(BufReader::new(file))
    };
    let mut events = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).with_context(|| format!("line {}", n + 1))?;
        events.push(event);
    }
    Ok(events)
}

fn serve(args: ServeArgs) -> Result<()> {
    let bootstrap_model = args.model.as_deref().map(read).transpose()?;
    let config = ServiceConfig {
        store_dir: args.store_dir,
        admin_token: args.admin_token,
        bootstrap_model,
    };
    let service = CaseService::open(&config).context("opening the case store")?;
    if args.warm {
        for case in service.warm_all()? {
            tracing::warn!(case, "case could not be recovered");
        }
    }
    let app = router(Arc::new(service));
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.listen).await?;
        tracing::info!(addr = %listener.local_addr()?, "listening");
        axum_serve(listener, app).await
    })
}

async fn axum_serve(listener: tokio::net::TcpListener, app: axum::Router) -> Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Check { model } => {
            let compiled = compile(&model)?;
            println!("{}", compiled.version());
        }
        Command::Fmt { model, check } => {
            let source = read(&model)?;
            let spec = normcase_core::parse(&source).map_err(|d| {
                eprint!("{}", render(&model.display().to_string(), &d));
                anyhow::anyhow!("{}: does not parse", model.display())
            })?;
            let pretty = spec.to_string();
            if check {
                if pretty != source {
                    eprintln!("{}: not canonically formatted", model.display());
                    return Ok(ExitCode::FAILURE);
                }
            } else {
                print!("{pretty}");
            }
        }
        Command::Run {
            model,
            events,
            explain,
            statuses,
        } => {
            let model = Arc::new(compile(&model)?);
            let events = read_events(&events)?;
            let state = ReasonerState::replay(model, &events)?;
            if explain {
                for e in state.explain() {
                    println!("{:>4} {:<16} {}", e.seq, e.kind, e.summary);
                }
            } else {
                println!("{}", state.snapshot());
            }
            if statuses {
                for s in state.act_statuses() {
                    println!("{:<24} {:?}", s.act, s.status);
                }
            }
        }
        Command::Serve(args) => serve(args)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
