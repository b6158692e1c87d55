use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowdial_core::llm_backend::BackendMode;
use flowdial_core::orchestrator::{replay_transcript, Engine, EngineConfig};

#[derive(Parser)]
#[command(name = "engine", about = "Incremental dialogue engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve sessions over HTTP and WebSocket.
    Serve {
        #[arg(long)]
        poi: Option<PathBuf>,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        prompts: Option<PathBuf>,
        #[arg(long, default_value = "stub")]
        llm_mode: BackendMode,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Static console bundle served under /ui.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
    /// Replay a timed transcript and write the decision/action log.
    Replay {
        transcript: PathBuf,
        #[arg(long)]
        poi: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, default_value = "stub")]
        llm_mode: BackendMode,
    },
}

fn config(poi: Option<PathBuf>, templates: Option<PathBuf>, mode: BackendMode) -> EngineConfig {
    EngineConfig {
        poi,
        templates,
        ..EngineConfig::default().with_mode(mode)
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Replay {
            transcript,
            poi,
            out,
            templates,
            llm_mode,
        } => {
            let engine = match Engine::new(config(poi, templates, llm_mode)) {
                Ok(e) => e,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let mut session = engine.create_session_with_id("replay");
            let report = match replay_transcript(&transcript, &mut session) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {}: {e}", transcript.display());
                    return ExitCode::from(2);
                }
            };
            if let Err(e) = std::fs::write(&out, report.log_text()) {
                eprintln!("error: {}: {e}", out.display());
                return ExitCode::from(2);
            }
            println!(
                "{} log lines, {} expectations matched, {} mismatched",
                report.log.len(),
                report.matched,
                report.mismatched
            );
            for m in &report.mismatches {
                println!("mismatch: {m}");
            }
            if report.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Serve {
            poi,
            templates,
            prompts,
            llm_mode,
            port,
            ui,
        } => {
            let mut cfg = config(poi, templates, llm_mode);
            cfg.prompts = prompts;
            let engine = match Engine::new(cfg) {
                Ok(e) => e,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
            runtime.block_on(async move {
                let app = flowdial_server::router(flowdial_server::AppState::new(engine, ui));
                let listener = match tokio::net::TcpListener::bind(("0.0.0.0", port)).await {
                    Ok(l) => l,
                    Err(e) => {
                        eprintln!("error: port {port}: {e}");
                        return ExitCode::from(2);
                    }
                };
                tracing::info!(port, mode = %llm_mode, "listening");
                let shutdown = async {
                    let _ = tokio::signal::ctrl_c().await;
                };
                match axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => {
                        eprintln!("error: {e}");
                        ExitCode::FAILURE
                    }
                }
            })
        }
    }
}
