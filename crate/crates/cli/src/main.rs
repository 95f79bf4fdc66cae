use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use codesign_cli::{router, ServeArgs, ServiceConfig};
use codesign_core::prompts::{validate_prompt, ValidationContext};
use codesign_core::{FileStore, PromptGrammar, Workshop};

#[derive(Parser)]
#[command(name = "codesign", version, about = "Collaborative street design sessions with AI agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Write a room's session archive from a file-backed data directory.
    Export {
        #[arg(long, env = "CODESIGN_DATA_DIR")]
        data_dir: PathBuf,
        #[arg(long)]
        room: String,
        /// Output path; `-` writes to stdout.
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Check a design prompt against the prompt grammar. Exits 1 if invalid.
    ValidatePrompt {
        text: String,
        /// Room participant names to treat as metadata.
        #[arg(long = "username")]
        usernames: Vec<String>,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Serve(args) => serve(args),
        Command::Export { data_dir, room, out } => export(data_dir, &room, out),
        Command::ValidatePrompt { text, usernames } => {
            let ctx = ValidationContext {
                usernames: &usernames,
                transcript: &[],
            };
            match validate_prompt(&text, &PromptGrammar::default(), &ctx) {
                Ok(result) => {
                    println!("{}", serde_json::to_string_pretty(&result).expect("serializable"));
                    if result.valid {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}

fn serve(args: ServeArgs) -> ExitCode {
    let env = |key: &str| std::env::var(key).ok();
    let workshop = match ServiceConfig::resolve(&args, &env).and_then(|cfg| Ok((cfg.build_workshop()?, cfg))) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let (ws, cfg) = workshop;
    let runtime = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::FAILURE;
        }
    };
    runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::bind(cfg.listen).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot listen on {}: {e}", cfg.listen);
                return ExitCode::FAILURE;
            }
        };
        let addr = listener.local_addr().map(|a| a.to_string()).unwrap_or_default();
        // Tests and scripts read this line to find an ephemeral port.
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        tracing::info!(%addr, store = ?cfg.store, "serving");
        let app = router(ws, &cfg.cors_origin);
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

fn export(data_dir: PathBuf, room: &str, out: PathBuf) -> ExitCode {
    let result = FileStore::open(&data_dir).and_then(|store| {
        let ws = Workshop::builder().store(Arc::new(store)).build();
        ws.export_session(room)?.to_archive()
    });
    let bytes = match result {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let written = if out.as_os_str() == "-" {
        std::io::stdout().write_all(&bytes)
    } else {
        std::fs::write(&out, &bytes)
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", out.display());
            ExitCode::FAILURE
        }
    }
}
