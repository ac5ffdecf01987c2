use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use persona_core::orchestrator::{Backends, Scenario};
use persona_server::{router, AppState, ScenarioEntry};

#[derive(Parser)]
#[command(name = "persona-server", version, about = "Persona chat session service")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    #[arg(long, default_value = "scenarios")]
    scenarios_dir: PathBuf,
    /// error, warn, info, debug or trace
    #[arg(long, default_value = "info")]
    log_level: tracing::Level,
}

#[tokio::main]
async fn main() -> Result<()> {
    let args = Args::parse();
    tracing_subscriber::fmt().with_max_level(args.log_level).init();

    let scenarios = Scenario::load_dir(&args.scenarios_dir)
        .with_context(|| format!("loading scenarios from {}", args.scenarios_dir.display()))?;
    let mut entries = Vec::new();
    for scenario in scenarios {
        let backends = Backends::from_settings_with_env_overrides(
            &scenario.analyzer,
            &scenario.generation,
            &args.scenarios_dir,
        )
        .with_context(|| format!("backends for scenario `{}`", scenario.scenario_id))?;
        tracing::info!(scenario = %scenario.scenario_id, ?backends, "loaded scenario");
        entries.push(ScenarioEntry::new(scenario, backends));
    }
    let state = AppState::open(&args.data_dir, entries)?;
    tracing::info!(sessions = state.session_count(), data_dir = %args.data_dir.display(), "ready");

    let listener = tokio::net::TcpListener::bind(args.bind)
        .await
        .with_context(|| format!("binding {}", args.bind))?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
