use std::path::PathBuf;

use selfcal_service::{router, AppState, ServiceConfig};
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let bind = std::env::var("SELFCAL_BIND").unwrap_or_else(|_| "127.0.0.1:8080".to_string());
    let config = ServiceConfig {
        data_dir: std::env::var_os("SELFCAL_DATA_DIR").map(PathBuf::from),
        embedder_url: std::env::var("SELFCAL_EMBEDDER_URL").ok(),
    };
    let state = AppState::new(config)?;
    tracing::info!(restored = state.session_count(), "sessions loaded");
    let listener = tokio::net::TcpListener::bind(&bind).await?;
    tracing::info!(%bind, "listening");
    axum::serve(listener, router(state)).await?;
    Ok(())
}
